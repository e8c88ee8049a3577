#pragma once

#include <array>
#include <string>

#include "fray/fields.hpp"

namespace fray {

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    double area() const;
};

/// Grid-based isosurface extraction of the f = 0 level set over the cube
/// [-bounds, bounds]^3 with edge interpolation. Each grid cell is split into
/// six tetrahedra sharing the main diagonal, which triangulates every sign
/// configuration without case tables and is exact for linear fields.
/// Vertices on shared edges are welded; triangles are wound so normals point
/// toward positive f. Throws std::runtime_error when the field never changes
/// sign in bounds (empty mesh).
TriMesh marching_cubes(const SdfField& field, int resolution,
                       double bounds = kSceneBoundsRadius);

/// Drops connected components with fewer than min_frac of all vertices.
TriMesh remove_small_components(const TriMesh& mesh, double min_frac = 0.01);

/// Removes triangles with area <= 1e-12 and unreferenced vertices.
TriMesh remove_degenerate(const TriMesh& mesh);

/// ASCII OBJ (v/f records, 1-based indices).
void save_obj(const std::string& path, const TriMesh& mesh);
TriMesh load_obj(const std::string& path);

}  // namespace fray
