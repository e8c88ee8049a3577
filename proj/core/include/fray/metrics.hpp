#pragma once

#include "fray/meshing.hpp"
#include "fray/renderer.hpp"

namespace fray {

struct PointCloud {
    std::vector<Vec3> points;
    size_t size() const { return points.size(); }
};

/// Symmetric Chamfer distance between point clouds:
///   0.5 * (mean_p min_q |p-q|^2 + mean_q min_p |p-q|^2)
/// `squared` follows that definition exactly; `unsquared` replaces the
/// squared norms with plain distances (the traditional MVS variant), reported
/// alongside to avoid silent metric mismatch.
struct ChamferResult {
    double squared = 0.0;
    double unsquared = 0.0;
};

/// Exhaustive O(n*m) reference implementation.
ChamferResult chamfer_bruteforce(const PointCloud& s1, const PointCloud& s2);

/// Uniform-grid accelerated exact nearest neighbors; bit-identical to the
/// brute-force oracle. Throws std::invalid_argument on empty clouds.
ChamferResult chamfer(const PointCloud& s1, const PointCloud& s2);

/// n area-weighted uniform surface samples (seeded, deterministic).
PointCloud sample_mesh(const TriMesh& mesh, size_t n, uint64_t seed);

/// Peak signal-to-noise ratio in dB over rgb in [0, 1]:
/// -10 log10(MSE); +infinity for identical images. Throws on dimension
/// mismatch.
double psnr(const ImageBuffer& rendered, const ImageBuffer& reference);

}  // namespace fray
