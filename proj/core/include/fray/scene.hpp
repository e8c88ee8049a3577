#pragma once

#include <string>

#include "fray/analytic_sdf.hpp"
#include "fray/camera.hpp"
#include "fray/config.hpp"
#include "fray/meshing.hpp"
#include "fray/renderer.hpp"

namespace fray {

/// Scene description for synthetic dataset generation: an analytic shape
/// tree, a constant surface albedo (headlight Lambertian shading) and a
/// background color. Stored in the same key=value format as training
/// configs, with the shape tree as one s-expression, e.g.
///   shape = (union (sphere 0 0 0 0.8) (box 0.4 0.4 0.4))
struct SceneSpec {
    AnalyticSdf shape;
    Vec3 albedo = Vec3(0.8, 0.3, 0.25);
    Vec3 background = Vec3::Ones();

    static SceneSpec load(const std::string& path);
    static SceneSpec from_config(const Config& cfg);
    void save(const std::string& path) const;
};

/// Shape tree grammar: (sphere cx cy cz r), (plane nx ny nz offset),
/// (box hx hy hz), (bumpy-sphere r amplitude frequency),
/// (union s1 s2 ...), (offset s d).
AnalyticSdf parse_shape(const std::string& sexpr);
std::string shape_to_string(const AnalyticSdf& shape);

struct SphereTraceHit {
    bool hit = false;
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();
};

/// Marches t by a damped SDF step until |f| < 1e-10 (the damping covers the
/// bumpy sphere, whose gradient norm exceeds 1).
SphereTraceHit sphere_trace(const AnalyticSdf& shape, const Ray& ray,
                            double step_scale = 0.5, int max_steps = 2048);

/// Reference image of the scene by sphere tracing with headlight shading
/// color = albedo * max(0, -n.d); misses produce the background color.
ImageBuffer trace_image(const SceneSpec& spec, const Camera& camera);

struct DatasetView {
    Camera camera;
    ImageBuffer image;
};

struct Dataset {
    std::vector<DatasetView> views;
    double bounds_radius = kSceneBoundsRadius;
    TriMesh gt_mesh;  // empty when not generated/loaded
    SceneSpec spec;
    bool has_spec = false;
};

/// Cameras on a Fibonacci spiral around the object, images by sphere
/// tracing, ground-truth mesh via grid extraction. Throws when fewer than
/// two views are requested or the shape escapes the scene bounds.
Dataset generate_dataset(const SceneSpec& spec, int n_views, int resolution,
                         uint64_t seed, int gt_mesh_resolution = 256);

/// Directory layout: cameras.txt, images/0000.png ..., gt_mesh.obj, spec.cfg.
void save_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& dir);

}  // namespace fray
