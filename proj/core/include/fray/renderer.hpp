#pragma once

#include "fray/camera.hpp"
#include "fray/sampling.hpp"

namespace fray {

/// Rendered image. rgb values stay unclamped internally; clamping to [0, 1]
/// happens at file export. Pixel (i, j) lives at index j * width + i.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<Vec3> rgb;
    std::vector<double> depth;   // empty when not rendered
    std::vector<Vec3> normal;    // empty when not rendered

    ImageBuffer() = default;
    ImageBuffer(int w, int h)
        : width(w), height(h), rgb(static_cast<size_t>(w) * h, Vec3::Zero()) {}
    size_t index(int i, int j) const {
        return static_cast<size_t>(j) * width + i;
    }
    Vec3& at(int i, int j) { return rgb[index(i, j)]; }
    const Vec3& at(int i, int j) const { return rgb[index(i, j)]; }
};

struct RenderConfig {
    SamplerConfig sampler;
    Vec3 background = Vec3::Ones();
    bool adaptive = true;        // per-ray adaptive scale gain
    bool with_depth = true;
    bool with_normal = false;
};

struct RayRender {
    Vec3 rgb = Vec3::Zero();
    double weight_sum = 0.0;
    double depth = 0.0;
    Vec3 normal = Vec3::Zero();
    bool flagged = false;        // non-finite field output along the ray
    double adaptive_coeff = 1.0;
};

/// One ray through the discrete rendering equation: hierarchical samples,
/// alpha-composited color, background weighted by residual transmittance,
/// weight-averaged depth. Empty rays return pure background.
RayRender render_ray(const Ray& ray, const SdfField& field,
                     const ColorModel& color, double s,
                     const RenderConfig& cfg, std::mt19937_64& rng);

/// Pixel-parallel map of render_ray; deterministic for a fixed seed
/// regardless of thread count (per-pixel rng streams).
ImageBuffer render_image(const Camera& camera, const SdfField& field,
                         const ColorModel& color, double s,
                         const RenderConfig& cfg, uint64_t seed);

}  // namespace fray
