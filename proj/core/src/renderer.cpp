#include "fray/renderer.hpp"

#include <cmath>

#include "fray/parallel.hpp"

namespace fray {

RayRender render_ray(const Ray& ray, const SdfField& field,
                     const ColorModel& color, double s,
                     const RenderConfig& cfg, std::mt19937_64& rng) {
    RayRender out;
    if (ray.empty()) {
        out.rgb = cfg.background;
        return out;
    }

    ScaleParam scale;
    scale.s = s;
    HierarchicalResult h =
        hierarchical_pass(ray, field, scale, cfg.sampler, rng, cfg.adaptive);
    out.adaptive_coeff = h.coeff.c;
    if (h.nonfinite) {
        out.flagged = true;
        out.rgb = cfg.background;
        return out;
    }

    scale.adaptive_coeff = h.coeff.c;
    const RayQuadrature quad = quadrature(h.samples, scale);
    Mat grads(3, static_cast<Eigen::Index>(h.samples.size()));
    for (size_t i = 0; i < h.samples.size(); ++i)
        grads.col(static_cast<Eigen::Index>(i)) = h.samples.grad[i];
    const Mat rgb = color.shade(h.points, grads, ray.direction, h.feature);

    Vec3 acc = Vec3::Zero();
    Vec3 nacc = Vec3::Zero();
    double depth_acc = 0.0;
    double wsum = 0.0;
    for (size_t i = 0; i < quad.size(); ++i) {
        const double w = quad.weight[i];
        acc += w * rgb.col(static_cast<Eigen::Index>(i));
        depth_acc += w * h.samples.t[i];
        nacc += w * h.samples.grad[i];
        wsum += w;
    }
    out.rgb = acc + (1.0 - wsum) * cfg.background;
    out.weight_sum = wsum;
    out.depth = depth_acc / std::max(wsum, 1e-12);
    const double nn = nacc.norm();
    out.normal = nn > 0.0 ? Vec3(nacc / nn) : Vec3::Zero();
    return out;
}

ImageBuffer render_image(const Camera& camera, const SdfField& field,
                         const ColorModel& color, double s,
                         const RenderConfig& cfg, uint64_t seed) {
    ImageBuffer img(camera.width, camera.height);
    if (cfg.with_depth) img.depth.assign(img.rgb.size(), 0.0);
    if (cfg.with_normal) img.normal.assign(img.rgb.size(), Vec3::Zero());

    const size_t n = img.rgb.size();
    parallel_ranges(n, [&](size_t begin, size_t end) {
        for (size_t p = begin; p < end; ++p) {
            const int i = static_cast<int>(p % static_cast<size_t>(camera.width));
            const int j = static_cast<int>(p / static_cast<size_t>(camera.width));
            std::mt19937_64 rng = make_stream_rng(seed, p);
            const Ray ray = generate_ray(camera, i, j);
            const RayRender r = render_ray(ray, field, color, s, cfg, rng);
            img.rgb[p] = r.rgb;
            if (cfg.with_depth) img.depth[p] = r.depth;
            if (cfg.with_normal) img.normal[p] = r.normal;
        }
    });
    return img;
}

}  // namespace fray
