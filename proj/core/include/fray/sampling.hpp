#pragma once

#include <random>

#include "fray/fields.hpp"
#include "fray/transparency.hpp"

namespace fray {

struct SamplerConfig {
    int n_uniform = 64;
    int n_importance = 64;
    bool stratified = true;   // false: deterministic bin midpoints / quantiles
    uint64_t seed = 0;
};

/// Deterministic per-stream generator: parallel and serial runs agree because
/// every ray derives its own generator from (master seed, stream id).
std::mt19937_64 make_stream_rng(uint64_t master_seed, uint64_t stream_id);

/// K stratified samples, one uniform draw per equal sub-interval of
/// [t_near, t_far]; bin midpoints when stratified is off. Ascending.
/// Throws std::invalid_argument for empty rays.
std::vector<double> uniform_samples(const Ray& ray, int n, bool stratified,
                                    std::mt19937_64& rng);

/// Inverse-CDF draws from the piecewise-constant pdf over the intervals
/// [t_i, t_{i+1}) with mass proportional to weight[i] (the endpoint-sample
/// weight of each interval). All-zero weights fall back to uniform draws
/// over [t.front(), t.back()] and set *fallback. Output is sorted.
std::vector<double> importance_samples(const RayQuadrature& quad,
                                       const std::vector<double>& t, int n,
                                       bool stratified, std::mt19937_64& rng,
                                       bool* fallback = nullptr);

/// Sorted union of two ascending sample lists; exact ties are perturbed
/// upward by 1e-12 so the merged list stays strictly ascending.
std::vector<double> merge_samples(const std::vector<double>& a,
                                  const std::vector<double>& b);

/// Output of the two-pass sampler: the final sample set with field values,
/// gradients and features, plus the adaptive gain that shaped the second pass.
struct HierarchicalResult {
    RaySamples samples;
    Mat points;              // 3 x K
    Mat feature;             // F x K (0 rows for featureless fields)
    AdaptiveCoeff coeff;
    bool importance_fallback = false;
    bool nonfinite = false;  // any non-finite field output along the ray
};

/// Uniform pass -> adaptive coefficient (Eikonal-consistent fields give
/// exactly 1) -> quadrature at scale s*c -> importance pass -> union.
HierarchicalResult hierarchical_pass(const Ray& ray, const SdfField& field,
                                     const ScaleParam& scale,
                                     const SamplerConfig& cfg,
                                     std::mt19937_64& rng, bool adaptive);

}  // namespace fray
