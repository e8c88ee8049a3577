#include "fray/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fray {

namespace {
constexpr double kTiePerturb = 1e-12;

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

std::mt19937_64 make_stream_rng(uint64_t master_seed, uint64_t stream_id) {
    return std::mt19937_64(splitmix64(master_seed ^ splitmix64(stream_id)));
}

std::vector<double> uniform_samples(const Ray& ray, int n, bool stratified,
                                    std::mt19937_64& rng) {
    if (ray.empty()) throw std::invalid_argument("uniform_samples: empty ray");
    if (n < 1) throw std::invalid_argument("uniform_samples: n must be >= 1");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double span = ray.t_far - ray.t_near;
    std::vector<double> t(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = stratified ? uni(rng) : 0.5;
        t[static_cast<size_t>(i)] = ray.t_near + span * (i + u) / n;
    }
    return t;
}

std::vector<double> importance_samples(const RayQuadrature& quad,
                                       const std::vector<double>& t, int n,
                                       bool stratified, std::mt19937_64& rng,
                                       bool* fallback) {
    if (t.size() < 2)
        throw std::invalid_argument("importance_samples: need >= 2 sample points");
    if (quad.weight.size() < t.size())
        throw std::invalid_argument("importance_samples: weight/sample mismatch");
    if (fallback) *fallback = false;

    const size_t bins = t.size() - 1;
    std::vector<double> cum(bins + 1, 0.0);
    for (size_t i = 0; i < bins; ++i) cum[i + 1] = cum[i] + quad.weight[i];
    const double total = cum[bins];

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> out(static_cast<size_t>(n));
    if (!(total > 0.0)) {
        if (fallback) *fallback = true;
        const double lo = t.front(), span = t.back() - t.front();
        for (int k = 0; k < n; ++k) {
            const double u = (k + (stratified ? uni(rng) : 0.5)) / n;
            out[static_cast<size_t>(k)] = lo + span * u;
        }
        return out;
    }

    for (int k = 0; k < n; ++k) {
        const double u = (k + (stratified ? uni(rng) : 0.5)) / n * total;
        // First bin whose cumulative mass exceeds u.
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        size_t j = static_cast<size_t>(std::distance(cum.begin(), it));
        j = (j == 0) ? 0 : j - 1;
        if (j >= bins) j = bins - 1;
        const double mass = cum[j + 1] - cum[j];
        const double frac = mass > 0.0 ? (u - cum[j]) / mass : 0.5;
        out[static_cast<size_t>(k)] = t[j] + frac * (t[j + 1] - t[j]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> merge_samples(const std::vector<double>& a,
                                  const std::vector<double>& b) {
    std::vector<double> merged;
    merged.resize(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), merged.begin());
    for (size_t i = 1; i < merged.size(); ++i)
        if (merged[i] <= merged[i - 1]) merged[i] = merged[i - 1] + kTiePerturb;
    return merged;
}

HierarchicalResult hierarchical_pass(const Ray& ray, const SdfField& field,
                                     const ScaleParam& scale,
                                     const SamplerConfig& cfg,
                                     std::mt19937_64& rng, bool adaptive) {
    const std::vector<double> t_uniform =
        uniform_samples(ray, cfg.n_uniform, cfg.stratified, rng);

    auto eval_at = [&](const std::vector<double>& ts) {
        Mat pts(3, static_cast<Eigen::Index>(ts.size()));
        for (size_t i = 0; i < ts.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = ray.at(ts[i]);
        FieldBatch batch = field.eval(pts);
        return std::make_pair(std::move(pts), std::move(batch));
    };

    auto [pts_u, batch_u] = eval_at(t_uniform);

    RaySamples uniform;
    uniform.t = t_uniform;
    uniform.f.assign(batch_u.f.data(), batch_u.f.data() + batch_u.f.size());
    uniform.grad.resize(t_uniform.size());
    uniform.grad_dot_d.resize(t_uniform.size());
    uniform.flagged.assign(t_uniform.size(), false);
    for (size_t i = 0; i < t_uniform.size(); ++i) {
        uniform.grad[i] = batch_u.grad.col(static_cast<Eigen::Index>(i));
        uniform.grad_dot_d[i] = uniform.grad[i].dot(ray.direction);
        uniform.flagged[i] = batch_u.flagged[i];
    }

    HierarchicalResult out;
    out.coeff = adaptive ? adaptive_coeff(uniform, scale)
                         : AdaptiveCoeff{1.0, false};

    ScaleParam gained = scale;
    gained.adaptive_coeff = out.coeff.c;
    const RayQuadrature quad = quadrature(uniform, gained);

    const std::vector<double> t_imp = importance_samples(
        quad, uniform.t, cfg.n_importance, cfg.stratified, rng,
        &out.importance_fallback);
    auto [pts_i, batch_i] = eval_at(t_imp);

    // Merge the two passes, keeping per-sample payloads aligned.
    struct Entry {
        double t;
        double f;
        Vec3 g;
        bool flag;
        const Mat* feat;
        Eigen::Index col;
    };
    std::vector<Entry> entries;
    entries.reserve(t_uniform.size() + t_imp.size());
    for (size_t i = 0; i < t_uniform.size(); ++i)
        entries.push_back({uniform.t[i], uniform.f[i], uniform.grad[i],
                           uniform.flagged[i], &batch_u.feature,
                           static_cast<Eigen::Index>(i)});
    for (size_t i = 0; i < t_imp.size(); ++i)
        entries.push_back({t_imp[i], batch_i.f(static_cast<Eigen::Index>(i)),
                           batch_i.grad.col(static_cast<Eigen::Index>(i)),
                           batch_i.flagged[i], &batch_i.feature,
                           static_cast<Eigen::Index>(i)});
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.t < b.t; });

    const size_t k = entries.size();
    const Eigen::Index feat_rows = batch_u.feature.rows();
    out.samples.t.resize(k);
    out.samples.f.resize(k);
    out.samples.grad.resize(k);
    out.samples.grad_dot_d.resize(k);
    out.samples.flagged.resize(k);
    out.points.resize(3, static_cast<Eigen::Index>(k));
    out.feature.resize(feat_rows, static_cast<Eigen::Index>(k));
    double prev = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < k; ++i) {
        Entry& e = entries[i];
        if (e.t <= prev) e.t = prev + kTiePerturb;
        prev = e.t;
        out.samples.t[i] = e.t;
        out.samples.f[i] = e.f;
        out.samples.grad[i] = e.g;
        out.samples.grad_dot_d[i] = e.g.dot(ray.direction);
        out.samples.flagged[i] = e.flag;
        out.points.col(static_cast<Eigen::Index>(i)) = ray.at(e.t);
        if (feat_rows > 0)
            out.feature.col(static_cast<Eigen::Index>(i)) = e.feat->col(e.col);
        if (!std::isfinite(e.f) || !e.g.allFinite()) out.nonfinite = true;
    }
    return out;
}

}  // namespace fray
