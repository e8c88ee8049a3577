// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] = repo root (scenes/ and configs/ live there).

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <random>

#include "fray/checkpoint.hpp"
#include "fray/metrics.hpp"
#include "fray/trainer.hpp"

using namespace fray;
namespace fs = std::filesystem;

namespace {

int g_pass = 0, g_fail = 0;

void report(int criterion, const char* name, bool ok, const std::string& detail) {
    std::cout << "[" << criterion << "] " << name << ": " << (ok ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << std::endl;
    (ok ? g_pass : g_fail)++;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---- criterion 1: transparency/density consistency ----

void criterion_transparency_consistency() {
    const auto t0 = std::chrono::steady_clock::now();
    // Planar SDF f(t) = t_s - t along the ray, grad.d = -1; t_s deep enough
    // that T(t_near) = 1 within tolerance for s = 1.
    const double t_s = 10.0;
    // 16-point Gauss-Legendre per interval.
    static const double kx[8] = {0.0950125098376374, 0.2816035507792589,
                                 0.4580167776572274, 0.6178762444026438,
                                 0.7554044083550030, 0.8656312023878318,
                                 0.9445750230732326, 0.9894009349916499};
    static const double kw[8] = {0.1894506104550685, 0.1826034150449236,
                                 0.1691565193950025, 0.1495959888165767,
                                 0.1246289712555339, 0.0951585116824928,
                                 0.0622535239386479, 0.0271524594117541};
    double worst = 0.0;
    for (double s : {1.0, 10.0, 100.0}) {
        const ScaleParam scale{s, 1.0};
        auto sig = [&](double t) { return sigma(scale, t_s - t, -1.0); };
        double cum = 0.0, prev = 0.0;
        for (int i = 1; i <= 1024; ++i) {
            const double t = 20.0 * i / 1024.0;
            const double c = 0.5 * (prev + t), h = 0.5 * (t - prev);
            double acc = 0.0;
            for (int g = 0; g < 8; ++g)
                acc += kw[g] * (sig(c - h * kx[g]) + sig(c + h * kx[g]));
            cum += h * acc;
            prev = t;
            worst = std::max(worst,
                             std::abs(std::exp(-cum) - transparency(scale, t_s - t)));
        }
    }
    const double elapsed = seconds_since(t0);
    report(1, "transparency-density consistency", worst < 1e-4 && elapsed < 1.0,
           "sup-norm " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// ---- criterion 2: unbiased weighting ----

void criterion_unbiased_weighting() {
    const auto t0 = std::chrono::steady_clock::now();
    const double t_s = 9.7;
    bool ok = true;
    std::string detail;
    for (double s : {10.0, 100.0}) {
        double prev_bias = std::numeric_limits<double>::infinity();
        for (size_t k : {size_t(64), size_t(256), size_t(1024)}) {
            RaySamples samples;
            for (size_t i = 0; i < k; ++i) {
                const double t = 20.0 * (i + 0.5) / k;
                samples.t.push_back(t);
                samples.f.push_back(t_s - t);
                samples.grad.push_back(Vec3(0, 0, -1));
                samples.grad_dot_d.push_back(-1.0);
            }
            samples.flagged.assign(k, false);
            const RayQuadrature q = quadrature(samples, ScaleParam{s, 1.0});
            size_t argmax = 0;
            for (size_t i = 1; i < k; ++i)
                if (q.weight[i] > q.weight[argmax]) argmax = i;
            const double bias = std::abs(samples.t[argmax] - t_s);
            ok = ok && (bias < prev_bias);
            prev_bias = bias;
            if (k == 1024) {
                ok = ok && (bias <= 20.0 / 1024.0);
                detail += "s=" + fmt(s) + " bias=" + fmt(bias) + " ";
            }
        }
    }
    const double elapsed = seconds_since(t0);
    report(2, "unbiased weighting", ok && elapsed < 1.0,
           detail + fmt(elapsed) + " s");
}

// ---- criterion 3: autodiff soundness ----

struct FdStats {
    int checked = 0;
    double worst = 0.0;
};

void fd_batch_check(NeuralSdfModel& m, const std::vector<RayBatchEntry>& batch,
                    double eik_w, const Vec3& bg, size_t tensor_begin,
                    size_t tensor_end, FdStats& stats) {
    const BatchLoss base = loss_on_batch(m, batch, eik_w, bg);
    auto tensors = parameter_tensors(m);
    std::vector<size_t> offsets;
    size_t total = 0;
    for (const Mat* t : tensors) {
        offsets.push_back(total);
        total += static_cast<size_t>(t->size());
    }
    for (size_t ti = tensor_begin; ti < tensor_end; ++ti) {
        Mat* tensor = tensors[ti];
        const Eigen::Index stride = std::max<Eigen::Index>(tensor->size() / 3, 1);
        for (Eigen::Index i = 0; i < tensor->size(); i += stride) {
            const double ad = base.grad(static_cast<Eigen::Index>(offsets[ti]) + i);
            auto rel_at = [&](double h) {
                const double keep = tensor->data()[i];
                tensor->data()[i] = keep + h;
                const double hi = loss_on_batch(m, batch, eik_w, bg).total;
                tensor->data()[i] = keep - h;
                const double lo = loss_on_batch(m, batch, eik_w, bg).total;
                tensor->data()[i] = keep;
                const double fd = (hi - lo) / (2 * h);
                return std::abs(ad - fd) /
                       std::max({std::abs(fd), std::abs(ad), 1e-3});
            };
            // A step crossing a relu/abs kink inflates the difference; the
            // artifact vanishes at a smaller step, a genuine gradient bug
            // does not.
            double rel = rel_at(1e-6);
            if (rel > 1e-3) rel = std::min(rel, rel_at(1e-8));
            stats.worst = std::max(stats.worst, rel);
            ++stats.checked;
        }
    }
}

void criterion_autodiff() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    FdStats stats;
    int cases = 0;

    auto mini = [&](uint64_t seed) {
        ModelConfig cfg;
        cfg.hidden = 6 + static_cast<int>(seed % 5);
        cfg.layers = 1 + static_cast<int>(seed % 2);
        cfg.feature = 3;
        cfg.color_hidden = 6;
        cfg.color_layers = 2;
        cfg.bands = 2 + static_cast<int>(seed % 2);
        cfg.alpha_d0 = 0.6 + 0.3 * uni(rng);
        cfg.s_init = 5.0 + 20.0 * uni(rng);
        cfg.seed = seed;
        return cfg;
    };
    auto random_batch = [&](int rays, int k) {
        std::vector<RayBatchEntry> batch;
        for (int r = 0; r < rays; ++r) {
            RayBatchEntry e;
            e.ray = make_bounded_ray(
                Vec3(0.4 * uni(rng) - 0.2, 0.4 * uni(rng) - 0.2, -3),
                Vec3(0.1 * uni(rng) - 0.05, 0.1 * uni(rng) - 0.05, 1));
            for (int i = 0; i < k; ++i)
                e.t.push_back(e.ray.t_near +
                              (e.ray.t_far - e.ray.t_near) * (i + uni(rng)) / k);
            e.reference = Vec3(uni(rng), uni(rng), uni(rng));
            e.coeff = 0.8 + 0.8 * uni(rng);
            batch.push_back(std::move(e));
        }
        return batch;
    };

    // 60 cases: every parameter of a base-only model (radiance + Eikonal +
    // scale paths all active).
    for (int c = 0; c < 60; ++c) {
        NeuralSdfModel m = make_model(mini(100 + c));
        m.use_displacement = false;
        auto batch = random_batch(2, 6);
        const double w = 0.05 + uni(rng);
        fd_batch_check(m, batch, w, Vec3(uni(rng), uni(rng), uni(rng)), 0,
                       parameter_tensors(m).size(), stats);
        ++cases;
    }
    // 30 cases: displacement, color and scale parameters with the
    // displacement active (the base normal is a constant of the
    // differentiation by design, so base weights are validated separately).
    for (int c = 0; c < 30; ++c) {
        NeuralSdfModel m = make_model(mini(300 + c));
        random_init(m.displacement, 900 + c);
        auto batch = random_batch(1, 6);
        fd_batch_check(m, batch, 0.3, Vec3::Ones(),
                       2 * m.base.weights.size(), parameter_tensors(m).size(),
                       stats);
        ++cases;
    }
    // 20 cases: base parameters through the full displacement composite.
    // The displacement direction is a constant of the differentiation, so
    // the check holds the normals fixed while differencing (the production
    // graphs accept precomputed normals for exactly this purpose).
    for (int c = 0; c < 20; ++c) {
        NeuralSdfModel m = make_model(mini(500 + c));
        random_init(m.displacement, 1700 + c);
        Mat pts(3, 5);
        for (Eigen::Index i = 0; i < pts.size(); ++i)
            pts.data()[i] = 2.0 * uni(rng) - 1.0;
        const Mat frozen = composite_eval(m, pts).normal;

        GradientTape tape;
        TapedModel net = register_model(tape, m);
        const TapedComposite comp = composite_forward(tape, net, pts, &frozen);
        Var obj = tape.sum_all(comp.f);
        for (int k = 0; k < 3; ++k)
            obj = tape.add(obj, tape.sum_all(tape.cmul(comp.grad[k], comp.grad[k])));
        tape.backward(obj);

        auto objective_value = [&](const NeuralSdfModel& model) {
            const CompositeEval e = composite_eval(model, pts, &frozen);
            double v = e.f.sum();
            v += e.grad.cwiseProduct(e.grad).sum();
            return v;
        };
        const double h = 1e-6;
        for (size_t l = 0; l < m.base.weights.size(); ++l) {
            const Mat grad_w = tape.adjoint(net.base.weights[l]);
            Mat& w = m.base.weights[l];
            const Eigen::Index stride = std::max<Eigen::Index>(w.size() / 3, 1);
            for (Eigen::Index i = 0; i < w.size(); i += stride) {
                const double keep = w.data()[i];
                w.data()[i] = keep + h;
                const double hi_v = objective_value(m);
                w.data()[i] = keep - h;
                const double lo_v = objective_value(m);
                w.data()[i] = keep;
                const double fd = (hi_v - lo_v) / (2 * h);
                const double ad = grad_w.data()[i];
                const double rel = std::abs(ad - fd) /
                                   std::max({std::abs(fd), std::abs(ad), 1e-3});
                stats.worst = std::max(stats.worst, rel);
                ++stats.checked;
            }
        }
        ++cases;
    }

    const double elapsed = seconds_since(t0);
    report(3, "autodiff soundness",
           cases >= 100 && stats.worst < 1e-3 && elapsed < 30.0,
           std::to_string(cases) + " cases, " + std::to_string(stats.checked) +
               " gradients, worst rel " + fmt(stats.worst) + ", " + fmt(elapsed) +
               " s");
}

// ---- criterion 4: adaptive coefficient ----

void criterion_adaptive() {
    bool ok = true;
    std::string detail;

    RaySamples unit;
    for (int i = 0; i < 64; ++i) {
        const double t = 3.0 * (i + 0.5) / 64;
        unit.t.push_back(t);
        unit.f.push_back(1.5 - t);
        unit.grad.push_back(Vec3(0, 0, -1));
        unit.grad_dot_d.push_back(-1.0);
    }
    unit.flagged.assign(64, false);
    const ScaleParam scale{30.0, 1.0};
    ok = ok && (adaptive_coeff(unit, scale).c == 1.0);

    RaySamples doubled = unit;
    for (auto& g : doubled.grad) g *= 2.0;
    ok = ok && (adaptive_coeff(doubled, scale).c == std::exp(1.0));

    // Paired seeded run: inflated gradients must tighten the sample spread.
    struct ScaledPlane final : SdfField {
        double k;
        explicit ScaledPlane(double kk) : k(kk) {}
        FieldBatch eval(const Mat& points) const override {
            FieldBatch out;
            const Eigen::Index n = points.cols();
            out.f.resize(n);
            out.grad.resize(3, n);
            out.flagged.assign(static_cast<size_t>(n), false);
            for (Eigen::Index i = 0; i < n; ++i) {
                out.f(i) = k * (0.5 - points(2, i));
                out.grad.col(i) = Vec3(0, 0, -k);
            }
            return out;
        }
    };
    const ScaledPlane field(2.0);
    const Ray ray = make_bounded_ray(Vec3(0, 0, -1.2), Vec3(0, 0, 1));
    SamplerConfig cfg;
    cfg.n_uniform = 64;
    cfg.n_importance = 64;
    auto iqr_of = [&](bool adaptive) {
        auto rng = make_stream_rng(77, 3);
        const auto h = hierarchical_pass(ray, field, ScaleParam{25.0, 1.0}, cfg,
                                         rng, adaptive);
        // Spread of the second-pass draws only (the first pass is uniform
        // by construction).
        auto rng2 = make_stream_rng(77, 3);
        const auto uniform_t = uniform_samples(ray, cfg.n_uniform, true, rng2);
        std::vector<double> importance;
        std::set_difference(h.samples.t.begin(), h.samples.t.end(),
                            uniform_t.begin(), uniform_t.end(),
                            std::back_inserter(importance));
        std::vector<double> dev;
        for (double v : importance) dev.push_back(std::abs(v - 1.7));
        std::sort(dev.begin(), dev.end());
        return dev[3 * dev.size() / 4] - dev[dev.size() / 4];
    };
    const double adaptive_iqr = iqr_of(true), plain_iqr = iqr_of(false);
    ok = ok && (adaptive_iqr < plain_iqr);
    detail = "iqr " + fmt(adaptive_iqr) + " < " + fmt(plain_iqr);
    report(4, "adaptive coefficient", ok, detail);
}

// ---- criterion 5: sampler correctness ----

void criterion_sampler() {
    const std::vector<double> t = {0.0, 0.3, 0.5, 1.1, 1.5, 2.0};
    const std::vector<double> weights = {0.1, 2.0, 0.4, 1.2, 0.05};
    RayQuadrature q;
    q.weight = weights;
    q.weight.push_back(0.0);

    auto rng = make_stream_rng(4242, 1);
    const int n = 100000;
    auto draws = importance_samples(q, t, n, true, rng);
    std::sort(draws.begin(), draws.end());
    const double total = 3.75;
    auto cdf = [&](double x) {
        double acc = 0.0;
        for (size_t i = 0; i + 1 < t.size(); ++i) {
            if (x >= t[i + 1])
                acc += weights[i];
            else if (x > t[i]) {
                acc += weights[i] * (x - t[i]) / (t[i + 1] - t[i]);
                break;
            } else
                break;
        }
        return acc / total;
    };
    double sup = 0.0;
    for (int i = 0; i < n; ++i) {
        const double c = cdf(draws[static_cast<size_t>(i)]);
        sup = std::max(sup, std::abs(c - (i + 1.0) / n));
        sup = std::max(sup, std::abs(c - i / double(n)));
    }

    auto r1 = make_stream_rng(99, 5);
    auto r2 = make_stream_rng(99, 5);
    const auto a = importance_samples(q, t, 1000, true, r1);
    const auto b = importance_samples(q, t, 1000, true, r2);
    bool deterministic = a.size() == b.size();
    for (size_t i = 0; deterministic && i < a.size(); ++i)
        deterministic = (a[i] == b[i]);

    report(5, "sampler correctness", sup < 0.01 && deterministic,
           "sup-norm " + fmt(sup) + ", seeded runs bit-exact");
}

// ---- criterion 6: IDF identity and far-field convergence ----

void criterion_idf() {
    ModelConfig cfg;
    cfg.hidden = 24;
    cfg.layers = 2;
    cfg.feature = 8;
    cfg.color_hidden = 8;
    cfg.color_layers = 2;
    cfg.bands = 4;
    cfg.seed = 5;
    NeuralSdfModel m = make_model(cfg);

    // Zero displacement net: identity at 1e4 points, bit-exact.
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> uni(-1.4, 1.4);
    bool identical = true;
    for (int block = 0; block < 10 && identical; ++block) {
        Mat pts(3, 1000);
        for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = uni(rng);
        const CompositeEval e = composite_eval(m, pts);
        for (Eigen::Index i = 0; i < 1000; ++i)
            identical = identical && (e.f(i) == e.f_base(i));
    }

    // Far field: |f - f_b| decreases monotonically as |f_b| grows past 0.5.
    // The base approximates |x| - 0.1, so radial shells within the scene
    // bounds give strictly increasing base values.
    ModelConfig far_cfg = cfg;
    far_cfg.s_init = 1000.0;
    far_cfg.init_radius = 0.1;
    NeuralSdfModel mf = make_model(far_cfg);
    random_init(mf.displacement, 123);
    const Vec3 dir = Vec3(0.2, -0.5, 0.84).normalized();
    double prev_gap = std::numeric_limits<double>::infinity();
    double prev_fb = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    int steps = 0;
    for (double r = 0.65; r <= 1.45; r += 0.1) {
        const CompositeEval e = composite_eval(mf, Mat(Vec3(r * dir)));
        if (std::abs(e.f_base(0)) <= 0.5 || e.f_base(0) <= prev_fb) continue;
        prev_fb = e.f_base(0);
        const double gap = std::abs(e.f(0) - e.f_base(0));
        monotone = monotone && (gap <= prev_gap + 1e-15);
        prev_gap = gap;
        ++steps;
    }
    report(6, "IDF identity and far-field convergence",
           identical && monotone && steps >= 4,
           std::string(identical ? "bit-exact at 10000 points" : "IDENTITY BROKEN") +
               ", " + std::to_string(steps) + " shells monotone=" +
               (monotone ? "yes" : "no"));
}

// ---- criterion 7: coarse-to-fine windows ----

void criterion_windows() {
    double worst = 0.0;
    const int L = 16;
    for (int j = 0; j < L; ++j)
        for (int ai = 0; ai <= 200; ++ai) {
            const double alpha = ai / 200.0;
            const double clamp_arg = std::clamp(alpha * L - j, 0.0, 1.0);
            const double closed = 0.5 * (1.0 - std::cos(clamp_arg * M_PI));
            worst = std::max(worst, std::abs(window(j, alpha, L) - closed));
        }

    EncodingConfig cfg;
    cfg.bands = L;
    cfg.alpha = 1.0;
    cfg.include_input = true;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double worst_pe = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 x(uni(rng), uni(rng), uni(rng));
        const Eigen::VectorXd e = encode(x, cfg);
        for (int j = 0; j < L; ++j) {
            const double freq = std::ldexp(M_PI, j);
            for (int k = 0; k < 3; ++k) {
                worst_pe = std::max(
                    worst_pe, std::abs(e(6 * j + k) - std::sin(freq * x[k])));
                worst_pe = std::max(
                    worst_pe, std::abs(e(6 * j + 3 + k) - std::cos(freq * x[k])));
            }
        }
        worst_pe = std::max(worst_pe, (e.tail(3) - x).cwiseAbs().maxCoeff());
    }
    report(7, "coarse-to-fine windows", worst <= 1e-12 && worst_pe <= 1e-12,
           "window err " + fmt(worst) + ", classic-PE err " + fmt(worst_pe));
}

// ---- criterion 8: end-to-end toy reconstruction ----

void criterion_end_to_end(const fs::path& root) {
    const auto t0 = std::chrono::steady_clock::now();
    const Config accept = Config::load((root / "configs" / "toy.cfg").string());
    const SceneSpec spec =
        SceneSpec::load((root / "scenes" / "bumpy_sphere.cfg").string());

    const int views = static_cast<int>(accept.get_long("data.views", 16));
    const int res = static_cast<int>(accept.get_long("data.res", 64));
    const Dataset ds = generate_dataset(spec, views, res, 0, 256);

    const TrainConfig cfg = TrainConfig::from_config(accept);
    const TrainResult full = train(ds, cfg);

    TrainConfig ablation_cfg = cfg;
    ablation_cfg.model.use_displacement = false;
    ablation_cfg.adaptive = false;
    // The single remaining field anneals over the full band range.
    ablation_cfg.model.alpha_d0 = 2.0 * cfg.model.alpha_d0;
    const TrainResult base_only = train(ds, ablation_cfg);

    auto chamfer_of = [&](const NeuralSdfModel& model) {
        const NeuralField field(&model);
        TriMesh mesh = marching_cubes(field, 128);
        mesh = remove_small_components(mesh, 0.01);
        const PointCloud a = sample_mesh(mesh, 100000, 0);
        const PointCloud b = sample_mesh(ds.gt_mesh, 100000, 1);
        return chamfer(a, b).squared;
    };
    const double full_chamfer = chamfer_of(full.checkpoint.model);
    const double base_chamfer = chamfer_of(base_only.checkpoint.model);

    const double threshold = accept.get_double("accept.chamfer_sq_threshold", 0.0);
    const double elapsed = seconds_since(t0);
    const bool ok = !full.diverged && !base_only.diverged &&
                    full_chamfer <= 1.1 * threshold &&
                    full_chamfer < base_chamfer && elapsed < 1800.0;
    report(8, "end-to-end toy reconstruction", ok,
           "chamfer_sq full " + fmt(full_chamfer) + " (threshold x1.1 " +
               fmt(1.1 * threshold) + "), base-only " + fmt(base_chamfer) + ", " +
               fmt(elapsed) + " s");
}

// ---- criterion 9: metrics ----

void criterion_metrics() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    bool chamfer_ok = true;
    for (int trial = 0; trial < 3; ++trial) {
        PointCloud a, b;
        for (int i = 0; i < 100; ++i) {
            a.points.emplace_back(uni(rng), uni(rng), uni(rng));
            b.points.emplace_back(uni(rng), uni(rng), uni(rng));
        }
        const ChamferResult fast = chamfer(a, b);
        const ChamferResult slow = chamfer_bruteforce(a, b);
        chamfer_ok = chamfer_ok && fast.squared == slow.squared &&
                     fast.unsquared == slow.unsquared;
    }

    ImageBuffer x(16, 12), y(16, 12);
    std::uniform_real_distribution<double> uc(0.0, 1.0);
    for (size_t p = 0; p < x.rgb.size(); ++p) {
        x.rgb[p] = Vec3(uc(rng), uc(rng), uc(rng));
        y.rgb[p] = Vec3(uc(rng), uc(rng), uc(rng));
    }
    double se = 0.0;
    for (size_t p = 0; p < x.rgb.size(); ++p)
        se += (x.rgb[p] - y.rgb[p]).squaredNorm();
    const double naive = -10.0 * std::log10(se / (3.0 * x.rgb.size()));
    const bool psnr_ok = std::abs(psnr(x, y) - naive) < 1e-9;

    const AnalyticField sphere(AnalyticSdf::sphere(Vec3::Zero(), 1.0));
    const TriMesh mesh = marching_cubes(sphere, 64, 1.4);
    double worst_r = 0.0;
    for (const auto& v : mesh.vertices)
        worst_r = std::max(worst_r, std::abs(v.norm() - 1.0));

    report(9, "metrics", chamfer_ok && psnr_ok && worst_r <= 0.03,
           "chamfer bit-exact, psnr err < 1e-9, sphere vertex err " + fmt(worst_r));
}

}  // namespace

int main(int argc, char** argv) {
    fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path(".");
    bool skip_e2e = false;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--skip-e2e") == 0) skip_e2e = true;

    criterion_transparency_consistency();
    criterion_unbiased_weighting();
    criterion_autodiff();
    criterion_adaptive();
    criterion_sampler();
    criterion_idf();
    criterion_windows();
    if (skip_e2e) {
        std::cout << "[8] end-to-end toy reconstruction: SKIPPED (--skip-e2e)"
                  << std::endl;
    } else {
        try {
            criterion_end_to_end(root);
        } catch (const std::exception& e) {
            report(8, "end-to-end toy reconstruction", false, e.what());
        }
    }
    criterion_metrics();

    std::cout << g_pass << " passed, " << g_fail << " failed" << std::endl;
    return g_fail == 0 ? 0 : 1;
}
