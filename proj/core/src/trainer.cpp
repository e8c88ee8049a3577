#include "fray/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <fstream>
#include <stdexcept>

#include "fray/parallel.hpp"

namespace fray {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kNormGuard = 1e-20;
constexpr size_t kGradBlock = 16;  // rays per deterministic reduction block

uint64_t ray_stream(uint64_t iteration, uint64_t k) {
    return iteration * 0x100000ULL + k;
}

Mat interval_widths(const std::vector<double>& t) {
    const size_t k = t.size();
    Mat dt(1, static_cast<Eigen::Index>(k));
    double mean = 0.0;
    for (size_t i = 0; i + 1 < k; ++i) {
        dt(0, static_cast<Eigen::Index>(i)) = t[i + 1] - t[i];
        mean += dt(0, static_cast<Eigen::Index>(i));
    }
    mean /= static_cast<double>(k - 1);
    dt(0, static_cast<Eigen::Index>(k - 1)) = mean;
    return dt;
}

struct FlatLayout {
    std::vector<size_t> offsets;
    size_t total = 0;
};

FlatLayout make_layout(const NeuralSdfModel& model) {
    FlatLayout l;
    for (const Mat* t : parameter_tensors(model)) {
        l.offsets.push_back(l.total);
        l.total += static_cast<size_t>(t->size());
    }
    return l;
}

void add_adjoint(Eigen::VectorXd& flat, size_t offset, const Mat& adj) {
    flat.segment(static_cast<Eigen::Index>(offset), adj.size()) +=
        Eigen::Map<const Eigen::VectorXd>(adj.data(), adj.size());
}

// Reads the tape adjoints of every registered tensor into the flat gradient,
// matching the canonical parameter order (displacement slots stay zero when
// the net is disabled).
void read_gradients(const GradientTape& tape, const TapedModel& net,
                    const NeuralSdfModel& model, const FlatLayout& layout,
                    Eigen::VectorXd& flat) {
    size_t tensor = 0;
    auto read_net = [&](const TapedMlp& taped, const MlpParams& params,
                        bool registered) {
        for (size_t l = 0; l < params.weights.size(); ++l) {
            if (registered) {
                add_adjoint(flat, layout.offsets[tensor], tape.adjoint(taped.weights[l]));
                add_adjoint(flat, layout.offsets[tensor + 1],
                            tape.adjoint(taped.biases[l]));
            }
            tensor += 2;
        }
    };
    read_net(net.base, model.base, true);
    read_net(net.disp, model.displacement, model.use_displacement);
    read_net(net.color, model.color, true);
    add_adjoint(flat, layout.offsets[tensor], tape.adjoint(net.log_s));
}

struct RayLossOut {
    double l1 = 0.0;
    double eik = 0.0;
    size_t samples = 0;
};

// Builds the per-ray rendering + loss graph and backpropagates
// w1 * L1 + w2 * Eikonal into `grad`.
RayLossOut ray_loss(const NeuralSdfModel& model, const RayBatchEntry& e,
                    double w1, double w2, const Vec3& bg,
                    const FlatLayout& layout, Eigen::VectorXd& grad) {
    RayLossOut out;
    const size_t k = e.t.size();
    GradientTape tape;
    TapedModel net = register_model(tape, model);

    Mat points(3, static_cast<Eigen::Index>(k));
    for (size_t i = 0; i < k; ++i)
        points.col(static_cast<Eigen::Index>(i)) = e.ray.at(e.t[i]);
    const TapedComposite comp = composite_forward(tape, net, points);

    // sigma_i = s_eff (psi_{s_eff}(f_i) - 1) (grad f_i . d), s_eff = s * c.
    const Vec3 d = e.ray.direction;
    const Var gdotd = tape.add(
        tape.add(tape.scale_const(comp.grad[0], d.x()),
                 tape.scale_const(comp.grad[1], d.y())),
        tape.scale_const(comp.grad[2], d.z()));
    const Var s_eff = tape.scale_const(net.s, e.coeff);
    const Var psi_row = tape.sigmoid(tape.scale_var(comp.f, s_eff));
    const Var sigma_row =
        tape.cmul(tape.scale_var(tape.add_const(psi_row, -1.0), s_eff), gdotd);

    const Var dt = tape.constant(interval_widths(e.t));
    const Var alpha = tape.clamp(
        tape.sub_from_const(
            1.0, tape.exp(tape.scale_const(tape.cmul(sigma_row, dt), -1.0))),
        0.0, 1.0);
    const Var trans = tape.transmittance(alpha);
    const Var w = tape.cmul(trans, alpha);

    const Var rgb =
        color_forward(tape, net, comp.points, comp.grad, d, comp.feature);
    const Var wsum = tape.sum_all(w);
    const Var c_full =
        tape.add(tape.row_sum(tape.col_scale(rgb, w)),
                 tape.scale_var(tape.constant(Mat(bg)),
                                tape.sub_from_const(1.0, wsum)));

    const Var l1 = tape.scale_const(
        tape.sum_all(tape.abs(tape.sub(c_full, tape.constant(Mat(e.reference))))),
        1.0 / 3.0);

    auto norm_row = [&](const std::array<Var, 3>& g) {
        const Var d2 = tape.add(tape.add(tape.cmul(g[0], g[0]), tape.cmul(g[1], g[1])),
                                tape.cmul(g[2], g[2]));
        return tape.sqrt(tape.add_const(d2, kNormGuard));
    };
    auto penalty = [&](Var n) {
        const Var c = tape.add_const(n, -1.0);
        return tape.sum_all(tape.cmul(c, c));
    };
    const Var eik =
        tape.add(penalty(norm_row(comp.grad_base)), penalty(norm_row(comp.grad)));

    const Var objective =
        tape.add(tape.scale_const(l1, w1), tape.scale_const(eik, w2));
    tape.backward(objective);
    read_gradients(tape, net, model, layout, grad);

    out.l1 = tape.value(l1)(0, 0);
    out.eik = tape.value(eik)(0, 0);
    out.samples = k;
    return out;
}

}  // namespace

TrainConfig TrainConfig::from_config(const Config& cfg) {
    TrainConfig tc;
    tc.iterations = cfg.get_long("train.iters", tc.iterations);
    tc.n_max = cfg.get_long("train.n_max", tc.iterations);
    tc.batch_rays = static_cast<int>(cfg.get_long("train.batch", tc.batch_rays));
    tc.lr = cfg.get_double("train.lr", tc.lr);
    tc.eikonal_weight = cfg.get_double("train.eikonal_weight", tc.eikonal_weight);
    tc.seed = static_cast<uint64_t>(cfg.get_long("train.seed", 0));
    tc.checkpoint_every = cfg.get_long("train.checkpoint_every", tc.checkpoint_every);
    tc.log_every = cfg.get_long("train.log_every", tc.log_every);
    tc.sampler.n_uniform =
        static_cast<int>(cfg.get_long("sample.uniform", tc.sampler.n_uniform));
    tc.sampler.n_importance =
        static_cast<int>(cfg.get_long("sample.importance", tc.sampler.n_importance));
    tc.sampler.stratified = cfg.get_bool("sample.stratified", true);
    tc.sampler.seed = static_cast<uint64_t>(cfg.get_long("sample.seed", 0));
    tc.background = cfg.get_vec3("render.background", tc.background);
    tc.adaptive = cfg.get_bool("model.adaptive_s", true);
    tc.model.hidden = static_cast<int>(cfg.get_long("model.hidden", tc.model.hidden));
    tc.model.layers = static_cast<int>(cfg.get_long("model.layers", tc.model.layers));
    tc.model.feature = static_cast<int>(cfg.get_long("model.feature", tc.model.feature));
    tc.model.color_hidden =
        static_cast<int>(cfg.get_long("model.color_hidden", tc.model.color_hidden));
    tc.model.color_layers =
        static_cast<int>(cfg.get_long("model.color_layers", tc.model.color_layers));
    tc.model.bands = static_cast<int>(cfg.get_long("pe.bands", tc.model.bands));
    tc.model.include_input = cfg.get_bool("pe.include_input", true);
    tc.model.alpha_d0 = cfg.get_double("pe.alpha_d0", tc.model.alpha_d0);
    tc.model.s_init = cfg.get_double("model.s_init", tc.model.s_init);
    tc.model.softplus_beta =
        cfg.get_double("model.softplus_beta", tc.model.softplus_beta);
    tc.model.init_radius = cfg.get_double("model.init_radius", tc.model.init_radius);
    tc.model.use_displacement = cfg.get_bool("model.use_displacement", true);
    tc.model.seed = tc.seed;
    return tc;
}

std::vector<RayBatchEntry> prepare_batch(const Dataset& dataset,
                                         const NeuralSdfModel& model,
                                         const TrainConfig& cfg,
                                         uint64_t iteration) {
    if (dataset.views.empty())
        throw std::invalid_argument("prepare_batch: empty dataset");
    const int n = cfg.batch_rays;
    std::vector<RayBatchEntry> batch(static_cast<size_t>(n));

    std::mt19937_64 pick_rng = make_stream_rng(cfg.seed, ray_stream(iteration, 0));
    std::uniform_int_distribution<int> view_dist(
        0, static_cast<int>(dataset.views.size()) - 1);
    for (int r = 0; r < n; ++r) {
        const int v = view_dist(pick_rng);
        const Camera& cam = dataset.views[static_cast<size_t>(v)].camera;
        std::uniform_int_distribution<int> px(0, cam.width * cam.height - 1);
        const int p = px(pick_rng);
        RayBatchEntry& e = batch[static_cast<size_t>(r)];
        e.ray = generate_ray(cam, p % cam.width, p / cam.width,
                             dataset.bounds_radius);
        e.reference =
            dataset.views[static_cast<size_t>(v)].image.rgb[static_cast<size_t>(p)];
    }

    const NeuralField field(&model);
    ScaleParam scale;
    scale.s = model.s();
    parallel_ranges(batch.size(), [&](size_t begin, size_t end) {
        for (size_t r = begin; r < end; ++r) {
            RayBatchEntry& e = batch[r];
            if (e.ray.empty()) {
                e.empty = true;
                continue;
            }
            std::mt19937_64 rng =
                make_stream_rng(cfg.seed, ray_stream(iteration, 1 + r));
            const HierarchicalResult h =
                hierarchical_pass(e.ray, field, scale, cfg.sampler, rng, cfg.adaptive);
            e.t = h.samples.t;
            e.coeff = h.coeff.c;
            e.flagged = h.nonfinite;
        }
    });
    return batch;
}

BatchLoss loss_on_batch(const NeuralSdfModel& model,
                        const std::vector<RayBatchEntry>& batch,
                        double eikonal_weight, const Vec3& background) {
    const FlatLayout layout = make_layout(model);
    BatchLoss out;
    out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total));

    size_t m_rays = 0, n_samples = 0, flagged = 0;
    for (const auto& e : batch) {
        if (e.flagged) {
            ++flagged;
            continue;
        }
        ++m_rays;
        if (!e.empty) n_samples += e.t.size();
    }
    out.rays_flagged = flagged;
    if (m_rays == 0)
        throw std::runtime_error("loss_on_batch: every ray in the batch is flagged");
    out.rays_used = m_rays;
    out.samples_used = n_samples;

    const double w1 = 1.0 / static_cast<double>(m_rays);
    const double w2 = n_samples > 0
                          ? eikonal_weight / static_cast<double>(n_samples)
                          : 0.0;

    // Fixed-size blocks keep the reduction order independent of threading.
    const size_t n_blocks = (batch.size() + kGradBlock - 1) / kGradBlock;
    std::vector<Eigen::VectorXd> block_grad(
        n_blocks, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total)));
    std::vector<double> block_l1(n_blocks, 0.0), block_eik(n_blocks, 0.0);

    parallel_ranges(n_blocks, [&](size_t bb, size_t be) {
        for (size_t b = bb; b < be; ++b) {
            const size_t lo = b * kGradBlock;
            const size_t hi = std::min(lo + kGradBlock, batch.size());
            for (size_t r = lo; r < hi; ++r) {
                const RayBatchEntry& e = batch[r];
                if (e.flagged) continue;
                if (e.empty || e.t.size() < 2) {
                    block_l1[b] += (background - e.reference).cwiseAbs().sum() / 3.0;
                    continue;
                }
                const RayLossOut rl =
                    ray_loss(model, e, w1, w2, background, layout, block_grad[b]);
                block_l1[b] += rl.l1;
                block_eik[b] += rl.eik;
            }
        }
    });

    double l1_sum = 0.0, eik_sum = 0.0;
    for (size_t b = 0; b < n_blocks; ++b) {
        out.grad += block_grad[b];
        l1_sum += block_l1[b];
        eik_sum += block_eik[b];
    }
    out.l1_term = w1 * l1_sum;
    out.eikonal_term = n_samples > 0 ? eik_sum / static_cast<double>(n_samples) : 0.0;
    out.total = out.l1_term + eikonal_weight * out.eikonal_term;
    return out;
}

bool adam_step(NeuralSdfModel& model, AdamState& state,
               const Eigen::VectorXd& grad, double lr) {
    const size_t n = total_parameter_count(model);
    if (static_cast<size_t>(grad.size()) != n)
        throw std::invalid_argument("adam_step: gradient size mismatch");
    if (state.m.size() != grad.size()) {
        state.m = Eigen::VectorXd::Zero(grad.size());
        state.v = Eigen::VectorXd::Zero(grad.size());
        state.step = 0;
    }
    if (!grad.allFinite()) return false;

    state.step += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    size_t off = 0;
    for (Mat* tensor : parameter_tensors(model)) {
        double* p = tensor->data();
        for (Eigen::Index i = 0; i < tensor->size(); ++i, ++off) {
            const double g = grad(static_cast<Eigen::Index>(off));
            double& m = state.m(static_cast<Eigen::Index>(off));
            double& v = state.v(static_cast<Eigen::Index>(off));
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
            p[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
        }
    }
    return true;
}

TrainResult train(const Dataset& dataset, const TrainConfig& cfg,
                  const std::string& out_dir, const TrainCheckpoint* resume,
                  const std::function<void(uint64_t, const BatchLoss&)>& on_step) {
    namespace fs = std::filesystem;
    if (!out_dir.empty()) fs::create_directories(out_dir);

    TrainResult result;
    TrainCheckpoint& ckpt = result.checkpoint;
    if (resume) {
        ckpt = *resume;
    } else {
        ModelConfig mc = cfg.model;
        mc.seed = cfg.seed;
        ckpt.model = make_model(mc);
        ckpt.master_seed = cfg.seed;
        ckpt.iteration = 0;
    }
    ckpt.has_adam = true;
    if (ckpt.adam.m.size() == 0) {
        const size_t n = total_parameter_count(ckpt.model);
        ckpt.adam.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        ckpt.adam.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    }

    result.log_rows.push_back(kTrainLogHeader);
    auto log_state = [&](uint64_t it, const BatchLoss& loss,
                         const std::vector<RayBatchEntry>& batch) {
        double c_min = std::numeric_limits<double>::infinity();
        double c_max = -c_min;
        double c_sum = 0.0;
        size_t c_n = 0;
        for (const auto& e : batch) {
            if (e.flagged || e.empty) continue;
            c_min = std::min(c_min, e.coeff);
            c_max = std::max(c_max, e.coeff);
            c_sum += e.coeff;
            ++c_n;
        }
        char row[320];
        std::snprintf(row, sizeof(row),
                      "%llu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%zu",
                      static_cast<unsigned long long>(it), loss.total, loss.l1_term,
                      loss.eikonal_term, ckpt.model.s(), ckpt.model.alpha_d(),
                      c_n ? c_sum / static_cast<double>(c_n) : 1.0,
                      c_n ? c_min : 1.0, c_n ? c_max : 1.0, loss.rays_flagged);
        result.log_rows.push_back(row);
    };

    auto save_numbered = [&](uint64_t it) {
        if (out_dir.empty()) return;
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_%06llu.ckpt",
                      static_cast<unsigned long long>(it));
        save_checkpoint((fs::path(out_dir) / name).string(), ckpt);
    };

    int consecutive_bad = 0;
    for (long step = 0; step < cfg.iterations; ++step) {
        const uint64_t it = ckpt.iteration;
        const std::vector<RayBatchEntry> batch =
            prepare_batch(dataset, ckpt.model, cfg, it);
        const BatchLoss loss =
            loss_on_batch(ckpt.model, batch, cfg.eikonal_weight, cfg.background);

        if (!std::isfinite(loss.total)) {
            ++consecutive_bad;
            if (consecutive_bad >= 10) {
                result.diverged = true;
                if (!out_dir.empty()) {
                    std::ofstream dump(fs::path(out_dir) / "divergence_dump.txt");
                    dump << "diverged at iteration " << it << "\nloss " << loss.total
                         << "\nl1 " << loss.l1_term << "\neikonal "
                         << loss.eikonal_term << "\ns " << ckpt.model.s()
                         << "\nalpha_d " << ckpt.model.alpha_d() << '\n';
                    save_checkpoint((fs::path(out_dir) / "diverged.ckpt").string(),
                                    ckpt);
                }
                break;
            }
        } else {
            consecutive_bad = 0;
        }

        adam_step(ckpt.model, ckpt.adam, loss.grad, cfg.lr);
        ckpt.iteration = it + 1;
        ckpt.model.set_alpha_d(anneal_step(ckpt.model.alpha_d(), cfg.n_max));

        if (cfg.log_every > 0 &&
            (it % static_cast<uint64_t>(cfg.log_every) == 0 ||
             step + 1 == cfg.iterations))
            log_state(it, loss, batch);
        if (on_step) on_step(it, loss);
        if (cfg.checkpoint_every > 0 &&
            ckpt.iteration % static_cast<uint64_t>(cfg.checkpoint_every) == 0)
            save_numbered(ckpt.iteration);
    }

    if (!out_dir.empty()) {
        save_checkpoint((fs::path(out_dir) / "checkpoint_final.ckpt").string(), ckpt);
        std::ofstream log(fs::path(out_dir) / "train_log.csv");
        log << "# fray-train-log v1\n";
        for (const auto& row : result.log_rows) log << row << '\n';
    }
    return result;
}

}  // namespace fray
