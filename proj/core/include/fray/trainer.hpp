#pragma once

#include <functional>
#include <string>

#include "fray/checkpoint.hpp"
#include "fray/scene.hpp"

namespace fray {

struct TrainConfig {
    long iterations = 5000;
    long n_max = 5000;             // annealing denominator (1/n_max per step)
    int batch_rays = 512;
    double lr = 5e-4;
    double eikonal_weight = 0.1;   // config train.eikonal_weight; 1.0 = literal
    uint64_t seed = 0;
    SamplerConfig sampler;
    Vec3 background = Vec3::Ones();
    bool adaptive = true;          // per-ray adaptive scale
    long checkpoint_every = 1000;
    long log_every = 10;
    ModelConfig model;

    /// Reads the documented config keys (see README) over these defaults.
    static TrainConfig from_config(const Config& cfg);
};

/// One ray of a prepared batch: sampling decisions (positions, the adaptive
/// gain) are frozen here, so the loss below is a deterministic function of
/// the network parameters alone. The gain is a constant of the backward pass
/// by design.
struct RayBatchEntry {
    Ray ray;
    Vec3 reference = Vec3::Zero();
    std::vector<double> t;         // final hierarchical sample positions
    double coeff = 1.0;            // adaptive gain c
    bool empty = false;            // missed the scene bounds
    bool flagged = false;          // non-finite field output; excluded, counted
};

/// Phase 1 of a training step: picks batch_rays random (view, pixel) pairs
/// and runs the hierarchical sampler on the current model. Deterministic in
/// (cfg.seed, iteration).
std::vector<RayBatchEntry> prepare_batch(const Dataset& dataset,
                                         const NeuralSdfModel& model,
                                         const TrainConfig& cfg,
                                         uint64_t iteration);

/// Phase 2: loss of the frozen batch,
///   (1/M) sum |C_hat - C|_1  +  (w_eik/N) sum [(|grad f_b|-1)^2 + (|grad f|-1)^2]
/// with M the non-flagged rays, N their total sample count, the L1 averaged
/// over the 3 channels, and the Eikonal sum taken at the ray samples of both
/// fields. Returns the flattened gradient in parameter_tensors order.
/// Throws std::runtime_error when every ray is flagged.
struct BatchLoss {
    double total = 0.0;
    double l1_term = 0.0;       // (1/M) sum mean-channel L1
    double eikonal_term = 0.0;  // (1/N) sum of the two Eikonal penalties
    Eigen::VectorXd grad;
    size_t rays_used = 0;
    size_t samples_used = 0;
    size_t rays_flagged = 0;
};
BatchLoss loss_on_batch(const NeuralSdfModel& model,
                        const std::vector<RayBatchEntry>& batch,
                        double eikonal_weight, const Vec3& background);

/// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8) over the flattened
/// parameters. Non-finite gradients skip the update (reported via return).
bool adam_step(NeuralSdfModel& model, AdamState& state,
               const Eigen::VectorXd& grad, double lr);

struct TrainResult {
    TrainCheckpoint checkpoint;
    std::vector<std::string> log_rows;   // CSV rows (see kTrainLogHeader)
    bool diverged = false;
};

inline constexpr const char* kTrainLogHeader =
    "iteration,loss,l1,eikonal,s,alpha_d,c_mean,c_min,c_max,flagged";

/// Full optimization loop: batch -> hierarchical samples -> render ->
/// loss -> Adam -> anneal alpha_d. Writes checkpoint_######.ckpt and
/// train_log.csv under out_dir when non-empty; aborts (with a diagnostic
/// dump) after 10 consecutive non-finite losses.
TrainResult train(const Dataset& dataset, const TrainConfig& cfg,
                  const std::string& out_dir = "",
                  const TrainCheckpoint* resume = nullptr,
                  const std::function<void(uint64_t, const BatchLoss&)>& on_step = {});

}  // namespace fray
