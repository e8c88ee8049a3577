#pragma once

#include <string>

#include "fray/fields.hpp"

namespace fray {

/// Optimizer state over the flattened parameter vector (see
/// parameter_tensors for the layout).
struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    uint64_t step = 0;
};

/// Everything needed to resume training or run inference:
/// networks, scale, annealing state, iteration counter, rng seed and
/// (optionally) Adam moments.
struct TrainCheckpoint {
    NeuralSdfModel model;
    uint64_t iteration = 0;
    uint64_t master_seed = 0;
    bool has_adam = false;
    AdamState adam;
};

/// Trainable tensors in their canonical (checkpoint and gradient) order:
/// base W0, b0, W1, b1, ..., displacement likewise, color likewise, log_s.
std::vector<const Mat*> parameter_tensors(const NeuralSdfModel& m);
std::vector<Mat*> parameter_tensors(NeuralSdfModel& m);
size_t total_parameter_count(const NeuralSdfModel& m);

/// Binary checkpoint, little-endian, layout (version 1):
///   magic "FRAYCKP1", u32 version,
///   u8 use_displacement, u32 feature_dim,
///   u32 pe_bands, u8 pe_include_input, f64 alpha_d,
///   f64 log_s, u64 iteration, u64 master_seed,
///   3 networks (base, displacement, color), each:
///     u8 activation, f64 softplus_beta, i32 skip_layer, u32 n_layers,
///     then per layer u32 rows, u32 cols, f64 weights row-major, f64 bias;
///   u8 has_adam, and if set: u64 adam_step, f64 m[n], f64 v[n] over the
///   flattened parameter order above (n = total_parameter_count).
void save_checkpoint(const std::string& path, const TrainCheckpoint& ckpt);
TrainCheckpoint load_checkpoint(const std::string& path);

}  // namespace fray
