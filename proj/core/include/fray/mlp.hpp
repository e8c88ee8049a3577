#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fray/tape.hpp"

namespace fray {

enum class Activation : uint8_t { Softplus, Relu };

/// Fully connected network: hidden layers with the configured activation,
/// linear last layer, optional skip connection that re-concatenates the
/// network input (scaled by 1/sqrt(2)) before the given hidden layer.
struct MlpParams {
    std::vector<Mat> weights;               // (out x in) per layer
    std::vector<Mat> biases;                // (out x 1) per layer
    int skip_layer = -1;                    // hidden layer fed concat(h, input)
    Activation activation = Activation::Softplus;
    double softplus_beta = 100.0;

    int layer_count() const { return static_cast<int>(weights.size()); }
    int input_dim() const;
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    size_t parameter_count() const;
    bool shapes_valid() const;
};

/// Network with all-zero weights and biases (used by tests and as the
/// starting point for the initializers below).
MlpParams make_mlp(int input_dim, int hidden_width, int n_hidden, int output_dim,
                   int skip_layer = -1, Activation act = Activation::Softplus);

/// Geometric initialization: the network approximates f(x) = |x| - radius.
/// Positional-encoding input columns start at zero; only the raw-coordinate
/// columns (rows raw_offset..raw_offset+2 of the input) carry signal at
/// initialization. The last layer's weights are near-constant sqrt(pi/in)
/// with bias -radius.
void geometric_init(MlpParams& p, int raw_offset, double radius, uint64_t seed);

/// He-style random init; `zero_last_layer` makes the network output exactly
/// zero at initialization (used for the displacement net).
void random_init(MlpParams& p, uint64_t seed, bool zero_last_layer = false);

/// Value forward pass over a column batch: input (in_dim x N) -> (out_dim x N).
Mat mlp_forward(const MlpParams& p, const Mat& input);

/// Forward pass carrying three directional-derivative channels alongside the
/// values (forward-mode jets). `jin[k]` is d(input)/d(x_k), shape (in_dim x N).
struct MlpDual {
    Mat out;
    std::array<Mat, 3> jout;
};
MlpDual mlp_forward_dual(const MlpParams& p, const Mat& input,
                         const std::array<Mat, 3>& jin);

/// A network's parameters registered as tape nodes (shared storage).
struct TapedMlp {
    std::vector<Var> weights;
    std::vector<Var> biases;
    const MlpParams* params = nullptr;
};
TapedMlp register_mlp(GradientTape& tape, const MlpParams& p);

/// Taped value forward: returns the (out_dim x N) output node.
Var mlp_forward(GradientTape& tape, const TapedMlp& net, Var input);

/// Value plus three tape-recorded derivative channels; parameter gradients
/// of expressions built from the channels (e.g. Eikonal penalties) flow
/// through the same reverse sweep.
struct DualVar {
    Var val;
    std::array<Var, 3> j;
};
DualVar mlp_forward(GradientTape& tape, const TapedMlp& net, const DualVar& input);

}  // namespace fray
