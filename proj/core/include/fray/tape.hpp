#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "fray/encoding.hpp"

namespace fray {

using Mat = Eigen::MatrixXd;

/// Handle to a node on a GradientTape.
struct Var {
    int32_t id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over matrix-valued nodes.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order of the computation graph. Values are column-batched:
/// a node typically holds one matrix of shape (features x samples). The
/// backward sweep visits nodes in reverse and accumulates each node's
/// adjoint from all of its consumers exactly once.
///
/// `param` nodes reference external storage (shared across tapes); their
/// adjoints are read back by the caller after backward(). `constant` nodes
/// own their value and never need their adjoint, but it is still propagated
/// so that replay and gradient checks stay uniform.
class GradientTape {
public:
    enum class Op : uint8_t {
        Constant, Param,
        MatMul, Add, Sub, CMul, CDiv,
        AddBias, ColScale, ScaleVar,
        ScaleConst, AddConst, SubFromConst,
        Softplus, Sigmoid, Relu, Exp, Sqrt, Abs, Clamp,
        ConcatRows, SliceRows,
        SumAll, ColSum, RowSum,
        Transmittance,
        Encode, EncodeJvp,
    };

    // Leaves.
    Var constant(Mat value);
    Var scalar(double value);           // 1x1 constant
    Var param(const Mat* storage);      // external storage, gradient read back

    // Linear algebra.
    Var matmul(Var a, Var b);           // value(a) * value(b)
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var cmul(Var a, Var b);             // elementwise
    Var cdiv(Var a, Var b);             // elementwise
    Var add_bias(Var a, Var b);         // (n x K) + (n x 1) broadcast over columns
    Var col_scale(Var a, Var w);        // (n x K) scaled per column by (1 x K)
    Var scale_var(Var a, Var s);        // matrix times 1x1 variable

    // Affine with literals.
    Var scale_const(Var a, double c);
    Var add_const(Var a, double c);
    Var sub_from_const(double c, Var a);

    // Elementwise nonlinearities.
    Var softplus(Var a, double beta);   // (1/beta) log(1 + exp(beta x)), stable
    Var sigmoid(Var a);
    Var relu(Var a);
    Var exp(Var a);
    Var sqrt(Var a);                    // d/dx at 0 treated as 0
    Var abs(Var a);                     // subgradient 0 at 0
    Var clamp(Var a, double lo, double hi);  // gradient passes strictly inside

    // Shape.
    Var concat_rows(Var a, Var b);
    Var slice_rows(Var a, int first_row, int n_rows);

    // Reductions.
    Var sum_all(Var a);                 // 1x1
    Var col_sum(Var a);                 // sum over rows -> 1 x K
    Var row_sum(Var a);                 // sum over columns -> n x 1

    /// Accumulated transmittance over a row of opacities alpha (1 x K):
    /// T_0 = 1, T_i = prod_{j<i} (1 - alpha_j).
    Var transmittance(Var alpha);

    /// Positional encoding of a (3 x K) position node.
    Var pos_encode(Var points, const EncodingConfig& cfg);
    /// Forward-mode push of the encoding: d(encode)/dx at `points` applied to
    /// `tangents` (3 x K). Differentiable in both arguments (the backward
    /// pass carries the encoding curvature term).
    Var pos_encode_jvp(Var points, Var tangents, const EncodingConfig& cfg);

    /// Reverse sweep from a scalar (1x1) output with seed 1.
    void backward(Var output);
    /// Reverse sweep with an explicit seed of the output's shape. Adjoints
    /// are reset at the start of every sweep.
    void backward(Var output, const Mat& seed);

    const Mat& value(Var v) const;
    /// Adjoint of `v` after backward(); a zero matrix if it was never reached.
    Mat adjoint(Var v) const;

    /// Recomputes every node from its inputs and checks bit-exact equality
    /// with the stored values.
    bool replay_matches() const;

    void clear();
    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Op op;
        int32_t a = -1;
        int32_t b = -1;
        Mat val;
        Mat adj;
        bool has_adj = false;
        double c0 = 0.0, c1 = 0.0;  // literals: scale/clamp bounds/beta/alpha
        int32_t i0 = 0, i1 = 0;     // slice range / encoding bands+flag
        const Mat* ext = nullptr;   // param storage
    };

    Var push(Node node);
    Mat compute(const Node& node) const;
    void accumulate(int32_t target, const Mat& contribution);
    EncodingConfig encoding_of(const Node& node) const;

    std::vector<Node> nodes_;
};

/// Spatial gradient by reverse sweep: seeds df with ones and reads back the
/// adjoint of the position leaf (3 x K; columns are independent samples).
/// `f` must be a (1 x K) row on the tape with `points` among its ancestors.
Mat grad_spatial(GradientTape& tape, Var f, Var points);

}  // namespace fray
