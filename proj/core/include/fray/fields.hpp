#pragma once

#include <memory>
#include <vector>

#include "fray/analytic_sdf.hpp"
#include "fray/encoding.hpp"
#include "fray/mlp.hpp"

namespace fray {

/// Batched field query: values, spatial gradients, and (for neural fields)
/// the per-sample feature vector consumed by the color network.
struct FieldBatch {
    Eigen::RowVectorXd f;        // 1 x N
    Mat grad;                    // 3 x N
    Mat feature;                 // F x N (0 rows when absent)
    std::vector<bool> flagged;   // singular gradient / non-finite output
};

/// Anything that answers (value, gradient) signed-distance queries.
class SdfField {
public:
    virtual ~SdfField() = default;
    virtual FieldBatch eval(const Mat& points) const = 0;
    /// Values only; cheaper than eval() for fields whose gradients cost
    /// extra (surface extraction never needs gradients).
    virtual Eigen::RowVectorXd eval_values(const Mat& points) const {
        return eval(points).f;
    }
    SdfEval eval_point(const Vec3& x) const;
};

class AnalyticField final : public SdfField {
public:
    explicit AnalyticField(AnalyticSdf shape) : shape_(std::move(shape)) {}
    FieldBatch eval(const Mat& points) const override;
    const AnalyticSdf& shape() const { return shape_; }

private:
    AnalyticSdf shape_;
};

/// The learned model: a base SDF network, an optional displacement network
/// displacing queries along the base normal, and a view-dependent color
/// network. The composite field is
///
///   f(x) = f_b(x - 4 psi'_{0.01 sc}(f_b(x)) * f_d(x) * n),
///   n = grad f_b(x) / |grad f_b(x)|,   sc = min(s, 1000),
///
/// where the constraint factor pins f to f_b away from the base surface.
/// The normal n is treated as a constant of the differentiation; the spatial
/// gradient still flows through both base evaluations and the displacement.
/// Base and displacement encodings anneal together with alpha_b = 0.5 alpha_d.
struct NeuralSdfModel {
    MlpParams base;          // outputs [sdf, feature...]
    MlpParams displacement;  // outputs [displacement]
    MlpParams color;         // inputs [x, n, v, feature], outputs rgb logits
    EncodingConfig enc_base;
    EncodingConfig enc_disp;
    Mat log_s = Mat::Constant(1, 1, 0.0);  // s stored as exp(log_s) > 0
    bool use_displacement = true;
    int feature_dim = 256;

    double s() const { return std::exp(log_s(0, 0)); }
    void set_s(double s_value) { log_s(0, 0) = std::log(s_value); }
    double constraint_scale() const { return std::min(s(), 1000.0); }
    double alpha_d() const { return enc_disp.alpha; }
    void set_alpha_d(double a) {
        enc_disp.alpha = a;
        enc_base.alpha = 0.5 * a;
    }
};

struct ModelConfig {
    int hidden = 256;
    int layers = 8;        // hidden layer count; skip connection at layers/2
    int feature = 256;
    int color_hidden = 256;
    int color_layers = 4;
    int bands = 16;        // positional encoding L, both networks
    bool include_input = true;
    double alpha_d0 = 0.5;
    double s_init = 20.0;
    double softplus_beta = 100.0;
    double init_radius = 0.5;
    bool use_displacement = true;
    uint64_t seed = 0;
};

/// Builds a model with geometric base init (approximates |x| - init_radius)
/// and a zero-output displacement net, so training starts at f = f_b.
NeuralSdfModel make_model(const ModelConfig& cfg);

/// Result of the composite evaluation at a batch of points.
struct CompositeEval {
    Eigen::RowVectorXd f;        // composite value
    Mat grad;                    // 3 x N composite spatial gradient
    Eigen::RowVectorXd f_base;   // base value at x
    Mat grad_base;               // 3 x N base gradient at x
    Mat normal;                  // base normal used for displacement
    Mat feature;                 // from the displaced base evaluation
    std::vector<bool> flagged;
};

/// Raw (tape-free) composite evaluation. Flagged columns (|grad f_b| < 1e-8)
/// fall back to the base value and gradient. `fixed_normals` (3 x N)
/// substitutes precomputed displacement directions for the base normals;
/// since the normal is a constant of the differentiation, this is also what
/// makes finite-difference checks of base-parameter gradients well-defined.
CompositeEval composite_eval(const NeuralSdfModel& m, const Mat& points,
                             const Mat* fixed_normals = nullptr);

/// Composite values only: skips the jacobian channels of the displacement
/// and displaced evaluations (the base gradient is still needed for the
/// normal).
Eigen::RowVectorXd composite_eval_values(const NeuralSdfModel& m, const Mat& points);

/// Single-point convenience wrapper: (value, spatial gradient).
SdfEval composite_sdf(const NeuralSdfModel& m, const Vec3& x);

class NeuralField final : public SdfField {
public:
    explicit NeuralField(const NeuralSdfModel* model) : model_(model) {}
    FieldBatch eval(const Mat& points) const override;
    Eigen::RowVectorXd eval_values(const Mat& points) const override;
    const NeuralSdfModel& model() const { return *model_; }

private:
    const NeuralSdfModel* model_;
};

/// Raw color pass: sigmoid-bounded rgb (3 x N) from position, normal, view
/// direction and feature columns.
Mat color_forward(const MlpParams& color, const Mat& x, const Mat& normals,
                  const Vec3& view_dir, const Mat& feature);

/// Maps sample points to rgb. Implementations: headlight shading over an
/// analytic field, or the model's color network.
class ColorModel {
public:
    virtual ~ColorModel() = default;
    virtual Mat shade(const Mat& x, const Mat& normals, const Vec3& view_dir,
                      const Mat& feature) const = 0;
};

/// Headlight Lambertian: rgb = albedo(x) * max(0, -n.d).
class HeadlightColor final : public ColorModel {
public:
    explicit HeadlightColor(Vec3 albedo) : albedo_(std::move(albedo)) {}
    Mat shade(const Mat& x, const Mat& normals, const Vec3& view_dir,
              const Mat& feature) const override;

private:
    Vec3 albedo_;
};

class NeuralColor final : public ColorModel {
public:
    explicit NeuralColor(const NeuralSdfModel* model) : model_(model) {}
    Mat shade(const Mat& x, const Mat& normals, const Vec3& view_dir,
              const Mat& feature) const override;

private:
    const NeuralSdfModel* model_;
};

// ---- Taped path (training) ----

/// Model parameters registered on a tape; `s` is exp(log_s) as a tape node.
struct TapedModel {
    TapedMlp base;
    TapedMlp disp;
    TapedMlp color;
    Var log_s;
    Var s;
    const NeuralSdfModel* model = nullptr;
};
TapedModel register_model(GradientTape& tape, const NeuralSdfModel& m);

/// Composite forward on the tape over a constant batch of points.
/// Exposes the rows needed by rendering and the loss: composite value and
/// spatial-gradient rows, base value and gradient rows (for the Eikonal
/// term), feature block and the detached normals.
struct TapedComposite {
    Var f;                        // 1 x K composite value
    std::array<Var, 3> grad;      // spatial gradient rows, 1 x K each
    Var f_base;                   // 1 x K
    std::array<Var, 3> grad_base; // 1 x K each
    Var feature;                  // F x K
    Var points;                   // 3 x K constant leaf
    Mat normal_value;             // detached normals (fallback where singular)
};
TapedComposite composite_forward(GradientTape& tape, const TapedModel& net,
                                 const Mat& points,
                                 const Mat* fixed_normals = nullptr);

/// Color network on the tape. `normal` rows are tape expressions so radiance
/// gradients flow back into the SDF networks through the shading normals.
Var color_forward(GradientTape& tape, const TapedModel& net, Var x_const,
                  const std::array<Var, 3>& grad_rows, const Vec3& view_dir,
                  Var feature);

}  // namespace fray
