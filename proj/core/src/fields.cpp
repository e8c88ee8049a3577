#include "fray/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace fray {

namespace {
constexpr double kNormalEps = 1e-8;
// Keeps gradient-norm expressions finite at exact zeros; far below every
// tolerance used by the losses and tests.
constexpr double kNormGuard = 1e-20;

inline double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
}  // namespace

SdfEval SdfField::eval_point(const Vec3& x) const {
    FieldBatch b = eval(Mat(x));
    SdfEval out;
    out.value = b.f(0);
    out.gradient = b.grad.col(0);
    out.singular = !b.flagged.empty() && b.flagged[0];
    return out;
}

FieldBatch AnalyticField::eval(const Mat& points) const {
    const Eigen::Index n = points.cols();
    FieldBatch out;
    out.f.resize(n);
    out.grad.resize(3, n);
    out.flagged.assign(static_cast<size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        const SdfEval e = eval_sdf(shape_, points.col(i));
        out.f(i) = e.value;
        out.grad.col(i) = e.gradient;
        out.flagged[static_cast<size_t>(i)] = e.singular;
    }
    return out;
}

NeuralSdfModel make_model(const ModelConfig& cfg) {
    NeuralSdfModel m;
    m.feature_dim = cfg.feature;
    m.use_displacement = cfg.use_displacement;
    m.enc_base.bands = cfg.bands;
    m.enc_base.include_input = cfg.include_input;
    m.enc_disp = m.enc_base;
    m.set_alpha_d(cfg.alpha_d0);
    m.set_s(cfg.s_init);

    const int in_dim = m.enc_base.dim();
    const int skip = cfg.layers >= 2 ? cfg.layers / 2 : -1;
    m.base = make_mlp(in_dim, cfg.hidden, cfg.layers, 1 + cfg.feature, skip,
                      Activation::Softplus);
    m.base.softplus_beta = cfg.softplus_beta;
    geometric_init(m.base, m.enc_base.raw_offset(), cfg.init_radius, cfg.seed);

    m.displacement = make_mlp(in_dim, cfg.hidden, cfg.layers, 1, skip,
                              Activation::Softplus);
    m.displacement.softplus_beta = cfg.softplus_beta;
    random_init(m.displacement, cfg.seed + 1, /*zero_last_layer=*/true);

    m.color = make_mlp(9 + cfg.feature, cfg.color_hidden, cfg.color_layers, 3, -1,
                       Activation::Relu);
    random_init(m.color, cfg.seed + 2);
    return m;
}

// Basis tangent channels for points treated as the identity map.
static std::array<Mat, 3> identity_tangents(Eigen::Index n) {
    std::array<Mat, 3> t;
    for (int k = 0; k < 3; ++k) {
        t[k] = Mat::Zero(3, n);
        t[k].row(k).setOnes();
    }
    return t;
}

CompositeEval composite_eval(const NeuralSdfModel& m, const Mat& points,
                             const Mat* fixed_normals) {
    if (points.rows() != 3)
        throw std::invalid_argument("composite_eval: points must be 3 x N");
    const Eigen::Index n = points.cols();
    const auto basis = identity_tangents(n);

    // Base evaluation at x with spatial derivative channels.
    std::array<Mat, 3> enc_j;
    for (int k = 0; k < 3; ++k) enc_j[k] = encode_jvp(points, basis[k], m.enc_base);
    const MlpDual base_at_x = mlp_forward_dual(m.base, encode(points, m.enc_base), enc_j);

    CompositeEval out;
    out.f_base = base_at_x.out.row(0);
    out.grad_base.resize(3, n);
    for (int k = 0; k < 3; ++k) out.grad_base.row(k) = base_at_x.jout[k].row(0);
    out.flagged.assign(static_cast<size_t>(n), false);

    // Base normals; fallback where the gradient degenerates.
    out.normal.resize(3, n);
    if (fixed_normals) {
        out.normal = *fixed_normals;
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double norm = out.grad_base.col(i).norm();
            if (norm < kNormalEps) {
                out.normal.col(i) = kSingularFallbackGradient;
                out.flagged[static_cast<size_t>(i)] = true;
            } else {
                out.normal.col(i) = out.grad_base.col(i) / norm;
            }
        }
    }

    if (!m.use_displacement) {
        out.f = out.f_base;
        out.grad = out.grad_base;
        out.feature = base_at_x.out.bottomRows(m.feature_dim);
        return out;
    }

    // Displacement network at x.
    for (int k = 0; k < 3; ++k) enc_j[k] = encode_jvp(points, basis[k], m.enc_disp);
    const MlpDual disp = mlp_forward_dual(m.displacement, encode(points, m.enc_disp), enc_j);

    // Displacement magnitude D = 4 psi'_{0.01 sc}(f_b) f_d and its gradient.
    const double st = 0.01 * m.constraint_scale();
    Eigen::RowVectorXd d_mag(n);
    Mat d_grad(3, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sig = stable_sigmoid(st * out.f_base(i));
        const double psi_p = st * sig * (1.0 - sig);
        const double psi_pp = st * psi_p * (1.0 - 2.0 * sig);
        const double fd = disp.out(0, i);
        d_mag(i) = 4.0 * psi_p * fd;
        Vec3 gfd;
        for (int k = 0; k < 3; ++k) gfd[k] = disp.jout[k](0, i);
        d_grad.col(i) =
            4.0 * (psi_pp * fd * out.grad_base.col(i) + psi_p * gfd);
    }

    // Displaced query point and its jacobian channels (n treated constant).
    Mat displaced = points - (out.normal.array().rowwise() * d_mag.array()).matrix();
    std::array<Mat, 3> disp_tan;
    for (int k = 0; k < 3; ++k)
        disp_tan[k] = basis[k] -
                      (out.normal.array().rowwise() * d_grad.row(k).array()).matrix();

    std::array<Mat, 3> enc_j2;
    for (int k = 0; k < 3; ++k)
        enc_j2[k] = encode_jvp(displaced, disp_tan[k], m.enc_base);
    const MlpDual final_eval =
        mlp_forward_dual(m.base, encode(displaced, m.enc_base), enc_j2);

    out.f = final_eval.out.row(0);
    out.grad.resize(3, n);
    for (int k = 0; k < 3; ++k) out.grad.row(k) = final_eval.jout[k].row(0);
    out.feature = final_eval.out.bottomRows(m.feature_dim);

    // Singular-normal columns fall back to the base field.
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!out.flagged[static_cast<size_t>(i)]) continue;
        out.f(i) = out.f_base(i);
        out.grad.col(i) = out.grad_base.col(i);
    }
    return out;
}

Eigen::RowVectorXd composite_eval_values(const NeuralSdfModel& m,
                                         const Mat& points) {
    const Eigen::Index n = points.cols();
    const auto basis = identity_tangents(n);
    std::array<Mat, 3> enc_j;
    for (int k = 0; k < 3; ++k) enc_j[k] = encode_jvp(points, basis[k], m.enc_base);
    const MlpDual base_at_x =
        mlp_forward_dual(m.base, encode(points, m.enc_base), enc_j);
    Eigen::RowVectorXd f_base = base_at_x.out.row(0);
    if (!m.use_displacement) return f_base;

    Mat normal(3, n);
    std::vector<bool> flagged(static_cast<size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vec3 g;
        for (int k = 0; k < 3; ++k) g[k] = base_at_x.jout[k](0, i);
        const double norm = g.norm();
        if (norm < kNormalEps) {
            normal.col(i) = kSingularFallbackGradient;
            flagged[static_cast<size_t>(i)] = true;
        } else {
            normal.col(i) = g / norm;
        }
    }

    const Mat disp_out = mlp_forward(m.displacement, encode(points, m.enc_disp));
    const double st = 0.01 * m.constraint_scale();
    Eigen::RowVectorXd d_mag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sig = stable_sigmoid(st * f_base(i));
        d_mag(i) = 4.0 * st * sig * (1.0 - sig) * disp_out(0, i);
    }
    const Mat displaced =
        points - (normal.array().rowwise() * d_mag.array()).matrix();
    Eigen::RowVectorXd f =
        mlp_forward(m.base, encode(displaced, m.enc_base)).row(0);
    for (Eigen::Index i = 0; i < n; ++i)
        if (flagged[static_cast<size_t>(i)]) f(i) = f_base(i);
    return f;
}

Eigen::RowVectorXd NeuralField::eval_values(const Mat& points) const {
    return composite_eval_values(*model_, points);
}

SdfEval composite_sdf(const NeuralSdfModel& m, const Vec3& x) {
    const CompositeEval e = composite_eval(m, Mat(x));
    SdfEval out;
    out.value = e.f(0);
    out.gradient = e.grad.col(0);
    out.singular = e.flagged[0];
    return out;
}

FieldBatch NeuralField::eval(const Mat& points) const {
    CompositeEval e = composite_eval(*model_, points);
    FieldBatch out;
    out.f = std::move(e.f);
    out.grad = std::move(e.grad);
    out.feature = std::move(e.feature);
    out.flagged = std::move(e.flagged);
    for (Eigen::Index i = 0; i < out.f.size(); ++i) {
        if (!std::isfinite(out.f(i)) || !out.grad.col(i).allFinite())
            out.flagged[static_cast<size_t>(i)] = true;
    }
    return out;
}

Mat color_forward(const MlpParams& color, const Mat& x, const Mat& normals,
                  const Vec3& view_dir, const Mat& feature) {
    const Eigen::Index n = x.cols();
    Mat input(9 + feature.rows(), n);
    input.topRows(3) = x;
    input.middleRows(3, 3) = normals;
    input.middleRows(6, 3) = view_dir.replicate(1, n);
    input.bottomRows(feature.rows()) = feature;
    Mat logits = mlp_forward(color, input);
    return logits.unaryExpr([](double v) { return stable_sigmoid(v); });
}

Mat HeadlightColor::shade(const Mat& x, const Mat& normals, const Vec3& view_dir,
                          const Mat& feature) const {
    (void)x;
    (void)feature;
    const Eigen::Index n = normals.cols();
    Mat rgb(3, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double nn = normals.col(i).norm();
        const double lambert =
            nn > 0.0 ? std::max(0.0, -normals.col(i).dot(view_dir) / nn) : 0.0;
        rgb.col(i) = albedo_ * lambert;
    }
    return rgb;
}

Mat NeuralColor::shade(const Mat& x, const Mat& normals, const Vec3& view_dir,
                       const Mat& feature) const {
    Mat unit = normals;
    for (Eigen::Index i = 0; i < unit.cols(); ++i) {
        const double nn = unit.col(i).norm();
        if (nn > 0.0) unit.col(i) /= nn;
    }
    return color_forward(model_->color, x, unit, view_dir, feature);
}

// ---- Taped path ----

TapedModel register_model(GradientTape& tape, const NeuralSdfModel& m) {
    TapedModel net;
    net.model = &m;
    net.base = register_mlp(tape, m.base);
    if (m.use_displacement) net.disp = register_mlp(tape, m.displacement);
    net.color = register_mlp(tape, m.color);
    net.log_s = tape.param(&m.log_s);
    net.s = tape.exp(net.log_s);
    return net;
}

namespace {

// Tape-level jet: value row(s) plus three spatial-derivative channels.
struct TapedDual {
    Var val;
    std::array<Var, 3> j;
};

TapedDual encode_dual(GradientTape& tape, const TapedDual& x,
                      const EncodingConfig& cfg) {
    TapedDual out;
    out.val = tape.pos_encode(x.val, cfg);
    for (int k = 0; k < 3; ++k)
        out.j[k] = tape.pos_encode_jvp(x.val, x.j[k], cfg);
    return out;
}

TapedDual mlp_dual(GradientTape& tape, const TapedMlp& net, const TapedDual& in) {
    DualVar din{in.val, in.j};
    DualVar dout = mlp_forward(tape, net, din);
    return TapedDual{dout.val, dout.j};
}

TapedDual row0(GradientTape& tape, const TapedDual& d) {
    TapedDual out;
    out.val = tape.slice_rows(d.val, 0, 1);
    for (int k = 0; k < 3; ++k) out.j[k] = tape.slice_rows(d.j[k], 0, 1);
    return out;
}

}  // namespace

TapedComposite composite_forward(GradientTape& tape, const TapedModel& net,
                                 const Mat& points, const Mat* fixed_normals) {
    const NeuralSdfModel& m = *net.model;
    const Eigen::Index n = points.cols();

    TapedDual x;
    x.val = tape.constant(points);
    {
        const auto basis = identity_tangents(n);
        for (int k = 0; k < 3; ++k) x.j[k] = tape.constant(basis[k]);
    }

    const TapedDual base_out =
        mlp_dual(tape, net.base, encode_dual(tape, x, m.enc_base));
    const TapedDual fb = row0(tape, base_out);

    TapedComposite out;
    out.points = x.val;
    out.f_base = fb.val;
    out.grad_base = fb.j;

    // Detached normals from the base gradient values.
    out.normal_value.resize(3, n);
    if (fixed_normals) {
        out.normal_value = *fixed_normals;
    } else {
        Mat grad_val(3, n);
        for (int k = 0; k < 3; ++k) grad_val.row(k) = tape.value(fb.j[k]);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double nn = grad_val.col(i).norm();
            out.normal_value.col(i) = nn < kNormalEps
                                          ? Vec3(kSingularFallbackGradient)
                                          : Vec3(grad_val.col(i) / nn);
        }
    }

    if (!m.use_displacement) {
        out.f = fb.val;
        out.grad = fb.j;
        out.feature = tape.slice_rows(base_out.val, 1, m.feature_dim);
        return out;
    }

    const TapedDual disp_out =
        mlp_dual(tape, net.disp, encode_dual(tape, x, m.enc_disp));
    const TapedDual fd = row0(tape, disp_out);

    // Constraint factor 4 psi'_{st}(f_b) with st = 0.01 * min(s, 1000).
    const Var st = tape.scale_const(tape.clamp(net.s, 0.0, 1000.0), 0.01);
    const Var u = tape.scale_var(fb.val, st);
    const Var sig = tape.sigmoid(u);
    const Var one_minus_sig = tape.sub_from_const(1.0, sig);
    const Var psi_p = tape.scale_var(tape.cmul(sig, one_minus_sig), st);
    // psi'' = st * psi' * (1 - 2 sig), chain for the derivative channels.
    const Var psi_pp = tape.scale_var(
        tape.cmul(psi_p, tape.sub_from_const(1.0, tape.scale_const(sig, 2.0))), st);

    TapedDual d_mag;
    d_mag.val = tape.scale_const(tape.cmul(psi_p, fd.val), 4.0);
    for (int k = 0; k < 3; ++k) {
        const Var term1 = tape.cmul(tape.cmul(psi_pp, fb.j[k]), fd.val);
        const Var term2 = tape.cmul(psi_p, fd.j[k]);
        d_mag.j[k] = tape.scale_const(tape.add(term1, term2), 4.0);
    }

    const Var n_const = tape.constant(out.normal_value);
    TapedDual displaced;
    displaced.val = tape.sub(x.val, tape.col_scale(n_const, d_mag.val));
    for (int k = 0; k < 3; ++k)
        displaced.j[k] = tape.sub(x.j[k], tape.col_scale(n_const, d_mag.j[k]));

    const TapedDual final_out =
        mlp_dual(tape, net.base, encode_dual(tape, displaced, m.enc_base));
    const TapedDual f = row0(tape, final_out);

    out.f = f.val;
    out.grad = f.j;
    out.feature = tape.slice_rows(final_out.val, 1, m.feature_dim);
    return out;
}

Var color_forward(GradientTape& tape, const TapedModel& net, Var x_const,
                  const std::array<Var, 3>& grad_rows, const Vec3& view_dir,
                  Var feature) {
    const Eigen::Index n = tape.value(x_const).cols();
    // Normalize the gradient rows on tape; the guard keeps the norm finite.
    const Var gx2 = tape.cmul(grad_rows[0], grad_rows[0]);
    const Var gy2 = tape.cmul(grad_rows[1], grad_rows[1]);
    const Var gz2 = tape.cmul(grad_rows[2], grad_rows[2]);
    const Var norm = tape.sqrt(
        tape.add_const(tape.add(tape.add(gx2, gy2), gz2), kNormGuard));
    const Var grad_mat = tape.concat_rows(
        tape.concat_rows(grad_rows[0], grad_rows[1]), grad_rows[2]);
    const Var inv = tape.cdiv(tape.constant(Mat::Ones(1, n)), norm);
    const Var unit_normal = tape.col_scale(grad_mat, inv);

    const Var dirs = tape.constant(Mat(view_dir.replicate(1, n)));
    Var input = tape.concat_rows(x_const, unit_normal);
    input = tape.concat_rows(input, dirs);
    input = tape.concat_rows(input, feature);
    return tape.sigmoid(mlp_forward(tape, net.color, input));
}

}  // namespace fray
