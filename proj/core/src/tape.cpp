#include "fray/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace fray {

namespace {

// Stable softplus (1/beta) * log(1 + exp(beta*x)); linear branch for
// beta*x > 30 where exp would dominate and log1p(exp(..)) overflows.
inline double softplus_value(double x, double beta) {
    const double bx = beta * x;
    if (bx > 30.0) return x;
    return std::log1p(std::exp(bx)) / beta;
}

inline double sigmoid_value(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var GradientTape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

const Mat& GradientTape::value(Var v) const { return nodes_.at(v.id).val; }

Mat GradientTape::adjoint(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.has_adj) return n.adj;
    return Mat::Zero(n.val.rows(), n.val.cols());
}

void GradientTape::clear() { nodes_.clear(); }

EncodingConfig GradientTape::encoding_of(const Node& node) const {
    EncodingConfig cfg;
    cfg.bands = node.i0;
    cfg.include_input = node.i1 != 0;
    cfg.alpha = node.c0;
    return cfg;
}

Var GradientTape::constant(Mat value) {
    Node n;
    n.op = Op::Constant;
    n.val = std::move(value);
    return push(std::move(n));
}

Var GradientTape::scalar(double value) {
    Mat m(1, 1);
    m(0, 0) = value;
    return constant(std::move(m));
}

Var GradientTape::param(const Mat* storage) {
    Node n;
    n.op = Op::Param;
    n.ext = storage;
    n.val = *storage;
    return push(std::move(n));
}

#define FRAY_BINARY(name, opname)                       \
    Var GradientTape::name(Var a, Var b) {              \
        Node n;                                         \
        n.op = Op::opname;                              \
        n.a = a.id;                                     \
        n.b = b.id;                                     \
        n.val = compute(n);                             \
        return push(std::move(n));                      \
    }

FRAY_BINARY(matmul, MatMul)
FRAY_BINARY(add, Add)
FRAY_BINARY(sub, Sub)
FRAY_BINARY(cmul, CMul)
FRAY_BINARY(cdiv, CDiv)
FRAY_BINARY(add_bias, AddBias)
FRAY_BINARY(col_scale, ColScale)
FRAY_BINARY(scale_var, ScaleVar)
FRAY_BINARY(concat_rows, ConcatRows)
#undef FRAY_BINARY

#define FRAY_UNARY(name, opname)                        \
    Var GradientTape::name(Var a) {                     \
        Node n;                                         \
        n.op = Op::opname;                              \
        n.a = a.id;                                     \
        n.val = compute(n);                             \
        return push(std::move(n));                      \
    }

FRAY_UNARY(sigmoid, Sigmoid)
FRAY_UNARY(relu, Relu)
FRAY_UNARY(exp, Exp)
FRAY_UNARY(sqrt, Sqrt)
FRAY_UNARY(abs, Abs)
FRAY_UNARY(sum_all, SumAll)
FRAY_UNARY(col_sum, ColSum)
FRAY_UNARY(row_sum, RowSum)
FRAY_UNARY(transmittance, Transmittance)
#undef FRAY_UNARY

Var GradientTape::scale_const(Var a, double c) {
    Node n;
    n.op = Op::ScaleConst;
    n.a = a.id;
    n.c0 = c;
    n.val = compute(n);
    return push(std::move(n));
}

Var GradientTape::add_const(Var a, double c) {
    Node n;
    n.op = Op::AddConst;
    n.a = a.id;
    n.c0 = c;
    n.val = compute(n);
    return push(std::move(n));
}

Var GradientTape::sub_from_const(double c, Var a) {
    Node n;
    n.op = Op::SubFromConst;
    n.a = a.id;
    n.c0 = c;
    n.val = compute(n);
    return push(std::move(n));
}

Var GradientTape::softplus(Var a, double beta) {
    Node n;
    n.op = Op::Softplus;
    n.a = a.id;
    n.c0 = beta;
    n.val = compute(n);
    return push(std::move(n));
}

Var GradientTape::clamp(Var a, double lo, double hi) {
    Node n;
    n.op = Op::Clamp;
    n.a = a.id;
    n.c0 = lo;
    n.c1 = hi;
    n.val = compute(n);
    return push(std::move(n));
}

Var GradientTape::slice_rows(Var a, int first_row, int n_rows) {
    Node n;
    n.op = Op::SliceRows;
    n.a = a.id;
    n.i0 = first_row;
    n.i1 = n_rows;
    n.val = compute(n);
    return push(std::move(n));
}

Var GradientTape::pos_encode(Var points, const EncodingConfig& cfg) {
    Node n;
    n.op = Op::Encode;
    n.a = points.id;
    n.i0 = cfg.bands;
    n.i1 = cfg.include_input ? 1 : 0;
    n.c0 = cfg.alpha;
    n.val = compute(n);
    return push(std::move(n));
}

Var GradientTape::pos_encode_jvp(Var points, Var tangents, const EncodingConfig& cfg) {
    Node n;
    n.op = Op::EncodeJvp;
    n.a = points.id;
    n.b = tangents.id;
    n.i0 = cfg.bands;
    n.i1 = cfg.include_input ? 1 : 0;
    n.c0 = cfg.alpha;
    n.val = compute(n);
    return push(std::move(n));
}

Mat GradientTape::compute(const Node& n) const {
    const auto A = [&]() -> const Mat& { return nodes_[n.a].val; };
    const auto B = [&]() -> const Mat& { return nodes_[n.b].val; };
    switch (n.op) {
        case Op::Constant: return n.val;
        case Op::Param: return *n.ext;
        case Op::MatMul: return A() * B();
        case Op::Add: return A() + B();
        case Op::Sub: return A() - B();
        case Op::CMul: return A().cwiseProduct(B());
        case Op::CDiv: return A().cwiseQuotient(B());
        case Op::AddBias: return A().colwise() + Eigen::VectorXd(B().col(0));
        case Op::ColScale:
            return (A().array().rowwise() * B().row(0).array()).matrix();
        case Op::ScaleVar: return A() * B()(0, 0);
        case Op::ScaleConst: return A() * n.c0;
        case Op::AddConst: return (A().array() + n.c0).matrix();
        case Op::SubFromConst: return (n.c0 - A().array()).matrix();
        case Op::Softplus:
            return A().unaryExpr([&](double x) { return softplus_value(x, n.c0); });
        case Op::Sigmoid:
            return A().unaryExpr([](double x) { return sigmoid_value(x); });
        case Op::Relu: return A().cwiseMax(0.0);
        case Op::Exp: return A().array().exp().matrix();
        case Op::Sqrt: return A().array().sqrt().matrix();
        case Op::Abs: return A().cwiseAbs();
        case Op::Clamp: return A().cwiseMax(n.c0).cwiseMin(n.c1);
        case Op::ConcatRows: {
            Mat out(A().rows() + B().rows(), A().cols());
            out.topRows(A().rows()) = A();
            out.bottomRows(B().rows()) = B();
            return out;
        }
        case Op::SliceRows: return A().middleRows(n.i0, n.i1);
        case Op::SumAll: {
            Mat out(1, 1);
            out(0, 0) = A().sum();
            return out;
        }
        case Op::ColSum: return A().colwise().sum();
        case Op::RowSum: return A().rowwise().sum();
        case Op::Transmittance: {
            const auto& alpha = A();
            Mat out(1, alpha.cols());
            double t = 1.0;
            for (Eigen::Index i = 0; i < alpha.cols(); ++i) {
                out(0, i) = t;
                t *= 1.0 - alpha(0, i);
            }
            return out;
        }
        case Op::Encode: return fray::encode(A(), encoding_of(n));
        case Op::EncodeJvp: return fray::encode_jvp(A(), B(), encoding_of(n));
    }
    throw std::logic_error("tape: unknown op");
}

void GradientTape::accumulate(int32_t target, const Mat& contribution) {
    Node& t = nodes_[target];
    if (!t.has_adj) {
        t.adj = Mat::Zero(t.val.rows(), t.val.cols());
        t.has_adj = true;
    }
    t.adj += contribution;
}

void GradientTape::backward(Var output) {
    backward(output, Mat::Ones(1, 1));
}

void GradientTape::backward(Var output, const Mat& seed) {
    const Node& out = nodes_.at(output.id);
    if (seed.rows() != out.val.rows() || seed.cols() != out.val.cols())
        throw std::invalid_argument("backward: seed shape mismatch");

    for (Node& n : nodes_) {
        n.has_adj = false;
        n.adj.resize(0, 0);
    }
    accumulate(output.id, seed);

    for (int32_t i = output.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.has_adj) continue;
        const Mat& g = n.adj;
        switch (n.op) {
            case Op::Constant:
            case Op::Param:
                break;
            case Op::MatMul:
                accumulate(n.a, g * nodes_[n.b].val.transpose());
                accumulate(n.b, nodes_[n.a].val.transpose() * g);
                break;
            case Op::Add:
                accumulate(n.a, g);
                accumulate(n.b, g);
                break;
            case Op::Sub:
                accumulate(n.a, g);
                accumulate(n.b, -g);
                break;
            case Op::CMul:
                accumulate(n.a, g.cwiseProduct(nodes_[n.b].val));
                accumulate(n.b, g.cwiseProduct(nodes_[n.a].val));
                break;
            case Op::CDiv: {
                const Mat& bval = nodes_[n.b].val;
                accumulate(n.a, g.cwiseQuotient(bval));
                accumulate(n.b, -(g.cwiseProduct(n.val).cwiseQuotient(bval)));
                break;
            }
            case Op::AddBias:
                accumulate(n.a, g);
                accumulate(n.b, g.rowwise().sum());
                break;
            case Op::ColScale: {
                const auto wrow = nodes_[n.b].val.row(0).array();
                accumulate(n.a, (g.array().rowwise() * wrow).matrix());
                accumulate(n.b,
                           g.cwiseProduct(nodes_[n.a].val).colwise().sum());
                break;
            }
            case Op::ScaleVar: {
                const double s = nodes_[n.b].val(0, 0);
                accumulate(n.a, g * s);
                Mat gs(1, 1);
                gs(0, 0) = g.cwiseProduct(nodes_[n.a].val).sum();
                accumulate(n.b, gs);
                break;
            }
            case Op::ScaleConst:
                accumulate(n.a, g * n.c0);
                break;
            case Op::AddConst:
                accumulate(n.a, g);
                break;
            case Op::SubFromConst:
                accumulate(n.a, -g);
                break;
            case Op::Softplus: {
                const Mat d = nodes_[n.a].val.unaryExpr(
                    [&](double x) { return sigmoid_value(n.c0 * x); });
                accumulate(n.a, g.cwiseProduct(d));
                break;
            }
            case Op::Sigmoid:
                accumulate(n.a, g.cwiseProduct(
                                    (n.val.array() * (1.0 - n.val.array())).matrix()));
                break;
            case Op::Relu: {
                const Mat mask = (nodes_[n.a].val.array() > 0.0).cast<double>().matrix();
                accumulate(n.a, g.cwiseProduct(mask));
                break;
            }
            case Op::Exp:
                accumulate(n.a, g.cwiseProduct(n.val));
                break;
            case Op::Sqrt: {
                Mat d = n.val.unaryExpr(
                    [](double y) { return y > 0.0 ? 0.5 / y : 0.0; });
                accumulate(n.a, g.cwiseProduct(d));
                break;
            }
            case Op::Abs: {
                const Mat sign = nodes_[n.a].val.unaryExpr([](double x) {
                    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                });
                accumulate(n.a, g.cwiseProduct(sign));
                break;
            }
            case Op::Clamp: {
                const auto& a = nodes_[n.a].val.array();
                const Mat mask = ((a > n.c0) && (a < n.c1)).cast<double>().matrix();
                accumulate(n.a, g.cwiseProduct(mask));
                break;
            }
            case Op::ConcatRows:
                accumulate(n.a, g.topRows(nodes_[n.a].val.rows()));
                accumulate(n.b, g.bottomRows(nodes_[n.b].val.rows()));
                break;
            case Op::SliceRows: {
                Mat ga = Mat::Zero(nodes_[n.a].val.rows(), nodes_[n.a].val.cols());
                ga.middleRows(n.i0, n.i1) = g;
                accumulate(n.a, ga);
                break;
            }
            case Op::SumAll:
                accumulate(n.a, Mat::Constant(nodes_[n.a].val.rows(),
                                              nodes_[n.a].val.cols(), g(0, 0)));
                break;
            case Op::ColSum:
                accumulate(n.a, g.replicate(nodes_[n.a].val.rows(), 1));
                break;
            case Op::RowSum:
                accumulate(n.a, g.replicate(1, nodes_[n.a].val.cols()));
                break;
            case Op::Transmittance: {
                // T_i = prod_{j<i}(1 - alpha_j):
                // d T_i / d alpha_j = -prod_{k<i, k!=j}(1 - alpha_k) for j < i.
                // Division-free: running product P(i,j) built forward from T_j.
                const auto& alpha = nodes_[n.a].val;
                const Eigen::Index k = alpha.cols();
                Mat ga = Mat::Zero(1, k);
                for (Eigen::Index j = 0; j < k; ++j) {
                    double p = n.val(0, j);  // prod_{k<j}(1-alpha_k)
                    double acc = 0.0;
                    for (Eigen::Index i = j + 1; i < k; ++i) {
                        acc += g(0, i) * p;
                        p *= 1.0 - alpha(0, i);
                        // note: skips factor (1-alpha_j) by starting from T_j
                    }
                    ga(0, j) = -acc;
                }
                accumulate(n.a, ga);
                break;
            }
            case Op::Encode: {
                const EncodingConfig cfg = encoding_of(n);
                const Mat& x = nodes_[n.a].val;
                Mat gx = Mat::Zero(3, x.cols());
                for (int j = 0; j < cfg.bands; ++j) {
                    const double freq = std::ldexp(M_PI, j);
                    const double w = window(j, cfg.alpha, cfg.bands);
                    const auto arg = (freq * x).array();
                    gx.array() += (w * freq) *
                                  (arg.cos() * g.middleRows(6 * j, 3).array() -
                                   arg.sin() * g.middleRows(6 * j + 3, 3).array());
                }
                if (cfg.include_input) gx += g.bottomRows(3);
                accumulate(n.a, gx);
                break;
            }
            case Op::EncodeJvp: {
                // val = J_enc(x) * v (per column). Adjoint of v is the
                // transposed first derivative; adjoint of x carries the
                // curvature of the encoding.
                const EncodingConfig cfg = encoding_of(n);
                const Mat& x = nodes_[n.a].val;
                const Mat& v = nodes_[n.b].val;
                Mat gx = Mat::Zero(3, x.cols());
                Mat gv = Mat::Zero(3, x.cols());
                for (int j = 0; j < cfg.bands; ++j) {
                    const double freq = std::ldexp(M_PI, j);
                    const double w = window(j, cfg.alpha, cfg.bands);
                    const auto arg = (freq * x).array();
                    const auto gsin = g.middleRows(6 * j, 3).array();
                    const auto gcos = g.middleRows(6 * j + 3, 3).array();
                    gv.array() += (w * freq) * (arg.cos() * gsin - arg.sin() * gcos);
                    gx.array() += (w * freq * freq) * v.array() *
                                  (-arg.sin() * gsin - arg.cos() * gcos);
                }
                if (cfg.include_input) gv += g.bottomRows(3);
                accumulate(n.a, gx);
                accumulate(n.b, gv);
                break;
            }
        }
    }
}

bool GradientTape::replay_matches() const {
    for (const Node& n : nodes_) {
        const Mat recomputed = compute(n);
        if (recomputed.rows() != n.val.rows() || recomputed.cols() != n.val.cols())
            return false;
        if (!(recomputed.array() == n.val.array()).all()) {
            // NaN != NaN; treat matching NaN patterns as equal.
            for (Eigen::Index r = 0; r < n.val.rows(); ++r)
                for (Eigen::Index c = 0; c < n.val.cols(); ++c) {
                    const double a = recomputed(r, c), b = n.val(r, c);
                    if (a != b && !(std::isnan(a) && std::isnan(b))) return false;
                }
        }
    }
    return true;
}

Mat grad_spatial(GradientTape& tape, Var f, Var points) {
    const Mat& fv = tape.value(f);
    if (fv.rows() != 1)
        throw std::invalid_argument("grad_spatial: f must be a 1 x K row");
    tape.backward(f, Mat::Ones(1, fv.cols()));
    return tape.adjoint(points);
}

}  // namespace fray
