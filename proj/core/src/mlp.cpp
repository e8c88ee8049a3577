#include "fray/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fray {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;

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

int MlpParams::input_dim() const {
    const int in0 = static_cast<int>(weights.front().cols());
    return in0;
}

size_t MlpParams::parameter_count() const {
    size_t n = 0;
    for (const auto& w : weights) n += static_cast<size_t>(w.size());
    for (const auto& b : biases) n += static_cast<size_t>(b.size());
    return n;
}

bool MlpParams::shapes_valid() const {
    if (weights.empty() || weights.size() != biases.size()) return false;
    const int in_dim = input_dim();
    for (int l = 0; l < layer_count(); ++l) {
        if (weights[l].rows() != biases[l].rows() || biases[l].cols() != 1)
            return false;
        if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
        if (l == 0) continue;
        Eigen::Index expect = weights[l - 1].rows();
        if (l == skip_layer) expect += in_dim;
        if (weights[l].cols() != expect) return false;
    }
    return true;
}

MlpParams make_mlp(int input_dim, int hidden_width, int n_hidden, int output_dim,
                   int skip_layer, Activation act) {
    if (n_hidden < 0 || input_dim < 1 || output_dim < 1)
        throw std::invalid_argument("make_mlp: bad dimensions");
    if (skip_layer == 0 || skip_layer > n_hidden)
        throw std::invalid_argument("make_mlp: skip layer out of range");
    MlpParams p;
    p.skip_layer = skip_layer;
    p.activation = act;
    const int n_layers = n_hidden + 1;
    int in = input_dim;
    for (int l = 0; l < n_layers; ++l) {
        if (l == skip_layer) in += input_dim;
        const int out = (l == n_layers - 1) ? output_dim : hidden_width;
        p.weights.emplace_back(Mat::Zero(out, in));
        p.biases.emplace_back(Mat::Zero(out, 1));
        in = out;
    }
    return p;
}

namespace {

// At initialization only the raw-coordinate columns carry signal, so the
// network can be probed without an encoding: zero input except rows
// [raw_offset, raw_offset+3) = x.
Mat raw_probe_inputs(int in_dim, int raw_offset, const std::vector<Vec3>& points) {
    Mat input = Mat::Zero(in_dim, static_cast<Eigen::Index>(points.size()));
    for (size_t i = 0; i < points.size(); ++i)
        input.block<3, 1>(raw_offset, static_cast<Eigen::Index>(i)) = points[i];
    return input;
}

}  // namespace

void geometric_init(MlpParams& p, int raw_offset, double radius, uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int n_layers = p.layer_count();
    const int in_dim = p.input_dim();
    for (int l = 0; l < n_layers; ++l) {
        Mat& w = p.weights[l];
        Mat& b = p.biases[l];
        b.setZero();
        if (l == n_layers - 1) {
            // Output approximates the mean of the (half-rectified) hidden
            // activations scaled to |x|; bias shifts by the sphere radius.
            const double mean = std::sqrt(M_PI) / std::sqrt(double(w.cols()));
            std::normal_distribution<double> dist(mean, 1e-4);
            for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
            b.setConstant(-radius);
            continue;
        }
        const double std_dev = std::sqrt(2.0) / std::sqrt(double(w.rows()));
        std::normal_distribution<double> dist(0.0, std_dev);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
        if (l == 0) {
            // Only raw coordinates carry signal at init; encoding columns
            // start silent and fade in with the annealing window.
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                if (c < raw_offset || c >= raw_offset + 3) w.col(c).setZero();
        } else if (l == p.skip_layer) {
            // Zero the re-concatenated encoding columns, keep raw ones.
            const Eigen::Index base = w.cols() - in_dim;
            for (Eigen::Index c = 0; c < in_dim; ++c)
                if (c < raw_offset || c >= raw_offset + 3) w.col(base + c).setZero();
        }
    }

    // The mean-field recipe leaves a depth- and direction-dependent drift at
    // these widths. Refit the SDF readout row against |x| - radius on a
    // fixed probe set (ridge least squares over the hidden features), which
    // pins the initial field to the sphere while keeping the recipe's
    // hidden-layer statistics.
    std::mt19937_64 probe_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec3> points;
    const int n_probe = 512;
    for (int i = 0; i < n_probe; ++i) {
        Vec3 dir(normal(probe_rng), normal(probe_rng), normal(probe_rng));
        dir.normalize();
        points.push_back(dir * (0.05 + 1.4 * (i % 32) / 31.0));
    }

    // Hidden features feeding the last layer (last-layer input).
    MlpParams headless = p;
    headless.weights.pop_back();
    headless.biases.pop_back();
    // Identity readout of the penultimate activations.
    const int feat_dim = static_cast<int>(p.weights.back().cols());
    headless.weights.push_back(Mat::Identity(feat_dim, feat_dim));
    headless.biases.push_back(Mat::Zero(feat_dim, 1));
    // The identity head sits after the activation of the true penultimate
    // layer, so these are exactly the last layer's inputs.
    const Mat features =
        mlp_forward(headless, raw_probe_inputs(in_dim, raw_offset, points));

    Mat design(feat_dim + 1, n_probe);
    design.topRows(feat_dim) = features;
    design.bottomRows(1).setOnes();
    Eigen::VectorXd target(n_probe);
    for (int i = 0; i < n_probe; ++i) target(i) = points[static_cast<size_t>(i)].norm() - radius;

    const double ridge = 1e-8 * n_probe;
    const Mat gram = design * design.transpose() +
                     ridge * Mat::Identity(feat_dim + 1, feat_dim + 1);
    const Eigen::VectorXd sol = gram.ldlt().solve(design * target);
    p.weights.back().row(0) = sol.head(feat_dim).transpose();
    p.biases.back()(0, 0) = sol(feat_dim);
}

void random_init(MlpParams& p, uint64_t seed, bool zero_last_layer) {
    std::mt19937_64 rng(seed);
    const int n_layers = p.layer_count();
    for (int l = 0; l < n_layers; ++l) {
        Mat& w = p.weights[l];
        const double std_dev = std::sqrt(2.0 / double(w.cols()));
        std::normal_distribution<double> dist(0.0, std_dev);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
        // Small random biases: with exact zeros, a dead relu column keeps
        // every downstream pre-activation exactly at the kink.
        std::normal_distribution<double> bias_dist(0.0, 0.01);
        for (Eigen::Index i = 0; i < p.biases[l].size(); ++i)
            p.biases[l].data()[i] = bias_dist(rng);
    }
    if (zero_last_layer) {
        p.weights.back().setZero();
        p.biases.back().setZero();
    }
}

Mat mlp_forward(const MlpParams& p, const Mat& input) {
    if (input.rows() != p.input_dim())
        throw std::invalid_argument("mlp_forward: input dimension mismatch");
    const int n_layers = p.layer_count();
    Mat h = input;
    for (int l = 0; l < n_layers; ++l) {
        if (l == p.skip_layer) {
            Mat cat(h.rows() + input.rows(), h.cols());
            cat << h, input;
            h = cat * kInvSqrt2;
        }
        h = (p.weights[l] * h).colwise() + Eigen::VectorXd(p.biases[l].col(0));
        if (l == n_layers - 1) break;
        if (p.activation == Activation::Softplus) {
            const double beta = p.softplus_beta;
            h = h.unaryExpr([beta](double x) { return softplus_value(x, beta); });
        } else {
            h = h.cwiseMax(0.0);
        }
    }
    return h;
}

MlpDual mlp_forward_dual(const MlpParams& p, const Mat& input,
                         const std::array<Mat, 3>& jin) {
    if (input.rows() != p.input_dim())
        throw std::invalid_argument("mlp_forward_dual: input dimension mismatch");
    const int n_layers = p.layer_count();
    Mat h = input;
    std::array<Mat, 3> jh = jin;
    for (int l = 0; l < n_layers; ++l) {
        if (l == p.skip_layer) {
            Mat cat(h.rows() + input.rows(), h.cols());
            cat << h, input;
            h = cat * kInvSqrt2;
            for (int k = 0; k < 3; ++k) {
                Mat jcat(jh[k].rows() + jin[k].rows(), jh[k].cols());
                jcat << jh[k], jin[k];
                jh[k] = jcat * kInvSqrt2;
            }
        }
        for (int k = 0; k < 3; ++k) jh[k] = p.weights[l] * jh[k];
        h = (p.weights[l] * h).colwise() + Eigen::VectorXd(p.biases[l].col(0));
        if (l == n_layers - 1) break;
        Mat dact;
        if (p.activation == Activation::Softplus) {
            const double beta = p.softplus_beta;
            dact = h.unaryExpr([beta](double x) { return sigmoid_value(beta * x); });
            h = h.unaryExpr([beta](double x) { return softplus_value(x, beta); });
        } else {
            dact = (h.array() > 0.0).cast<double>().matrix();
            h = h.cwiseMax(0.0);
        }
        for (int k = 0; k < 3; ++k) jh[k] = jh[k].cwiseProduct(dact);
    }
    return MlpDual{std::move(h), std::move(jh)};
}

TapedMlp register_mlp(GradientTape& tape, const MlpParams& p) {
    TapedMlp net;
    net.params = &p;
    for (size_t l = 0; l < p.weights.size(); ++l) {
        net.weights.push_back(tape.param(&p.weights[l]));
        net.biases.push_back(tape.param(&p.biases[l]));
    }
    return net;
}

Var mlp_forward(GradientTape& tape, const TapedMlp& net, Var input) {
    const MlpParams& p = *net.params;
    const int n_layers = p.layer_count();
    Var h = input;
    for (int l = 0; l < n_layers; ++l) {
        if (l == p.skip_layer)
            h = tape.scale_const(tape.concat_rows(h, input), kInvSqrt2);
        h = tape.add_bias(tape.matmul(net.weights[l], h), net.biases[l]);
        if (l == n_layers - 1) break;
        h = (p.activation == Activation::Softplus)
                ? tape.softplus(h, p.softplus_beta)
                : tape.relu(h);
    }
    return h;
}

DualVar mlp_forward(GradientTape& tape, const TapedMlp& net, const DualVar& input) {
    const MlpParams& p = *net.params;
    const int n_layers = p.layer_count();
    DualVar h = input;
    for (int l = 0; l < n_layers; ++l) {
        if (l == p.skip_layer) {
            h.val = tape.scale_const(tape.concat_rows(h.val, input.val), kInvSqrt2);
            for (int k = 0; k < 3; ++k)
                h.j[k] = tape.scale_const(tape.concat_rows(h.j[k], input.j[k]),
                                          kInvSqrt2);
        }
        for (int k = 0; k < 3; ++k) h.j[k] = tape.matmul(net.weights[l], h.j[k]);
        h.val = tape.add_bias(tape.matmul(net.weights[l], h.val), net.biases[l]);
        if (l == n_layers - 1) break;
        Var dact;
        if (p.activation == Activation::Softplus) {
            dact = tape.sigmoid(tape.scale_const(h.val, p.softplus_beta));
            h.val = tape.softplus(h.val, p.softplus_beta);
        } else {
            // The relu mask is piecewise constant (zero derivative a.e.), so
            // it enters the tape as a constant.
            const Mat mask =
                (tape.value(h.val).array() > 0.0).cast<double>().matrix();
            dact = tape.constant(mask);
            h.val = tape.relu(h.val);
        }
        for (int k = 0; k < 3; ++k) h.j[k] = tape.cmul(h.j[k], dact);
    }
    return h;
}

}  // namespace fray
