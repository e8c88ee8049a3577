#include <doctest.h>

#include <functional>
#include <random>

#include "fray/mlp.hpp"
#include "fray/tape.hpp"

using namespace fray;

namespace {

using Builder = std::function<Var(GradientTape&, const std::vector<Mat>&)>;

Mat random_mat(int r, int c, std::mt19937_64& rng, double lo = -1.0,
               double hi = 1.0) {
    std::uniform_real_distribution<double> uni(lo, hi);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uni(rng);
    return m;
}

// Checks the tape gradient of a scalar-valued graph against central finite
// differences over every entry of every input.
void check_gradients(const Builder& build, std::vector<Mat> inputs,
                     double tol = 1e-6, double h = 1e-6) {
    GradientTape tape;
    std::vector<Var> leaves;
    std::vector<Mat> stored = inputs;
    GradientTape build_tape;
    // The builder registers inputs itself through `param`; we pass storage.
    std::vector<const Mat*> ptrs;
    for (auto& m : stored) ptrs.push_back(&m);

    auto eval = [&](const std::vector<Mat>& vals) {
        GradientTape t;
        return t.value(build(t, vals))(0, 0);
    };

    GradientTape gt;
    const Var out = build(gt, stored);
    REQUIRE(gt.value(out).size() == 1);
    gt.backward(out);
    REQUIRE(gt.replay_matches());

    // The builder must register inputs as the first nodes, in order.
    for (size_t i = 0; i < stored.size(); ++i) {
        const Mat grad = gt.adjoint(Var{static_cast<int32_t>(i)});
        for (Eigen::Index e = 0; e < stored[i].size(); ++e) {
            std::vector<Mat> hi = stored, lo = stored;
            hi[i].data()[e] += h;
            lo[i].data()[e] -= h;
            const double fd = (eval(hi) - eval(lo)) / (2 * h);
            const double got = grad.data()[e];
            const double denom = std::max({1.0, std::abs(fd), std::abs(got)});
            CHECK(std::abs(got - fd) / denom < tol);
        }
    }
}

Var leaf_all(GradientTape& t, const std::vector<Mat>& vals,
             std::vector<Var>& out) {
    out.clear();
    for (const auto& m : vals) out.push_back(t.constant(m));
    return out.front();
}

}  // namespace

TEST_CASE("tape values replay bit-exactly") {
    std::mt19937_64 rng(1);
    GradientTape t;
    const Var a = t.constant(random_mat(4, 5, rng));
    const Var b = t.constant(random_mat(4, 5, rng));
    const Var c = t.softplus(t.cmul(a, b), 100.0);
    const Var d = t.sum_all(t.sigmoid(c));
    (void)d;
    CHECK(t.replay_matches());
}

TEST_CASE("arithmetic op gradients match finite differences") {
    std::mt19937_64 rng(2);
    auto with = [&](const Builder& b, std::vector<Mat> ins, double tol = 1e-6) {
        check_gradients(b, std::move(ins), tol);
    };

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.matmul(in[0], in[1]));
    }, {random_mat(3, 4, rng), random_mat(4, 2, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.cmul(t.add(in[0], in[1]), t.sub(in[0], in[1])));
    }, {random_mat(3, 3, rng), random_mat(3, 3, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.cdiv(in[0], in[1]));
    }, {random_mat(2, 3, rng), random_mat(2, 3, rng, 1.0, 2.0)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.cmul(t.add_bias(in[0], in[1]), in[0]));
    }, {random_mat(3, 5, rng), random_mat(3, 1, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.cmul(t.col_scale(in[0], in[1]), in[0]));
    }, {random_mat(3, 4, rng), random_mat(1, 4, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.scale_var(in[0], in[1]));
    }, {random_mat(3, 4, rng), random_mat(1, 1, rng)});
}

TEST_CASE("nonlinearity gradients match finite differences") {
    std::mt19937_64 rng(3);
    auto with = [&](const Builder& b, std::vector<Mat> ins, double tol = 1e-6) {
        check_gradients(b, std::move(ins), tol);
    };

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.softplus(in[0], 100.0));
    }, {random_mat(3, 4, rng)}, 2e-5);

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.sigmoid(in[0]));
    }, {random_mat(3, 4, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.exp(in[0]));
    }, {random_mat(3, 4, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.sqrt(in[0]));
    }, {random_mat(3, 4, rng, 0.5, 2.0)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.abs(in[0]));
    }, {random_mat(3, 4, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.relu(in[0]));
    }, {random_mat(3, 4, rng)});

    // Clamp: check away from the boundaries (subgradient there).
    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.clamp(in[0], -0.5, 0.5));
    }, {random_mat(3, 4, rng, -2.0, 2.0)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        const Var c = t.concat_rows(in[0], in[1]);
        return t.sum_all(t.cmul(c, c));
    }, {random_mat(2, 3, rng), random_mat(4, 3, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        return t.sum_all(t.slice_rows(t.cmul(in[0], in[0]), 1, 2));
    }, {random_mat(4, 3, rng)});

    with([](GradientTape& t, const std::vector<Mat>& v) {
        std::vector<Var> in;
        leaf_all(t, v, in);
        const Var cs = t.col_sum(in[0]);
        const Var rs = t.row_sum(in[0]);
        return t.add(t.sum_all(t.cmul(cs, cs)), t.sum_all(t.cmul(rs, rs)));
    }, {random_mat(3, 4, rng)});
}

TEST_CASE("transmittance gradients match finite differences") {
    std::mt19937_64 rng(4);
    check_gradients(
        [](GradientTape& t, const std::vector<Mat>& v) {
            std::vector<Var> in;
            leaf_all(t, v, in);
            const Var trans = t.transmittance(in[0]);
            // Weighted sum exercises every T_i adjoint.
            return t.sum_all(t.cmul(trans, in[1]));
        },
        {random_mat(1, 8, rng, 0.05, 0.7), random_mat(1, 8, rng)});
}

TEST_CASE("transmittance handles saturated alpha") {
    GradientTape t;
    Mat alpha(1, 4);
    alpha << 0.3, 1.0, 0.5, 0.2;  // alpha = 1 kills everything behind it
    const Var trans = t.transmittance(t.constant(alpha));
    const Mat T = t.value(trans);
    CHECK(T(0, 0) == 1.0);
    CHECK(T(0, 1) == doctest::Approx(0.7));
    CHECK(T(0, 2) == 0.0);
    CHECK(T(0, 3) == 0.0);
    t.backward(t.sum_all(trans));  // must not divide by (1 - alpha) = 0
    CHECK(t.replay_matches());
}

TEST_CASE("positional encoding ops differentiate through value and tangent") {
    std::mt19937_64 rng(5);
    EncodingConfig cfg;
    cfg.bands = 3;
    cfg.alpha = 0.8;
    cfg.include_input = true;

    check_gradients(
        [cfg](GradientTape& t, const std::vector<Mat>& v) {
            std::vector<Var> in;
            leaf_all(t, v, in);
            const Var e = t.pos_encode(in[0], cfg);
            return t.sum_all(t.cmul(e, e));
        },
        {random_mat(3, 4, rng)}, 1e-5);

    check_gradients(
        [cfg](GradientTape& t, const std::vector<Mat>& v) {
            std::vector<Var> in;
            leaf_all(t, v, in);
            const Var j = t.pos_encode_jvp(in[0], in[1], cfg);
            return t.sum_all(t.cmul(j, j));
        },
        {random_mat(3, 4, rng), random_mat(3, 4, rng)}, 1e-5);
}

TEST_CASE("grad_spatial on a hand-built linear network returns (1,0,0)") {
    // One linear layer over raw coordinates: f(x) = x1.
    MlpParams p = make_mlp(3, 1, 0, 1);
    p.weights[0](0, 0) = 1.0;

    GradientTape t;
    const Var x = t.constant(Mat::Random(3, 5));
    TapedMlp net = register_mlp(t, p);
    const Var f = mlp_forward(t, net, x);
    const Mat g = grad_spatial(t, f, x);
    for (int c = 0; c < 5; ++c) {
        CHECK(g(0, c) == doctest::Approx(1.0));
        CHECK(g(1, c) == doctest::Approx(0.0));
        CHECK(g(2, c) == doctest::Approx(0.0));
    }
}

TEST_CASE("reverse-mode spatial gradient agrees with forward jet channels") {
    std::mt19937_64 rng(6);
    MlpParams p = make_mlp(3, 8, 2, 1);
    random_init(p, 99);

    const Mat points = random_mat(3, 7, rng);
    std::array<Mat, 3> basis;
    for (int k = 0; k < 3; ++k) {
        basis[k] = Mat::Zero(3, 7);
        basis[k].row(k).setOnes();
    }
    const MlpDual dual = mlp_forward_dual(p, points, basis);

    GradientTape t;
    const Var x = t.constant(points);
    TapedMlp net = register_mlp(t, p);
    const Var f = mlp_forward(t, net, x);
    const Mat g = grad_spatial(t, f, x);

    for (int c = 0; c < 7; ++c)
        for (int k = 0; k < 3; ++k)
            CHECK(g(k, c) == doctest::Approx(dual.jout[k](0, c)).epsilon(1e-12));
}

TEST_CASE("spatial gradients through encode + mlp match finite differences") {
    std::mt19937_64 rng(7);
    EncodingConfig cfg;
    cfg.bands = 4;
    cfg.alpha = 0.9;
    MlpParams p = make_mlp(cfg.dim(), 10, 2, 1, 1);
    random_init(p, 123);

    const Mat points = random_mat(3, 3, rng);
    GradientTape t;
    const Var x = t.constant(points);
    TapedMlp net = register_mlp(t, p);
    const Var f = mlp_forward(t, net, t.pos_encode(x, cfg));
    const Mat g = grad_spatial(t, f, x);

    auto value_at = [&](const Vec3& pt) {
        return mlp_forward(p, encode(pt, cfg))(0, 0);
    };
    const double h = 1e-5;
    for (int c = 0; c < 3; ++c) {
        const Vec3 pt = points.col(c);
        for (int k = 0; k < 3; ++k) {
            Vec3 hi = pt, lo = pt;
            hi[k] += h;
            lo[k] -= h;
            const double fd = (value_at(hi) - value_at(lo)) / (2 * h);
            CHECK(g(k, c) ==
                  doctest::Approx(fd).epsilon(1e-4));
        }
    }
}
