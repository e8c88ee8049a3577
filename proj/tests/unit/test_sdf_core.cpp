#include <doctest.h>

#include <random>

#include "fray/analytic_sdf.hpp"
#include "fray/camera.hpp"
#include "fray/geometry.hpp"

using namespace fray;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    while (v.norm() < 1e-6) v = Vec3(n(rng), n(rng), n(rng));
    return v.normalized();
}

Vec3 fd_gradient(const AnalyticSdf& shape, const Vec3& x, double h = 1e-5) {
    Vec3 g;
    for (int k = 0; k < 3; ++k) {
        Vec3 hi = x, lo = x;
        hi[k] += h;
        lo[k] -= h;
        g[k] = (eval_sdf(shape, hi).value - eval_sdf(shape, lo).value) / (2 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("sphere sdf matches the Euclidean definition") {
    const auto s = AnalyticSdf::sphere(Vec3::Zero(), 1.0);
    const SdfEval e = eval_sdf(s, Vec3(2, 0, 0));
    CHECK(e.value == doctest::Approx(1.0));
    CHECK(e.gradient.isApprox(Vec3(1, 0, 0)));
    CHECK_FALSE(e.singular);
}

TEST_CASE("sphere center is a flagged singularity with fallback gradient") {
    const auto s = AnalyticSdf::sphere(Vec3::Zero(), 1.0);
    const SdfEval e = eval_sdf(s, Vec3::Zero());
    CHECK(e.value == doctest::Approx(-1.0));
    CHECK(e.singular);
    CHECK(e.gradient == kSingularFallbackGradient);
    CHECK(e.gradient.norm() == doctest::Approx(1.0));
}

TEST_CASE("bumpy sphere stays within the bump amplitude of zero on the nominal radius") {
    const double r = 0.9, amp = 0.05, freq = 12.0;
    const auto s = AnalyticSdf::bumpy_sphere(r, amp, freq);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const Vec3 x = r * random_unit(rng);
        const double v = eval_sdf(s, x).value;
        CHECK(std::abs(v) <= amp + 1e-12);
    }
}

TEST_CASE("box sdf is the exact Euclidean distance") {
    const auto b = AnalyticSdf::box(Vec3(1.0, 0.5, 0.25));
    CHECK(eval_sdf(b, Vec3(2.0, 0, 0)).value == doctest::Approx(1.0));
    CHECK(eval_sdf(b, Vec3(0, 0, 0)).value == doctest::Approx(-0.25));
    // Corner region: distance to the corner point.
    const Vec3 q(1.5, 1.0, 0.75);
    CHECK(eval_sdf(b, q).value ==
          doctest::Approx((q - Vec3(1.0, 0.5, 0.25)).norm()));
}

TEST_CASE("union and offset composites") {
    auto u = AnalyticSdf::union_of({AnalyticSdf::sphere(Vec3(-1, 0, 0), 0.5),
                                    AnalyticSdf::sphere(Vec3(1, 0, 0), 0.5)});
    CHECK(eval_sdf(u, Vec3(1, 0, 0)).value == doctest::Approx(-0.5));
    CHECK(eval_sdf(u, Vec3(0, 0, 0)).value == doctest::Approx(0.5));
    auto off = AnalyticSdf::offset_of(AnalyticSdf::sphere(Vec3::Zero(), 1.0), 0.2);
    CHECK(eval_sdf(off, Vec3(2, 0, 0)).value == doctest::Approx(0.8));
}

TEST_CASE("ray_at is componentwise arithmetic") {
    Ray r;
    r.origin = Vec3(0, 0, 0);
    r.direction = Vec3(0, 0, 1);
    r.t_near = 0.0;
    r.t_far = 10.0;
    CHECK(ray_at(r, 2.0).isApprox(Vec3(0, 0, 2)));
    CHECK(ray_at(r, r.t_near).isApprox(r.origin));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        Ray rr;
        rr.origin = Vec3(uni(rng), uni(rng), uni(rng));
        rr.direction = random_unit(rng);
        const double t = std::abs(uni(rng));
        const Vec3 expect(rr.origin.x() + t * rr.direction.x(),
                          rr.origin.y() + t * rr.direction.y(),
                          rr.origin.z() + t * rr.direction.z());
        CHECK(ray_at(rr, t) == expect);
    }
}

TEST_CASE("eikonal property holds exactly for sphere and plane") {
    const auto sphere = AnalyticSdf::sphere(Vec3(0.1, -0.2, 0.3), 0.7);
    const auto plane = AnalyticSdf::plane(Vec3(1, 2, -1).normalized(), 0.25);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-1.4, 1.4);
    int tested = 0;
    for (int i = 0; i < 20000 && tested < 10000; ++i) {
        const Vec3 x(uni(rng), uni(rng), uni(rng));
        const SdfEval es = eval_sdf(sphere, x);
        if (es.singular) continue;
        ++tested;
        CHECK(es.gradient.norm() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(eval_sdf(plane, x).gradient.norm() ==
              doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(tested == 10000);
}

TEST_CASE("gradients match central finite differences for smooth shapes") {
    const auto sphere = AnalyticSdf::sphere(Vec3(0.2, 0, -0.1), 0.8);
    const auto bumpy = AnalyticSdf::bumpy_sphere(0.9, 0.05, 12.0);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(-1.3, 1.3);
    for (int i = 0; i < 300; ++i) {
        const Vec3 x(uni(rng), uni(rng), uni(rng));
        if (x.norm() < 0.2) continue;
        for (const auto* shape : {&sphere, &bumpy}) {
            const Vec3 g = eval_sdf(*shape, x).gradient;
            const Vec3 fd = fd_gradient(*shape, x);
            CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
        }
    }
}

TEST_CASE("analytic ray-sphere intersection matches the sdf zero crossing") {
    const auto sphere = AnalyticSdf::sphere(Vec3(0.1, 0.05, -0.2), 0.75);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; ++i) {
        const Vec3 dir = random_unit(rng);
        const Vec3 origin = -2.5 * dir + 0.05 * random_unit(rng);
        const auto hit = intersect_sphere(origin, dir, Vec3(0.1, 0.05, -0.2), 0.75);
        if (!hit || hit->first <= 0) continue;

        // Bisection oracle on f along the ray.
        auto f_at = [&](double t) {
            return eval_sdf(sphere, origin + t * dir).value;
        };
        double lo = 0.0, hi = hit->first + 0.5;
        REQUIRE(f_at(lo) > 0);
        REQUIRE(f_at(hi) < 0);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (f_at(mid) > 0 ? lo : hi) = mid;
        }
        CHECK(std::abs(0.5 * (lo + hi) - hit->first) <= 1e-9);
    }
}

TEST_CASE("principal-point pixel with identity pose looks down the optical axis") {
    Camera cam;
    cam.width = cam.height = 64;
    cam.intrinsics << 80, 0, 32, 0, 80, 32, 0, 0, 1;
    // Push the camera back so it sits outside the scene bounds.
    cam.camera_to_world(2, 3) = -3.0;
    const Ray center = generate_ray(cam, 31, 31);
    // Pixel centers straddle the principal point; (31,31) center is
    // (31.5, 31.5) -> offset -0.5px from cx,cy.
    Camera odd = cam;
    odd.width = odd.height = 63;
    odd.intrinsics(0, 2) = odd.intrinsics(1, 2) = 31.5;
    const Ray axis = generate_ray(odd, 31, 31);
    CHECK(axis.direction.isApprox(Vec3(0, 0, 1), 1e-12));
    CHECK(center.direction.z() > 0.99);
}

TEST_CASE("corner pixel angle matches pinhole geometry") {
    Camera cam;
    cam.width = cam.height = 64;
    const double f = 76.8;
    cam.intrinsics << f, 0, 32, 0, f, 32, 0, 0, 1;
    cam.camera_to_world(2, 3) = -3.0;
    const Ray r = generate_ray(cam, 0, 0);
    const double half = 31.5;  // pixel center (0.5, 0.5) offset from (32, 32)
    const double expected = std::atan(std::hypot(half, half) / f);
    const double angle = std::acos(r.direction.z());
    CHECK(angle == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("camera outside the bounding sphere looking away yields empty rays") {
    Camera cam = Camera::look_at(Vec3(0, 0, -3), Vec3(0, 0, -10), Vec3::UnitZ(),
                                 80.0, 16, 16);
    const Ray r = generate_ray(cam, 8, 8);
    CHECK(r.empty());
}

TEST_CASE("camera poses from look_at are rigid") {
    const Camera cam = Camera::look_at(Vec3(1, 2, 3), Vec3::Zero(), Vec3::UnitZ(),
                                       100.0, 32, 32);
    CHECK(cam.pose_valid());
    CHECK((cam.rotation() * Vec3(0, 0, 1)).isApprox(-Vec3(1, 2, 3).normalized(),
                                                    1e-9));
}

TEST_CASE("camera file round trip") {
    std::vector<Camera> cams;
    for (int i = 0; i < 3; ++i)
        cams.push_back(Camera::look_at(Vec3(2 + i, -1, 1.5), Vec3::Zero(),
                                       Vec3::UnitZ(), 64.0 + i, 32 + i, 24));
    const std::string path = "cameras_roundtrip_test.txt";
    save_cameras(path, cams);
    const auto loaded = load_cameras(path);
    REQUIRE(loaded.size() == cams.size());
    for (size_t i = 0; i < cams.size(); ++i) {
        CHECK(loaded[i].intrinsics.isApprox(cams[i].intrinsics, 1e-15));
        CHECK(loaded[i].camera_to_world.isApprox(cams[i].camera_to_world, 1e-15));
        CHECK(loaded[i].width == cams[i].width);
        CHECK(loaded[i].height == cams[i].height);
    }
    std::remove(path.c_str());
}

TEST_CASE("make_bounded_ray clips to the scene sphere") {
    const Ray r = make_bounded_ray(Vec3(0, 0, -3), Vec3(0, 0, 1));
    CHECK(r.t_near == doctest::Approx(1.5));
    CHECK(r.t_far == doctest::Approx(4.5));
    CHECK_FALSE(r.empty());
    CHECK(make_bounded_ray(Vec3(0, 0, -3), Vec3(0, 1, 0)).empty());
}
