#include "fray/analytic_sdf.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace fray {

namespace {
constexpr double kSingularRadius = 1e-12;
}

AnalyticSdf AnalyticSdf::sphere(const Vec3& center, double radius) {
    AnalyticSdf s;
    s.kind = Kind::Sphere;
    s.vec = center;
    s.p0 = radius;
    return s;
}

AnalyticSdf AnalyticSdf::plane(const Vec3& unit_normal, double offset) {
    AnalyticSdf s;
    s.kind = Kind::Plane;
    s.vec = unit_normal.normalized();
    s.p0 = offset;
    return s;
}

AnalyticSdf AnalyticSdf::box(const Vec3& half_extents) {
    AnalyticSdf s;
    s.kind = Kind::Box;
    s.vec = half_extents;
    return s;
}

AnalyticSdf AnalyticSdf::bumpy_sphere(double radius, double amplitude, double frequency) {
    AnalyticSdf s;
    s.kind = Kind::BumpySphere;
    s.p0 = radius;
    s.p1 = amplitude;
    s.p2 = frequency;
    return s;
}

AnalyticSdf AnalyticSdf::union_of(std::vector<AnalyticSdf> shapes) {
    AnalyticSdf s;
    s.kind = Kind::Union;
    s.children = std::move(shapes);
    return s;
}

AnalyticSdf AnalyticSdf::offset_of(AnalyticSdf shape, double distance) {
    AnalyticSdf s;
    s.kind = Kind::Offset;
    s.p0 = distance;
    s.children.push_back(std::move(shape));
    return s;
}

static SdfEval eval_sphere(const Vec3& center, double radius, const Vec3& x) {
    SdfEval out;
    const Vec3 rel = x - center;
    const double dist = rel.norm();
    out.value = dist - radius;
    if (dist < kSingularRadius) {
        out.gradient = kSingularFallbackGradient;
        out.singular = true;
    } else {
        out.gradient = rel / dist;
    }
    return out;
}

static SdfEval eval_box(const Vec3& half, const Vec3& x) {
    SdfEval out;
    const Vec3 ax = x.cwiseAbs();
    const Vec3 q = ax - half;
    const Vec3 outside = q.cwiseMax(0.0);
    const double outside_len = outside.norm();
    const double inside = std::min(q.maxCoeff(), 0.0);
    out.value = outside_len + inside;
    Vec3 sign(x.x() >= 0 ? 1.0 : -1.0, x.y() >= 0 ? 1.0 : -1.0,
              x.z() >= 0 ? 1.0 : -1.0);
    if (outside_len > kSingularRadius) {
        out.gradient = sign.cwiseProduct(outside / outside_len);
    } else {
        // Inside: distance decreases along the nearest face axis.
        int axis = 0;
        q.maxCoeff(&axis);
        Vec3 g = Vec3::Zero();
        g[axis] = sign[axis];
        out.gradient = g;
    }
    return out;
}

static SdfEval eval_bumpy(double radius, double amp, double freq, const Vec3& x) {
    SdfEval out;
    const double dist = x.norm();
    const double sx = std::sin(freq * x.x());
    const double sy = std::sin(freq * x.y());
    const double sz = std::sin(freq * x.z());
    out.value = dist - radius - amp * sx * sy * sz;
    if (dist < kSingularRadius) {
        out.gradient = kSingularFallbackGradient;
        out.singular = true;
        return out;
    }
    const double cx = std::cos(freq * x.x());
    const double cy = std::cos(freq * x.y());
    const double cz = std::cos(freq * x.z());
    out.gradient = x / dist - amp * freq * Vec3(cx * sy * sz, sx * cy * sz, sx * sy * cz);
    return out;
}

SdfEval eval_sdf(const AnalyticSdf& field, const Vec3& x) {
    switch (field.kind) {
        case AnalyticSdf::Kind::Sphere:
            return eval_sphere(field.vec, field.p0, x);
        case AnalyticSdf::Kind::Plane: {
            SdfEval out;
            out.value = field.vec.dot(x) - field.p0;
            out.gradient = field.vec;
            return out;
        }
        case AnalyticSdf::Kind::Box:
            return eval_box(field.vec, x);
        case AnalyticSdf::Kind::BumpySphere:
            return eval_bumpy(field.p0, field.p1, field.p2, x);
        case AnalyticSdf::Kind::Union: {
            SdfEval best;
            best.value = std::numeric_limits<double>::infinity();
            for (const auto& child : field.children) {
                SdfEval e = eval_sdf(child, x);
                if (e.value < best.value) best = e;
            }
            return best;
        }
        case AnalyticSdf::Kind::Offset: {
            SdfEval e = eval_sdf(field.children.front(), x);
            e.value -= field.p0;
            return e;
        }
    }
    return {};
}

}  // namespace fray
