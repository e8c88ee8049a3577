#pragma once

#include <vector>

#include "fray/geometry.hpp"

namespace fray {

/// Result of a signed-distance query. Sign convention is positive outside.
/// `singular` is set when the query hit a gradient singularity (e.g. a sphere
/// center) and the gradient was replaced by a fixed fallback unit vector.
struct SdfEval {
    double value = 0.0;
    Vec3 gradient = Vec3::UnitX();
    bool singular = false;
};

/// Fallback gradient returned at singular points.
inline const Vec3 kSingularFallbackGradient = Vec3::UnitX();

/// Closed-form signed distance fields used as test oracles and as source
/// shapes for synthetic datasets. Spheres, planes and boxes are exact
/// Euclidean SDFs; the bumpy sphere is f(x) = |x| - r - a*sin(w x1)*sin(w x2)
/// *sin(w x3), smooth with near-unit gradient for a*w << 1.
struct AnalyticSdf {
    enum class Kind { Sphere, Plane, Box, BumpySphere, Union, Offset };

    Kind kind = Kind::Sphere;
    Vec3 vec = Vec3::Zero();   // center (sphere, bumpy), normal (plane), half-extents (box)
    double p0 = 1.0;           // radius (sphere, bumpy), plane offset, offset distance
    double p1 = 0.0;           // bump amplitude
    double p2 = 0.0;           // bump frequency
    std::vector<AnalyticSdf> children;

    static AnalyticSdf sphere(const Vec3& center, double radius);
    static AnalyticSdf plane(const Vec3& unit_normal, double offset);
    static AnalyticSdf box(const Vec3& half_extents);
    static AnalyticSdf bumpy_sphere(double radius, double amplitude, double frequency);
    static AnalyticSdf union_of(std::vector<AnalyticSdf> shapes);
    static AnalyticSdf offset_of(AnalyticSdf shape, double distance);
};

SdfEval eval_sdf(const AnalyticSdf& field, const Vec3& x);

}  // namespace fray
