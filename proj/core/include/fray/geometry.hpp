#pragma once

#include <Eigen/Dense>
#include <optional>

namespace fray {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// All scenes live inside a bounding sphere of this radius, centered at the
/// origin. Ray integration bounds come from intersecting this sphere.
inline constexpr double kSceneBoundsRadius = 1.5;

/// A ray o + t*d with a valid integration interval [t_near, t_far].
/// Invariants: |d| = 1 (within 1e-9), 0 <= t_near < t_far.
struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();
    double t_near = 0.0;
    double t_far = 0.0;

    Vec3 at(double t) const { return origin + t * direction; }
    bool empty() const { return !(t_near < t_far); }
};

inline Vec3 ray_at(const Ray& ray, double t) { return ray.at(t); }

/// Both intersection parameters of a ray with the sphere |x - c| = r,
/// or nullopt on a miss. t0 <= t1; either may be negative.
std::optional<std::pair<double, double>> intersect_sphere(const Vec3& origin,
                                                          const Vec3& direction,
                                                          const Vec3& center,
                                                          double radius);

/// Clips an origin/direction pair against the scene bounding sphere.
/// Misses (or spheres entirely behind the origin) produce an empty ray.
Ray make_bounded_ray(const Vec3& origin, const Vec3& direction,
                     double bounds_radius = kSceneBoundsRadius);

}  // namespace fray
