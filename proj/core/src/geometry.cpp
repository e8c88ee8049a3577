#include "fray/geometry.hpp"

#include <cmath>

namespace fray {

std::optional<std::pair<double, double>> intersect_sphere(const Vec3& origin,
                                                          const Vec3& direction,
                                                          const Vec3& center,
                                                          double radius) {
    const Vec3 oc = origin - center;
    const double a = direction.squaredNorm();
    const double b = 2.0 * oc.dot(direction);
    const double c = oc.squaredNorm() - radius * radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // Numerically stable quadratic roots (avoids cancellation in -b +- sq).
    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    double t0 = q / a;
    double t1 = (q != 0.0) ? c / q : (-b + sq) / (2.0 * a);
    if (t0 > t1) std::swap(t0, t1);
    return std::make_pair(t0, t1);
}

Ray make_bounded_ray(const Vec3& origin, const Vec3& direction,
                     double bounds_radius) {
    Ray ray;
    ray.origin = origin;
    ray.direction = direction.normalized();
    const auto hit =
        intersect_sphere(ray.origin, ray.direction, Vec3::Zero(), bounds_radius);
    if (!hit || hit->second <= 0.0) {
        ray.t_near = ray.t_far = 0.0;  // empty
        return ray;
    }
    ray.t_near = std::max(hit->first, 0.0);
    ray.t_far = hit->second;
    return ray;
}

}  // namespace fray
