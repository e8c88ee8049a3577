#pragma once

#include <string>
#include <vector>

#include "fray/geometry.hpp"

namespace fray {

/// Pinhole camera. Pixel (i, j) indexes column i, row j; rays pass through
/// pixel centers. Camera space is x-right, y-down, z-forward (optical axis).
struct Camera {
    Mat3 intrinsics = Mat3::Identity();       // [fx 0 cx; 0 fy cy; 0 0 1]
    Mat4 camera_to_world = Mat4::Identity();  // rigid transform, det(R) = +1
    int width = 0;
    int height = 0;

    Vec3 position() const { return camera_to_world.block<3, 1>(0, 3); }
    Mat3 rotation() const { return camera_to_world.block<3, 3>(0, 0); }

    /// Orthonormality of the rotation block, within tol.
    bool pose_valid(double tol = 1e-6) const;

    /// Camera looking from `eye` toward `target` with the given up hint.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                          double focal_px, int width, int height);
};

/// Ray through the center of pixel (i, j), bounded by the scene sphere.
/// A miss yields an empty ray (background contribution only).
Ray generate_ray(const Camera& camera, int i, int j,
                 double bounds_radius = kSceneBoundsRadius);

/// Camera file: one text record per view, whitespace separated, '#' comments:
/// 9 intrinsic values row-major, 16 camera_to_world values row-major,
/// width, height.
void save_cameras(const std::string& path, const std::vector<Camera>& cameras);
std::vector<Camera> load_cameras(const std::string& path);

}  // namespace fray
