#include "fray/camera.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fray {

bool Camera::pose_valid(double tol) const {
    const Mat3 r = rotation();
    const Mat3 err = r.transpose() * r - Mat3::Identity();
    if (err.cwiseAbs().maxCoeff() > tol) return false;
    return r.determinant() > 0.0;
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                       double focal_px, int width, int height) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.intrinsics << focal_px, 0, 0.5 * width, 0, focal_px, 0.5 * height, 0, 0, 1;

    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitX());
    right.normalize();
    const Vec3 down = forward.cross(right);  // y-down camera frame

    cam.camera_to_world = Mat4::Identity();
    cam.camera_to_world.block<3, 1>(0, 0) = right;
    cam.camera_to_world.block<3, 1>(0, 1) = down;
    cam.camera_to_world.block<3, 1>(0, 2) = forward;
    cam.camera_to_world.block<3, 1>(0, 3) = eye;
    return cam;
}

Ray generate_ray(const Camera& camera, int i, int j, double bounds_radius) {
    if (i < 0 || i >= camera.width || j < 0 || j >= camera.height)
        throw std::out_of_range("generate_ray: pixel outside image");
    const double fx = camera.intrinsics(0, 0);
    const double fy = camera.intrinsics(1, 1);
    const double cx = camera.intrinsics(0, 2);
    const double cy = camera.intrinsics(1, 2);
    const Vec3 dir_cam((i + 0.5 - cx) / fx, (j + 0.5 - cy) / fy, 1.0);
    const Vec3 dir_world = camera.rotation() * dir_cam;
    return make_bounded_ray(camera.position(), dir_world, bounds_radius);
}

void save_cameras(const std::string& path, const std::vector<Camera>& cameras) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_cameras: cannot open " + path);
    out << "# fray camera file: per view, 9 intrinsics row-major,\n"
        << "# 16 camera_to_world row-major, width, height\n";
    out.precision(17);
    for (const auto& cam : cameras) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out << cam.intrinsics(r, c) << ' ';
        out << '\n';
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) out << cam.camera_to_world(r, c) << ' ';
        out << '\n' << cam.width << ' ' << cam.height << '\n';
    }
}

std::vector<Camera> load_cameras(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_cameras: cannot open " + path);
    // Strip comments, then read whitespace-separated numbers.
    std::stringstream numbers;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        numbers << line << ' ';
    }
    std::vector<Camera> cameras;
    while (true) {
        Camera cam;
        double v = 0;
        bool first_ok = false;
        for (int k = 0; k < 9; ++k) {
            if (!(numbers >> v)) {
                if (k == 0) return cameras;  // clean end of file
                throw std::runtime_error("load_cameras: truncated record in " + path);
            }
            first_ok = true;
            cam.intrinsics(k / 3, k % 3) = v;
        }
        (void)first_ok;
        for (int k = 0; k < 16; ++k) {
            if (!(numbers >> v))
                throw std::runtime_error("load_cameras: truncated record in " + path);
            cam.camera_to_world(k / 4, k % 4) = v;
        }
        if (!(numbers >> cam.width >> cam.height))
            throw std::runtime_error("load_cameras: truncated record in " + path);
        if (!cam.pose_valid())
            throw std::runtime_error("load_cameras: non-rigid pose in " + path);
        cameras.push_back(cam);
    }
}

}  // namespace fray
