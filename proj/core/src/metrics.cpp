#include "fray/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace fray {

namespace {

// Uniform spatial hash over the target cloud; queries return the exact
// nearest squared distance (ring expansion with a conservative bound).
class NearestGrid {
public:
    explicit NearestGrid(const std::vector<Vec3>& points) : points_(points) {
        lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo_;
        for (const auto& p : points) {
            lo_ = lo_.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const double extent = std::max((hi - lo_).maxCoeff(), 1e-12);
        const int target = static_cast<int>(std::cbrt(double(points.size()))) + 1;
        cell_ = extent / target;
        for (int a = 0; a < 3; ++a)
            dims_[a] = std::max(1, static_cast<int>((hi[a] - lo_[a]) / cell_) + 1);
        buckets_.resize(static_cast<size_t>(dims_[0]) * dims_[1] * dims_[2]);
        for (size_t i = 0; i < points.size(); ++i)
            buckets_[bucket_of(points[i])].push_back(static_cast<int>(i));
    }

    double nearest_sq(const Vec3& q) const {
        int ci[3];
        cell_of(q, ci);
        double best = std::numeric_limits<double>::infinity();
        const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
        for (int ring = 0; ring <= max_ring; ++ring) {
            // Cells at Chebyshev ring R are at least (R-1)*cell away from q.
            if (ring > 0) {
                const double lb = (ring - 1) * cell_;
                if (lb * lb > best) break;
            }
            scan_ring(q, ci, ring, best);
        }
        return best;
    }

private:
    size_t flat(int x, int y, int z) const {
        return (static_cast<size_t>(z) * dims_[1] + y) * dims_[0] + x;
    }
    void cell_of(const Vec3& p, int out[3]) const {
        for (int a = 0; a < 3; ++a) {
            const int c = static_cast<int>((p[a] - lo_[a]) / cell_);
            out[a] = std::clamp(c, 0, dims_[a] - 1);
        }
    }
    size_t bucket_of(const Vec3& p) const {
        int c[3];
        cell_of(p, c);
        return flat(c[0], c[1], c[2]);
    }
    void scan_cell(const Vec3& q, int x, int y, int z, double& best) const {
        if (x < 0 || y < 0 || z < 0 || x >= dims_[0] || y >= dims_[1] ||
            z >= dims_[2])
            return;
        for (int idx : buckets_[flat(x, y, z)]) {
            const double d2 = (points_[static_cast<size_t>(idx)] - q).squaredNorm();
            if (d2 < best) best = d2;
        }
    }
    void scan_ring(const Vec3& q, const int ci[3], int ring, double& best) const {
        if (ring == 0) {
            scan_cell(q, ci[0], ci[1], ci[2], best);
            return;
        }
        for (int dz = -ring; dz <= ring; ++dz)
            for (int dy = -ring; dy <= ring; ++dy)
                for (int dx = -ring; dx <= ring; ++dx) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring)
                        continue;
                    scan_cell(q, ci[0] + dx, ci[1] + dy, ci[2] + dz, best);
                }
    }

    const std::vector<Vec3>& points_;
    Vec3 lo_;
    double cell_ = 1.0;
    int dims_[3] = {1, 1, 1};
    std::vector<std::vector<int>> buckets_;
};

struct DirectedSums {
    double sq = 0.0;
    double lin = 0.0;
};

template <typename NearestFn>
DirectedSums directed(const std::vector<Vec3>& from, NearestFn&& nearest) {
    DirectedSums sums;
    for (const auto& p : from) {
        const double d2 = nearest(p);
        sums.sq += d2;
        sums.lin += std::sqrt(d2);
    }
    sums.sq /= static_cast<double>(from.size());
    sums.lin /= static_cast<double>(from.size());
    return sums;
}

void check_nonempty(const PointCloud& s1, const PointCloud& s2) {
    if (s1.points.empty() || s2.points.empty())
        throw std::invalid_argument("chamfer: empty point cloud");
}

}  // namespace

ChamferResult chamfer_bruteforce(const PointCloud& s1, const PointCloud& s2) {
    check_nonempty(s1, s2);
    auto nearest_in = [](const std::vector<Vec3>& cloud) {
        return [&cloud](const Vec3& p) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : cloud) best = std::min(best, (p - q).squaredNorm());
            return best;
        };
    };
    const DirectedSums a = directed(s1.points, nearest_in(s2.points));
    const DirectedSums b = directed(s2.points, nearest_in(s1.points));
    return ChamferResult{0.5 * (a.sq + b.sq), 0.5 * (a.lin + b.lin)};
}

ChamferResult chamfer(const PointCloud& s1, const PointCloud& s2) {
    check_nonempty(s1, s2);
    const NearestGrid g2(s2.points);
    const NearestGrid g1(s1.points);
    const DirectedSums a =
        directed(s1.points, [&](const Vec3& p) { return g2.nearest_sq(p); });
    const DirectedSums b =
        directed(s2.points, [&](const Vec3& p) { return g1.nearest_sq(p); });
    return ChamferResult{0.5 * (a.sq + b.sq), 0.5 * (a.lin + b.lin)};
}

PointCloud sample_mesh(const TriMesh& mesh, size_t n, uint64_t seed) {
    if (mesh.empty()) throw std::invalid_argument("sample_mesh: empty mesh");
    std::vector<double> cum(mesh.triangles.size());
    double total = 0.0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        const Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        total += 0.5 * e1.cross(e2).norm();
        cum[t] = total;
    }
    if (total <= 0.0) throw std::invalid_argument("sample_mesh: zero-area mesh");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (size_t k = 0; k < n; ++k) {
        const double pick = uni(rng) * total;
        const size_t t = static_cast<size_t>(
            std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin());
        const auto& tri = mesh.triangles[std::min(t, mesh.triangles.size() - 1)];
        double u = uni(rng), v = uni(rng);
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const Vec3& a = mesh.vertices[tri[0]];
        cloud.points.push_back(a + u * (mesh.vertices[tri[1]] - a) +
                               v * (mesh.vertices[tri[2]] - a));
    }
    return cloud;
}

double psnr(const ImageBuffer& rendered, const ImageBuffer& reference) {
    if (rendered.width != reference.width || rendered.height != reference.height)
        throw std::invalid_argument("psnr: image dimensions differ");
    if (rendered.rgb.empty()) throw std::invalid_argument("psnr: empty image");
    double se = 0.0;
    for (size_t p = 0; p < rendered.rgb.size(); ++p)
        se += (rendered.rgb[p] - reference.rgb[p]).squaredNorm();
    const double mse = se / (3.0 * static_cast<double>(rendered.rgb.size()));
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

}  // namespace fray
