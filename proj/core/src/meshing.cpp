#include "fray/meshing.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "fray/parallel.hpp"

namespace fray {

double TriMesh::area() const {
    double total = 0.0;
    for (const auto& t : triangles) {
        const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
        const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
        total += 0.5 * e1.cross(e2).norm();
    }
    return total;
}

namespace {

// Cube corner offsets; the six tetrahedra share the 0-6 diagonal.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kTets[6][4] = {{0, 5, 1, 6}, {0, 1, 2, 6}, {0, 2, 3, 6},
                             {0, 3, 7, 6}, {0, 7, 4, 6}, {0, 4, 5, 6}};

struct Builder {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::unordered_map<uint64_t, int> edge_vertex;

    int vertex_on_edge(uint64_t ia, uint64_t ib, Vec3 pa, Vec3 pb, double fa,
                       double fb) {
        if (ia > ib) {
            std::swap(ia, ib);
            std::swap(pa, pb);
            std::swap(fa, fb);
        }
        const uint64_t key = (ia << 32) ^ ib;
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        const double denom = fb - fa;
        const double u = denom != 0.0 ? std::clamp(-fa / denom, 0.0, 1.0) : 0.5;
        vertices.push_back(pa + u * (pb - pa));
        const int idx = static_cast<int>(vertices.size()) - 1;
        edge_vertex.emplace(key, idx);
        return idx;
    }

    void emit(int a, int b, int c, const Vec3& toward_positive) {
        if (a == b || b == c || a == c) return;
        const Vec3 n =
            (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]);
        if (n.dot(toward_positive) < 0.0) std::swap(b, c);
        triangles.push_back({a, b, c});
    }
};

}  // namespace

TriMesh marching_cubes(const SdfField& field, int resolution, double bounds) {
    if (resolution < 8)
        throw std::invalid_argument("marching_cubes: resolution must be >= 8");
    const int r = resolution;
    const int np = r + 1;  // grid points per axis
    const double h = 2.0 * bounds / r;
    auto coord = [&](int i) { return -bounds + h * i; };
    auto point = [&](int i, int j, int k) {
        return Vec3(coord(i), coord(j), coord(k));
    };
    auto corner_id = [&](int i, int j, int k) -> uint64_t {
        return (static_cast<uint64_t>(k) * np + j) * np + i;
    };

    // Rolling pair of z-planes of field values; plane evaluation is the
    // expensive part and runs in parallel column batches.
    auto eval_plane = [&](int k, Eigen::RowVectorXd& out) {
        out.resize(np * np);
        parallel_ranges(static_cast<size_t>(np), [&](size_t jb, size_t je) {
            for (size_t j = jb; j < je; ++j) {
                Mat pts(3, np);
                for (int i = 0; i < np; ++i)
                    pts.col(i) = point(i, static_cast<int>(j), k);
                out.segment(static_cast<Eigen::Index>(j) * np, np) =
                    field.eval_values(pts);
            }
        });
    };

    Builder b;
    Eigen::RowVectorXd plane0, plane1;
    eval_plane(0, plane0);
    for (int k = 0; k < r; ++k) {
        eval_plane(k + 1, plane1);
        for (int j = 0; j < r; ++j) {
            for (int i = 0; i < r; ++i) {
                double fv[8];
                Vec3 pv[8];
                uint64_t id[8];
                for (int c = 0; c < 8; ++c) {
                    const int ci = i + kCorner[c][0];
                    const int cj = j + kCorner[c][1];
                    const int ck = kCorner[c][2];
                    const auto& plane = ck == 0 ? plane0 : plane1;
                    fv[c] = plane(static_cast<Eigen::Index>(cj) * np + ci);
                    pv[c] = point(ci, cj, k + ck);
                    id[c] = corner_id(ci, cj, k + ck);
                }
                for (const auto& tet : kTets) {
                    int inside[4], outside[4];
                    int ni = 0, no = 0;
                    for (int v = 0; v < 4; ++v) {
                        if (fv[tet[v]] < 0.0)
                            inside[ni++] = tet[v];
                        else
                            outside[no++] = tet[v];
                    }
                    if (ni == 0 || ni == 4) continue;
                    auto mid = [&](int a, int o) {
                        return b.vertex_on_edge(id[a], id[o], pv[a], pv[o],
                                                fv[a], fv[o]);
                    };
                    // Outward reference: from the inside centroid toward the
                    // outside centroid.
                    Vec3 cin = Vec3::Zero(), cout = Vec3::Zero();
                    for (int v = 0; v < ni; ++v) cin += pv[inside[v]];
                    for (int v = 0; v < no; ++v) cout += pv[outside[v]];
                    const Vec3 toward = cout / no - cin / ni;
                    if (ni == 1) {
                        b.emit(mid(inside[0], outside[0]),
                               mid(inside[0], outside[1]),
                               mid(inside[0], outside[2]), toward);
                    } else if (ni == 3) {
                        b.emit(mid(inside[0], outside[0]),
                               mid(inside[1], outside[0]),
                               mid(inside[2], outside[0]), toward);
                    } else {  // 2-2: quad split into two triangles
                        const int v00 = mid(inside[0], outside[0]);
                        const int v01 = mid(inside[0], outside[1]);
                        const int v10 = mid(inside[1], outside[0]);
                        const int v11 = mid(inside[1], outside[1]);
                        b.emit(v00, v01, v11, toward);
                        b.emit(v00, v11, v10, toward);
                    }
                }
            }
        }
        std::swap(plane0, plane1);
    }
    if (b.triangles.empty())
        throw std::runtime_error(
            "marching_cubes: field does not change sign in bounds (empty mesh)");
    TriMesh mesh;
    mesh.vertices = std::move(b.vertices);
    mesh.triangles = std::move(b.triangles);
    return remove_degenerate(mesh);
}

TriMesh remove_degenerate(const TriMesh& mesh) {
    TriMesh out;
    std::vector<int> remap(mesh.vertices.size(), -1);
    for (const auto& t : mesh.triangles) {
        const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        if (0.5 * e1.cross(e2).norm() <= 1e-12) continue;
        std::array<int, 3> nt{};
        for (int v = 0; v < 3; ++v) {
            if (remap[t[v]] < 0) {
                remap[t[v]] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[t[v]]);
            }
            nt[v] = remap[t[v]];
        }
        out.triangles.push_back(nt);
    }
    return out;
}

TriMesh remove_small_components(const TriMesh& mesh, double min_frac) {
    const size_t n = mesh.vertices.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (const auto& t : mesh.triangles) {
        const int a = find(t[0]);
        parent[find(t[1])] = a;
        parent[find(t[2])] = a;
    }
    std::unordered_map<int, size_t> count;
    for (size_t v = 0; v < n; ++v) ++count[find(static_cast<int>(v))];
    const size_t threshold =
        static_cast<size_t>(std::ceil(min_frac * static_cast<double>(n)));

    TriMesh out;
    std::vector<int> remap(n, -1);
    for (const auto& t : mesh.triangles) {
        if (count[find(t[0])] < threshold) continue;
        std::array<int, 3> nt{};
        for (int v = 0; v < 3; ++v) {
            if (remap[t[v]] < 0) {
                remap[t[v]] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[t[v]]);
            }
            nt[v] = remap[t[v]];
        }
        out.triangles.push_back(nt);
    }
    return out;
}

void save_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_obj: cannot open " + path);
    out.precision(9);
    for (const auto& v : mesh.vertices)
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_obj: cannot open " + path);
    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v;
            ss >> v.x() >> v.y() >> v.z();
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> t{};
            for (int k = 0; k < 3; ++k) {
                std::string tok;
                ss >> tok;
                t[k] = std::stoi(tok) - 1;  // "i", "i/j", "i/j/k" all start with i
                if (t[k] < 0)
                    throw std::runtime_error("load_obj: bad face index in " + path);
            }
            mesh.triangles.push_back(t);
        }
    }
    for (const auto& t : mesh.triangles)
        for (int v : t)
            if (v >= static_cast<int>(mesh.vertices.size()))
                throw std::runtime_error("load_obj: face index out of range");
    return mesh;
}

}  // namespace fray
