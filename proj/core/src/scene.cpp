#include "fray/scene.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "fray/fields.hpp"
#include "fray/image_io.hpp"
#include "fray/parallel.hpp"

namespace fray {

namespace {

struct SexprParser {
    const std::string& src;
    size_t pos = 0;

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
            ++pos;
    }
    char peek() {
        skip_ws();
        if (pos >= src.size()) throw std::runtime_error("shape: unexpected end");
        return src[pos];
    }
    void expect(char c) {
        if (peek() != c)
            throw std::runtime_error(std::string("shape: expected '") + c + "' at " +
                                     std::to_string(pos));
        ++pos;
    }
    std::string atom() {
        skip_ws();
        const size_t start = pos;
        while (pos < src.size() && !std::isspace(static_cast<unsigned char>(src[pos])) &&
               src[pos] != '(' && src[pos] != ')')
            ++pos;
        if (start == pos) throw std::runtime_error("shape: expected atom");
        return src.substr(start, pos - start);
    }
    double number() {
        const std::string a = atom();
        try {
            size_t used = 0;
            const double v = std::stod(a, &used);
            if (used == a.size()) return v;
        } catch (const std::exception&) {
        }
        throw std::runtime_error("shape: expected number, got '" + a + "'");
    }

    AnalyticSdf parse() {
        expect('(');
        const std::string head = atom();
        AnalyticSdf out;
        if (head == "sphere") {
            const double cx = number(), cy = number(), cz = number(), r = number();
            out = AnalyticSdf::sphere(Vec3(cx, cy, cz), r);
        } else if (head == "plane") {
            const double nx = number(), ny = number(), nz = number(), d = number();
            out = AnalyticSdf::plane(Vec3(nx, ny, nz), d);
        } else if (head == "box") {
            const double hx = number(), hy = number(), hz = number();
            out = AnalyticSdf::box(Vec3(hx, hy, hz));
        } else if (head == "bumpy-sphere") {
            const double r = number(), a = number(), w = number();
            out = AnalyticSdf::bumpy_sphere(r, a, w);
        } else if (head == "union") {
            std::vector<AnalyticSdf> children;
            while (peek() == '(') children.push_back(parse());
            if (children.empty())
                throw std::runtime_error("shape: union needs at least one child");
            out = AnalyticSdf::union_of(std::move(children));
        } else if (head == "offset") {
            AnalyticSdf child = parse();
            const double d = number();
            out = AnalyticSdf::offset_of(std::move(child), d);
        } else {
            throw std::runtime_error("shape: unknown primitive '" + head + "'");
        }
        expect(')');
        return out;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

AnalyticSdf parse_shape(const std::string& sexpr) {
    SexprParser parser{sexpr};
    AnalyticSdf shape = parser.parse();
    parser.skip_ws();
    if (parser.pos != sexpr.size())
        throw std::runtime_error("shape: trailing characters after expression");
    return shape;
}

std::string shape_to_string(const AnalyticSdf& s) {
    std::ostringstream out;
    switch (s.kind) {
        case AnalyticSdf::Kind::Sphere:
            out << "(sphere " << fmt(s.vec.x()) << ' ' << fmt(s.vec.y()) << ' '
                << fmt(s.vec.z()) << ' ' << fmt(s.p0) << ')';
            break;
        case AnalyticSdf::Kind::Plane:
            out << "(plane " << fmt(s.vec.x()) << ' ' << fmt(s.vec.y()) << ' '
                << fmt(s.vec.z()) << ' ' << fmt(s.p0) << ')';
            break;
        case AnalyticSdf::Kind::Box:
            out << "(box " << fmt(s.vec.x()) << ' ' << fmt(s.vec.y()) << ' '
                << fmt(s.vec.z()) << ')';
            break;
        case AnalyticSdf::Kind::BumpySphere:
            out << "(bumpy-sphere " << fmt(s.p0) << ' ' << fmt(s.p1) << ' '
                << fmt(s.p2) << ')';
            break;
        case AnalyticSdf::Kind::Union:
            out << "(union";
            for (const auto& c : s.children) out << ' ' << shape_to_string(c);
            out << ')';
            break;
        case AnalyticSdf::Kind::Offset:
            out << "(offset " << shape_to_string(s.children.front()) << ' '
                << fmt(s.p0) << ')';
            break;
    }
    return out.str();
}

SceneSpec SceneSpec::from_config(const Config& cfg) {
    SceneSpec spec;
    if (!cfg.has("shape"))
        throw std::runtime_error("scene: missing 'shape' key");
    spec.shape = parse_shape(cfg.get_string("shape", ""));
    spec.albedo = cfg.get_vec3("albedo", spec.albedo);
    spec.background = cfg.get_vec3("background", spec.background);
    return spec;
}

SceneSpec SceneSpec::load(const std::string& path) {
    return from_config(Config::load(path));
}

void SceneSpec::save(const std::string& path) const {
    Config cfg;
    cfg.set("shape", shape_to_string(shape));
    std::ostringstream a, b;
    a << fmt(albedo.x()) << ' ' << fmt(albedo.y()) << ' ' << fmt(albedo.z());
    b << fmt(background.x()) << ' ' << fmt(background.y()) << ' '
      << fmt(background.z());
    cfg.set("albedo", a.str());
    cfg.set("background", b.str());
    cfg.save(path);
}

SphereTraceHit sphere_trace(const AnalyticSdf& shape, const Ray& ray,
                            double step_scale, int max_steps) {
    SphereTraceHit out;
    if (ray.empty()) return out;
    double t = ray.t_near;
    for (int step = 0; step < max_steps && t <= ray.t_far; ++step) {
        const SdfEval e = eval_sdf(shape, ray.at(t));
        if (std::abs(e.value) < 1e-10) {
            out.hit = true;
            out.t = t;
            out.point = ray.at(t);
            out.normal = e.gradient.normalized();
            return out;
        }
        t += step_scale * e.value;
        if (e.value < 0.0) break;  // overshot into the interior; treat as hit
    }
    if (t > ray.t_near && t <= ray.t_far) {
        // Overshoot: bisect the bracketing interval down to the tolerance.
        double lo = ray.t_near, hi = t;
        if (eval_sdf(shape, ray.at(hi)).value < 0.0) {
            for (int it = 0; it < 128; ++it) {
                const double mid = 0.5 * (lo + hi);
                (eval_sdf(shape, ray.at(mid)).value > 0.0 ? lo : hi) = mid;
            }
            out.hit = true;
            out.t = 0.5 * (lo + hi);
            out.point = ray.at(out.t);
            out.normal = eval_sdf(shape, out.point).gradient.normalized();
        }
    }
    return out;
}

ImageBuffer trace_image(const SceneSpec& spec, const Camera& camera) {
    ImageBuffer img(camera.width, camera.height);
    img.depth.assign(img.rgb.size(), 0.0);
    parallel_ranges(img.rgb.size(), [&](size_t begin, size_t end) {
        for (size_t p = begin; p < end; ++p) {
            const int i = static_cast<int>(p % static_cast<size_t>(camera.width));
            const int j = static_cast<int>(p / static_cast<size_t>(camera.width));
            const Ray ray = generate_ray(camera, i, j);
            if (ray.empty()) {
                img.rgb[p] = spec.background;
                continue;
            }
            const SphereTraceHit hit = sphere_trace(spec.shape, ray);
            if (!hit.hit) {
                img.rgb[p] = spec.background;
                continue;
            }
            const double lambert = std::max(0.0, -hit.normal.dot(ray.direction));
            img.rgb[p] = spec.albedo * lambert;
            img.depth[p] = hit.t;
        }
    });
    return img;
}

Dataset generate_dataset(const SceneSpec& spec, int n_views, int resolution,
                         uint64_t seed, int gt_mesh_resolution) {
    if (n_views < 2) throw std::invalid_argument("generate_dataset: need >= 2 views");
    if (resolution < 4)
        throw std::invalid_argument("generate_dataset: resolution too small");
    (void)seed;  // generation is deterministic; the seed is recorded by callers

    // Containment check: the surface must stay inside the scene bounds.
    for (int i = 0; i < 512; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / 512.0;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = i * 2.399963229728653;  // golden angle
        const Vec3 dir(r * std::cos(phi), r * std::sin(phi), z);
        if (eval_sdf(spec.shape, kSceneBoundsRadius * dir).value <= 0.0)
            throw std::runtime_error("generate_dataset: shape escapes scene bounds");
    }

    Dataset ds;
    ds.spec = spec;
    ds.has_spec = true;
    const double cam_radius = 3.0;
    const double focal = 1.2 * resolution;
    for (int v = 0; v < n_views; ++v) {
        const double z = 1.0 - 2.0 * (v + 0.5) / n_views;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = v * 2.399963229728653;
        const Vec3 eye = cam_radius * Vec3(r * std::cos(phi), r * std::sin(phi), z);
        const Vec3 up = std::abs(z) > 0.99 ? Vec3::UnitX() : Vec3::UnitZ();
        DatasetView view;
        view.camera =
            Camera::look_at(eye, Vec3::Zero(), up, focal, resolution, resolution);
        view.image = trace_image(spec, view.camera);
        ds.views.push_back(std::move(view));
    }
    if (gt_mesh_resolution >= 8) {
        const AnalyticField field(spec.shape);
        ds.gt_mesh = marching_cubes(field, gt_mesh_resolution);
    }
    return ds;
}

void save_dataset(const std::string& dir, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "images");
    std::vector<Camera> cams;
    for (const auto& v : ds.views) cams.push_back(v.camera);
    save_cameras((fs::path(dir) / "cameras.txt").string(), cams);
    for (size_t i = 0; i < ds.views.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%04zu.png", i);
        save_png((fs::path(dir) / "images" / name).string(), ds.views[i].image);
    }
    if (!ds.gt_mesh.empty())
        save_obj((fs::path(dir) / "gt_mesh.obj").string(), ds.gt_mesh);
    if (ds.has_spec) ds.spec.save((fs::path(dir) / "spec.cfg").string());
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    Dataset ds;
    const auto cam_path = fs::path(dir) / "cameras.txt";
    if (!fs::exists(cam_path))
        throw std::runtime_error("load_dataset: missing " + cam_path.string());
    const std::vector<Camera> cams = load_cameras(cam_path.string());
    for (size_t i = 0; i < cams.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%04zu.png", i);
        const auto img_path = fs::path(dir) / "images" / name;
        if (!fs::exists(img_path))
            throw std::runtime_error("load_dataset: missing " + img_path.string());
        DatasetView view;
        view.camera = cams[i];
        view.image = load_png(img_path.string());
        if (view.image.width != cams[i].width || view.image.height != cams[i].height)
            throw std::runtime_error("load_dataset: image/camera size mismatch");
        ds.views.push_back(std::move(view));
    }
    if (ds.views.size() < 2)
        throw std::runtime_error("load_dataset: dataset needs >= 2 views");
    const auto mesh_path = fs::path(dir) / "gt_mesh.obj";
    if (fs::exists(mesh_path)) ds.gt_mesh = load_obj(mesh_path.string());
    const auto spec_path = fs::path(dir) / "spec.cfg";
    if (fs::exists(spec_path)) {
        ds.spec = SceneSpec::load(spec_path.string());
        ds.has_spec = true;
    }
    return ds;
}

}  // namespace fray
