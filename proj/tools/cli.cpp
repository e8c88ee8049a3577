#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fray/checkpoint.hpp"
#include "fray/image_io.hpp"
#include "fray/metrics.hpp"
#include "fray/trainer.hpp"

namespace fray {

namespace fs = std::filesystem;

namespace {

Vec3 parse_vec3_arg(const std::string& text, const char* what) {
    std::istringstream ss(text);
    Vec3 v;
    if (!(ss >> v.x() >> v.y() >> v.z()))
        throw std::runtime_error(std::string("expected three numbers for ") + what +
                                 ", got '" + text + "'");
    return v;
}

Config load_config_with_overrides(const std::string& path,
                                  const std::vector<std::string>& overrides) {
    Config cfg = path.empty() ? Config() : Config::load(path);
    for (const auto& o : overrides) cfg.set_entry(o);
    return cfg;
}

int cmd_generate(const std::string& scene_path, const std::string& out_dir,
                 int views, int res, long seed, int gt_res) {
    const SceneSpec spec = SceneSpec::load(scene_path);
    const Dataset ds =
        generate_dataset(spec, views, res, static_cast<uint64_t>(seed), gt_res);
    save_dataset(out_dir, ds);
    std::cout << "wrote " << ds.views.size() << " views at " << res << "x" << res
              << " to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& scene_dir, const std::string& out_dir,
              const std::string& config_path,
              const std::vector<std::string>& overrides,
              const std::string& resume_path) {
    const Config file_cfg = load_config_with_overrides(config_path, overrides);
    const TrainConfig cfg = TrainConfig::from_config(file_cfg);
    const Dataset ds = load_dataset(scene_dir);

    TrainCheckpoint resume;
    const bool resuming = !resume_path.empty();
    if (resuming) resume = load_checkpoint(resume_path);

    const TrainResult result =
        train(ds, cfg, out_dir, resuming ? &resume : nullptr,
              [&](uint64_t it, const BatchLoss& loss) {
                  if (cfg.log_every > 0 && it % static_cast<uint64_t>(cfg.log_every) == 0)
                      std::cout << "iter " << it << " loss " << loss.total << " (l1 "
                                << loss.l1_term << ", eik " << loss.eikonal_term
                                << ")\n";
              });
    if (result.diverged) {
        std::cerr << "error: training diverged (see divergence_dump.txt)\n";
        return 3;
    }
    std::cout << "finished at iteration " << result.checkpoint.iteration
              << ", checkpoint in " << out_dir << "\n";
    return 0;
}

int cmd_render(const std::string& ckpt_path, const std::string& cameras_path,
               const std::string& out_dir, int view, bool with_depth,
               bool with_normal, const std::vector<std::string>& overrides) {
    const TrainCheckpoint ckpt = load_checkpoint(ckpt_path);
    const std::vector<Camera> cameras = load_cameras(cameras_path);
    const Config cfg = load_config_with_overrides("", overrides);

    RenderConfig rc;
    rc.sampler.n_uniform = static_cast<int>(cfg.get_long("sample.uniform", 64));
    rc.sampler.n_importance = static_cast<int>(cfg.get_long("sample.importance", 64));
    rc.sampler.stratified = cfg.get_bool("sample.stratified", true);
    rc.background = cfg.get_vec3("render.background", Vec3::Ones());
    rc.adaptive = cfg.get_bool("model.adaptive_s", true);
    rc.with_depth = with_depth;
    rc.with_normal = with_normal;
    const uint64_t seed = static_cast<uint64_t>(cfg.get_long("sample.seed", 0));

    const NeuralField field(&ckpt.model);
    const NeuralColor color(&ckpt.model);
    fs::create_directories(out_dir);
    for (size_t v = 0; v < cameras.size(); ++v) {
        if (view >= 0 && static_cast<size_t>(view) != v) continue;
        const ImageBuffer img =
            render_image(cameras[v], field, color, ckpt.model.s(), rc, seed + v);
        char name[32];
        std::snprintf(name, sizeof(name), "%04zu.png", v);
        save_png((fs::path(out_dir) / name).string(), img);
        if (with_depth) {
            std::snprintf(name, sizeof(name), "%04zu_depth.png", v);
            save_depth_png((fs::path(out_dir) / name).string(), img);
        }
        std::cout << "rendered view " << v << "\n";
    }
    return 0;
}

int cmd_extract(const std::string& ckpt_path, const std::string& out_path,
                int resolution, double min_component) {
    const TrainCheckpoint ckpt = load_checkpoint(ckpt_path);
    const NeuralField field(&ckpt.model);
    TriMesh mesh = marching_cubes(field, resolution);
    if (min_component > 0.0) mesh = remove_small_components(mesh, min_component);
    save_obj(out_path, mesh);
    std::cout << "wrote " << mesh.vertices.size() << " vertices, "
              << mesh.triangles.size() << " triangles to " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& mesh_path, const std::string& ref_mesh_path,
             const std::string& images_dir, const std::string& ref_images_dir,
             const std::string& out_csv, const std::string& scene_name,
             long n_samples) {
    double ch_sq = std::numeric_limits<double>::quiet_NaN();
    double ch_un = std::numeric_limits<double>::quiet_NaN();
    double psnr_db = std::numeric_limits<double>::quiet_NaN();

    if (!mesh_path.empty() || !ref_mesh_path.empty()) {
        if (mesh_path.empty() || ref_mesh_path.empty())
            throw std::runtime_error("eval: both --mesh and --ref-mesh are required");
        const TriMesh mesh = load_obj(mesh_path);
        const TriMesh ref = load_obj(ref_mesh_path);
        const PointCloud a = sample_mesh(mesh, static_cast<size_t>(n_samples), 0);
        const PointCloud b = sample_mesh(ref, static_cast<size_t>(n_samples), 1);
        const ChamferResult r = chamfer(a, b);
        ch_sq = r.squared;
        ch_un = r.unsquared;
    }
    if (!images_dir.empty() || !ref_images_dir.empty()) {
        if (images_dir.empty() || ref_images_dir.empty())
            throw std::runtime_error(
                "eval: both --images and --ref-images are required");
        double sum = 0.0;
        int count = 0;
        for (const auto& entry : fs::directory_iterator(images_dir)) {
            if (entry.path().extension() != ".png") continue;
            if (entry.path().filename().string().find("depth") != std::string::npos)
                continue;
            const fs::path ref = fs::path(ref_images_dir) / entry.path().filename();
            if (!fs::exists(ref))
                throw std::runtime_error("eval: missing reference image " +
                                         ref.string());
            sum += psnr(load_png(entry.path().string()), load_png(ref.string()));
            ++count;
        }
        if (count == 0) throw std::runtime_error("eval: no images found");
        psnr_db = sum / count;
    }
    if (std::isnan(ch_sq) && std::isnan(psnr_db))
        throw std::runtime_error("eval: nothing to evaluate (give meshes or images)");

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_csv.empty()) {
        file.open(out_csv);
        if (!file) throw std::runtime_error("eval: cannot write " + out_csv);
        out = &file;
    }
    char row[256];
    std::snprintf(row, sizeof(row), "%s,%.9g,%.9g,%.9g", scene_name.c_str(), ch_sq,
                  ch_un, psnr_db);
    (*out) << "scene,chamfer_sq,chamfer_unsq,psnr\n" << row << "\n";
    if (!out_csv.empty()) std::cout << row << "\n";
    return 0;
}

int cmd_probe(const std::string& ckpt_path, const std::string& scene_path,
              const std::string& origin_arg, const std::string& dir_arg,
              const std::string& out_csv, int n_uniform, int n_importance,
              double s_override, bool stratified, bool adaptive) {
    if (ckpt_path.empty() == scene_path.empty())
        throw std::runtime_error("probe: give exactly one of --checkpoint / --scene");

    TrainCheckpoint ckpt;
    SceneSpec spec;
    std::unique_ptr<SdfField> field;
    double s = s_override;
    if (!ckpt_path.empty()) {
        ckpt = load_checkpoint(ckpt_path);
        field = std::make_unique<NeuralField>(&ckpt.model);
        if (s <= 0.0) s = ckpt.model.s();
    } else {
        spec = SceneSpec::load(scene_path);
        field = std::make_unique<AnalyticField>(spec.shape);
        if (s <= 0.0) s = 50.0;
    }

    const Ray ray = make_bounded_ray(parse_vec3_arg(origin_arg, "--origin"),
                                     parse_vec3_arg(dir_arg, "--dir"));
    if (ray.empty()) throw std::runtime_error("probe: ray misses the scene bounds");

    SamplerConfig sampler;
    sampler.n_uniform = n_uniform;
    sampler.n_importance = n_importance;
    sampler.stratified = stratified;
    ScaleParam scale;
    scale.s = s;
    auto rng = make_stream_rng(sampler.seed, 0);
    const HierarchicalResult h =
        hierarchical_pass(ray, *field, scale, sampler, rng, adaptive);
    scale.adaptive_coeff = h.coeff.c;
    const RayQuadrature q = quadrature(h.samples, scale);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_csv.empty()) {
        file.open(out_csv);
        if (!file) throw std::runtime_error("probe: cannot write " + out_csv);
        out = &file;
    }
    (*out) << "t,f,sigma,T,alpha,weight\n";
    for (size_t i = 0; i < h.samples.size(); ++i) {
        char row[256];
        std::snprintf(row, sizeof(row), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                      h.samples.t[i], h.samples.f[i], q.sigma[i], q.T[i], q.alpha[i],
                      q.weight[i]);
        (*out) << row << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& argv) {
    CLI::App app{"fray: SDF volume rendering, reconstruction and evaluation"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Render a synthetic multi-view dataset");
    std::string gen_scene, gen_out;
    int gen_views = 16, gen_res = 64, gen_gt_res = 256;
    long gen_seed = 0;
    gen->add_option("--scene", gen_scene, "Scene spec file")->required();
    gen->add_option("--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--views", gen_views, "Number of views");
    gen->add_option("--res", gen_res, "Image resolution");
    gen->add_option("--seed", gen_seed, "Seed recorded with the dataset");
    gen->add_option("--gt-res", gen_gt_res,
                    "Ground-truth mesh grid resolution (0 = skip)");

    // train
    auto* tr = app.add_subcommand("train", "Optimize a model on a dataset");
    std::string tr_scene, tr_out, tr_config, tr_resume;
    std::vector<std::string> tr_set;
    tr->add_option("--scene", tr_scene, "Dataset directory")->required();
    tr->add_option("--out", tr_out, "Run output directory")->required();
    tr->add_option("--config", tr_config, "Training config file");
    tr->add_option("--set", tr_set, "Override config key=value (repeatable)");
    tr->add_option("--resume", tr_resume, "Checkpoint to resume from");

    // render
    auto* rd = app.add_subcommand("render", "Render images from a checkpoint");
    std::string rd_ckpt, rd_cams, rd_out;
    std::vector<std::string> rd_set;
    int rd_view = -1;
    bool rd_depth = false, rd_normal = false;
    rd->add_option("--checkpoint", rd_ckpt, "Checkpoint file")->required();
    rd->add_option("--cameras", rd_cams, "Camera file")->required();
    rd->add_option("--out", rd_out, "Output image directory")->required();
    rd->add_option("--view", rd_view, "Render only this view index");
    rd->add_flag("--depth", rd_depth, "Also write 16-bit depth PNGs");
    rd->add_flag("--normal", rd_normal, "Also compute normal channel");
    rd->add_option("--set", rd_set, "Override config key=value (repeatable)");

    // extract
    auto* ex = app.add_subcommand("extract", "Extract the zero level set as OBJ");
    std::string ex_ckpt, ex_out;
    int ex_res = 128;
    double ex_min_comp = 0.01;
    ex->add_option("--checkpoint", ex_ckpt, "Checkpoint file")->required();
    ex->add_option("--out", ex_out, "Output OBJ path")->required();
    ex->add_option("--resolution", ex_res, "Marching grid resolution");
    ex->add_option("--min-component", ex_min_comp,
                   "Drop components below this vertex fraction (0 = keep all)");

    // eval
    auto* ev = app.add_subcommand("eval", "Chamfer / PSNR evaluation");
    std::string ev_mesh, ev_ref_mesh, ev_imgs, ev_ref_imgs, ev_out, ev_name = "scene";
    long ev_samples = 100000;
    ev->add_option("--mesh", ev_mesh, "Reconstructed mesh (OBJ)");
    ev->add_option("--ref-mesh", ev_ref_mesh, "Ground-truth mesh (OBJ)");
    ev->add_option("--images", ev_imgs, "Rendered image directory");
    ev->add_option("--ref-images", ev_ref_imgs, "Reference image directory");
    ev->add_option("--out", ev_out, "Output CSV path (default stdout)");
    ev->add_option("--name", ev_name, "Scene name for the CSV row");
    ev->add_option("--samples", ev_samples, "Surface samples per mesh");

    // probe
    auto* pr = app.add_subcommand("probe",
                                  "Dump per-sample (t, f, sigma, T, alpha, weight)");
    std::string pr_ckpt, pr_scene, pr_origin = "0 0 -3", pr_dir = "0 0 1", pr_out;
    int pr_uniform = 64, pr_importance = 64;
    double pr_s = -1.0;
    bool pr_stratified = false, pr_no_adaptive = false;
    pr->add_option("--checkpoint", pr_ckpt, "Checkpoint file");
    pr->add_option("--scene", pr_scene, "Analytic scene spec file");
    pr->add_option("--origin", pr_origin, "Ray origin 'x y z'");
    pr->add_option("--dir", pr_dir, "Ray direction 'x y z'");
    pr->add_option("--out", pr_out, "Output CSV path (default stdout)");
    pr->add_option("--uniform", pr_uniform, "Uniform sample count");
    pr->add_option("--importance", pr_importance, "Importance sample count");
    pr->add_option("--s", pr_s, "Scale override (default: checkpoint s or 50)");
    pr->add_flag("--stratified", pr_stratified, "Stratified (default deterministic)");
    pr->add_flag("--no-adaptive", pr_no_adaptive, "Disable the adaptive gain");

    std::vector<const char*> cargs;
    cargs.push_back("fray");
    for (const auto& a : argv) cargs.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed())
            return cmd_generate(gen_scene, gen_out, gen_views, gen_res, gen_seed,
                                gen_gt_res);
        if (tr->parsed()) return cmd_train(tr_scene, tr_out, tr_config, tr_set, tr_resume);
        if (rd->parsed())
            return cmd_render(rd_ckpt, rd_cams, rd_out, rd_view, rd_depth, rd_normal,
                              rd_set);
        if (ex->parsed()) return cmd_extract(ex_ckpt, ex_out, ex_res, ex_min_comp);
        if (ev->parsed())
            return cmd_eval(ev_mesh, ev_ref_mesh, ev_imgs, ev_ref_imgs, ev_out,
                            ev_name, ev_samples);
        if (pr->parsed())
            return cmd_probe(pr_ckpt, pr_scene, pr_origin, pr_dir, pr_out, pr_uniform,
                             pr_importance, pr_s, pr_stratified, !pr_no_adaptive);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace fray
