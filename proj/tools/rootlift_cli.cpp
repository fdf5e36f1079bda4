#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "rootlift/io.hpp"
#include "rootlift/oracles.hpp"
#include "rootlift/rng.hpp"

namespace fs = std::filesystem;
using namespace rootlift;

namespace {

// Exit contract shared by all subcommands:
// 0 success, 1 invalid flags, 2 degenerate geometry, 3 I/O or schema error,
// 4 check failure.
enum ExitCode : int { kOk = 0, kBadFlags = 1, kDegenerate = 2, kIoError = 3, kCheckFailed = 4 };

int cmd_solve(const std::string& scene_path, const std::string& weights_mode, const std::string& out_path) {
    const synth::Scene scene = io::load_scene(scene_path);
    const auto k3d = scene.keypoints_rel();
    std::vector<Ray2> rays(scene.k2d_obs.size());
    for (size_t i = 0; i < rays.size(); ++i) rays[i] = normalize_pixel(scene.cam, scene.k2d_obs[i]);

    const LinearSystem sys = build_system(k3d, rays);
    SolveResult result;
    if (weights_mode == "uniform") {
        result = solve_ls(sys);
    } else {
        if (!scene.weights) throw ParseError("--weights from-file requires a \"weights\" array in the scene");
        result = solve_wls(sys, *scene.weights);
    }

    std::cout << "translation [m]: " << io::fmt_double(result.t.x()) << " " << io::fmt_double(result.t.y())
              << " " << io::fmt_double(result.t.z()) << "\n";
    std::cout << "residual_norm: " << io::fmt_double(result.residual_norm)
              << "  cond_estimate: " << io::fmt_double(result.cond_estimate) << "\n";

    double error_m = 0.0;
    const double* error_ptr = nullptr;
    if (scene.t_gt) {
        error_m = (result.t - *scene.t_gt).norm();
        error_ptr = &error_m;
        std::cout << "error vs ground truth: " << io::fmt_double(error_m * 1000.0) << " mm\n";
    }
    io::save_result(out_path, result, error_ptr);
    return kOk;
}

int cmd_synth(uint64_t seed, int count, double noise_px, int outliers, const std::string& out_dir) {
    synth::GenConfig cfg;
    if (outliers < 0 || outliers >= cfg.n_k - 1) throw InvalidConfig("--outliers must lie in [0, 20]");
    if (noise_px < 0.0) throw InvalidConfig("--noise-px must be non-negative");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ParseError("cannot create directory " + out_dir + ": " + ec.message());

    for (int i = 0; i < count; ++i) {
        synth::Scene scene = synth::gen_scene(Rng::mix(seed, static_cast<uint64_t>(i)), cfg);
        if (noise_px > 0.0 || outliers > 0) {
            synth::PerturbSpec spec;
            spec.noise_px = noise_px;
            spec.outlier_count = outliers;
            spec.seed = Rng::mix(seed, 0x9000 + static_cast<uint64_t>(i));
            scene = synth::perturb(scene, spec);
        }
        const fs::path path = fs::path(out_dir) / ("scene_" + std::to_string(seed) + "_" + std::to_string(i) + ".json");
        io::save_scene(path, scene);
    }
    std::cout << "wrote " << count << " scene(s) to " << out_dir << "\n";
    return kOk;
}

int cmd_gradcheck(const std::string& scene_path, int random_count, double eps, double tol) {
    std::vector<synth::Scene> scenes;
    std::vector<WeightVector> weights;
    std::vector<Translation3> upstreams;

    if (!scene_path.empty()) {
        scenes.push_back(io::load_scene(scene_path));
        const auto n = scenes[0].n_keypoints();
        weights.push_back(scenes[0].weights ? *scenes[0].weights : WeightVector::Constant(n, 0.5));
        upstreams.emplace_back(1.0, 1.0, 1.0);
    } else {
        Rng rng(1);  // fixed base seed keeps the check reproducible
        for (int i = 0; i < random_count; ++i) {
            synth::Scene scene = synth::gen_scene(Rng::mix(1, 0x6C0 + static_cast<uint64_t>(i)));
            synth::PerturbSpec spec;
            spec.noise_px = 1.0;
            spec.seed = Rng::mix(1, 0x7C0 + static_cast<uint64_t>(i));
            scenes.push_back(synth::perturb(scene, spec));
            WeightVector w(scene.n_keypoints());
            for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = rng.uniform(0.1, 0.9);
            weights.push_back(w);
            upstreams.emplace_back(rng.normal(), rng.normal(), rng.normal());
        }
    }

    double worst = 0.0;
    for (size_t i = 0; i < scenes.size(); ++i) {
        const auto k3d = scenes[i].keypoints_rel();
        std::vector<Ray2> rays(scenes[i].k2d_obs.size());
        for (size_t k = 0; k < rays.size(); ++k) rays[k] = normalize_pixel(scenes[i].cam, scenes[i].k2d_obs[k]);
        const LinearSystem sys = build_system(k3d, rays);
        const GradientBundle analytic = solve_wls_vjp(sys, weights[i], k3d, rays, upstreams[i], scenes[i].cam);
        const GradientBundle fd = synth::finite_diff_grad(scenes[i], weights[i], upstreams[i], eps);
        worst = std::max(worst, synth::gradcheck_metric(analytic, fd, tol));
    }
    std::cout << "max relative error over " << scenes.size() << " scene(s): " << io::fmt_double(worst) << "\n";
    if (!(worst <= tol)) {
        std::cout << "FAIL: above tolerance " << io::fmt_double(tol) << "\n";
        return kCheckFailed;
    }
    std::cout << "PASS: within tolerance " << io::fmt_double(tol) << "\n";
    return kOk;
}

int cmd_rectify(const std::string& scene_path, double canonical_f, int size, const std::string& out_path) {
    synth::Scene scene = io::load_scene(scene_path);
    const RectifyResult rect = rectify_intrinsics(scene.cam, canonical_f, size, size);
    for (auto& px : scene.k2d_obs) px = rectify_pixel(scene.cam, rect.cam, px);
    scene.cam = rect.cam;  // translation_gt, vertices, regressor unchanged: 3D geometry is untouched
    io::save_scene(out_path, scene);
    std::cout << "rectified to f=" << io::fmt_double(canonical_f) << " px, " << size << "x" << size
              << " (resize ratio " << io::fmt_double(rect.ratio) << ")\n";
    return kOk;
}

int cmd_train(const std::string& mode, bool rectified, uint64_t seed, int epochs, double lr, int train_n,
              int test_n, const std::string& report_path) {
    toy::TrainConfig cfg;
    cfg.mode = mode == "detached" ? toy::TrainMode::detached : toy::TrainMode::e2e;
    cfg.rectified = rectified;
    cfg.seed = seed;
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.train_scenes = train_n;
    cfg.test_scenes = test_n;

    const toy::TrainReport report = toy::train(cfg);
    fs::path json_path(report_path);
    fs::path csv_path(json_path);
    csv_path.replace_extension(".csv");
    io::save_report(json_path, csv_path, report);

    std::cout << "final CS-MJE [mm]: " << io::fmt_double(report.final.cs_mje_mm) << "\n";
    std::cout << "final RS-MJE [mm]: " << io::fmt_double(report.final.rs_mje_mm) << "\n";
    std::cout << "mean weight inliers/outliers: " << io::fmt_double(report.final.mean_inlier_weight) << " / "
              << io::fmt_double(report.final.mean_outlier_weight) << "\n";
    std::cout << "report: " << json_path.string() << "  csv: " << csv_path.string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Camera-space root translation tools: closed-form weighted least-squares lifting of "
                 "root-relative geometry from 2D-3D correspondences, with analytic gradients."};
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "Recover the root translation of a scene file");
    std::string solve_scene, solve_weights = "uniform", solve_out = "result.json";
    solve->add_option("--scene", solve_scene, "Scene JSON path")->required();
    solve->add_option("--weights", solve_weights, "Weighting: uniform | from-file (scene's weights array)")
        ->check(CLI::IsMember({"uniform", "from-file"}));
    solve->add_option("--out", solve_out, "Result JSON path");

    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic scene files with ground truth");
    uint64_t synth_seed = 1;
    int synth_count = 1, synth_outliers = 0;
    double synth_noise = 0.0;
    std::string synth_out = ".";
    synth_cmd->add_option("--seed", synth_seed, "Base RNG seed");
    synth_cmd->add_option("--count", synth_count, "Number of scenes")->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--noise-px", synth_noise, "Gaussian pixel noise stddev [px]")
        ->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--outliers", synth_outliers, "Keypoints replaced by uniform in-frame pixels")
        ->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();

    auto* grad = app.add_subcommand("gradcheck", "Compare analytic gradients against central finite differences");
    std::string grad_scene;
    int grad_random = 0;
    double grad_eps = 1e-6, grad_tol = 1e-5;
    auto* scene_opt = grad->add_option("--scene", grad_scene, "Scene JSON path");
    auto* random_opt = grad->add_option("--random", grad_random, "Number of random scenes")
                           ->check(CLI::PositiveNumber);
    scene_opt->excludes(random_opt);
    grad->add_option("--eps", grad_eps, "Central-difference step [px | m | weight units]");
    grad->add_option("--tol", grad_tol, "Maximum allowed relative error (1e-8 absolute floor)");

    auto* rect = app.add_subcommand("rectify", "Map a scene to a canonical camera (rays preserved)");
    std::string rect_scene, rect_out;
    double rect_f = 500.0;
    int rect_size = 256;
    rect->add_option("--scene", rect_scene, "Scene JSON path")->required();
    rect->add_option("--canonical-f", rect_f, "Canonical focal length [px]")->check(CLI::PositiveNumber);
    rect->add_option("--size", rect_size, "Canonical square frame size [px]")->check(CLI::PositiveNumber);
    rect->add_option("--out", rect_out, "Output scene JSON path")->required();

    auto* train = app.add_subcommand("train", "Train the toy end-to-end pipeline on synthetic scenes");
    std::string train_mode = "e2e", train_report = "report.json";
    bool train_rect = false;
    uint64_t train_seed = 1;
    int train_epochs = 300, train_n = 200, test_n = 100;
    double train_lr = 0.2;
    train->add_option("--mode", train_mode, "Gradient mode: e2e | detached")
        ->check(CLI::IsMember({"e2e", "detached"}));
    train->add_option("--rectified", train_rect, "Map scenes to the canonical camera before featurization");
    train->add_option("--seed", train_seed, "Master seed (data, init)");
    train->add_option("--epochs", train_epochs, "Training epochs")->check(CLI::PositiveNumber);
    train->add_option("--lr", train_lr, "Gradient-descent step size")->check(CLI::NonNegativeNumber);
    train->add_option("--train", train_n, "Training scene count")->check(CLI::PositiveNumber);
    train->add_option("--test", test_n, "Held-out scene count")->check(CLI::PositiveNumber);
    train->add_option("--report", train_report, "Report JSON path (CSV written next to it)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kBadFlags;
    }

    try {
        if (solve->parsed()) return cmd_solve(solve_scene, solve_weights, solve_out);
        if (synth_cmd->parsed()) return cmd_synth(synth_seed, synth_count, synth_noise, synth_outliers, synth_out);
        if (grad->parsed()) {
            if (grad_scene.empty() && grad_random <= 0) {
                std::cerr << "gradcheck needs --scene or --random\n";
                return kBadFlags;
            }
            return cmd_gradcheck(grad_scene, grad_random, grad_eps, grad_tol);
        }
        if (rect->parsed()) return cmd_rectify(rect_scene, rect_f, rect_size, rect_out);
        if (train->parsed())
            return cmd_train(train_mode, train_rect, train_seed, train_epochs, train_lr, train_n, test_n,
                             train_report);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const DegenerateGeometry& e) {
        std::cerr << "degenerate geometry: " << e.what() << "\n";
        return kDegenerate;
    } catch (const TooFewCorrespondences& e) {
        std::cerr << "degenerate geometry: " << e.what() << "\n";
        return kDegenerate;
    } catch (const InvalidConfig& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return kBadFlags;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    }
    return kBadFlags;
}
