#include "rootlift/scene.hpp"

#include <algorithm>
#include <numeric>

#include "rootlift/camera.hpp"
#include "rootlift/rng.hpp"

namespace rootlift::synth {

void Scene::validate(bool expect_noiseless) const {
    cam.validate();
    jreg.validate(1);  // a one-keypoint scene is degenerate, not malformed
    if (static_cast<Eigen::Index>(verts_rel.size()) != jreg.vertices())
        throw InvalidConfig("vertex count does not match regressor");
    if (static_cast<Eigen::Index>(k2d_obs.size()) != jreg.keypoints())
        throw InvalidConfig("keypoint count does not match regressor");
    if (!outlier_mask.empty() && outlier_mask.size() != k2d_obs.size())
        throw InvalidConfig("outlier mask size mismatch");
    if (weights && weights->size() != jreg.keypoints()) throw InvalidConfig("weight count mismatch");

    if (t_gt) {
        const auto k3d = keypoints_rel();
        for (size_t i = 0; i < k3d.size(); ++i) {
            if (k3d[i].z() + t_gt->z() <= 0.0) throw InvalidConfig("keypoint behind camera at ground truth");
            if (expect_noiseless) {
                const Pixel2 px = project(cam, Point3(k3d[i] + *t_gt));
                if (std::abs(px.u - k2d_obs[i].u) > 1e-9 || std::abs(px.v - k2d_obs[i].v) > 1e-9)
                    throw InvalidConfig("observations are not exact projections");
            }
        }
    }
}

namespace {

KeypointRegressor sample_regressor(Rng& rng, int n_k, int n_v) {
    KeypointRegressor jreg;
    jreg.m = Eigen::MatrixXd::Zero(n_k, n_v);
    std::vector<int> idx(static_cast<size_t>(n_v));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n_k; ++i) {
        const int support = std::min<int>(n_v, 3 + static_cast<int>(rng.below(4)));
        // partial Fisher-Yates for distinct support indices
        for (int j = 0; j < support; ++j) {
            const int k = j + static_cast<int>(rng.below(static_cast<uint64_t>(n_v - j)));
            std::swap(idx[static_cast<size_t>(j)], idx[static_cast<size_t>(k)]);
        }
        double total = 0.0;
        std::vector<double> coef(static_cast<size_t>(support));
        for (int j = 0; j < support; ++j) {
            coef[static_cast<size_t>(j)] = rng.uniform(0.05, 1.0);
            total += coef[static_cast<size_t>(j)];
        }
        for (int j = 0; j < support; ++j) jreg.m(i, idx[static_cast<size_t>(j)]) = coef[static_cast<size_t>(j)] / total;
    }
    return jreg;
}

bool all_in_frame(const CameraIntrinsics& cam, const std::vector<Point3>& k3d, const Translation3& t,
                  double margin) {
    for (const auto& p : k3d) {
        const Point3 cs = p + t;
        if (cs.z() <= 0.05) return false;
        const Pixel2 px = project(cam, cs);
        if (px.u < margin || px.u > cam.width - margin || px.v < margin || px.v > cam.height - margin)
            return false;
    }
    return true;
}

}  // namespace

KeypointRegressor sample_regressor(uint64_t seed, int n_k, int n_v) {
    if (n_k < 2 || n_v < n_k) throw InvalidConfig("regressor shape must satisfy 2 <= n_k <= n_v");
    Rng rng(seed);
    return sample_regressor(rng, n_k, n_v);
}

Scene gen_scene(uint64_t seed, const GenConfig& cfg, const KeypointRegressor* shared_jreg) {
    if (cfg.n_k < 2) throw InvalidConfig("need at least 2 keypoints");
    if (cfg.n_v < cfg.n_k) throw InvalidConfig("need at least as many vertices as keypoints");
    if (!(cfg.depth_lo > 0.1) || !(cfg.depth_hi < 10.0) || !(cfg.depth_lo <= cfg.depth_hi))
        throw InvalidConfig("depth range must lie within (0.1, 10)");
    if (!(cfg.hand_extent > 0.0)) throw InvalidConfig("hand extent must be positive");
    if (!(cfg.fov_lo >= 10.0) || !(cfg.fov_hi <= 120.0) || !(cfg.fov_lo <= cfg.fov_hi))
        throw InvalidConfig("fov range must lie within [10, 120] degrees");
    if (cfg.width <= 0 || cfg.height <= 0) throw InvalidConfig("frame size must be positive");
    if (shared_jreg) {
        shared_jreg->validate();
        if (shared_jreg->keypoints() != cfg.n_k || shared_jreg->vertices() != cfg.n_v)
            throw InvalidConfig("shared regressor shape does not match config");
    }

    Rng rng(seed);
    Scene scene;
    scene.seed = seed;

    const double fov = rng.uniform(cfg.fov_lo, cfg.fov_hi);
    scene.cam.width = cfg.width;
    scene.cam.height = cfg.height;
    scene.cam.f = (cfg.width / 2.0) / std::tan(fov * 0.5 * M_PI / 180.0);
    scene.cam.u0 = cfg.width / 2.0 + rng.uniform(-10.0, 10.0);
    scene.cam.v0 = cfg.height / 2.0 + rng.uniform(-10.0, 10.0);

    const double half = cfg.hand_extent / 2.0;
    scene.verts_rel.resize(static_cast<size_t>(cfg.n_v));
    for (auto& v : scene.verts_rel)
        v = Point3(rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half));

    scene.jreg = shared_jreg ? *shared_jreg : sample_regressor(rng, cfg.n_k, cfg.n_v);
    const auto k3d = scene.keypoints_rel();

    // Place the root so the whole hand projects inside the frame; shrink the
    // lateral target region if a draw fails.
    Translation3 t = Translation3::Zero();
    double margin_frac = 0.2;
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
        const double tz = rng.uniform(cfg.depth_lo, cfg.depth_hi);
        const double mu = margin_frac * cfg.width;
        const double mv = margin_frac * cfg.height;
        const double pu = rng.uniform(mu, cfg.width - mu);
        const double pv = rng.uniform(mv, cfg.height - mv);
        t = Translation3((pu - scene.cam.u0) * tz / scene.cam.f, (pv - scene.cam.v0) * tz / scene.cam.f, tz);
        placed = all_in_frame(scene.cam, k3d, t, 8.0);
        if (attempt % 8 == 7) margin_frac = std::min(0.45, margin_frac + 0.05);
    }
    if (!placed) t = Translation3(0.0, 0.0, cfg.depth_hi);  // centered fallback always fits the box depth-wise
    scene.t_gt = t;

    scene.k2d_obs.resize(k3d.size());
    for (size_t i = 0; i < k3d.size(); ++i) scene.k2d_obs[i] = project(scene.cam, Point3(k3d[i] + t));
    return scene;
}

Scene perturb(const Scene& scene, const PerturbSpec& spec) {
    if (!scene.t_gt) throw InvalidConfig("perturb requires a scene with ground truth");
    if (spec.noise_px < 0.0) throw InvalidConfig("noise stddev must be non-negative");
    const int n = static_cast<int>(scene.n_keypoints());
    if (spec.outlier_count < 0 || spec.outlier_count >= n - 1)
        throw InvalidConfig("outlier count must lie in [0, n_k - 1)");

    Rng rng(spec.seed);
    Scene out = scene;
    out.outlier_mask.assign(static_cast<size_t>(n), false);

    // Fixed draw order: all noise first, then outlier indices, then pixels.
    std::vector<Pixel2> noise(static_cast<size_t>(n));
    for (auto& d : noise) d = {rng.normal(0.0, spec.noise_px), rng.normal(0.0, spec.noise_px)};

    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int j = 0; j < spec.outlier_count; ++j) {
        const int k = j + static_cast<int>(rng.below(static_cast<uint64_t>(n - j)));
        std::swap(idx[static_cast<size_t>(j)], idx[static_cast<size_t>(k)]);
    }

    for (int i = 0; i < n; ++i) {
        out.k2d_obs[static_cast<size_t>(i)].u += noise[static_cast<size_t>(i)].u;
        out.k2d_obs[static_cast<size_t>(i)].v += noise[static_cast<size_t>(i)].v;
    }
    for (int j = 0; j < spec.outlier_count; ++j) {
        const auto i = static_cast<size_t>(idx[static_cast<size_t>(j)]);
        out.k2d_obs[i] = {rng.uniform(0.0, scene.cam.width), rng.uniform(0.0, scene.cam.height)};
        out.outlier_mask[i] = true;
    }
    return out;
}

}  // namespace rootlift::synth
