#include "rootlift/toy.hpp"

#include <Eigen/Cholesky>

#include "rootlift/camera.hpp"
#include "rootlift/rng.hpp"

namespace rootlift::toy {

namespace {

// Per-head output scales. Parameters stay O(1); heads emit pixels, meters
// and logits respectively.
constexpr double kScale2d = 256.0;
constexpr double kScale3d = 0.1;
constexpr double kScaleLogit = 2.0;
constexpr double kFeatPx = 1.0 / 256.0;

// Seed salts for the derived streams.
constexpr uint64_t kSaltJreg = 0x6a31;
constexpr uint64_t kSaltInit = 0x9177;
constexpr uint64_t kSaltFeat3d = 0xf3a7;
constexpr uint64_t kSaltTrain = 0x100000;
constexpr uint64_t kSaltTest = 0x200000;
constexpr uint64_t kSaltTrainPerturb = 0x300000;
constexpr uint64_t kSaltTestPerturb = 0x400000;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

CameraIntrinsics mode_camera(const synth::Scene& scene, const TrainConfig& cfg) {
    return cfg.rectified ? canonical_camera(cfg.canonical_f, cfg.canonical_size) : scene.cam;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
    if (!(lr >= 0.0)) throw InvalidConfig("step size must be non-negative");
    if (batch_size < 1) throw InvalidConfig("batch size must be >= 1");
    if (train_scenes < 1 || test_scenes < 1) throw InvalidConfig("need at least one scene per split");
    if (noise_px < 0.0) throw InvalidConfig("noise stddev must be non-negative");
    if (outlier_count < 0 || outlier_count >= gen.n_k - 1) throw InvalidConfig("outlier count out of range");
    if (input_noise3d < 0.0) throw InvalidConfig("input 3D noise must be non-negative");
    if (lambda_rel < 0 || lambda_2d < 0 || lambda_t < 0 || lambda_kc < 0 || lambda_v2d < 0)
        throw InvalidConfig("loss coefficients must be non-negative");
    if (!(canonical_f > 0.0) || canonical_size <= 0) throw InvalidConfig("canonical camera must be positive");
}

ToyModel init_model(uint64_t seed, int n_k, int n_v) {
    if (n_k < 2 || n_v < n_k) throw InvalidConfig("model dims must satisfy 2 <= n_k <= n_v");
    ToyModel m;
    m.n_k = n_k;
    m.n_v = n_v;
    Rng rng(seed);
    m.W.resize(m.output_dim(), m.feature_dim());
    for (Eigen::Index i = 0; i < m.W.rows(); ++i)
        for (Eigen::Index j = 0; j < m.W.cols(); ++j) m.W(i, j) = rng.normal(0.0, 0.02);
    m.b = Eigen::VectorXd::Zero(m.output_dim());
    // Spread the initial 2D/3D biases so the first solves are well posed:
    // distinct rays and nonzero keypoint depth spread.
    for (int i = 0; i < 2 * n_k; ++i) m.b[i] = rng.normal(0.5, 0.12);
    for (int i = 0; i < 3 * n_v; ++i) m.b[2 * n_k + i] = rng.normal(0.0, 0.2);
    return m;
}

Sample make_sample(const synth::Scene& scene, const TrainConfig& cfg) {
    const int n_k = static_cast<int>(scene.n_keypoints());
    Sample s;
    s.cam = mode_camera(scene, cfg);
    s.jreg = scene.jreg;
    s.verts_gt = scene.verts_rel;
    s.k3d_gt = scene.keypoints_rel();
    if (!scene.t_gt) throw InvalidConfig("training scenes need ground truth");
    s.t_gt = *scene.t_gt;
    s.outlier_mask = scene.outlier_mask.empty() ? std::vector<bool>(static_cast<size_t>(n_k), false)
                                                : scene.outlier_mask;

    std::vector<Pixel2> obs(scene.k2d_obs);
    if (cfg.rectified)
        for (auto& px : obs) px = rectify_pixel(scene.cam, s.cam, px);

    s.k2d_gt.resize(static_cast<size_t>(n_k));
    for (int i = 0; i < n_k; ++i) s.k2d_gt[static_cast<size_t>(i)] = project(s.cam, Point3(s.k3d_gt[static_cast<size_t>(i)] + s.t_gt));
    s.verts2d_gt.resize(s.verts_gt.size());
    for (size_t j = 0; j < s.verts_gt.size(); ++j) s.verts2d_gt[j] = project(s.cam, Point3(s.verts_gt[j] + s.t_gt));

    // Feature blocks: scaled mode-frame pixels, noisy 3D keypoints, and
    // per-keypoint spread statistics (squared deviation from the observation
    // centroid in 2D and from the noisy keypoint centroid in 3D). The spread
    // features give the weight head a linear handle on inconsistency.
    Rng rng(Rng::mix(scene.seed, kSaltFeat3d));
    std::vector<Point3> k3d_noisy(s.k3d_gt);
    for (auto& p : k3d_noisy)
        p += Point3(rng.normal(0.0, cfg.input_noise3d), rng.normal(0.0, cfg.input_noise3d),
                    rng.normal(0.0, cfg.input_noise3d));

    double mu = 0.0, mv = 0.0;
    for (const auto& px : obs) {
        mu += px.u;
        mv += px.v;
    }
    mu /= n_k;
    mv /= n_k;
    Point3 c3 = Point3::Zero();
    for (const auto& p : k3d_noisy) c3 += p;
    c3 /= n_k;

    s.x.resize(7 * n_k);
    for (int i = 0; i < n_k; ++i) {
        const auto iu = static_cast<size_t>(i);
        s.x[2 * i] = obs[iu].u * kFeatPx;
        s.x[2 * i + 1] = obs[iu].v * kFeatPx;
        s.x.segment<3>(2 * n_k + 3 * i) = k3d_noisy[iu];
        const double du = (obs[iu].u - mu) * kFeatPx;
        const double dv = (obs[iu].v - mv) * kFeatPx;
        s.x[5 * n_k + i] = du * du + dv * dv;
        s.x[6 * n_k + i] = (k3d_noisy[iu] - c3).squaredNorm() / 0.01;
    }
    return s;
}

ForwardResult forward(const ToyModel& model, const Sample& sample, const TrainConfig& cfg) {
    const int n_k = model.n_k;
    const int n_v = model.n_v;
    const Eigen::VectorXd raw = model.W * sample.x + model.b;

    ForwardResult out;
    out.k2d.resize(static_cast<size_t>(n_k));
    for (int i = 0; i < n_k; ++i)
        out.k2d[static_cast<size_t>(i)] = {kScale2d * raw[2 * i], kScale2d * raw[2 * i + 1]};
    out.verts_rel.resize(static_cast<size_t>(n_v));
    for (int j = 0; j < n_v; ++j) out.verts_rel[static_cast<size_t>(j)] = kScale3d * raw.segment<3>(2 * n_k + 3 * j);
    out.w.resize(n_k);
    for (int i = 0; i < n_k; ++i) out.w[i] = sigmoid(kScaleLogit * raw[2 * n_k + 3 * n_v + i]);

    out.k3d_rel = apply_regressor(sample.jreg, out.verts_rel);

    out.loss_rel = loss_relative_l1(out.verts_rel, sample.verts_gt);
    out.loss_2d = loss_relative_l1(out.k2d, sample.k2d_gt);
    out.loss_total = cfg.lambda_rel * out.loss_rel + cfg.lambda_2d * out.loss_2d;

    std::vector<Ray2> rays(static_cast<size_t>(n_k));
    for (int i = 0; i < n_k; ++i) rays[static_cast<size_t>(i)] = normalize_pixel(sample.cam, out.k2d[static_cast<size_t>(i)]);

    try {
        const SolveResult solved = solve_wls(build_system(out.k3d_rel, rays), out.w);
        out.t = solved.t;
        out.cond_estimate = solved.cond_estimate;
        // Camera-space losses stand or fall together for the sample.
        const double lt = loss_translation_rmse(solved.t, sample.t_gt);
        const double lkc = loss_keypoint_consistency(sample.cam, to_camera_space(out.k3d_rel, solved.t), out.k2d);
        const double lv2d = loss_projected_vertices(sample.cam, to_camera_space(out.verts_rel, solved.t), sample.verts2d_gt);
        out.loss_t = lt;
        out.loss_kc = lkc;
        out.loss_v2d = lv2d;
        out.loss_total += cfg.lambda_t * lt + cfg.lambda_kc * lkc + cfg.lambda_v2d * lv2d;
        out.camera_terms_ok = true;
    } catch (const DegenerateGeometry&) {
    } catch (const NonPositiveDepth&) {
    }
    return out;
}

Gradient backward(const ToyModel& model, const Sample& sample, const TrainConfig& cfg, const ForwardResult& fwd) {
    const int n_k = model.n_k;
    const int n_v = model.n_v;

    Eigen::VectorXd g_k2d = Eigen::VectorXd::Zero(2 * n_k);   // pixels
    Eigen::VectorXd g_verts = Eigen::VectorXd::Zero(3 * n_v); // meters
    Eigen::VectorXd g_k3d = Eigen::VectorXd::Zero(3 * n_k);
    Eigen::VectorXd g_w = Eigen::VectorXd::Zero(n_k);

    const auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };

    for (int j = 0; j < 3 * n_v; ++j)
        g_verts[j] = cfg.lambda_rel * sgn(fwd.verts_rel[static_cast<size_t>(j / 3)][j % 3] -
                                          sample.verts_gt[static_cast<size_t>(j / 3)][j % 3]) /
                     (3.0 * n_v);
    for (int i = 0; i < n_k; ++i) {
        g_k2d[2 * i] = cfg.lambda_2d * sgn(fwd.k2d[static_cast<size_t>(i)].u - sample.k2d_gt[static_cast<size_t>(i)].u) / (2.0 * n_k);
        g_k2d[2 * i + 1] = cfg.lambda_2d * sgn(fwd.k2d[static_cast<size_t>(i)].v - sample.k2d_gt[static_cast<size_t>(i)].v) / (2.0 * n_k);
    }

    if (cfg.mode == TrainMode::e2e && fwd.camera_terms_ok) {
        const Translation3 t = *fwd.t;
        Translation3 g_t = Translation3::Zero();

        const Translation3 dt = t - sample.t_gt;
        if (dt.norm() > 0.0) g_t += cfg.lambda_t * dt / (3.0 * fwd.loss_t);

        const auto& cam = sample.cam;
        const auto proj_pull = [&](const Point3& cs, double su, double sv) {
            const double z = cs.z();
            return Point3(su * cam.f / z, sv * cam.f / z,
                          -(su * cam.f * cs.x() + sv * cam.f * cs.y()) / (z * z));
        };

        for (int i = 0; i < n_k; ++i) {
            const Point3 cs = fwd.k3d_rel[static_cast<size_t>(i)] + t;
            const Pixel2 proj = project(cam, cs);
            const double su = cfg.lambda_kc * sgn(proj.u - fwd.k2d[static_cast<size_t>(i)].u) / (2.0 * n_k);
            const double sv = cfg.lambda_kc * sgn(proj.v - fwd.k2d[static_cast<size_t>(i)].v) / (2.0 * n_k);
            const Point3 pull = proj_pull(cs, su, sv);
            g_k3d.segment<3>(3 * i) += pull;
            g_t += pull;
            g_k2d[2 * i] -= su;
            g_k2d[2 * i + 1] -= sv;
        }

        for (int j = 0; j < n_v; ++j) {
            const Point3 cs = fwd.verts_rel[static_cast<size_t>(j)] + t;
            const Pixel2 proj = project(cam, cs);
            const double su = cfg.lambda_v2d * sgn(proj.u - sample.verts2d_gt[static_cast<size_t>(j)].u) / (2.0 * n_v);
            const double sv = cfg.lambda_v2d * sgn(proj.v - sample.verts2d_gt[static_cast<size_t>(j)].v) / (2.0 * n_v);
            const Point3 pull = proj_pull(cs, su, sv);
            g_verts.segment<3>(3 * j) += pull;
            g_t += pull;
        }

        std::vector<Ray2> rays(static_cast<size_t>(n_k));
        for (int i = 0; i < n_k; ++i)
            rays[static_cast<size_t>(i)] = normalize_pixel(cam, fwd.k2d[static_cast<size_t>(i)]);
        const LinearSystem sys = build_system(fwd.k3d_rel, rays);
        const GradientBundle bundle = solve_wls_vjp(sys, fwd.w, fwd.k3d_rel, rays, g_t, cam);
        for (int i = 0; i < n_k; ++i) {
            g_k2d[2 * i] += bundle.d_k2d(i, 0);
            g_k2d[2 * i + 1] += bundle.d_k2d(i, 1);
            g_k3d.segment<3>(3 * i) += bundle.d_k3d.row(i).transpose();
        }
        g_w += bundle.d_w;
    }

    // keypoints are jreg * verts: fold the keypoint gradient into vertices
    for (int i = 0; i < n_k; ++i)
        for (int j = 0; j < n_v; ++j) {
            const double a = sample.jreg.m(i, j);
            if (a == 0.0) continue;
            g_verts.segment<3>(3 * j) += a * g_k3d.segment<3>(3 * i);
        }

    Eigen::VectorXd g_raw = Eigen::VectorXd::Zero(model.output_dim());
    g_raw.head(2 * n_k) = kScale2d * g_k2d;
    g_raw.segment(2 * n_k, 3 * n_v) = kScale3d * g_verts;
    for (int i = 0; i < n_k; ++i) {
        const double w = fwd.w[i];
        g_raw[2 * n_k + 3 * n_v + i] = kScaleLogit * w * (1.0 - w) * g_w[i];
    }

    Gradient g;
    g.dW = g_raw * sample.x.transpose();
    g.db = g_raw;
    return g;
}

StepStats step(ToyModel& model, const std::vector<Sample>& batch, const TrainConfig& cfg) {
    if (batch.empty()) throw InvalidConfig("empty batch");
    StepStats stats;
    Eigen::MatrixXd dW = Eigen::MatrixXd::Zero(model.W.rows(), model.W.cols());
    Eigen::VectorXd db = Eigen::VectorXd::Zero(model.b.size());
    for (const auto& sample : batch) {
        const ForwardResult fwd = forward(model, sample, cfg);
        stats.mean_loss += fwd.loss_total;
        if (!fwd.camera_terms_ok) ++stats.skipped_camera_terms;
        const Gradient g = backward(model, sample, cfg, fwd);
        dW += g.dW;
        db += g.db;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    stats.mean_loss *= inv;
    model.W -= (cfg.lr * inv) * dW;
    model.b -= (cfg.lr * inv) * db;
    return stats;
}

Metrics evaluate(const ToyModel& model, const std::vector<Sample>& samples, const TrainConfig& cfg) {
    Metrics m;
    double w_in = 0.0, w_out = 0.0;
    long n_in = 0, n_out = 0;
    for (const auto& sample : samples) {
        const ForwardResult fwd = forward(model, sample, cfg);
        Translation3 t = Translation3::Zero();
        if (fwd.t)
            t = *fwd.t;
        else
            ++m.solver_failures;

        const int n_k = model.n_k;
        double cs = 0.0;
        Point3 cp = Point3::Zero(), cg = Point3::Zero();
        for (int i = 0; i < n_k; ++i) {
            cs += (fwd.k3d_rel[static_cast<size_t>(i)] + t - sample.k3d_gt[static_cast<size_t>(i)] - sample.t_gt).norm();
            cp += fwd.k3d_rel[static_cast<size_t>(i)];
            cg += sample.k3d_gt[static_cast<size_t>(i)];
        }
        cp /= n_k;
        cg /= n_k;
        double rs = 0.0;
        for (int i = 0; i < n_k; ++i)
            rs += (fwd.k3d_rel[static_cast<size_t>(i)] - cp - sample.k3d_gt[static_cast<size_t>(i)] + cg).norm();
        m.cs_mje_mm += 1000.0 * cs / n_k;
        m.rs_mje_mm += 1000.0 * rs / n_k;

        for (int i = 0; i < n_k; ++i) {
            if (sample.outlier_mask[static_cast<size_t>(i)]) {
                w_out += fwd.w[i];
                ++n_out;
            } else {
                w_in += fwd.w[i];
                ++n_in;
            }
        }
    }
    const double ns = static_cast<double>(samples.size());
    m.cs_mje_mm /= ns;
    m.rs_mje_mm /= ns;
    m.mean_inlier_weight = n_in ? w_in / static_cast<double>(n_in) : 0.0;
    m.mean_outlier_weight = n_out ? w_out / static_cast<double>(n_out) : 0.0;
    return m;
}

std::vector<synth::Scene> make_split(const TrainConfig& cfg, bool test_split) {
    const KeypointRegressor jreg = synth::sample_regressor(Rng::mix(cfg.seed, kSaltJreg), cfg.gen.n_k, cfg.gen.n_v);
    const int count = test_split ? cfg.test_scenes : cfg.train_scenes;
    const uint64_t salt = test_split ? kSaltTest : kSaltTrain;
    const uint64_t perturb_salt = test_split ? kSaltTestPerturb : kSaltTrainPerturb;
    std::vector<synth::Scene> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        synth::Scene scene = synth::gen_scene(Rng::mix(cfg.seed, salt + static_cast<uint64_t>(i)), cfg.gen, &jreg);
        if (cfg.noise_px > 0.0 || cfg.outlier_count > 0) {
            synth::PerturbSpec spec;
            spec.noise_px = cfg.noise_px;
            spec.outlier_count = cfg.outlier_count;
            spec.seed = Rng::mix(cfg.seed, perturb_salt + static_cast<uint64_t>(i));
            scene = synth::perturb(scene, spec);
        }
        out.push_back(std::move(scene));
    }
    return out;
}

TrainReport train(const TrainConfig& cfg) {
    cfg.validate();
    const auto train_scenes = make_split(cfg, false);
    const auto test_scenes = make_split(cfg, true);

    std::vector<Sample> train_samples, test_samples;
    train_samples.reserve(train_scenes.size());
    for (const auto& s : train_scenes) train_samples.push_back(make_sample(s, cfg));
    test_samples.reserve(test_scenes.size());
    for (const auto& s : test_scenes) test_samples.push_back(make_sample(s, cfg));

    ToyModel model = init_model(Rng::mix(cfg.seed, kSaltInit), cfg.gen.n_k, cfg.gen.n_v);

    TrainReport report;
    report.config = cfg;
    report.epochs.reserve(static_cast<size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_acc = 0.0;
        int batches = 0;
        for (size_t start = 0; start < train_samples.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t stop = std::min(train_samples.size(), start + static_cast<size_t>(cfg.batch_size));
            const std::vector<Sample> batch(train_samples.begin() + static_cast<long>(start),
                                            train_samples.begin() + static_cast<long>(stop));
            const StepStats stats = step(model, batch, cfg);
            loss_acc += stats.mean_loss;
            report.skipped_camera_terms += stats.skipped_camera_terms;
            ++batches;
        }
        const Metrics m = evaluate(model, test_samples, cfg);
        report.epochs.push_back({loss_acc / batches, m.cs_mje_mm, m.rs_mje_mm, m.mean_inlier_weight,
                                 m.mean_outlier_weight});
        if (epoch + 1 == cfg.epochs) report.final = m;
    }
    return report;
}

ModeComparison compare_modes(const TrainConfig& cfg_a, const TrainConfig& cfg_b) {
    ModeComparison cmp;
    cmp.report_a = train(cfg_a);
    cmp.report_b = train(cfg_b);
    cmp.delta_cs_mje_mm = cmp.report_a.final.cs_mje_mm - cmp.report_b.final.cs_mje_mm;
    cmp.delta_rs_mje_mm = cmp.report_a.final.rs_mje_mm - cmp.report_b.final.rs_mje_mm;

    const bool a_is_e2e = cfg_a.mode == TrainMode::e2e;
    const TrainReport& e2e_rep = a_is_e2e ? cmp.report_a : cmp.report_b;
    const TrainReport& other = a_is_e2e ? cmp.report_b : cmp.report_a;
    if (cfg_a.mode != cfg_b.mode) {
        const TrainReport& det_rep = other;
        cmp.e2e_beats_detached = e2e_rep.final.cs_mje_mm < det_rep.final.cs_mje_mm;
    }

    if (a_is_e2e || cfg_b.mode == TrainMode::e2e) {
        TrainConfig variant = a_is_e2e ? cfg_a : cfg_b;
        variant.rectified = !variant.rectified;
        cmp.rect_variant = train(variant);
        const double rect_cs = variant.rectified ? cmp.rect_variant->final.cs_mje_mm : e2e_rep.final.cs_mje_mm;
        const double unrect_cs = variant.rectified ? e2e_rep.final.cs_mje_mm : cmp.rect_variant->final.cs_mje_mm;
        cmp.rectified_beats_unrectified = rect_cs < unrect_cs;
        cmp.outlier_weights_below_inlier = e2e_rep.final.mean_outlier_weight < e2e_rep.final.mean_inlier_weight;
    }
    return cmp;
}

}  // namespace rootlift::toy
