#pragma once

#include <optional>

#include "rootlift/losses.hpp"
#include "rootlift/scene.hpp"

namespace rootlift::toy {

enum class TrainMode { e2e, detached };

struct TrainConfig {
    TrainMode mode = TrainMode::e2e;
    bool rectified = false;
    int epochs = 300;
    double lr = 0.2;
    int batch_size = 20;
    uint64_t seed = 1;
    int train_scenes = 200;
    int test_scenes = 100;
    double noise_px = 2.0;       // observation corruption
    int outlier_count = 2;
    double input_noise3d = 0.005;  // meters, on the 3D keypoint features
    synth::GenConfig gen;
    double lambda_rel = 1.0;   // root-relative vertex L1
    double lambda_2d = 1.0;    // 2D keypoint L1
    double lambda_t = 1.0;     // translation RMSE
    double lambda_kc = 1.0;    // keypoint consistency
    double lambda_v2d = 1.0;   // projected-vertex L1
    double canonical_f = 500.0;
    int canonical_size = 256;

    void validate() const;
};

/// One linear layer from engineered scene features to all decoder heads:
/// 2D keypoints (pixels), relative vertices (meters) and weight logits. The
/// 3D keypoints are tied to the vertex head through the scene regressor.
/// Fixed per-head output scales keep the parameters dimensionless.
struct ToyModel {
    int n_k = 0;
    int n_v = 0;
    Eigen::MatrixXd W;  // outputs x features
    Eigen::VectorXd b;  // outputs

    int feature_dim() const { return 7 * n_k; }
    int output_dim() const { return 2 * n_k + 3 * n_v + n_k; }
};

ToyModel init_model(uint64_t seed, int n_k, int n_v);

/// Precomputed per-scene tensors: features, mode-frame observations and
/// targets. Pure function of (scene, config); identical for both train modes.
struct Sample {
    Eigen::VectorXd x;                  // feature vector
    CameraIntrinsics cam;               // mode frame intrinsics
    std::vector<Pixel2> k2d_gt;         // noiseless GT projections, mode frame
    std::vector<Pixel2> verts2d_gt;
    std::vector<Point3> k3d_gt;         // root-relative
    std::vector<Point3> verts_gt;
    Translation3 t_gt = Translation3::Zero();
    KeypointRegressor jreg;
    std::vector<bool> outlier_mask;
};

Sample make_sample(const synth::Scene& scene, const TrainConfig& cfg);

struct ForwardResult {
    std::vector<Pixel2> k2d;
    std::vector<Point3> k3d_rel;   // jreg * verts
    std::vector<Point3> verts_rel;
    WeightVector w;
    std::optional<Translation3> t;        // empty when the solve was degenerate
    double cond_estimate = 0.0;
    bool camera_terms_ok = false;         // t present and projection losses evaluated
    double loss_rel = 0.0;
    double loss_2d = 0.0;
    double loss_t = 0.0;
    double loss_kc = 0.0;
    double loss_v2d = 0.0;
    double loss_total = 0.0;
};

/// Forward pass and losses. Identical in both modes; camera-space terms are
/// skipped (flagged, counted by the caller) when the solve is degenerate or a
/// prediction lands behind the camera.
ForwardResult forward(const ToyModel& model, const Sample& sample, const TrainConfig& cfg);

struct Gradient {
    Eigen::MatrixXd dW;
    Eigen::VectorXd db;
};

/// Analytic parameter gradient of the per-sample loss. In detached mode the
/// camera-space terms are treated as constants and contribute nothing.
Gradient backward(const ToyModel& model, const Sample& sample, const TrainConfig& cfg, const ForwardResult& fwd);

struct StepStats {
    double mean_loss = 0.0;
    int skipped_camera_terms = 0;
};

/// One gradient-descent update on the batch mean gradient.
StepStats step(ToyModel& model, const std::vector<Sample>& batch, const TrainConfig& cfg);

struct Metrics {
    double cs_mje_mm = 0.0;
    double rs_mje_mm = 0.0;
    double mean_inlier_weight = 0.0;
    double mean_outlier_weight = 0.0;
    int solver_failures = 0;
};

/// Held-out metrics. Scenes whose solve fails fall back to t = 0 for the
/// camera-space error (counted), so the metric stays finite.
Metrics evaluate(const ToyModel& model, const std::vector<Sample>& samples, const TrainConfig& cfg);

struct EpochStats {
    double train_loss = 0.0;
    double cs_mje_mm = 0.0;
    double rs_mje_mm = 0.0;
    double mean_inlier_weight = 0.0;
    double mean_outlier_weight = 0.0;
};

struct TrainReport {
    TrainConfig config;
    std::vector<EpochStats> epochs;
    Metrics final;
    int skipped_camera_terms = 0;  // over the whole run
};

/// Deterministic training run over freshly generated train/test splits.
TrainReport train(const TrainConfig& cfg);

/// Builds the datasets used by train() (shared regressor, per-scene seeds).
std::vector<synth::Scene> make_split(const TrainConfig& cfg, bool test_split);

struct ModeComparison {
    TrainReport report_a;
    TrainReport report_b;
    std::optional<TrainReport> rect_variant;  // the e2e config with `rectified` toggled
    double delta_cs_mje_mm = 0.0;             // a - b
    double delta_rs_mje_mm = 0.0;
    bool e2e_beats_detached = false;
    bool rectified_beats_unrectified = false;
    bool outlier_weights_below_inlier = false;
};

/// Paired runs under identical seeds, plus the rectification counterpart of
/// the e2e slot, reporting the three headline trend booleans.
ModeComparison compare_modes(const TrainConfig& cfg_a, const TrainConfig& cfg_b);

}  // namespace rootlift::toy
