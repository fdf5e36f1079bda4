#pragma once

#include <optional>
#include <vector>

#include "rootlift/solver.hpp"

namespace rootlift::synth {

/// A 2D-3D correspondence problem with optional ground truth.
struct Scene {
    CameraIntrinsics cam;
    std::vector<Point3> verts_rel;        // zero-mean root-relative vertices, meters
    KeypointRegressor jreg;               // N_K x N_V
    std::vector<Pixel2> k2d_obs;          // observed (possibly noisy) keypoint pixels
    std::optional<Translation3> t_gt;
    std::optional<WeightVector> weights;
    std::vector<bool> outlier_mask;       // empty, or one flag per keypoint
    uint64_t seed = 0;

    Eigen::Index n_keypoints() const { return jreg.keypoints(); }
    Eigen::Index n_vertices() const { return jreg.vertices(); }

    std::vector<Point3> keypoints_rel() const { return apply_regressor(jreg, verts_rel); }

    /// Structural and (when ground truth is present and the scene is marked
    /// noiseless) projection-consistency checks. Throws InvalidConfig.
    void validate(bool expect_noiseless = false) const;
};

struct GenConfig {
    int n_v = 64;
    int n_k = 21;
    double depth_lo = 0.3;     // meters
    double depth_hi = 1.2;
    double hand_extent = 0.18; // meters, box edge for vertex sampling
    double fov_lo = 40.0;      // degrees, horizontal
    double fov_hi = 70.0;
    int width = 512;
    int height = 512;
};

/// Deterministic synthetic scene with exact projections as observations.
/// When `shared_jreg` is given it is used instead of sampling a regressor
/// (all other draws are unchanged in order).
Scene gen_scene(uint64_t seed, const GenConfig& cfg = {}, const KeypointRegressor* shared_jreg = nullptr);

/// Standalone draw of a random row-stochastic regressor (sparse convex rows).
KeypointRegressor sample_regressor(uint64_t seed, int n_k, int n_v);

struct PerturbSpec {
    double noise_px = 0.0;  // stddev of isotropic pixel noise
    int outlier_count = 0;  // keypoints replaced by uniform in-frame pixels
    uint64_t seed = 0;
};

/// Gaussian noise on inlier pixels, uniform in-frame resampling of outliers.
/// Deterministic in spec.seed; records the outlier mask.
Scene perturb(const Scene& scene, const PerturbSpec& spec);

}  // namespace rootlift::synth
