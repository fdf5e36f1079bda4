#pragma once

#include <vector>

#include "rootlift/types.hpp"

namespace rootlift {

/// Stacked linear constraints A t = B over all keypoint correspondences.
/// Row 2i is (-1, 0, up_i) with rhs x_i - z_i * up_i, row 2i+1 is
/// (0, -1, vp_i) with rhs y_i - z_i * vp_i. `depths` keeps z_i around for
/// diagnostics (behind-camera flags).
struct LinearSystem {
    Eigen::MatrixXd A;      // 2N x 3
    Eigen::VectorXd B;      // 2N
    Eigen::VectorXd depths; // N, z of each root-relative keypoint

    Eigen::Index keypoints() const { return depths.size(); }
};

struct SolveResult {
    Translation3 t = Translation3::Zero();
    double residual_norm = 0.0;           // ||W (A t - B)||
    double cond_estimate = 1.0;           // condition of A^T W^2 A
    std::vector<bool> behind_camera;      // per keypoint, z_i + tz <= 0
};

/// Gradients of a scalar loss with respect to the solver inputs.
struct GradientBundle {
    Eigen::MatrixXd d_k2d;  // N x 2, w.r.t. pixel keypoints
    Eigen::MatrixXd d_k3d;  // N x 3
    Eigen::VectorXd d_w;    // N
};

/// Keypoints as convex combinations of mesh vertices.
std::vector<Point3> apply_regressor(const KeypointRegressor& jreg, const std::vector<Point3>& verts);

/// Build the stacked system from root-relative 3D keypoints and normalized rays.
LinearSystem build_system(const std::vector<Point3>& k3d, const std::vector<Ray2>& rays);

/// Closed-form least squares t* = (A^T A)^{-1} A^T B via the 3x3 normal system.
/// Throws DegenerateGeometry when cond(A^T A) exceeds 1e12.
SolveResult solve_ls(const LinearSystem& sys);

/// Weighted variant t* = (A^T W^2 A)^{-1} A^T W^2 B, with W duplicating each
/// keypoint weight over its two rows. Weights are scale-normalized internally,
/// so uniformly scaled weight vectors give bit-identical translations and
/// all-equal weights reproduce solve_ls exactly.
SolveResult solve_wls(const LinearSystem& sys, const WeightVector& w);

/// Reverse-mode gradients of upstream . t* through the weighted solve, the
/// constraint assembly, and the pixel normalization. `sys` must have been
/// built from the same `k3d` and `rays`; `cam` supplies the focal length that
/// converts ray gradients to pixel gradients.
GradientBundle solve_wls_vjp(const LinearSystem& sys, const WeightVector& w, const std::vector<Point3>& k3d,
                             const std::vector<Ray2>& rays, const Translation3& upstream,
                             const CameraIntrinsics& cam);

/// v_cs = v_rel + t, elementwise.
std::vector<Point3> to_camera_space(const std::vector<Point3>& verts_rel, const Translation3& t);

/// Degeneracy threshold on cond(A^T W^2 A).
inline constexpr double kConditionLimit = 1e12;

}  // namespace rootlift
