#pragma once

#include "rootlift/scene.hpp"

namespace rootlift::synth {

/// Central-difference gradients of upstream . t* with respect to every scene
/// pixel, every 3D keypoint coordinate, and every weight. Weight entries must
/// stay inside [0, 1] after the +/- eps perturbation.
GradientBundle finite_diff_grad(const Scene& scene, const WeightVector& w, const Translation3& upstream,
                                double eps = 1e-6);

struct IterResult {
    Translation3 t = Translation3::Zero();
    int iterations = 0;
};

/// Steepest descent with exact line search on ||W (A t - B)||^2. Minimizes the
/// same convex quadratic as the closed-form solver without touching its
/// factorization path. Throws DidNotConverge if tol is unmet after max_iters.
IterResult oracle_minimize(const LinearSystem& sys, const WeightVector& w, const Translation3& t0,
                           int max_iters = 200000, double tol = 1e-12);

/// Gauss-Newton on the geometric objective sum_i w_i^2 ||project(k_i + t) - px_i||^2.
/// Zero-weight keypoints are excluded from residuals and depth checks.
IterResult geometric_refine(const Scene& scene, const WeightVector& w, const Translation3& t0,
                            int max_iters = 100);

/// Per-entry comparison metric used by gradient checks:
/// max over entries of |analytic - fd| / max(|fd|, 1e-8 / tol), so entries
/// below the 1e-8 absolute floor pass regardless of relative error.
double gradcheck_metric(const GradientBundle& analytic, const GradientBundle& fd, double tol);

}  // namespace rootlift::synth
