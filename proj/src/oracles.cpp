#include "rootlift/oracles.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "rootlift/camera.hpp"

namespace rootlift::synth {

namespace {

double objective_value(const Eigen::VectorXd& k2d_flat, const Eigen::VectorXd& k3d_flat, const WeightVector& w,
                       const CameraIntrinsics& cam, const Translation3& upstream) {
    const auto n = w.size();
    std::vector<Point3> k3d(static_cast<size_t>(n));
    std::vector<Ray2> rays(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        k3d[static_cast<size_t>(i)] = k3d_flat.segment<3>(3 * i);
        rays[static_cast<size_t>(i)] = normalize_pixel(cam, {k2d_flat[2 * i], k2d_flat[2 * i + 1]});
    }
    return upstream.dot(solve_wls(build_system(k3d, rays), w).t);
}

Eigen::VectorXd weighted_rows(const WeightVector& w) {
    Eigen::VectorXd w2(2 * w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w2[2 * i] = w2[2 * i + 1] = w[i] * w[i];
    return w2;
}

}  // namespace

GradientBundle finite_diff_grad(const Scene& scene, const WeightVector& w, const Translation3& upstream,
                                double eps) {
    if (!(eps >= 1e-8 && eps <= 1e-4)) throw InvalidConfig("eps must lie in [1e-8, 1e-4]");
    const auto n = scene.n_keypoints();
    if (w.size() != n) throw ShapeMismatch("weight count mismatch");

    const auto k3d_pts = scene.keypoints_rel();
    Eigen::VectorXd k2d(2 * n), k3d(3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k2d[2 * i] = scene.k2d_obs[static_cast<size_t>(i)].u;
        k2d[2 * i + 1] = scene.k2d_obs[static_cast<size_t>(i)].v;
        k3d.segment<3>(3 * i) = k3d_pts[static_cast<size_t>(i)];
    }

    const auto central = [&](Eigen::VectorXd& vec, Eigen::Index j, auto&& eval) {
        const double saved = vec[j];
        vec[j] = saved + eps;
        const double hi = eval();
        vec[j] = saved - eps;
        const double lo = eval();
        vec[j] = saved;
        return (hi - lo) / (2.0 * eps);
    };

    GradientBundle g;
    g.d_k2d.resize(n, 2);
    g.d_k3d.resize(n, 3);
    g.d_w.resize(n);

    WeightVector wv = w;
    const auto eval_scene = [&] { return objective_value(k2d, k3d, wv, scene.cam, upstream); };

    for (Eigen::Index i = 0; i < n; ++i) {
        g.d_k2d(i, 0) = central(k2d, 2 * i, eval_scene);
        g.d_k2d(i, 1) = central(k2d, 2 * i + 1, eval_scene);
        for (int c = 0; c < 3; ++c) g.d_k3d(i, c) = central(k3d, 3 * i + c, eval_scene);
        if (wv[i] - eps < 0.0 || wv[i] + eps > 1.0)
            throw InvalidConfig("weight " + std::to_string(i) + " too close to [0,1] boundary for eps");
        g.d_w[i] = central(wv, i, eval_scene);
    }
    return g;
}

IterResult oracle_minimize(const LinearSystem& sys, const WeightVector& w, const Translation3& t0, int max_iters,
                           double tol) {
    if (w.size() != sys.keypoints()) throw ShapeMismatch("weight count mismatch");
    const Eigen::VectorXd w2 = weighted_rows(w);
    const Eigen::Matrix3d M = sys.A.transpose() * w2.asDiagonal() * sys.A;
    const Eigen::Vector3d c = sys.A.transpose() * (w2.asDiagonal() * sys.B);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
    if (!(es.eigenvalues()(0) > 0.0) || es.eigenvalues()(2) / es.eigenvalues()(0) > kConditionLimit)
        throw DegenerateGeometry("objective is not strongly convex");

    const double gtol = tol * (1.0 + c.norm());
    IterResult res;
    res.t = t0;
    for (res.iterations = 0; res.iterations <= max_iters; ++res.iterations) {
        const Eigen::Vector3d grad = 2.0 * (M * res.t - c);
        if (grad.norm() <= 2.0 * gtol) return res;
        if (res.iterations == max_iters) break;
        const double curvature = grad.dot(M * grad);
        if (!(curvature > 0.0)) throw DegenerateGeometry("vanishing curvature along gradient");
        const double alpha = grad.squaredNorm() / (2.0 * curvature);
        res.t -= alpha * grad;
    }
    throw DidNotConverge("gradient norm above tolerance after " + std::to_string(max_iters) + " iterations");
}

IterResult geometric_refine(const Scene& scene, const WeightVector& w, const Translation3& t0, int max_iters) {
    const auto n = scene.n_keypoints();
    if (w.size() != n) throw ShapeMismatch("weight count mismatch");
    int active = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (w[i] > 0.0) ++active;
    if (active < 2) throw DegenerateGeometry("fewer than two strictly positive weights");

    const auto k3d = scene.keypoints_rel();
    const auto& cam = scene.cam;

    const auto cost_at = [&](const Translation3& t) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (w[i] <= 0.0) continue;
            const Point3 p = k3d[static_cast<size_t>(i)] + t;
            if (p.z() <= 0.0) throw NonPositiveDepth("keypoint behind camera during refinement");
            const Pixel2 px = project(cam, p);
            const double du = px.u - scene.k2d_obs[static_cast<size_t>(i)].u;
            const double dv = px.v - scene.k2d_obs[static_cast<size_t>(i)].v;
            acc += w[i] * w[i] * (du * du + dv * dv);
        }
        return acc;
    };

    IterResult res;
    res.t = t0;
    double cost = cost_at(res.t);
    for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
        Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
        Eigen::Vector3d Jtr = Eigen::Vector3d::Zero();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (w[i] <= 0.0) continue;
            const Point3 p = k3d[static_cast<size_t>(i)] + res.t;
            const double z = p.z();
            const Pixel2 px = project(cam, p);
            Eigen::Matrix<double, 2, 3> J;
            J << cam.f / z, 0.0, -cam.f * p.x() / (z * z), 0.0, cam.f / z, -cam.f * p.y() / (z * z);
            Eigen::Vector2d r(px.u - scene.k2d_obs[static_cast<size_t>(i)].u,
                              px.v - scene.k2d_obs[static_cast<size_t>(i)].v);
            const double w2 = w[i] * w[i];
            JtJ.noalias() += w2 * J.transpose() * J;
            Jtr.noalias() += w2 * J.transpose() * r;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(JtJ);
        if (!(es.eigenvalues()(0) > 0.0) || es.eigenvalues()(2) / es.eigenvalues()(0) > kConditionLimit)
            throw DegenerateGeometry("normal matrix of the geometric objective is singular");

        Eigen::Vector3d step = -JtJ.ldlt().solve(Jtr);
        if (step.norm() <= 1e-13 * (1.0 + res.t.norm())) return res;

        // step halving keeps the iterate on the descent side
        double trial_cost = 0.0;
        Translation3 trial = res.t;
        int halvings = 0;
        for (; halvings < 40; ++halvings) {
            trial = res.t + step;
            trial_cost = cost_at(trial);
            if (trial_cost <= cost) break;
            step *= 0.5;
        }
        if (halvings == 40) return res;  // no further progress representable
        res.t = trial;
        if (std::abs(cost - trial_cost) <= 1e-15 * (1.0 + cost) && step.norm() <= 1e-10 * (1.0 + res.t.norm())) {
            cost = trial_cost;
            return res;
        }
        cost = trial_cost;
    }
    throw DidNotConverge("geometric refinement did not converge in " + std::to_string(max_iters) + " iterations");
}

double gradcheck_metric(const GradientBundle& analytic, const GradientBundle& fd, double tol) {
    const double floor = tol > 0.0 ? 1e-8 / tol : 1e-8;
    double worst = 0.0;
    const auto update = [&](double a, double f) {
        const double m = std::abs(a - f) / std::max(std::abs(f), floor);
        worst = std::max(worst, m);
    };
    for (Eigen::Index i = 0; i < analytic.d_k2d.rows(); ++i) {
        update(analytic.d_k2d(i, 0), fd.d_k2d(i, 0));
        update(analytic.d_k2d(i, 1), fd.d_k2d(i, 1));
        for (int c = 0; c < 3; ++c) update(analytic.d_k3d(i, c), fd.d_k3d(i, c));
        update(analytic.d_w[i], fd.d_w[i]);
    }
    return worst;
}

}  // namespace rootlift::synth
