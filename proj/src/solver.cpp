#include "rootlift/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <limits>

namespace rootlift {

namespace {

// Normal matrix M = A^T S A and rhs c = A^T S B, with S the per-row weight
// squares. Accumulated keypoint by keypoint so that a zero weight contributes
// exact zeros and deleting those rows changes nothing.
void accumulate_normal(const LinearSystem& sys, const Eigen::VectorXd& row_w2, Eigen::Matrix3d& M,
                       Eigen::Vector3d& c) {
    M.setZero();
    c.setZero();
    const Eigen::Index rows = sys.A.rows();
    for (Eigen::Index j = 0; j < rows; ++j) {
        const double s = row_w2[j];
        const Eigen::Vector3d a = sys.A.row(j).transpose();
        M.noalias() += s * (a * a.transpose());
        c.noalias() += (s * sys.B[j]) * a;
    }
}

// Condition estimate of the 3x3 normal matrix from its eigenvalues.
double condition_of(const Eigen::Matrix3d& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(2);
    if (!(hi > 0.0)) return std::numeric_limits<double>::infinity();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    const double cond = hi / lo;
    return cond < 1.0 ? 1.0 : cond;
}

Eigen::VectorXd duplicate_rows(const Eigen::VectorXd& per_keypoint) {
    Eigen::VectorXd per_row(2 * per_keypoint.size());
    for (Eigen::Index i = 0; i < per_keypoint.size(); ++i) {
        per_row[2 * i] = per_keypoint[i];
        per_row[2 * i + 1] = per_keypoint[i];
    }
    return per_row;
}

SolveResult solve_normal(const LinearSystem& sys, const Eigen::VectorXd& solve_w, const Eigen::VectorXd& report_w) {
    const Eigen::VectorXd row_w2 = duplicate_rows(solve_w.array().square().matrix());

    Eigen::Matrix3d M;
    Eigen::Vector3d c;
    accumulate_normal(sys, row_w2, M, c);

    const double cond = condition_of(M);
    if (!(cond <= kConditionLimit))
        throw DegenerateGeometry("normal matrix condition " + std::to_string(cond) + " exceeds limit");

    SolveResult res;
    res.t = M.ldlt().solve(c);
    res.cond_estimate = cond;

    const Eigen::VectorXd row_w = duplicate_rows(report_w);
    res.residual_norm = (row_w.asDiagonal() * (sys.A * res.t - sys.B)).norm();

    res.behind_camera.resize(static_cast<size_t>(sys.keypoints()));
    for (Eigen::Index i = 0; i < sys.keypoints(); ++i)
        res.behind_camera[static_cast<size_t>(i)] = sys.depths[i] + res.t.z() <= 0.0;
    return res;
}

void validate_weights(const LinearSystem& sys, const WeightVector& w) {
    if (w.size() != sys.keypoints()) throw ShapeMismatch("weight count does not match keypoint count");
    int positive = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i]) || w[i] < 0.0 || w[i] > 1.0)
            throw InvalidConfig("weights must lie in [0, 1]");
        if (w[i] > 0.0) ++positive;
    }
    if (positive < 2) throw DegenerateGeometry("fewer than two strictly positive weights");
}

}  // namespace

std::vector<Point3> apply_regressor(const KeypointRegressor& jreg, const std::vector<Point3>& verts) {
    if (static_cast<Eigen::Index>(verts.size()) != jreg.vertices())
        throw ShapeMismatch("vertex count does not match regressor columns");
    std::vector<Point3> out(static_cast<size_t>(jreg.keypoints()), Point3::Zero());
    for (Eigen::Index i = 0; i < jreg.keypoints(); ++i) {
        Point3 acc = Point3::Zero();
        for (Eigen::Index j = 0; j < jreg.vertices(); ++j) acc += jreg.m(i, j) * verts[static_cast<size_t>(j)];
        out[static_cast<size_t>(i)] = acc;
    }
    return out;
}

LinearSystem build_system(const std::vector<Point3>& k3d, const std::vector<Ray2>& rays) {
    if (k3d.size() != rays.size()) throw ShapeMismatch("keypoint and ray counts differ");
    const Eigen::Index n = static_cast<Eigen::Index>(k3d.size());
    if (n < 2) throw TooFewCorrespondences("need at least 2 correspondences, got " + std::to_string(n));

    LinearSystem sys;
    sys.A.resize(2 * n, 3);
    sys.B.resize(2 * n);
    sys.depths.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point3& p = k3d[static_cast<size_t>(i)];
        const Ray2& r = rays[static_cast<size_t>(i)];
        sys.A.row(2 * i) << -1.0, 0.0, r.up;
        sys.A.row(2 * i + 1) << 0.0, -1.0, r.vp;
        sys.B[2 * i] = p.x() - p.z() * r.up;
        sys.B[2 * i + 1] = p.y() - p.z() * r.vp;
        sys.depths[i] = p.z();
    }
    return sys;
}

SolveResult solve_ls(const LinearSystem& sys) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.keypoints());
    return solve_normal(sys, ones, ones);
}

SolveResult solve_wls(const LinearSystem& sys, const WeightVector& w) {
    validate_weights(sys, w);
    const double wmax = w.maxCoeff();
    return solve_normal(sys, w / wmax, w);
}

GradientBundle solve_wls_vjp(const LinearSystem& sys, const WeightVector& w, const std::vector<Point3>& k3d,
                             const std::vector<Ray2>& rays, const Translation3& upstream,
                             const CameraIntrinsics& cam) {
    if (static_cast<Eigen::Index>(k3d.size()) != sys.keypoints() || rays.size() != k3d.size())
        throw ShapeMismatch("vjp inputs do not match the system size");
    validate_weights(sys, w);

    const Eigen::Index n = sys.keypoints();
    const Eigen::VectorXd row_w2 = duplicate_rows(w.array().square().matrix());

    Eigen::Matrix3d M;
    Eigen::Vector3d c;
    accumulate_normal(sys, row_w2, M, c);
    const double cond = condition_of(M);
    if (!(cond <= kConditionLimit))
        throw DegenerateGeometry("normal matrix condition " + std::to_string(cond) + " exceeds limit");

    const auto ldlt = M.ldlt();
    const Eigen::Vector3d t = ldlt.solve(c);
    const Eigen::Vector3d q = ldlt.solve(upstream);

    // dL/dB_j = (W^2 A q)_j;  dL/dA = W^2 r q^T - (W^2 A q) t^T,
    // with r = B - A t. Only the third column of dL/dA is needed: the
    // other entries of A are constants of the parameterization.
    const Eigen::VectorXd r = sys.B - sys.A * t;
    const Eigen::VectorXd y = row_w2.asDiagonal() * (sys.A * q);  // = dL/dB

    GradientBundle g;
    g.d_k2d.resize(n, 2);
    g.d_k3d.resize(n, 3);
    g.d_w.resize(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j0 = 2 * i;
        const Eigen::Index j1 = 2 * i + 1;
        const double z = k3d[static_cast<size_t>(i)].z();
        const Ray2& ray = rays[static_cast<size_t>(i)];

        const double dA_u = row_w2[j0] * r[j0] * q.z() - y[j0] * t.z();  // dL/du'_i through A
        const double dA_v = row_w2[j1] * r[j1] * q.z() - y[j1] * t.z();

        const double d_up = dA_u - z * y[j0];  // add B's -z u' term
        const double d_vp = dA_v - z * y[j1];

        g.d_k2d(i, 0) = d_up / cam.f;
        g.d_k2d(i, 1) = d_vp / cam.f;

        g.d_k3d(i, 0) = y[j0];
        g.d_k3d(i, 1) = y[j1];
        g.d_k3d(i, 2) = -ray.up * y[j0] - ray.vp * y[j1];

        const double aq0 = sys.A.row(j0) * q;
        const double aq1 = sys.A.row(j1) * q;
        g.d_w[i] = 2.0 * w[i] * (aq0 * r[j0] + aq1 * r[j1]);
    }
    return g;
}

std::vector<Point3> to_camera_space(const std::vector<Point3>& verts_rel, const Translation3& t) {
    std::vector<Point3> out(verts_rel.size());
    for (size_t i = 0; i < verts_rel.size(); ++i) out[i] = verts_rel[i] + t;
    return out;
}

}  // namespace rootlift
