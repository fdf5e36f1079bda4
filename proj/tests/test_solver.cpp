#include <doctest.h>

#include "rootlift/camera.hpp"
#include "rootlift/rng.hpp"
#include "rootlift/solver.hpp"

using namespace rootlift;

namespace {

CameraIntrinsics unit_cam() {
    CameraIntrinsics cam;
    cam.f = 1.0;
    cam.u0 = 0.0;
    cam.v0 = 0.0;
    cam.width = 2;
    cam.height = 2;
    return cam;
}

// Forward-project a translated keypoint set to build a consistent scene.
std::vector<Ray2> exact_rays(const std::vector<Point3>& k3d, const Translation3& t) {
    std::vector<Ray2> rays(k3d.size());
    const auto cam = unit_cam();
    for (size_t i = 0; i < k3d.size(); ++i) {
        const Pixel2 px = project(cam, Point3(k3d[i] + t));
        rays[i] = normalize_pixel(cam, px);
    }
    return rays;
}

}  // namespace

TEST_CASE("apply_regressor with identity rows returns the vertices") {
    KeypointRegressor jreg;
    jreg.m = Eigen::MatrixXd::Identity(3, 3);
    const std::vector<Point3> verts = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    const auto k = apply_regressor(jreg, verts);
    for (size_t i = 0; i < verts.size(); ++i) CHECK((k[i] - verts[i]).norm() == 0.0);
}

TEST_CASE("apply_regressor takes convex combinations") {
    KeypointRegressor jreg;
    jreg.m.resize(1, 2);
    jreg.m << 0.5, 0.5;
    const auto k = apply_regressor(jreg, {{0, 0, 0}, {2, 0, 0}});
    CHECK(k.size() == 1);
    CHECK(k[0].x() == doctest::Approx(1.0));
    CHECK(k[0].y() == 0.0);
}

TEST_CASE("apply_regressor commutes with translation (rows sum to 1)") {
    Rng rng(3);
    KeypointRegressor jreg;
    jreg.m.resize(4, 6);
    for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd row(6);
        for (int j = 0; j < 6; ++j) row[j] = rng.uniform(0.0, 1.0);
        jreg.m.row(i) = row / row.sum();
    }
    std::vector<Point3> verts(6);
    for (auto& v : verts) v = Point3(rng.normal(), rng.normal(), rng.normal());
    const Translation3 t(0.3, -0.2, 0.9);
    const auto base = apply_regressor(jreg, verts);
    const auto shifted = apply_regressor(jreg, to_camera_space(verts, t));
    for (size_t i = 0; i < base.size(); ++i) CHECK((shifted[i] - base[i] - t).norm() == doctest::Approx(0.0));
}

TEST_CASE("apply_regressor rejects mismatched shapes") {
    KeypointRegressor jreg;
    jreg.m = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(apply_regressor(jreg, std::vector<Point3>(2)), ShapeMismatch);
}

TEST_CASE("build_system lays out the constraint rows") {
    const auto sys = build_system({{0, 0, 1}, {0.1, 0.2, 1.0}}, {{0.0, 0.0}, {0.3, 0.4}});
    CHECK(sys.A.rows() == 4);

    CHECK(sys.A(0, 0) == -1.0);
    CHECK(sys.A(0, 1) == 0.0);
    CHECK(sys.A(0, 2) == 0.0);
    CHECK(sys.A(1, 1) == -1.0);
    CHECK(sys.B[0] == 0.0);
    CHECK(sys.B[1] == 0.0);

    CHECK(sys.A(2, 2) == doctest::Approx(0.3));
    CHECK(sys.A(3, 2) == doctest::Approx(0.4));
    CHECK(sys.B[2] == doctest::Approx(-0.2));
    CHECK(sys.B[3] == doctest::Approx(-0.2));
}

TEST_CASE("build_system rejects a single correspondence") {
    CHECK_THROWS_AS(build_system({{0, 0, 1}}, {{0.0, 0.0}}), TooFewCorrespondences);
}

TEST_CASE("solve_ls recovers zero translation from a consistent scene") {
    const auto sys = build_system({{0, 0, 1}, {0.1, 0, 1}}, {{0.0, 0.0}, {0.1, 0.0}});
    const SolveResult res = solve_ls(sys);
    CHECK(res.t.norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(res.residual_norm == doctest::Approx(0.0));
    CHECK(res.cond_estimate >= 1.0);
}

TEST_CASE("solve_ls recovers an exact translation from noiseless rays") {
    const Translation3 t_gt(0.1, -0.05, 0.5);
    const std::vector<Point3> k3d = {{0, 0, 0.5}, {0.05, 0.02, 0.6}, {-0.04, 0.03, 0.55}};
    const SolveResult res = solve_ls(build_system(k3d, exact_rays(k3d, t_gt)));
    CHECK((res.t - t_gt).norm() <= 1e-12);
    CHECK(res.behind_camera == std::vector<bool>{false, false, false});
}

TEST_CASE("solve_ls satisfies the normal equations") {
    Rng rng(29);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Point3> k3d(8);
        for (auto& p : k3d) p = Point3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
        const Translation3 t_gt(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(0.4, 1.5));
        auto rays = exact_rays(k3d, t_gt);
        // perturb rays so the residual is nonzero
        for (auto& r : rays) {
            r.up += rng.normal(0.0, 1e-3);
            r.vp += rng.normal(0.0, 1e-3);
        }
        const auto sys = build_system(k3d, rays);
        const SolveResult res = solve_ls(sys);
        const Eigen::Vector3d resid = sys.A.transpose() * (sys.A * res.t - sys.B);
        CHECK(resid.norm() <= 1e-9 * (sys.A.transpose() * sys.B).norm() + 1e-12);
    }
}

TEST_CASE("solve_ls flags keypoints that end up behind the camera") {
    // consistent flat scene, then one keypoint pushed to negative depth
    std::vector<Point3> k3d = {{0, 0, 0.1}, {0.1, 0.05, 0.12}, {-0.1, 0.02, -0.9}};
    const Translation3 t_gt(0.0, 0.0, 0.5);
    std::vector<Ray2> rays = {{0.0, 0.0}, {0.2, 0.1}, {0.3, -0.2}};
    const SolveResult res = solve_ls(build_system(k3d, rays));
    CHECK(res.behind_camera.size() == 3);
    CHECK(res.behind_camera[2] == (k3d[2].z() + res.t.z() <= 0.0));
}

TEST_CASE("solve_ls rejects rank-deficient geometry (identical rays)") {
    const std::vector<Point3> k3d = {{0, 0, 0.1}, {0.01, 0.02, 0.2}, {-0.03, 0.01, 0.15}};
    const std::vector<Ray2> rays(3, Ray2{0.21, -0.17});
    CHECK_THROWS_AS(solve_ls(build_system(k3d, rays)), DegenerateGeometry);
}

TEST_CASE("solve_wls with unit weights equals solve_ls bitwise") {
    const Translation3 t_gt(0.02, 0.07, 0.8);
    const std::vector<Point3> k3d = {{0, 0.01, 0.03}, {0.06, -0.02, 0.0}, {-0.05, 0.04, -0.02}, {0.01, 0.08, 0.05}};
    const auto sys = build_system(k3d, exact_rays(k3d, t_gt));
    const SolveResult plain = solve_ls(sys);
    const SolveResult weighted = solve_wls(sys, WeightVector::Ones(4));
    CHECK(plain.t.x() == weighted.t.x());
    CHECK(plain.t.y() == weighted.t.y());
    CHECK(plain.t.z() == weighted.t.z());
    CHECK(plain.residual_norm == weighted.residual_norm);
}

TEST_CASE("solve_wls with equal weights equals solve_ls bitwise") {
    const Translation3 t_gt(-0.04, 0.01, 0.6);
    const std::vector<Point3> k3d = {{0, 0, 0.02}, {0.05, -0.01, -0.03}, {-0.02, 0.06, 0.01}};
    const auto sys = build_system(k3d, exact_rays(k3d, t_gt));
    const SolveResult plain = solve_ls(sys);
    const SolveResult weighted = solve_wls(sys, WeightVector::Constant(3, 0.37));
    CHECK(plain.t.x() == weighted.t.x());
    CHECK(plain.t.y() == weighted.t.y());
    CHECK(plain.t.z() == weighted.t.z());
}

TEST_CASE("zero weight deletes the keypoint's rows exactly") {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Point3> k3d(5);
        for (auto& p : k3d) p = Point3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05));
        const Translation3 t_gt(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.4, 1.2));
        auto rays = exact_rays(k3d, t_gt);
        for (auto& r : rays) {
            r.up += rng.normal(0.0, 2e-3);
            r.vp += rng.normal(0.0, 2e-3);
        }

        WeightVector w = WeightVector::Ones(5);
        w[2] = 0.0;
        const SolveResult full = solve_wls(build_system(k3d, rays), w);

        std::vector<Point3> k3d_sub(k3d);
        std::vector<Ray2> rays_sub(rays);
        k3d_sub.erase(k3d_sub.begin() + 2);
        rays_sub.erase(rays_sub.begin() + 2);
        const SolveResult sub = solve_ls(build_system(k3d_sub, rays_sub));

        CHECK(full.t.x() == sub.t.x());
        CHECK(full.t.y() == sub.t.y());
        CHECK(full.t.z() == sub.t.z());
    }
}

TEST_CASE("outlier with zero weight matches solving the inlier pair") {
    const Translation3 t_gt(0.1, 0.0, 0.7);
    const std::vector<Point3> k3d = {{0, 0, 0.0}, {0.05, 0.03, 0.02}, {-0.03, 0.05, 0.04}};
    auto rays = exact_rays(k3d, t_gt);
    rays[2] = {0.9, -0.8};  // junk correspondence

    WeightVector w(3);
    w << 1.0, 1.0, 0.0;
    const SolveResult masked = solve_wls(build_system(k3d, rays), w);
    const SolveResult pair = solve_ls(build_system({k3d[0], k3d[1]}, {rays[0], rays[1]}));
    CHECK(masked.t.x() == pair.t.x());
    CHECK(masked.t.y() == pair.t.y());
    CHECK(masked.t.z() == pair.t.z());
    CHECK((masked.t - t_gt).norm() <= 1e-12);
}

TEST_CASE("weight scale invariance") {
    Rng rng(37);
    std::vector<Point3> k3d(6);
    for (auto& p : k3d) p = Point3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05));
    const Translation3 t_gt(0.05, -0.03, 0.9);
    auto rays = exact_rays(k3d, t_gt);
    for (auto& r : rays) r.up += rng.normal(0.0, 1e-3);

    WeightVector w(6);
    for (int i = 0; i < 6; ++i) w[i] = rng.uniform(0.2, 1.0);
    const auto sys = build_system(k3d, rays);
    const SolveResult base = solve_wls(sys, w);
    for (const double c : {0.25, 0.5, 0.013}) {
        const SolveResult scaled = solve_wls(sys, WeightVector(c * w));
        CHECK((scaled.t - base.t).norm() <= 1e-12);
    }
}

TEST_CASE("solve_wls recovers ground truth for any strictly positive weights on noiseless scenes") {
    Rng rng(41);
    std::vector<Point3> k3d(7);
    for (auto& p : k3d) p = Point3(rng.uniform(-0.09, 0.09), rng.uniform(-0.09, 0.09), rng.uniform(-0.09, 0.09));
    const Translation3 t_gt(-0.02, 0.06, 0.45);
    const auto sys = build_system(k3d, exact_rays(k3d, t_gt));
    for (int rep = 0; rep < 10; ++rep) {
        WeightVector w(7);
        for (int i = 0; i < 7; ++i) w[i] = rng.uniform(0.05, 1.0);
        CHECK((solve_wls(sys, w).t - t_gt).norm() <= 1e-12);
    }
}

TEST_CASE("solve_wls declares weight degeneracy") {
    const Translation3 t_gt(0.0, 0.0, 0.5);
    const std::vector<Point3> k3d = {{0, 0, 0.0}, {0.05, 0.03, 0.02}, {-0.03, 0.05, 0.04}};
    const auto sys = build_system(k3d, exact_rays(k3d, t_gt));

    CHECK_THROWS_AS(solve_wls(sys, WeightVector::Zero(3)), DegenerateGeometry);
    WeightVector one_live = WeightVector::Zero(3);
    one_live[1] = 0.8;
    CHECK_THROWS_AS(solve_wls(sys, one_live), DegenerateGeometry);
    WeightVector bad = WeightVector::Ones(3);
    bad[0] = 1.5;
    CHECK_THROWS_AS(solve_wls(sys, bad), InvalidConfig);
    CHECK_THROWS_AS(solve_wls(sys, WeightVector::Ones(4)), ShapeMismatch);
}

TEST_CASE("two distinct positive weights among zeros are enough") {
    const Translation3 t_gt(0.03, -0.01, 0.6);
    const std::vector<Point3> k3d = {{0, 0, 0.0}, {0.06, 0.01, 0.03}, {-0.02, 0.05, -0.01}};
    const auto sys = build_system(k3d, exact_rays(k3d, t_gt));
    WeightVector w(3);
    w << 0.5, 0.0, 0.9;
    CHECK((solve_wls(sys, w).t - t_gt).norm() <= 1e-12);
}

TEST_CASE("to_camera_space adds the translation elementwise") {
    const std::vector<Point3> v = {{1, 2, 3}};
    const auto moved = to_camera_space(v, {0.1, 0.2, 0.3});
    CHECK(moved[0].x() == doctest::Approx(1.1));
    CHECK(moved[0].y() == doctest::Approx(2.2));
    CHECK(moved[0].z() == doctest::Approx(3.3));

    const auto back = to_camera_space(moved, {-0.1, -0.2, -0.3});
    CHECK((back[0] - v[0]).norm() == doctest::Approx(0.0));

    const auto same = to_camera_space(v, Translation3::Zero());
    CHECK((same[0] - v[0]).norm() == 0.0);
}
