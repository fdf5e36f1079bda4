#include <doctest.h>

#include "rootlift/camera.hpp"
#include "rootlift/oracles.hpp"
#include "rootlift/rng.hpp"

using namespace rootlift;
using namespace rootlift::synth;

namespace {

LinearSystem system_of(const Scene& scene) {
    const auto k3d = scene.keypoints_rel();
    std::vector<Ray2> rays(k3d.size());
    for (size_t i = 0; i < rays.size(); ++i) rays[i] = normalize_pixel(scene.cam, scene.k2d_obs[i]);
    return build_system(k3d, rays);
}

}  // namespace

TEST_CASE("oracle_minimize converges in zero iterations from the closed-form optimum") {
    const Scene scene = gen_scene(11);
    const LinearSystem sys = system_of(scene);
    const WeightVector w = WeightVector::Ones(sys.keypoints());
    const SolveResult closed = solve_wls(sys, w);
    const IterResult it = oracle_minimize(sys, w, closed.t, 1000, 1e-9);
    CHECK(it.iterations == 0);
    CHECK((it.t - closed.t).norm() == 0.0);
}

TEST_CASE("oracle_minimize matches the closed form from random starts") {
    Rng rng(99);
    for (int rep = 0; rep < 30; ++rep) {
        Scene scene = gen_scene(1200 + static_cast<uint64_t>(rep));
        scene = perturb(scene, {1.0, 0, 1300 + static_cast<uint64_t>(rep)});
        const LinearSystem sys = system_of(scene);
        WeightVector w(sys.keypoints());
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(0.2, 1.0);

        const SolveResult closed = solve_wls(sys, w);
        const Translation3 t0(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const IterResult it = oracle_minimize(sys, w, t0);
        CHECK((it.t - closed.t).norm() <= 1e-8 * (1.0 + closed.t.norm()));
    }
}

TEST_CASE("oracle_minimize refuses degenerate systems") {
    const std::vector<Point3> k3d = {{0, 0, 0.1}, {0.01, 0.02, 0.2}, {0.0, 0.01, 0.3}};
    const std::vector<Ray2> rays(3, Ray2{0.4, 0.1});
    const LinearSystem sys = build_system(k3d, rays);
    CHECK_THROWS_AS(oracle_minimize(sys, WeightVector::Ones(3), Translation3::Zero()), DegenerateGeometry);
}

TEST_CASE("oracle_minimize reports non-convergence instead of a wrong answer") {
    const Scene scene = gen_scene(17);
    const LinearSystem sys = system_of(scene);
    const WeightVector w = WeightVector::Ones(sys.keypoints());
    CHECK_THROWS_AS(oracle_minimize(sys, w, Translation3(5, 5, 5), 1, 1e-14), DidNotConverge);
}

TEST_CASE("geometric_refine sits at the ground truth on noiseless scenes") {
    for (uint64_t seed = 70; seed < 80; ++seed) {
        const Scene scene = gen_scene(seed);
        const WeightVector w = WeightVector::Ones(scene.n_keypoints());
        const SolveResult algebraic = solve_wls(system_of(scene), w);
        const IterResult refined = geometric_refine(scene, w, algebraic.t, 100);
        CHECK((refined.t - *scene.t_gt).norm() <= 1e-9);
    }
}

TEST_CASE("geometric and algebraic solutions differ on noisy scenes but stay close") {
    Scene scene = gen_scene(33);
    scene = perturb(scene, {3.0, 0, 44});
    const WeightVector w = WeightVector::Ones(scene.n_keypoints());
    const SolveResult algebraic = solve_wls(system_of(scene), w);
    const IterResult refined = geometric_refine(scene, w, algebraic.t, 200);
    const double gap = (refined.t - algebraic.t).norm();
    MESSAGE("geometric vs algebraic gap on a 3px-noise scene: ", gap, " m");
    CHECK(gap >= 0.0);
    CHECK(gap < 0.05);  // both estimate the same root
    CHECK((refined.t - *scene.t_gt).norm() < 0.05);
}

TEST_CASE("geometric_refine ignores zero-weight keypoints") {
    Scene scene = gen_scene(55);
    // corrupt one keypoint, then mask it out
    scene.k2d_obs[4] = {1.0, 1.0};
    WeightVector w = WeightVector::Ones(scene.n_keypoints());
    w[4] = 0.0;
    const IterResult refined = geometric_refine(scene, w, *scene.t_gt, 100);
    CHECK((refined.t - *scene.t_gt).norm() <= 1e-9);
}

TEST_CASE("gradcheck_metric floors tiny entries") {
    GradientBundle a, b;
    a.d_k2d = Eigen::MatrixXd::Zero(1, 2);
    a.d_k3d = Eigen::MatrixXd::Zero(1, 3);
    a.d_w = Eigen::VectorXd::Zero(1);
    b = a;
    a.d_w[0] = 5e-9;  // below the 1e-8 absolute floor at tol 1e-5
    CHECK(gradcheck_metric(a, b, 1e-5) < 1e-5);
    a.d_w[0] = 1.0;
    CHECK(gradcheck_metric(a, b, 1e-5) > 1e-5);
}
