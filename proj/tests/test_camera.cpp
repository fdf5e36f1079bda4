#include <doctest.h>

#include "rootlift/camera.hpp"
#include "rootlift/rng.hpp"

using namespace rootlift;

namespace {
CameraIntrinsics make_cam(double f, double u0, double v0, int w = 640, int h = 480) {
    CameraIntrinsics cam;
    cam.f = f;
    cam.u0 = u0;
    cam.v0 = v0;
    cam.width = w;
    cam.height = h;
    return cam;
}
}  // namespace

TEST_CASE("project maps the principal ray to the principal point") {
    const auto cam = make_cam(1.0, 0.0, 0.0);
    const Pixel2 px = project(cam, {0.0, 0.0, 1.0});
    CHECK(px.u == 0.0);
    CHECK(px.v == 0.0);
}

TEST_CASE("project substitutes the pinhole formula") {
    const auto cam = make_cam(2.0, 10.0, 20.0);
    const Pixel2 px = project(cam, {1.0, 2.0, 2.0});
    CHECK(px.u == doctest::Approx(11.0));
    CHECK(px.v == doctest::Approx(22.0));
}

TEST_CASE("project rejects points at or behind the camera") {
    const auto cam = make_cam(500.0, 128.0, 128.0);
    CHECK_THROWS_AS(project(cam, {0.0, 0.0, -1.0}), NonPositiveDepth);
    CHECK_THROWS_AS(project(cam, {0.0, 0.0, 0.0}), NonPositiveDepth);
}

TEST_CASE("normalize_pixel inverts projection onto the image plane") {
    const auto cam = make_cam(2.0, 10.0, 20.0);
    const Ray2 r = normalize_pixel(cam, {11.0, 22.0});
    CHECK(r.up == doctest::Approx(0.5));
    CHECK(r.vp == doctest::Approx(1.0));

    const Ray2 pp = normalize_pixel(cam, {cam.u0, cam.v0});
    CHECK(pp.up == 0.0);
    CHECK(pp.vp == 0.0);
}

TEST_CASE("normalize_pixel of a projection is perspective division") {
    Rng rng(7);
    const auto cam = make_cam(731.0, 322.5, 241.0);
    for (int i = 0; i < 200; ++i) {
        const Point3 p(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.05, 5.0));
        const Ray2 r = normalize_pixel(cam, project(cam, p));
        CHECK(r.up == doctest::Approx(p.x() / p.z()).epsilon(1e-12));
        CHECK(r.vp == doctest::Approx(p.y() / p.z()).epsilon(1e-12));
    }
}

TEST_CASE("rectify_intrinsics returns the canonical camera and resize ratio") {
    const auto cam = make_cam(1000.0, 320.0, 240.0);
    const RectifyResult r = rectify_intrinsics(cam, 500.0, 256, 256);
    CHECK(r.ratio == doctest::Approx(0.5));
    CHECK(r.cam.f == 500.0);
    CHECK(r.cam.u0 == 128.0);
    CHECK(r.cam.v0 == 128.0);
    CHECK(r.cam.width == 256);
    CHECK(r.cam.height == 256);
}

TEST_CASE("rectify_intrinsics identity case") {
    const auto cam = make_cam(800.0, 320.0, 240.0, 640, 480);
    const RectifyResult r = rectify_intrinsics(cam, 800.0, 640, 480);
    CHECK(r.ratio == 1.0);
    CHECK(r.cam.f == cam.f);
    CHECK(r.cam.u0 == cam.u0);
    CHECK(r.cam.v0 == cam.v0);
}

TEST_CASE("rectify_pixel preserves rays and maps principal point to principal point") {
    const auto cam = make_cam(1000.0, 320.0, 240.0);
    const auto canon = rectify_intrinsics(cam, 500.0, 256, 256).cam;

    const Pixel2 at_pp = rectify_pixel(cam, canon, {cam.u0, cam.v0});
    CHECK(at_pp.u == doctest::Approx(128.0));
    CHECK(at_pp.v == doctest::Approx(128.0));

    const Pixel2 mapped = rectify_pixel(cam, canon, {420.0, 240.0});
    CHECK(mapped.u == doctest::Approx(178.0));

    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const Pixel2 px{rng.uniform(-100.0, 800.0), rng.uniform(-100.0, 600.0)};
        const Ray2 orig = normalize_pixel(cam, px);
        const Ray2 rect = normalize_pixel(canon, rectify_pixel(cam, canon, px));
        CHECK(orig.up == doctest::Approx(rect.up).epsilon(1e-12));
        CHECK(orig.vp == doctest::Approx(rect.vp).epsilon(1e-12));
    }
}

TEST_CASE("unrectify_pixel is the exact inverse of rectify_pixel") {
    const auto cam = make_cam(937.0, 311.0, 255.5);
    const auto canon = rectify_intrinsics(cam, 500.0, 256, 256).cam;
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const Pixel2 px{rng.uniform(-50.0, 700.0), rng.uniform(-50.0, 500.0)};
        const Pixel2 roundtrip = unrectify_pixel(cam, canon, rectify_pixel(cam, canon, px));
        CHECK(roundtrip.u == doctest::Approx(px.u).epsilon(1e-12));
        CHECK(roundtrip.v == doctest::Approx(px.v).epsilon(1e-12));
    }
    const Pixel2 fixed = unrectify_pixel(cam, canon, {canon.u0, canon.v0});
    CHECK(fixed.u == doctest::Approx(cam.u0));
    CHECK(fixed.v == doctest::Approx(cam.v0));
}

TEST_CASE("canonical_camera defaults match the configured canonical space") {
    const CameraIntrinsics canon = canonical_camera();
    CHECK(canon.f == 500.0);
    CHECK(canon.u0 == 128.0);
    CHECK(canon.width == 256);
}
