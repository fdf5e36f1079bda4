#include "rootlift/camera.hpp"

namespace rootlift {

Pixel2 project(const CameraIntrinsics& cam, const Point3& p) {
    if (!(p.z() > 0.0)) throw NonPositiveDepth("cannot project point with depth " + std::to_string(p.z()));
    return {cam.f * p.x() / p.z() + cam.u0, cam.f * p.y() / p.z() + cam.v0};
}

Ray2 normalize_pixel(const CameraIntrinsics& cam, const Pixel2& px) {
    return {(px.u - cam.u0) / cam.f, (px.v - cam.v0) / cam.f};
}

RectifyResult rectify_intrinsics(const CameraIntrinsics& cam, double f_canon, int crop_w, int crop_h) {
    if (!(f_canon > 0.0)) throw InvalidConfig("canonical focal length must be positive");
    if (crop_w <= 0 || crop_h <= 0) throw InvalidConfig("canonical crop must be positive");
    CameraIntrinsics canon;
    canon.f = f_canon;
    canon.u0 = crop_w / 2.0;
    canon.v0 = crop_h / 2.0;
    canon.width = crop_w;
    canon.height = crop_h;
    return {canon, f_canon / cam.f};
}

Pixel2 rectify_pixel(const CameraIntrinsics& cam, const CameraIntrinsics& cam_canon, const Pixel2& px) {
    return {cam_canon.f * (px.u - cam.u0) / cam.f + cam_canon.u0,
            cam_canon.f * (px.v - cam.v0) / cam.f + cam_canon.v0};
}

Pixel2 unrectify_pixel(const CameraIntrinsics& cam, const CameraIntrinsics& cam_canon, const Pixel2& px_canon) {
    return {cam.f * (px_canon.u - cam_canon.u0) / cam_canon.f + cam.u0,
            cam.f * (px_canon.v - cam_canon.v0) / cam_canon.f + cam.v0};
}

CameraIntrinsics canonical_camera(double f_canon, int size) {
    CameraIntrinsics cam;
    cam.f = f_canon;
    cam.u0 = size / 2.0;
    cam.v0 = size / 2.0;
    cam.width = size;
    cam.height = size;
    cam.validate();
    return cam;
}

}  // namespace rootlift
