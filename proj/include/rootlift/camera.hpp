#pragma once

#include "rootlift/types.hpp"

namespace rootlift {

/// Pinhole projection of a camera-space point. Throws NonPositiveDepth for z <= 0.
Pixel2 project(const CameraIntrinsics& cam, const Point3& p);

/// Map a pixel through the inverse intrinsics: ((u - u0)/f, (v - v0)/f).
Ray2 normalize_pixel(const CameraIntrinsics& cam, const Pixel2& px);

struct RectifyResult {
    CameraIntrinsics cam;  // canonical intrinsics {f_canon, crop_w/2, crop_h/2}
    double ratio;          // resize ratio f_canon / f
};

/// Canonical intrinsics for a given focal length and crop, plus the resize ratio.
RectifyResult rectify_intrinsics(const CameraIntrinsics& cam, double f_canon, int crop_w, int crop_h);

/// Map a pixel into the canonical camera so that its ray is preserved exactly:
/// normalize_pixel(cam, px) == normalize_pixel(cam_canon, result).
Pixel2 rectify_pixel(const CameraIntrinsics& cam, const CameraIntrinsics& cam_canon, const Pixel2& px);

/// Exact inverse of rectify_pixel.
Pixel2 unrectify_pixel(const CameraIntrinsics& cam, const CameraIntrinsics& cam_canon, const Pixel2& px_canon);

/// Default canonical camera used for rectified processing.
CameraIntrinsics canonical_camera(double f_canon = 500.0, int size = 256);

}  // namespace rootlift
