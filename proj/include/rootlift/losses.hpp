#pragma once

#include <vector>

#include "rootlift/camera.hpp"

namespace rootlift {

/// ||t_pred - t_gt|| / sqrt(3): root mean squared error over the components.
double loss_translation_rmse(const Translation3& t_pred, const Translation3& t_gt);

/// Mean L1 gap between projections of camera-space keypoints and predicted pixels.
/// Throws NonPositiveDepth if any keypoint has z <= 0.
double loss_keypoint_consistency(const CameraIntrinsics& cam, const std::vector<Point3>& k3d_cs,
                                 const std::vector<Pixel2>& k2d_pred);

/// Same structure over camera-space vertices against ground-truth 2D projections.
double loss_projected_vertices(const CameraIntrinsics& cam, const std::vector<Point3>& verts_cs,
                               const std::vector<Pixel2>& verts2d_gt);

/// Mean absolute componentwise difference between two point arrays.
double loss_relative_l1(const std::vector<Point3>& pred, const std::vector<Point3>& gt);

/// Pixel-array variant of the same loss.
double loss_relative_l1(const std::vector<Pixel2>& pred, const std::vector<Pixel2>& gt);

}  // namespace rootlift
