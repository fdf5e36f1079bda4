#include "rootlift/losses.hpp"

namespace rootlift {

double loss_translation_rmse(const Translation3& t_pred, const Translation3& t_gt) {
    return std::sqrt((t_pred - t_gt).squaredNorm() / 3.0);
}

namespace {

double mean_projection_l1(const CameraIntrinsics& cam, const std::vector<Point3>& pts_cs,
                          const std::vector<Pixel2>& px_target) {
    if (pts_cs.size() != px_target.size()) throw ShapeMismatch("point and pixel counts differ");
    if (pts_cs.empty()) throw ShapeMismatch("empty point array");
    double acc = 0.0;
    for (size_t i = 0; i < pts_cs.size(); ++i) {
        const Pixel2 proj = project(cam, pts_cs[i]);
        acc += std::abs(proj.u - px_target[i].u) + std::abs(proj.v - px_target[i].v);
    }
    return acc / (2.0 * static_cast<double>(pts_cs.size()));
}

}  // namespace

double loss_keypoint_consistency(const CameraIntrinsics& cam, const std::vector<Point3>& k3d_cs,
                                 const std::vector<Pixel2>& k2d_pred) {
    return mean_projection_l1(cam, k3d_cs, k2d_pred);
}

double loss_projected_vertices(const CameraIntrinsics& cam, const std::vector<Point3>& verts_cs,
                               const std::vector<Pixel2>& verts2d_gt) {
    return mean_projection_l1(cam, verts_cs, verts2d_gt);
}

double loss_relative_l1(const std::vector<Point3>& pred, const std::vector<Point3>& gt) {
    if (pred.size() != gt.size()) throw ShapeMismatch("point array sizes differ");
    if (pred.empty()) throw ShapeMismatch("empty point array");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - gt[i]).cwiseAbs().sum();
    return acc / (3.0 * static_cast<double>(pred.size()));
}

double loss_relative_l1(const std::vector<Pixel2>& pred, const std::vector<Pixel2>& gt) {
    if (pred.size() != gt.size()) throw ShapeMismatch("pixel array sizes differ");
    if (pred.empty()) throw ShapeMismatch("empty pixel array");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i].u - gt[i].u) + std::abs(pred[i].v - gt[i].v);
    return acc / (2.0 * static_cast<double>(pred.size()));
}

}  // namespace rootlift
