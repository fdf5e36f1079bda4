#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rootlift {

// All errors derive from Error so callers can catch the library as a whole.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveDepth : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct TooFewCorrespondences : Error {
    using Error::Error;
};
struct DegenerateGeometry : Error {
    using Error::Error;
};
struct InvalidConfig : Error {
    using Error::Error;
};
struct DidNotConverge : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};

using Point3 = Eigen::Vector3d;
using Translation3 = Eigen::Vector3d;
using WeightVector = Eigen::VectorXd;

/// Pixel coordinates, origin at the top-left corner, u rightward, v downward.
/// Values are continuous and may lie outside the frame.
struct Pixel2 {
    double u = 0.0;
    double v = 0.0;
};

/// Normalized image-plane coordinates (pixel mapped through the inverse
/// intrinsics), dimensionless.
struct Ray2 {
    double up = 0.0;
    double vp = 0.0;
};

/// Pinhole camera with a single focal length (fx == fy).
struct CameraIntrinsics {
    double f = 1.0;   // focal length, pixels
    double u0 = 0.0;  // principal point, pixels
    double v0 = 0.0;
    int width = 1;  // frame size, pixels
    int height = 1;

    void validate() const {
        if (!(f > 0.0) || !std::isfinite(f)) throw InvalidConfig("focal length must be positive");
        if (width <= 0 || height <= 0) throw InvalidConfig("frame size must be positive");
        if (!std::isfinite(u0) || !std::isfinite(v0)) throw InvalidConfig("principal point must be finite");
    }
};

/// Row-stochastic matrix expressing skeleton keypoints as convex combinations
/// of mesh vertices (shape n_keypoints x n_vertices).
struct KeypointRegressor {
    Eigen::MatrixXd m;

    Eigen::Index keypoints() const { return m.rows(); }
    Eigen::Index vertices() const { return m.cols(); }

    // A regressor needs >= 2 keypoints; callers that want a one-row document
    // to fail later, at solve time, pass min_keypoints = 1.
    void validate(Eigen::Index min_keypoints = 2) const {
        if (m.rows() < min_keypoints)
            throw InvalidConfig("regressor needs at least " + std::to_string(min_keypoints) + " keypoints");
        if (m.cols() < m.rows()) throw InvalidConfig("regressor needs at least as many vertices as keypoints");
        if ((m.array() < 0.0).any()) throw InvalidConfig("regressor entries must be non-negative");
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (std::abs(m.row(i).sum() - 1.0) > 1e-9)
                throw InvalidConfig("regressor row " + std::to_string(i) + " does not sum to 1");
        }
    }
};

}  // namespace rootlift
