#include "otsing/point_cloud.hpp"

#include <cmath>
#include <string>

#include "otsing/errors.hpp"

namespace otsing {

void PointCloud::validate() const {
    const Index count = n();
    if (count < 2) {
        throw ConfigError("point cloud: need at least 2 points, got " +
                          std::to_string(count));
    }
    if (weights.size() != count) {
        throw ShapeError("point cloud: weights length " +
                         std::to_string(weights.size()) + " != point count " +
                         std::to_string(count));
    }
    if (!points.allFinite()) {
        throw ConfigError("point cloud: non-finite coordinate");
    }
    for (Index i = 0; i < count; ++i) {
        if (!(weights[i] > 0.0)) {
            throw ConfigError("point cloud: weight " + std::to_string(i) +
                              " must be > 0");
        }
    }
    const double total = weights.sum();
    if (std::abs(total - 1.0) > 1e-12) {
        throw ConfigError("point cloud: weights sum to " + std::to_string(total) +
                          ", expected 1 within 1e-12");
    }
    // Load-time dedup check, O(n^2) at desk scale.
    for (Index i = 0; i < count; ++i) {
        for (Index j = i + 1; j < count; ++j) {
            if ((points.row(i) - points.row(j)).norm() <= 1e-12) {
                throw ConfigError("point cloud: duplicate target points at indices " +
                                  std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }
}

PointCloud PointCloud::with_uniform_weights(Matrix pts) {
    PointCloud cloud;
    cloud.weights = Vector::Constant(pts.rows(), 1.0 / static_cast<double>(pts.rows()));
    cloud.points = std::move(pts);
    return cloud;
}

} // namespace otsing
