#pragma once

#include "otsing/types.hpp"

namespace otsing {

// The discrete target measure nu: n support points y_i (rows of `points`)
// with strictly positive weights w_i summing to 1.
struct PointCloud {
    Matrix points;  // n x d
    Vector weights; // n

    Index n() const { return points.rows(); }
    Index dim() const { return points.cols(); }

    // Enforces n >= 2, w_i > 0, |sum w - 1| <= 1e-12, and pairwise distinct
    // points (distance > 1e-12); duplicate targets would create degenerate
    // zero-measure boundaries (a_ij = 0). Throws ConfigError naming the
    // offending indices.
    void validate() const;

    static PointCloud with_uniform_weights(Matrix points);
};

} // namespace otsing
