#pragma once

#include <array>
#include <vector>

#include "otsing/point_cloud.hpp"
#include "otsing/sdot.hpp"

// Exact 2D geometry oracle, independent of the Monte Carlo estimation path:
// each cell of the max-affine potential is cut out of the box polygon by
// half-plane clipping, then measured with the shoelace formula.
namespace otsing::oracle {

using Point2 = std::array<double, 2>;
using Polygon = std::vector<Point2>;

Polygon clip_halfplane(const Polygon& poly, double ax, double ay, double b);
double polygon_area(const Polygon& poly); // signed, CCW positive
Point2 polygon_centroid(const Polygon& poly);

struct ExactCells {
    Vector volume;   // mu-fraction of the box, sums to 1
    Matrix centroid; // NaN rows for zero-area cells
};

ExactCells exact_cells_2d(const PointCloud& cloud, const PotentialOffsets& offsets,
                          const Vector& box_lo, const Vector& box_hi);

} // namespace otsing::oracle
