#pragma once

#include <cstdint>

#include "otsing/rng.hpp"
#include "otsing/types.hpp"

namespace otsing {

enum class MeasureKind { UniformBox, Gaussian };

// The continuous source measure mu over a convex support. UniformBox is the
// default; the Gaussian is isotropic with unbounded support (no truncation).
struct BaseMeasure {
    MeasureKind kind = MeasureKind::UniformBox;
    Index dim = 0;

    // UniformBox only.
    Vector box_lo;
    Vector box_hi;

    // Gaussian only.
    Vector mean;
    double stddev = 1.0;

    static BaseMeasure uniform_box(Vector lo, Vector hi);
    static BaseMeasure gaussian(Vector mean, double stddev);

    // Tight axis-aligned bounding box of `points`, expanded by `margin` of
    // the per-axis width on each side. Axes with zero width are padded by
    // `margin` absolute so the box stays non-degenerate.
    static BaseMeasure bounding_box_of(const Matrix& points, double margin = 0.10);

    void validate() const; // throws ConfigError
};

// Point `index` of the stream (measure, seed); pure in all arguments.
// UniformBox consumes one generator output per coordinate, Gaussian two.
Vector sample_point(const BaseMeasure& measure, std::uint64_t seed,
                    std::uint64_t index);

// First `count` points of the stream, one per row. The result for count m is
// a prefix of the result for any m' >= m with the same (measure, seed).
Matrix sample(const BaseMeasure& measure, const SeededRng& rng, Index count);
Matrix sample(const BaseMeasure& measure, std::uint64_t seed, Index count);

} // namespace otsing
