#include "otsing/base_measure.hpp"

#include <cmath>
#include <string>

#include "otsing/errors.hpp"

namespace otsing {

BaseMeasure BaseMeasure::uniform_box(Vector lo, Vector hi) {
    BaseMeasure m;
    m.kind = MeasureKind::UniformBox;
    m.dim = lo.size();
    m.box_lo = std::move(lo);
    m.box_hi = std::move(hi);
    m.validate();
    return m;
}

BaseMeasure BaseMeasure::gaussian(Vector mean, double stddev) {
    BaseMeasure m;
    m.kind = MeasureKind::Gaussian;
    m.dim = mean.size();
    m.mean = std::move(mean);
    m.stddev = stddev;
    m.validate();
    return m;
}

BaseMeasure BaseMeasure::bounding_box_of(const Matrix& points, double margin) {
    if (points.rows() == 0) {
        throw ConfigError("bounding_box_of: empty point set");
    }
    if (margin < 0.0) {
        throw ConfigError("bounding_box_of: margin must be non-negative");
    }
    Vector lo = points.colwise().minCoeff();
    Vector hi = points.colwise().maxCoeff();
    for (Index k = 0; k < lo.size(); ++k) {
        double pad = margin * (hi[k] - lo[k]);
        if (pad == 0.0) pad = margin > 0.0 ? margin : 1.0;
        lo[k] -= pad;
        hi[k] += pad;
    }
    return uniform_box(std::move(lo), std::move(hi));
}

void BaseMeasure::validate() const {
    if (dim < 1) {
        throw ConfigError("base measure: dimension must be positive");
    }
    if (kind == MeasureKind::UniformBox) {
        if (box_lo.size() != dim || box_hi.size() != dim) {
            throw ConfigError("base measure: box bounds must have length dim");
        }
        for (Index k = 0; k < dim; ++k) {
            if (!(box_lo[k] < box_hi[k])) {
                throw ConfigError("base measure: box_lo[" + std::to_string(k) +
                                  "] must be < box_hi[" + std::to_string(k) + "]");
            }
        }
    } else {
        if (mean.size() != dim) {
            throw ConfigError("base measure: mean must have length dim");
        }
        if (!(stddev > 0.0) || !std::isfinite(stddev)) {
            throw ConfigError("base measure: stddev must be positive and finite");
        }
    }
}

Vector sample_point(const BaseMeasure& measure, std::uint64_t seed,
                    std::uint64_t index) {
    measure.validate();
    const Index d = measure.dim;
    const SeededRng rng(seed);
    Vector p(d);
    if (measure.kind == MeasureKind::UniformBox) {
        // coordinate c of point k uses generator output k*d + c
        const std::uint64_t base = index * static_cast<std::uint64_t>(d);
        for (Index c = 0; c < d; ++c) {
            const double u = SeededRng::to_unit(rng.at(base + static_cast<std::uint64_t>(c)));
            p[c] = measure.box_lo[c] + (measure.box_hi[c] - measure.box_lo[c]) * u;
        }
    } else {
        // coordinate c of point k uses outputs 2*(k*d + c) and 2*(k*d + c)+1
        const std::uint64_t base = 2 * index * static_cast<std::uint64_t>(d);
        for (Index c = 0; c < d; ++c) {
            const double u1 = SeededRng::to_unit(rng.at(base + 2 * static_cast<std::uint64_t>(c)));
            const double u2 = SeededRng::to_unit(rng.at(base + 2 * static_cast<std::uint64_t>(c) + 1));
            const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
            p[c] = measure.mean[c] + measure.stddev * g;
        }
    }
    return p;
}

Matrix sample(const BaseMeasure& measure, std::uint64_t seed, Index count) {
    if (count < 1) {
        throw ConfigError("sample: count must be >= 1");
    }
    measure.validate();
    Matrix out(count, measure.dim);
    for (Index k = 0; k < count; ++k) {
        out.row(k) = sample_point(measure, seed, static_cast<std::uint64_t>(k)).transpose();
    }
    return out;
}

Matrix sample(const BaseMeasure& measure, const SeededRng& rng, Index count) {
    return sample(measure, rng.seed(), count);
}

} // namespace otsing
