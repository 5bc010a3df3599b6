#include "otsing/toy_data.hpp"

#include <cmath>

#include "otsing/rng.hpp"

namespace otsing {

namespace {

Matrix blob_points(SeededRng& rng, Index count, double cx, double cy, double sigma) {
    Matrix pts(count, 2);
    for (Index k = 0; k < count; ++k) {
        pts(k, 0) = cx + sigma * rng.next_gaussian();
        pts(k, 1) = cy + sigma * rng.next_gaussian();
    }
    return pts;
}

} // namespace

ToyDataset make_three_blobs_ring(std::uint64_t seed, const ToyDataParams& params) {
    ToyDataset data;
    const double angles[3] = {M_PI / 2.0, M_PI / 2.0 + 2.0 * M_PI / 3.0,
                              M_PI / 2.0 + 4.0 * M_PI / 3.0};

    data.train_x.resize(3 * params.train_per_class, 2);
    data.test_x.resize(3 * params.test_per_class, 2);
    for (int c = 0; c < 3; ++c) {
        const double cx = params.blob_radius * std::cos(angles[c]);
        const double cy = params.blob_radius * std::sin(angles[c]);
        SeededRng train_rng(SeededRng::derive(seed, 0x747261696Eull, static_cast<std::uint64_t>(c)));
        SeededRng test_rng(SeededRng::derive(seed, 0x74657374ull, static_cast<std::uint64_t>(c)));
        data.train_x.middleRows(c * params.train_per_class, params.train_per_class) =
            blob_points(train_rng, params.train_per_class, cx, cy, params.blob_sigma);
        data.test_x.middleRows(c * params.test_per_class, params.test_per_class) =
            blob_points(test_rng, params.test_per_class, cx, cy, params.blob_sigma);
        for (Index k = 0; k < params.train_per_class; ++k) data.train_y.push_back(c);
        for (Index k = 0; k < params.test_per_class; ++k) data.test_y.push_back(c);
    }

    SeededRng ring_rng(SeededRng::derive(seed, 0x72696E67ull));
    data.ood_x.resize(params.ood_count, 2);
    for (Index k = 0; k < params.ood_count; ++k) {
        const double theta = 2.0 * M_PI * ring_rng.next_unit();
        const double r = params.ring_radius + params.ring_jitter * (2.0 * ring_rng.next_unit() - 1.0);
        data.ood_x(k, 0) = r * std::cos(theta);
        data.ood_x(k, 1) = r * std::sin(theta);
    }
    return data;
}

} // namespace otsing
