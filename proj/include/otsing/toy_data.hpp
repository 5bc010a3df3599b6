#pragma once

#include <cstdint>
#include <vector>

#include "otsing/types.hpp"

namespace otsing {

// Bundled 2D experiment data: three Gaussian class blobs arranged around the
// origin (ID) and a surrounding ring of OOD points.
struct ToyDataset {
    Matrix train_x;
    std::vector<int> train_y;
    Matrix test_x;
    std::vector<int> test_y;
    Matrix ood_x;
};

struct ToyDataParams {
    Index train_per_class = 200;
    Index test_per_class = 100;
    Index ood_count = 300;
    double blob_radius = 2.0;  // distance of blob centers from the origin
    double blob_sigma = 0.35;
    double ring_radius = 4.0;
    double ring_jitter = 0.25; // radial jitter of the OOD ring
};

ToyDataset make_three_blobs_ring(std::uint64_t seed, const ToyDataParams& params = {});

} // namespace otsing
