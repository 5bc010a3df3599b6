#pragma once

#include <vector>

#include "otsing/point_cloud.hpp"
#include "otsing/rng.hpp"
#include "otsing/sdot.hpp"
#include "otsing/types.hpp"

namespace otsing {

// One candidate boundary hyperplane S_ij = { z : <a, z> + b = 0 } between
// cells i < j, scored by the angular deviation of the transport directions.
struct BoundaryRecord {
    Index i = 0;
    Index j = 0;
    Vector a;    // y_i - y_j
    double b = 0.0; // h_i - h_j
    double score = 0.0; // in [0, pi]
    bool empirically_adjacent = false;
};

enum class AdjacencyMode { AllPairs, Empirical };

// arccos of the clamped cosine similarity between y_i and y_j; depends only
// on the two target points, not on the offsets. Throws ScoringError on a
// zero-norm input.
double boundary_score(const Vector& y_i, const Vector& y_j);

// AllPairs emits all n(n-1)/2 pairs; Empirical keeps only pairs that occur
// as (best, runner-up) for at least one assigned sample. Both modes fill
// empirically_adjacent from the assignments. Records come out in
// lexicographic (i, j) order.
std::vector<BoundaryRecord> candidate_boundaries(const PointCloud& cloud,
                                                 const PotentialOffsets& offsets,
                                                 const std::vector<Assignment>& assignments,
                                                 AdjacencyMode mode);

// Top-scored fraction of the candidates, sorted score-descending with ties
// broken by lexicographic (i, j).
struct SingularSet {
    std::vector<BoundaryRecord> records;
    double rho = 0.0;
};

SingularSet select_singular(const std::vector<BoundaryRecord>& candidates, double rho);

// Uniform sample without replacement; the RanB ablation baseline.
std::vector<BoundaryRecord> random_boundaries(const std::vector<BoundaryRecord>& candidates,
                                              Index count, SeededRng& rng);

} // namespace otsing
