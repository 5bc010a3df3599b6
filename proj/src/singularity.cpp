#include "otsing/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "otsing/errors.hpp"

namespace otsing {

double boundary_score(const Vector& y_i, const Vector& y_j) {
    const double ni = y_i.norm();
    const double nj = y_j.norm();
    if (!(ni > 0.0) || !(nj > 0.0)) {
        throw ScoringError("boundary score: zero-norm target point");
    }
    const double cosine = std::clamp(y_i.dot(y_j) / (ni * nj), -1.0, 1.0);
    return std::acos(cosine);
}

std::vector<BoundaryRecord> candidate_boundaries(const PointCloud& cloud,
                                                 const PotentialOffsets& offsets,
                                                 const std::vector<Assignment>& assignments,
                                                 AdjacencyMode mode) {
    const Index n = cloud.n();
    if (offsets.h.size() != n) {
        throw ShapeError("candidate boundaries: offsets length != n");
    }
    for (Index i = 0; i < n; ++i) {
        if (!(cloud.points.row(i).norm() > 0.0)) {
            throw ScoringError("candidate boundaries: target point " + std::to_string(i) +
                               " has zero norm, angular score undefined");
        }
    }

    // Pairs observed as (best, runner-up) for at least one sample.
    std::set<std::pair<Index, Index>> adjacent;
    for (const auto& a : assignments) {
        if (a.runner_up < 0) continue;
        adjacent.emplace(std::min(a.best, a.runner_up), std::max(a.best, a.runner_up));
    }

    std::vector<BoundaryRecord> records;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const bool observed = adjacent.count({i, j}) > 0;
            if (mode == AdjacencyMode::Empirical && !observed) continue;
            BoundaryRecord rec;
            rec.i = i;
            rec.j = j;
            rec.a = (cloud.points.row(i) - cloud.points.row(j)).transpose();
            rec.b = offsets.h[i] - offsets.h[j];
            rec.score = boundary_score(cloud.points.row(i).transpose(),
                                       cloud.points.row(j).transpose());
            rec.empirically_adjacent = observed;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

namespace {

bool score_order(const BoundaryRecord& lhs, const BoundaryRecord& rhs) {
    if (lhs.score != rhs.score) return lhs.score > rhs.score;
    if (lhs.i != rhs.i) return lhs.i < rhs.i;
    return lhs.j < rhs.j;
}

} // namespace

SingularSet select_singular(const std::vector<BoundaryRecord>& candidates, double rho) {
    if (candidates.empty()) {
        throw SelectionError("select_singular: empty candidate set");
    }
    if (!(rho > 0.0) || rho > 1.0) {
        throw SelectionError("select_singular: rho must be in (0, 1]");
    }
    const auto keep = static_cast<std::size_t>(
        std::ceil(rho * static_cast<double>(candidates.size())));

    SingularSet set;
    set.rho = rho;
    set.records = candidates;
    std::sort(set.records.begin(), set.records.end(), score_order);
    set.records.resize(std::min(keep, set.records.size()));
    return set;
}

std::vector<BoundaryRecord> random_boundaries(const std::vector<BoundaryRecord>& candidates,
                                              Index count, SeededRng& rng) {
    if (count < 0 || static_cast<std::size_t>(count) > candidates.size()) {
        throw SelectionError("random_boundaries: count " + std::to_string(count) +
                             " out of range for " + std::to_string(candidates.size()) +
                             " candidates");
    }
    // Partial Fisher-Yates over an index array keeps the draw deterministic.
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::vector<BoundaryRecord> picked;
    picked.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) {
        const auto remaining = order.size() - static_cast<std::size_t>(k);
        const auto swap_at = static_cast<std::size_t>(k) + rng.next_below(remaining);
        std::swap(order[static_cast<std::size_t>(k)], order[swap_at]);
        picked.push_back(candidates[order[static_cast<std::size_t>(k)]]);
    }
    return picked;
}

} // namespace otsing
