#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "otsing/base_measure.hpp"
#include "otsing/point_cloud.hpp"
#include "otsing/types.hpp"

namespace otsing {

// Scalar offsets h of the Brenier potential u_h(z) = max_i <y_i, z> + h_i,
// normalized to sum h_i = 0 for identifiability.
struct PotentialOffsets {
    Vector h;

    static PotentialOffsets zeros(Index n) { return PotentialOffsets{Vector::Zero(n)}; }

    // Mean-subtraction projection onto the sum-zero constraint.
    void project_zero_sum() { h.array() -= h.mean(); }
};

// Per-sample cell assignment: maximizing cell, second-best cell and the
// potential gap between them (>= 0). Ties go to the lowest index.
struct Assignment {
    Index best = 0;
    Index runner_up = 0;
    double margin = 0.0;
};

// Monte Carlo estimates over one pool of M samples. Volumes are exact
// assignment frequencies (sample_count_i / M, counts partition M); centroids
// are per-cell sample means, NaN rows for cells no sample landed in.
struct CellStats {
    Vector volume;                          // n, in [0,1]
    Matrix centroid;                        // n x d
    std::vector<std::int64_t> sample_count; // n
    std::int64_t total_samples = 0;

    bool cell_empty(Index i) const { return sample_count[static_cast<std::size_t>(i)] == 0; }
};

struct SolverConfig {
    Index mc_samples = 100000;     // M
    double step_size = 0.5;        // eta
    Index max_iters = 2000;
    double tolerance = 1e-4;       // epsilon on E(h)
    bool resample_each_iter = false;
    Index log_every = 50;
    int threads = 1;

    void validate() const; // throws ConfigError
};

struct SolveReport {
    double final_energy = 0.0;
    Index iterations = 0;
    bool converged = false;
    std::vector<double> energy_trace; // E(h) per log interval; last entry == final_energy
};

// u_h(z) and the maximizing index, ties broken by lowest index.
std::pair<double, Index> potential_value(const PointCloud& cloud,
                                         const PotentialOffsets& offsets,
                                         const Vector& z);

// Assign every sample row to its cell; result order matches input order.
// Data-parallel over fixed-size chunks, so the output (and any downstream
// reduction) is identical for every thread count.
std::vector<Assignment> assign(const PointCloud& cloud,
                               const PotentialOffsets& offsets,
                               const Matrix& samples, int threads = 1);

// Counts / volumes / centroids from a precomputed assignment vector.
CellStats cell_stats_from_assignments(const PointCloud& cloud,
                                      const Matrix& samples,
                                      const std::vector<Assignment>& assignments);

// Draw M samples from `measure` with `seed` and tabulate them; emits a
// warning to stderr when M < 100*n. A cell with no samples is reported with
// an empty-centroid flag, never an exception.
CellStats estimate_cells(const PointCloud& cloud, const PotentialOffsets& offsets,
                         const BaseMeasure& measure, std::uint64_t seed, Index mc_samples,
                         int threads = 1);

// E(h) = sum_i (vol_i - w_i)^2, the discrepancy between estimated cell
// volumes and the target weights.
double energy(const CellStats& stats, const PointCloud& cloud);

// Fixed-step ascent on the Kantorovich dual direction:
//     h_i <- h_i + eta * (w_i - vol_i),   then project to sum h = 0.
// With resample_each_iter=false one pool of M points is reused, giving a
// deterministic trajectory; otherwise iteration t draws a fresh pool from
// the sub-stream (seed, t). Non-convergence returns converged=false with the
// best-seen offsets, not an exception.
std::pair<PotentialOffsets, SolveReport> optimize_offsets(const PointCloud& cloud,
                                                          const BaseMeasure& measure,
                                                          std::uint64_t seed,
                                                          const SolverConfig& config);

// T(z) = y_{i*}: the gradient of the max-of-affine envelope at z.
Vector transport_point(const PointCloud& cloud, const PotentialOffsets& offsets,
                       const Vector& z);

} // namespace otsing
