#include "otsing/sdot.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <thread>

#include "otsing/errors.hpp"
#include "otsing/rng.hpp"

namespace otsing {

namespace {

constexpr Index kChunk = 8192;

// Runs fn over fixed [begin,end) chunks. Chunk boundaries do not depend on
// the thread count, so per-chunk results (and any combine done in chunk
// order) are bit-identical for threads = 1 and threads = T.
void for_each_chunk(Index total, int threads,
                    const std::function<void(Index, Index)>& fn) {
    const Index num_chunks = (total + kChunk - 1) / kChunk;
    if (threads <= 1 || num_chunks <= 1) {
        for (Index c = 0; c < num_chunks; ++c) {
            fn(c * kChunk, std::min(total, (c + 1) * kChunk));
        }
        return;
    }
    const int workers = static_cast<int>(std::min<Index>(threads, num_chunks));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (Index c = w; c < num_chunks; c += workers) {
                fn(c * kChunk, std::min(total, (c + 1) * kChunk));
            }
        });
    }
    for (auto& t : pool) t.join();
}

void check_dims(const PointCloud& cloud, const PotentialOffsets& offsets, Index zdim) {
    if (offsets.h.size() != cloud.n()) {
        throw ShapeError("offsets length " + std::to_string(offsets.h.size()) +
                         " != point count " + std::to_string(cloud.n()));
    }
    if (zdim != cloud.dim()) {
        throw ShapeError("sample dimension " + std::to_string(zdim) +
                         " != cloud dimension " + std::to_string(cloud.dim()));
    }
}

} // namespace

void SolverConfig::validate() const {
    if (mc_samples < 1) throw ConfigError("solver: mc_samples must be positive");
    if (!(step_size > 0.0)) throw ConfigError("solver: step_size must be positive");
    if (max_iters < 1) throw ConfigError("solver: max_iters must be positive");
    if (!(tolerance > 0.0)) throw ConfigError("solver: tolerance must be positive");
    if (log_every < 1) throw ConfigError("solver: log_every must be positive");
    if (threads < 1) throw ConfigError("solver: threads must be positive");
}

std::pair<double, Index> potential_value(const PointCloud& cloud,
                                         const PotentialOffsets& offsets,
                                         const Vector& z) {
    check_dims(cloud, offsets, z.size());
    const Vector values = cloud.points * z + offsets.h;
    Index best = 0;
    for (Index i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i; // strict: ties keep lowest index
    }
    return {values[best], best};
}

std::vector<Assignment> assign(const PointCloud& cloud,
                               const PotentialOffsets& offsets,
                               const Matrix& samples, int threads) {
    if (samples.rows() == 0) {
        throw ShapeError("assign: empty sample set");
    }
    check_dims(cloud, offsets, samples.cols());
    const Index m = samples.rows();
    const Index n = cloud.n();
    std::vector<Assignment> out(static_cast<std::size_t>(m));

    const Matrix targets_t = cloud.points.transpose(); // d x n
    for_each_chunk(m, threads, [&](Index begin, Index end) {
        Matrix scores = samples.middleRows(begin, end - begin) * targets_t;
        scores.rowwise() += offsets.h.transpose();
        for (Index r = 0; r < scores.rows(); ++r) {
            Index best = 0;
            Index second = -1;
            double best_v = scores(r, 0);
            double second_v = -std::numeric_limits<double>::infinity();
            for (Index i = 1; i < n; ++i) {
                const double v = scores(r, i);
                if (v > best_v) {
                    second = best;
                    second_v = best_v;
                    best = i;
                    best_v = v;
                } else if (v > second_v) {
                    second = i;
                    second_v = v;
                }
            }
            out[static_cast<std::size_t>(begin + r)] =
                Assignment{best, second, best_v - second_v};
        }
    });
    return out;
}

CellStats cell_stats_from_assignments(const PointCloud& cloud,
                                      const Matrix& samples,
                                      const std::vector<Assignment>& assignments) {
    if (samples.rows() != static_cast<Index>(assignments.size())) {
        throw ShapeError("cell stats: assignment count != sample count");
    }
    const Index n = cloud.n();
    const Index d = cloud.dim();
    const Index m = samples.rows();

    CellStats stats;
    stats.total_samples = m;
    stats.sample_count.assign(static_cast<std::size_t>(n), 0);
    Matrix sums = Matrix::Zero(n, d);
    // Sequential accumulation in sample order: exact counts, reproducible sums.
    for (Index k = 0; k < m; ++k) {
        const Index cell = assignments[static_cast<std::size_t>(k)].best;
        ++stats.sample_count[static_cast<std::size_t>(cell)];
        sums.row(cell) += samples.row(k);
    }
    stats.volume.resize(n);
    stats.centroid.resize(n, d);
    for (Index i = 0; i < n; ++i) {
        const auto count = stats.sample_count[static_cast<std::size_t>(i)];
        stats.volume[i] = static_cast<double>(count) / static_cast<double>(m);
        if (count > 0) {
            stats.centroid.row(i) = sums.row(i) / static_cast<double>(count);
        } else {
            stats.centroid.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return stats;
}

CellStats estimate_cells(const PointCloud& cloud, const PotentialOffsets& offsets,
                         const BaseMeasure& measure, std::uint64_t seed, Index mc_samples,
                         int threads) {
    if (mc_samples < cloud.n()) {
        throw ConfigError("estimate_cells: need M >= n samples");
    }
    if (mc_samples < 100 * cloud.n()) {
        std::cerr << "otsing: warning: M=" << mc_samples << " < 100*n="
                  << 100 * cloud.n() << "; volume estimates will be coarse\n";
    }
    const Matrix pool = sample(measure, seed, mc_samples);
    const auto assignments = assign(cloud, offsets, pool, threads);
    return cell_stats_from_assignments(cloud, pool, assignments);
}

double energy(const CellStats& stats, const PointCloud& cloud) {
    if (stats.volume.size() != cloud.n()) {
        throw ShapeError("energy: stats and cloud disagree on n");
    }
    return (stats.volume - cloud.weights).squaredNorm();
}

std::pair<PotentialOffsets, SolveReport> optimize_offsets(const PointCloud& cloud,
                                                          const BaseMeasure& measure,
                                                          std::uint64_t seed,
                                                          const SolverConfig& config) {
    cloud.validate();
    config.validate();
    const std::uint64_t pool_seed = SeededRng::derive(seed, 0x706F6F6Cull); // "pool"

    Matrix pool;
    if (!config.resample_each_iter) {
        pool = sample(measure, pool_seed, config.mc_samples);
    }

    PotentialOffsets offsets = PotentialOffsets::zeros(cloud.n());
    PotentialOffsets best = offsets;
    double best_energy = std::numeric_limits<double>::infinity();

    SolveReport report;
    for (Index it = 0; it < config.max_iters; ++it) {
        if (config.resample_each_iter) {
            pool = sample(measure, SeededRng::derive(pool_seed, static_cast<std::uint64_t>(it)),
                          config.mc_samples);
        }
        const auto assignments = assign(cloud, offsets, pool, config.threads);
        const CellStats stats = cell_stats_from_assignments(cloud, pool, assignments);
        const double e = energy(stats, cloud);
        if (e < best_energy) {
            best_energy = e;
            best = offsets;
        }
        if (it % config.log_every == 0) {
            report.energy_trace.push_back(e);
        }
        report.iterations = it + 1;
        if (e <= config.tolerance) {
            report.converged = true;
            best = offsets;
            best_energy = e;
            break;
        }
        offsets.h += config.step_size * (cloud.weights - stats.volume);
        offsets.project_zero_sum();
    }

    report.final_energy = best_energy;
    if (report.energy_trace.empty() || report.energy_trace.back() != best_energy) {
        report.energy_trace.push_back(best_energy);
    }
    return {best, report};
}

Vector transport_point(const PointCloud& cloud, const PotentialOffsets& offsets,
                       const Vector& z) {
    const auto [value, index] = potential_value(cloud, offsets, z);
    (void)value;
    return cloud.points.row(index).transpose();
}

} // namespace otsing
