#include "otsing/synthesis.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "otsing/errors.hpp"

namespace otsing {

void SynthesisConfig::validate() const {
    if (per_boundary < 1) throw ConfigError("synthesis: per_boundary must be positive");
    if (!(guard > 0.0)) throw ConfigError("synthesis: guard must be positive");
    if (retry_cap < 1) throw ConfigError("synthesis: retry_cap must be positive");
    if (slab.mode == SlabSpec::Mode::Fixed && !(slab.value > 0.0)) {
        throw ConfigError("synthesis: fixed slab width must be positive");
    }
    if (!(slab_auto_factor > 0.0)) throw ConfigError("synthesis: slab_auto_factor must be positive");
    if (threads < 1) throw ConfigError("synthesis: threads must be positive");
}

std::pair<double, double> interpolation_weights(const Vector& z, const Vector& c_i,
                                                const Vector& c_j, double guard) {
    if ((c_i - c_j).norm() <= 1e-15) {
        throw SynthesisError("interpolation weights: degenerate centroids (c_i == c_j)");
    }
    const double inv_i = 1.0 / std::max((z - c_i).norm(), guard);
    const double inv_j = 1.0 / std::max((z - c_j).norm(), guard);
    const double lambda_i = inv_i / (inv_i + inv_j);
    return {lambda_i, 1.0 - lambda_i};
}

namespace {

Index argmax_cell(const PointCloud& cloud, const PotentialOffsets& offsets,
                  const Vector& z) {
    Index best = 0;
    double best_v = cloud.points.row(0).dot(z) + offsets.h[0];
    for (Index i = 1; i < cloud.n(); ++i) {
        const double v = cloud.points.row(i).dot(z) + offsets.h[i];
        if (v > best_v) {
            best = i;
            best_v = v;
        }
    }
    return best;
}

} // namespace

Vector smoothed_transport(const PointCloud& cloud, const PotentialOffsets& offsets,
                          const BoundaryRecord& boundary, const Vector& c_i,
                          const Vector& c_j, double lambda_i, double lambda_j) {
    if (!(lambda_i >= 0.0) || !(lambda_j >= 0.0) || lambda_i + lambda_j != 1.0) {
        throw SynthesisError("smoothed transport: weights must be a convex pair");
    }
    // T(c_t) must be y_t; a centroid outside its own cell signals a bad solve.
    if (argmax_cell(cloud, offsets, c_i) != boundary.i) {
        throw SynthesisError("smoothed transport: centroid of cell " +
                             std::to_string(boundary.i) + " escaped its cell");
    }
    if (argmax_cell(cloud, offsets, c_j) != boundary.j) {
        throw SynthesisError("smoothed transport: centroid of cell " +
                             std::to_string(boundary.j) + " escaped its cell");
    }
    return lambda_i * cloud.points.row(boundary.i).transpose() +
           lambda_j * cloud.points.row(boundary.j).transpose();
}

std::vector<SynthesisSample> generate_otis(const PointCloud& cloud,
                                           const PotentialOffsets& offsets,
                                           const SingularSet& singular,
                                           const CellStats& stats, const Codec& codec,
                                           const BaseMeasure& measure, std::uint64_t seed,
                                           const SynthesisConfig& config) {
    config.validate();
    for (const auto& rec : singular.records) {
        for (Index cell : {rec.i, rec.j}) {
            if (stats.cell_empty(cell)) {
                throw SynthesisError("generate_otis: cell " + std::to_string(cell) +
                                     " has no samples, centroid undefined");
            }
        }
    }

    std::vector<SynthesisSample> samples;
    samples.reserve(singular.records.size() * static_cast<std::size_t>(config.per_boundary));

    for (const auto& rec : singular.records) {
        const std::uint64_t stream = SeededRng::derive(seed, static_cast<std::uint64_t>(rec.i),
                                                       static_cast<std::uint64_t>(rec.j));
        std::optional<double> delta;
        switch (config.slab.mode) {
            case SlabSpec::Mode::Auto: delta = config.slab_auto_factor * rec.a.norm(); break;
            case SlabSpec::Mode::Fixed: delta = config.slab.value; break;
            case SlabSpec::Mode::Off: break;
        }

        const Vector c_i = stats.centroid.row(rec.i).transpose();
        const Vector c_j = stats.centroid.row(rec.j).transpose();

        std::uint64_t draw_index = 0;
        for (Index k = 0; k < config.per_boundary; ++k) {
            Vector z;
            Index tries = 0;
            for (;;) {
                if (tries++ >= config.retry_cap) {
                    throw SynthesisError("generate_otis: rejection cap exhausted for boundary (" +
                                         std::to_string(rec.i) + ", " + std::to_string(rec.j) + ")");
                }
                z = sample_point(measure, stream, draw_index++);
                if (!delta) break;
                if (std::abs(rec.a.dot(z) + rec.b) > *delta) continue;
                const Index cell = argmax_cell(cloud, offsets, z);
                if (cell == rec.i || cell == rec.j) break;
            }

            SynthesisSample s;
            s.i = rec.i;
            s.j = rec.j;
            const auto [li, lj] = interpolation_weights(z, c_i, c_j, config.guard);
            s.lambda_i = li;
            s.lambda_j = lj;
            s.y_hat = smoothed_transport(cloud, offsets, rec, c_i, c_j, li, lj);
            s.z = std::move(z);
            samples.push_back(std::move(s));
        }
    }

    // Decode all latents in one batch; mandatory for the external codec and
    // cheaper for the others.
    if (!samples.empty()) {
        Matrix latents(static_cast<Index>(samples.size()), cloud.dim());
        for (std::size_t k = 0; k < samples.size(); ++k) {
            latents.row(static_cast<Index>(k)) = samples[k].y_hat.transpose();
        }
        const Matrix decoded = codec.decode_batch(latents);
        for (std::size_t k = 0; k < samples.size(); ++k) {
            samples[k].x_hat = decoded.row(static_cast<Index>(k)).transpose();
        }
    }
    return samples;
}

void save_otis_meta_json(const std::filesystem::path& path,
                         const std::vector<SynthesisSample>& samples) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : samples) {
        arr.push_back({{"i", s.i},
                       {"j", s.j},
                       {"lambda_i", s.lambda_i},
                       {"lambda_j", s.lambda_j}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << arr.dump(2) << "\n";
}

Matrix interpolation_baselines(const PointCloud& cloud, const Codec& codec,
                               SeededRng& rng, InterpMode mode, Index count) {
    if (count < 1) {
        throw ConfigError("interpolation_baselines: count must be >= 1");
    }
    const auto n = static_cast<std::uint64_t>(cloud.n());

    // Same draw sequence in both modes: with the identity codec the two
    // baselines then coincide sample for sample.
    Matrix mixed(count, cloud.dim());
    if (mode == InterpMode::LatentInterp) {
        for (Index k = 0; k < count; ++k) {
            const auto a = static_cast<Index>(rng.next_below(n));
            const auto b = static_cast<Index>(rng.next_below(n));
            const double lambda = rng.next_unit();
            mixed.row(k) = lambda * cloud.points.row(a) + (1.0 - lambda) * cloud.points.row(b);
        }
        return codec.decode_batch(mixed);
    }
    const Matrix decoded = codec.decode_batch(cloud.points);
    Matrix out(count, decoded.cols());
    for (Index k = 0; k < count; ++k) {
        const auto a = static_cast<Index>(rng.next_below(n));
        const auto b = static_cast<Index>(rng.next_below(n));
        const double lambda = rng.next_unit();
        out.row(k) = lambda * decoded.row(a) + (1.0 - lambda) * decoded.row(b);
    }
    return out;
}

} // namespace otsing
