#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "otsing/base_measure.hpp"
#include "otsing/codec.hpp"
#include "otsing/point_cloud.hpp"
#include "otsing/rng.hpp"
#include "otsing/sdot.hpp"
#include "otsing/singularity.hpp"
#include "otsing/types.hpp"

namespace otsing {

// One synthesized ambiguity sample tied to boundary (i, j): the source draw
// z, the inverse-distance weights, the latent y_hat on the segment
// [y_i, y_j], and its decoded output-space vector x_hat.
struct SynthesisSample {
    Index i = 0;
    Index j = 0;
    Vector z;
    double lambda_i = 0.0;
    double lambda_j = 0.0;
    Vector y_hat;
    Vector x_hat;
};

// Restriction of the source draws to a slab around the boundary hyperplane:
// |<a, z> + b| <= delta with the sample assigned to cell i or j. Auto scales
// delta with the hyperplane normal, Off matches the paper's literal global
// draw.
struct SlabSpec {
    enum class Mode { Auto, Off, Fixed };
    Mode mode = Mode::Auto;
    double value = 0.0; // Fixed only

    static SlabSpec auto_width() { return {Mode::Auto, 0.0}; }
    static SlabSpec off() { return {Mode::Off, 0.0}; }
    static SlabSpec fixed(double delta) { return {Mode::Fixed, delta}; }
};

struct SynthesisConfig {
    Index per_boundary = 32;
    SlabSpec slab = SlabSpec::auto_width();
    double slab_auto_factor = 0.05; // delta = factor * ||a|| in Auto mode
    double guard = 1e-9;            // floor on distances in the lambda weights
    Index retry_cap = 10000;        // rejection draws per accepted sample
    int threads = 1;

    void validate() const; // throws ConfigError
};

// lambda_i = (1/max(||z-c_i||, guard)) / (1/max(||z-c_i||, guard) + 1/max(||z-c_j||, guard)),
// lambda_j = 1 - lambda_i. Degenerate centroids (c_i == c_j) are a
// SynthesisError.
std::pair<double, double> interpolation_weights(const Vector& z, const Vector& c_i,
                                                const Vector& c_j, double guard = 1e-9);

// y_hat = lambda_i * T(c_i) + lambda_j * T(c_j). Checks at runtime that each
// centroid transports to its own target (T(c_t) = y_t) and fails loudly
// otherwise: a centroid outside its cell signals a bad solve.
Vector smoothed_transport(const PointCloud& cloud, const PotentialOffsets& offsets,
                          const BoundaryRecord& boundary, const Vector& c_i,
                          const Vector& c_j, double lambda_i, double lambda_j);

// Generates per_boundary samples per singular boundary in deterministic
// order. Each boundary draws from its own sub-stream (seed, i, j), so the
// output is independent of boundary processing order.
std::vector<SynthesisSample> generate_otis(const PointCloud& cloud,
                                           const PotentialOffsets& offsets,
                                           const SingularSet& singular,
                                           const CellStats& stats, const Codec& codec,
                                           const BaseMeasure& measure, std::uint64_t seed,
                                           const SynthesisConfig& config);

// Sidecar JSON next to the OTPC output: per-sample (i, j, lambda_i, lambda_j).
void save_otis_meta_json(const std::filesystem::path& path,
                         const std::vector<SynthesisSample>& samples);

enum class InterpMode { LatentInterp, InputInterp };

// Boundary-free ablation baselines: mix two uniformly chosen latents (or
// their decoded inputs) with a uniform lambda. Returns one output-space
// vector per row.
Matrix interpolation_baselines(const PointCloud& cloud, const Codec& codec,
                               SeededRng& rng, InterpMode mode, Index count);

} // namespace otsing
