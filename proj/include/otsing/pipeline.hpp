#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "otsing/codec.hpp"
#include "otsing/sdot.hpp"
#include "otsing/singularity.hpp"
#include "otsing/synthesis.hpp"
#include "otsing/types.hpp"

namespace otsing {

struct BaseConfig {
    std::string kind = "uniform"; // "uniform" | "gaussian"
    double box_margin = 0.10;     // uniform: bbox expansion per side
    double stddev = 1.0;          // gaussian: isotropic scale
};

struct BoundaryConfig {
    std::string mode = "allpairs"; // "allpairs" | "empirical"
    double rho = 0.10;
};

struct SynthesisFileConfig {
    Index per_boundary = 32;
    std::string slab = "auto"; // "auto" | "off" | numeric string
    double slab_auto_factor = 0.05;
    double guard = 1e-9;
    Index retry_cap = 10000;
    std::string codec = "identity"; // "identity" | "affine:<json>" | "external:<dir>"
};

struct TrainerConfig {
    Index epochs = 200;
    Index batch_size = 32;
    double learning_rate = 0.05;
    double ood_weight = 1.0;
    std::vector<Index> hidden = {64, 64};
};

struct MetricsConfig {
    int ece_bins = 15;
    int hist_bins = 20;
    double fpr_tpr = 0.95;
};

// Full run configuration. Unknown keys anywhere in the JSON are rejected;
// relative paths resolve against the config file's directory; every default
// is materialized into the emitted resolved-config.json.
struct RunConfig {
    std::filesystem::path points;
    std::filesystem::path labels;
    std::filesystem::path test_points;
    std::filesystem::path test_labels;
    std::filesystem::path ood_points;
    std::filesystem::path out_dir = "otsing-out";

    std::uint64_t seed = 0;
    int threads = 1;
    bool strict = false;

    BaseConfig base;
    SolverConfig solver;
    BoundaryConfig boundaries;
    SynthesisFileConfig synthesis;
    TrainerConfig trainer;
    MetricsConfig metrics;

    static RunConfig from_json_file(const std::filesystem::path& path);
    std::string resolved_json() const;

    BaseMeasure make_measure(const Matrix& latents) const;
    Codec make_codec() const;
    SlabSpec make_slab() const;
    AdjacencyMode adjacency_mode() const;
};

struct PipelineResult {
    std::filesystem::path out_dir;
    SolveReport solve_report;
    double id_accuracy = 0.0;
    double id_mmc = 0.0;
    double ood_mmc = 0.0;
    double auroc = 0.0;
    double fpr95 = 0.0;
    double ece = 0.0;
};

// solve -> boundaries -> synthesize -> train -> evaluate, writing
// offsets.json, boundaries.json, otis.otpc (+ otis_meta.json sidecar),
// model.json, history.csv, report.json, hist.csv and resolved-config.json
// under out_dir.
PipelineResult run_pipeline(const RunConfig& config);

enum class SweepMode { TopK, RanB, LatentInterp, InputInterp };

std::string sweep_mode_name(SweepMode mode);
SweepMode parse_sweep_mode(const std::string& name);

struct SweepRow {
    std::string mode;
    double rho = 0.0;
    double ood_mmc = 0.0;
    double id_acc = 0.0;
};

// Fig-4-style ablation: one pipeline per (mode, rho) sharing a single solved
// potential. The interpolation baselines ignore rho but match the TopK
// sample budget.
std::vector<SweepRow> ablation_sweep(const RunConfig& config,
                                     const std::vector<double>& rho_values,
                                     const std::vector<SweepMode>& modes);

void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

} // namespace otsing
