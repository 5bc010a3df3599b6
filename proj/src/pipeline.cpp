#include "otsing/pipeline.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "otsing/base_measure.hpp"
#include "otsing/classifier.hpp"
#include "otsing/errors.hpp"
#include "otsing/io.hpp"
#include "otsing/metrics.hpp"
#include "otsing/rng.hpp"

namespace otsing {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) {
            throw ConfigError("config: unknown key \"" + key + "\" in " + context);
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: malformed JSON in " + path.string() + ": " + e.what());
    }
    const auto dir = std::filesystem::absolute(path).parent_path();

    RunConfig cfg;
    try {
        check_keys(j, {"points", "labels", "test_points", "test_labels", "ood_points",
                       "out_dir", "seed", "threads", "strict", "base", "solver",
                       "boundaries", "synthesis", "trainer", "metrics"},
                   "top level");
        if (j.contains("points")) cfg.points = resolve(dir, j["points"].get<std::string>());
        if (j.contains("labels")) cfg.labels = resolve(dir, j["labels"].get<std::string>());
        if (j.contains("test_points"))
            cfg.test_points = resolve(dir, j["test_points"].get<std::string>());
        if (j.contains("test_labels"))
            cfg.test_labels = resolve(dir, j["test_labels"].get<std::string>());
        if (j.contains("ood_points"))
            cfg.ood_points = resolve(dir, j["ood_points"].get<std::string>());
        if (j.contains("out_dir")) cfg.out_dir = resolve(dir, j["out_dir"].get<std::string>());
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
        if (j.contains("strict")) cfg.strict = j["strict"].get<bool>();

        if (j.contains("base")) {
            const auto& b = j["base"];
            check_keys(b, {"kind", "box_margin", "stddev"}, "base");
            if (b.contains("kind")) cfg.base.kind = b["kind"].get<std::string>();
            if (b.contains("box_margin")) cfg.base.box_margin = b["box_margin"].get<double>();
            if (b.contains("stddev")) cfg.base.stddev = b["stddev"].get<double>();
            if (cfg.base.kind != "uniform" && cfg.base.kind != "gaussian") {
                throw ConfigError("config: base.kind must be \"uniform\" or \"gaussian\"");
            }
        }
        if (j.contains("solver")) {
            const auto& s = j["solver"];
            check_keys(s, {"mc_samples", "step_size", "max_iters", "tolerance",
                           "resample_each_iter", "log_every"},
                       "solver");
            if (s.contains("mc_samples")) cfg.solver.mc_samples = s["mc_samples"].get<Index>();
            if (s.contains("step_size")) cfg.solver.step_size = s["step_size"].get<double>();
            if (s.contains("max_iters")) cfg.solver.max_iters = s["max_iters"].get<Index>();
            if (s.contains("tolerance")) cfg.solver.tolerance = s["tolerance"].get<double>();
            if (s.contains("resample_each_iter"))
                cfg.solver.resample_each_iter = s["resample_each_iter"].get<bool>();
            if (s.contains("log_every")) cfg.solver.log_every = s["log_every"].get<Index>();
        }
        if (j.contains("boundaries")) {
            const auto& b = j["boundaries"];
            check_keys(b, {"mode", "rho"}, "boundaries");
            if (b.contains("mode")) cfg.boundaries.mode = b["mode"].get<std::string>();
            if (b.contains("rho")) cfg.boundaries.rho = b["rho"].get<double>();
            if (cfg.boundaries.mode != "allpairs" && cfg.boundaries.mode != "empirical") {
                throw ConfigError("config: boundaries.mode must be \"allpairs\" or \"empirical\"");
            }
        }
        if (j.contains("synthesis")) {
            const auto& s = j["synthesis"];
            check_keys(s, {"per_boundary", "slab", "slab_auto_factor", "guard",
                           "retry_cap", "codec"},
                       "synthesis");
            if (s.contains("per_boundary")) cfg.synthesis.per_boundary = s["per_boundary"].get<Index>();
            if (s.contains("slab")) {
                if (s["slab"].is_number()) {
                    cfg.synthesis.slab = std::to_string(s["slab"].get<double>());
                } else {
                    cfg.synthesis.slab = s["slab"].get<std::string>();
                }
            }
            if (s.contains("slab_auto_factor"))
                cfg.synthesis.slab_auto_factor = s["slab_auto_factor"].get<double>();
            if (s.contains("guard")) cfg.synthesis.guard = s["guard"].get<double>();
            if (s.contains("retry_cap")) cfg.synthesis.retry_cap = s["retry_cap"].get<Index>();
            if (s.contains("codec")) cfg.synthesis.codec = s["codec"].get<std::string>();
        }
        if (j.contains("trainer")) {
            const auto& t = j["trainer"];
            check_keys(t, {"epochs", "batch_size", "learning_rate", "ood_weight", "hidden"},
                       "trainer");
            if (t.contains("epochs")) cfg.trainer.epochs = t["epochs"].get<Index>();
            if (t.contains("batch_size")) cfg.trainer.batch_size = t["batch_size"].get<Index>();
            if (t.contains("learning_rate"))
                cfg.trainer.learning_rate = t["learning_rate"].get<double>();
            if (t.contains("ood_weight")) cfg.trainer.ood_weight = t["ood_weight"].get<double>();
            if (t.contains("hidden")) cfg.trainer.hidden = t["hidden"].get<std::vector<Index>>();
        }
        if (j.contains("metrics")) {
            const auto& m = j["metrics"];
            check_keys(m, {"ece_bins", "hist_bins", "fpr_tpr"}, "metrics");
            if (m.contains("ece_bins")) cfg.metrics.ece_bins = m["ece_bins"].get<int>();
            if (m.contains("hist_bins")) cfg.metrics.hist_bins = m["hist_bins"].get<int>();
            if (m.contains("fpr_tpr")) cfg.metrics.fpr_tpr = m["fpr_tpr"].get<double>();
        }
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value in " + path.string() + ": " + e.what());
    }
    if (cfg.threads < 1) {
        throw ConfigError("config: threads must be >= 1");
    }
    cfg.solver.threads = cfg.threads;
    return cfg;
}

std::string RunConfig::resolved_json() const {
    json j;
    j["points"] = points.string();
    j["labels"] = labels.string();
    j["test_points"] = test_points.string();
    j["test_labels"] = test_labels.string();
    j["ood_points"] = ood_points.string();
    j["out_dir"] = out_dir.string();
    j["seed"] = seed;
    j["threads"] = threads;
    j["strict"] = strict;
    j["base"] = {{"kind", base.kind},
                 {"box_margin", base.box_margin},
                 {"stddev", base.stddev}};
    j["solver"] = {{"mc_samples", solver.mc_samples},
                   {"step_size", solver.step_size},
                   {"max_iters", solver.max_iters},
                   {"tolerance", solver.tolerance},
                   {"resample_each_iter", solver.resample_each_iter},
                   {"log_every", solver.log_every}};
    j["boundaries"] = {{"mode", boundaries.mode}, {"rho", boundaries.rho}};
    j["synthesis"] = {{"per_boundary", synthesis.per_boundary},
                      {"slab", synthesis.slab},
                      {"slab_auto_factor", synthesis.slab_auto_factor},
                      {"guard", synthesis.guard},
                      {"retry_cap", synthesis.retry_cap},
                      {"codec", synthesis.codec}};
    j["trainer"] = {{"epochs", trainer.epochs},
                    {"batch_size", trainer.batch_size},
                    {"learning_rate", trainer.learning_rate},
                    {"ood_weight", trainer.ood_weight},
                    {"hidden", trainer.hidden},
                    {"activation", "relu"}};
    j["metrics"] = {{"ece_bins", metrics.ece_bins},
                    {"hist_bins", metrics.hist_bins},
                    {"fpr_tpr", metrics.fpr_tpr}};
    return j.dump(2) + "\n";
}

BaseMeasure RunConfig::make_measure(const Matrix& latents) const {
    if (base.kind == "gaussian") {
        // Centre the Gaussian on the latent cloud so every target is reachable.
        return BaseMeasure::gaussian(latents.colwise().mean().transpose(), base.stddev);
    }
    return BaseMeasure::bounding_box_of(latents, base.box_margin);
}

Codec RunConfig::make_codec() const {
    if (synthesis.codec == "identity") {
        return Codec::identity();
    }
    if (synthesis.codec.rfind("affine:", 0) == 0) {
        return Codec::affine_from_json(synthesis.codec.substr(7));
    }
    if (synthesis.codec.rfind("external:", 0) == 0) {
        return Codec::external(synthesis.codec.substr(9));
    }
    throw ConfigError("config: codec must be identity, affine:<json> or external:<dir>");
}

SlabSpec RunConfig::make_slab() const {
    if (synthesis.slab == "auto") return SlabSpec::auto_width();
    if (synthesis.slab == "off") return SlabSpec::off();
    try {
        return SlabSpec::fixed(std::stod(synthesis.slab));
    } catch (const std::exception&) {
        throw ConfigError("config: synthesis.slab must be \"auto\", \"off\" or a number");
    }
}

AdjacencyMode RunConfig::adjacency_mode() const {
    return boundaries.mode == "empirical" ? AdjacencyMode::Empirical
                                          : AdjacencyMode::AllPairs;
}

namespace {

struct LoadedData {
    PointCloud cloud;       // latent targets (encoded input points)
    Matrix id_train;        // input-space training points
    std::vector<int> train_labels;
    Matrix id_test;
    std::vector<int> test_labels;
    Matrix ood;
    Index num_classes = 0;
};

LoadedData load_all(const RunConfig& cfg, const Codec& codec) {
    for (const auto& [name, p] :
         {std::pair<const char*, const std::filesystem::path*>{"points", &cfg.points},
          {"labels", &cfg.labels},
          {"test_points", &cfg.test_points},
          {"test_labels", &cfg.test_labels},
          {"ood_points", &cfg.ood_points}}) {
        if (p->empty()) {
            throw ConfigError("config: \"" + std::string(name) + "\" is required for a full run");
        }
    }
    LoadedData data;
    const PointCloud raw = load_points(cfg.points);
    data.id_train = raw.points;
    data.train_labels = load_labels_csv(cfg.labels);
    data.id_test = load_points(cfg.test_points).points;
    data.test_labels = load_labels_csv(cfg.test_labels);
    data.ood = load_points(cfg.ood_points).points;

    data.cloud.points = codec.encode_batch(raw.points);
    data.cloud.weights = raw.weights;
    data.cloud.validate();

    int max_label = 0;
    for (int y : data.train_labels) max_label = std::max(max_label, y);
    for (int y : data.test_labels) max_label = std::max(max_label, y);
    data.num_classes = max_label + 1;
    if (data.num_classes < 2) {
        throw ConfigError("config: need at least two classes in the label files");
    }
    return data;
}

SynthesisConfig make_synth_config(const RunConfig& cfg) {
    SynthesisConfig synth;
    synth.per_boundary = cfg.synthesis.per_boundary;
    synth.slab = cfg.make_slab();
    synth.slab_auto_factor = cfg.synthesis.slab_auto_factor;
    synth.guard = cfg.synthesis.guard;
    synth.retry_cap = cfg.synthesis.retry_cap;
    synth.threads = cfg.threads;
    return synth;
}

Matrix otis_inputs(const std::vector<SynthesisSample>& samples) {
    if (samples.empty()) return Matrix(0, 0);
    Matrix x(static_cast<Index>(samples.size()), samples.front().x_hat.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        x.row(static_cast<Index>(k)) = samples[k].x_hat.transpose();
    }
    return x;
}

struct EvalOutput {
    json report;
    double id_accuracy = 0.0;
    double id_mmc = 0.0;
    double ood_mmc = 0.0;
    double auroc_value = 0.0;
    double fpr95 = 0.0;
    double ece_value = 0.0;
};

EvalOutput evaluate_model(const ToyClassifier& model, const Matrix& id_x,
                          const std::vector<int>& id_y, const Matrix& ood_x,
                          const MetricsConfig& mcfg) {
    const ConfidenceReport rep = make_confidence_report(model, id_x, id_y, ood_x);
    EvalOutput out;
    out.id_mmc = mmc(rep.id_scores);
    out.ood_mmc = mmc(rep.ood_scores);
    out.auroc_value = auroc(rep.id_scores, rep.ood_scores);
    out.fpr95 = fpr_at_tpr(rep.id_scores, rep.ood_scores, mcfg.fpr_tpr);
    out.ece_value = ece(rep.id_scores, rep.id_correct, mcfg.ece_bins);
    out.id_accuracy = accuracy(model, id_x, id_y);
    out.report = {{"id_mmc", out.id_mmc},       {"ood_mmc", out.ood_mmc},
                  {"auroc", out.auroc_value},   {"fpr95", out.fpr95},
                  {"ece", out.ece_value},       {"id_accuracy", out.id_accuracy}};
    return out;
}

void save_hist_csv(const std::filesystem::path& path, const ConfidenceReport& rep,
                   int bins) {
    const auto id_hist = confidence_histogram(rep.id_scores, bins);
    const auto ood_hist = confidence_histogram(rep.ood_scores, bins);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "bin_lo,bin_hi,id_count,ood_count\n";
    char buf[128];
    for (std::size_t b = 0; b < id_hist.size(); ++b) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%lld,%lld\n", id_hist[b].lo,
                      id_hist[b].hi, static_cast<long long>(id_hist[b].count),
                      static_cast<long long>(ood_hist[b].count));
        out << buf;
    }
}

// Sub-stream tags for the pipeline stages.
constexpr std::uint64_t kTagCells = 0x63656C6Cull;   // cell estimation pool
constexpr std::uint64_t kTagSynth = 0x73796E74ull;   // OTIS generation
constexpr std::uint64_t kTagModel = 0x6D6F64656Cull; // classifier init
constexpr std::uint64_t kTagTrain = 0x747261696Eull; // shuffling
constexpr std::uint64_t kTagRanB = 0x72616E62ull;    // RanB draws
constexpr std::uint64_t kTagInterp = 0x696E7470ull;  // interpolation baselines

} // namespace

PipelineResult run_pipeline(const RunConfig& cfg) {
    const Codec codec = cfg.make_codec();
    const LoadedData data = load_all(cfg, codec);

    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream out(cfg.out_dir / "resolved-config.json");
        if (!out) throw IoError("cannot write resolved-config.json");
        out << cfg.resolved_json();
    }

    const BaseMeasure measure = cfg.make_measure(data.cloud.points);

    // Stage 1: potential optimization.
    auto [offsets, report] = optimize_offsets(data.cloud, measure, cfg.seed, cfg.solver);
    if (cfg.strict && !report.converged) {
        throw NumericError("solver did not converge: E=" + std::to_string(report.final_energy) +
                           " after " + std::to_string(report.iterations) + " iterations");
    }
    save_offsets_json(cfg.out_dir / "offsets.json",
                      OffsetsFile{offsets, report.final_energy, cfg.seed});

    // Stage 2: shared sample pool for adjacency and centroids.
    const std::uint64_t cells_seed = SeededRng::derive(cfg.seed, kTagCells);
    const Matrix pool = sample(measure, cells_seed, cfg.solver.mc_samples);
    const auto assignments = assign(data.cloud, offsets, pool, cfg.threads);
    const CellStats stats = cell_stats_from_assignments(data.cloud, pool, assignments);

    const auto candidates =
        candidate_boundaries(data.cloud, offsets, assignments, cfg.adjacency_mode());
    const SingularSet singular = select_singular(candidates, cfg.boundaries.rho);
    save_boundaries_json(cfg.out_dir / "boundaries.json", singular.records);

    // Stage 3: OTIS generation.
    const auto otis = generate_otis(data.cloud, offsets, singular, stats, codec, measure,
                                    SeededRng::derive(cfg.seed, kTagSynth),
                                    make_synth_config(cfg));
    const Matrix otis_x = otis_inputs(otis);
    save_otpc(cfg.out_dir / "otis.otpc", otis_x);
    save_otis_meta_json(cfg.out_dir / "otis_meta.json", otis);

    // Stage 4: 50/50 suppression training.
    std::vector<Index> layers;
    layers.push_back(data.id_train.cols());
    for (Index h : cfg.trainer.hidden) layers.push_back(h);
    layers.push_back(data.num_classes);
    ToyClassifier model = ToyClassifier::init(layers, SeededRng::derive(cfg.seed, kTagModel));

    TrainConfig tcfg;
    tcfg.epochs = cfg.trainer.epochs;
    tcfg.batch_size = cfg.trainer.batch_size;
    tcfg.learning_rate = cfg.trainer.learning_rate;
    tcfg.ood_weight = cfg.trainer.ood_weight;
    tcfg.seed = SeededRng::derive(cfg.seed, kTagTrain);
    const TrainHistory history = train(model, data.id_train, data.train_labels, otis_x,
                                       tcfg, &data.id_test, &data.test_labels);
    save_model_json(cfg.out_dir / "model.json", model);
    save_history_csv(cfg.out_dir / "history.csv", history);

    // Stage 5: calibration metrics on the held-out and OOD sets.
    const EvalOutput eval =
        evaluate_model(model, data.id_test, data.test_labels, data.ood, cfg.metrics);
    {
        std::ofstream out(cfg.out_dir / "report.json");
        if (!out) throw IoError("cannot write report.json");
        out << eval.report.dump(2) << "\n";
    }
    save_hist_csv(cfg.out_dir / "hist.csv",
                  make_confidence_report(model, data.id_test, data.test_labels, data.ood),
                  cfg.metrics.hist_bins);

    PipelineResult result;
    result.out_dir = cfg.out_dir;
    result.solve_report = report;
    result.id_accuracy = eval.id_accuracy;
    result.id_mmc = eval.id_mmc;
    result.ood_mmc = eval.ood_mmc;
    result.auroc = eval.auroc_value;
    result.fpr95 = eval.fpr95;
    result.ece = eval.ece_value;
    return result;
}

std::string sweep_mode_name(SweepMode mode) {
    switch (mode) {
        case SweepMode::TopK: return "TopK";
        case SweepMode::RanB: return "RanB";
        case SweepMode::LatentInterp: return "L-Inter";
        case SweepMode::InputInterp: return "I-Inter";
    }
    return "?";
}

SweepMode parse_sweep_mode(const std::string& name) {
    if (name == "topk" || name == "TopK") return SweepMode::TopK;
    if (name == "ranb" || name == "RanB") return SweepMode::RanB;
    if (name == "linterp" || name == "L-Inter" || name == "l-inter")
        return SweepMode::LatentInterp;
    if (name == "iinterp" || name == "I-Inter" || name == "i-inter")
        return SweepMode::InputInterp;
    throw ConfigError("sweep: unknown mode \"" + name +
                      "\" (expected topk, ranb, linterp or iinterp)");
}

std::vector<SweepRow> ablation_sweep(const RunConfig& cfg,
                                     const std::vector<double>& rho_values,
                                     const std::vector<SweepMode>& modes) {
    const Codec codec = cfg.make_codec();
    const LoadedData data = load_all(cfg, codec);
    const BaseMeasure measure = cfg.make_measure(data.cloud.points);

    // One shared solve across all sweep entries.
    auto [offsets, report] = optimize_offsets(data.cloud, measure, cfg.seed, cfg.solver);
    if (cfg.strict && !report.converged) {
        throw NumericError("solver did not converge: E=" + std::to_string(report.final_energy));
    }
    const std::uint64_t cells_seed = SeededRng::derive(cfg.seed, kTagCells);
    const Matrix pool = sample(measure, cells_seed, cfg.solver.mc_samples);
    const auto assignments = assign(data.cloud, offsets, pool, cfg.threads);
    const CellStats stats = cell_stats_from_assignments(data.cloud, pool, assignments);
    const auto candidates =
        candidate_boundaries(data.cloud, offsets, assignments, cfg.adjacency_mode());

    std::vector<Index> layers;
    layers.push_back(data.id_train.cols());
    for (Index h : cfg.trainer.hidden) layers.push_back(h);
    layers.push_back(data.num_classes);
    const ToyClassifier initial =
        ToyClassifier::init(layers, SeededRng::derive(cfg.seed, kTagModel));

    TrainConfig tcfg;
    tcfg.epochs = cfg.trainer.epochs;
    tcfg.batch_size = cfg.trainer.batch_size;
    tcfg.learning_rate = cfg.trainer.learning_rate;
    tcfg.ood_weight = cfg.trainer.ood_weight;
    tcfg.seed = SeededRng::derive(cfg.seed, kTagTrain);

    std::vector<SweepRow> rows;
    for (const SweepMode mode : modes) {
        for (const double rho : rho_values) {
            const SingularSet top = select_singular(candidates, rho);
            Matrix otis_x;
            if (mode == SweepMode::TopK || mode == SweepMode::RanB) {
                SingularSet chosen = top;
                if (mode == SweepMode::RanB) {
                    SeededRng rng(SeededRng::derive(cfg.seed, kTagRanB,
                                                    std::bit_cast<std::uint64_t>(rho)));
                    chosen.records = random_boundaries(
                        candidates, static_cast<Index>(top.records.size()), rng);
                }
                const auto otis =
                    generate_otis(data.cloud, offsets, chosen, stats, codec, measure,
                                  SeededRng::derive(cfg.seed, kTagSynth), make_synth_config(cfg));
                otis_x = otis_inputs(otis);
            } else {
                const Index count = static_cast<Index>(top.records.size()) *
                                    cfg.synthesis.per_boundary;
                SeededRng rng(SeededRng::derive(cfg.seed, kTagInterp,
                                                static_cast<std::uint64_t>(mode)));
                otis_x = interpolation_baselines(data.cloud, codec, rng,
                                                 mode == SweepMode::LatentInterp
                                                     ? InterpMode::LatentInterp
                                                     : InterpMode::InputInterp,
                                                 count);
            }

            ToyClassifier model = initial;
            train(model, data.id_train, data.train_labels, otis_x, tcfg, nullptr, nullptr);
            const EvalOutput eval = evaluate_model(model, data.id_test, data.test_labels,
                                                   data.ood, cfg.metrics);
            rows.push_back(SweepRow{sweep_mode_name(mode), rho, eval.ood_mmc,
                                    eval.id_accuracy});
        }
    }
    return rows;
}

void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "mode,rho,ood_mmc,id_acc\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", r.mode.c_str(), r.rho,
                      r.ood_mmc, r.id_acc);
        out << buf;
    }
}

} // namespace otsing
