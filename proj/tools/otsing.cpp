// Command-line front end for the OT-singularity toolkit. Subcommands mirror
// the pipeline stages and exchange only documented file formats, so each
// stage can run (and be tested) on its own.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include <CLI11.hpp>

#include "otsing/base_measure.hpp"
#include "otsing/classifier.hpp"
#include "otsing/errors.hpp"
#include "otsing/io.hpp"
#include "otsing/metrics.hpp"
#include "otsing/pipeline.hpp"
#include "otsing/rng.hpp"
#include "otsing/sdot.hpp"
#include "otsing/singularity.hpp"
#include "otsing/synthesis.hpp"

namespace {

using namespace otsing;

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool strict = false;
};

RunConfig load_config_or_default(const std::string& path, const GlobalOpts& opts) {
    RunConfig cfg;
    if (!path.empty()) {
        cfg = RunConfig::from_json_file(path);
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.threads) {
        cfg.threads = *opts.threads;
        cfg.solver.threads = *opts.threads;
    }
    if (opts.strict) cfg.strict = true;
    return cfg;
}

int error_exit_code(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return 2;
    if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const SynthesisError*>(&e) ||
        dynamic_cast<const ScoringError*>(&e) || dynamic_cast<const TrainingError*>(&e)) {
        return 3;
    }
    return 1;
}

const char* error_category(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return "io";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const SynthesisError*>(&e)) return "synthesis";
    if (dynamic_cast<const ScoringError*>(&e)) return "scoring";
    if (dynamic_cast<const TrainingError*>(&e)) return "training";
    if (dynamic_cast<const SelectionError*>(&e)) return "selection";
    if (dynamic_cast<const ShapeError*>(&e)) return "shape";
    return "config";
}

// Shared by boundaries/synthesize: re-estimate the sample pool used for
// empirical adjacency and cell centroids.
struct CellContext {
    PointCloud cloud;
    PotentialOffsets offsets;
    BaseMeasure measure;
    Matrix pool;
    std::vector<Assignment> assignments;
    CellStats stats;
};

CellContext make_cell_context(const std::string& points_path,
                              const std::string& offsets_path, const RunConfig& cfg) {
    CellContext ctx;
    ctx.cloud = load_points(points_path);
    ctx.cloud.validate();
    ctx.offsets = load_offsets_json(offsets_path).offsets;
    ctx.measure = cfg.make_measure(ctx.cloud.points);
    ctx.pool = sample(ctx.measure, SeededRng::derive(cfg.seed, 0x63656C6Cull),
                      cfg.solver.mc_samples);
    ctx.assignments = assign(ctx.cloud, ctx.offsets, ctx.pool, cfg.threads);
    ctx.stats = cell_stats_from_assignments(ctx.cloud, ctx.pool, ctx.assignments);
    return ctx;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-discrete optimal transport singularity toolkit"};
    app.require_subcommand(1);

    GlobalOpts global;
    app.add_option("--seed", global.seed, "Override the configured RNG seed");
    app.add_option("--threads", global.threads, "Worker threads for sample assignment")
        ->envname("OTSING_THREADS");
    app.add_flag("--strict", global.strict, "Fail (exit 3) on solver non-convergence");

    // --- solve ---------------------------------------------------------
    auto* solve_cmd = app.add_subcommand("solve", "Optimize the potential offsets");
    std::string solve_points, solve_config, solve_out;
    solve_cmd->add_option("--points", solve_points, "Target point file (OTPC or CSV)")
        ->required();
    solve_cmd->add_option("--config", solve_config, "Run-config JSON (base/solver/seed)");
    solve_cmd->add_option("--out", solve_out, "Offsets JSON output")->required();
    solve_cmd->callback([&]() {
        const RunConfig cfg = load_config_or_default(solve_config, global);
        PointCloud cloud = load_points(solve_points);
        cloud.validate();
        const BaseMeasure measure = cfg.make_measure(cloud.points);
        auto [offsets, report] = optimize_offsets(cloud, measure, cfg.seed, cfg.solver);
        if (cfg.strict && !report.converged) {
            throw NumericError("solver did not converge: E=" +
                               std::to_string(report.final_energy));
        }
        save_offsets_json(solve_out, OffsetsFile{offsets, report.final_energy, cfg.seed});
        std::cout << "solve: E=" << report.final_energy << " iterations="
                  << report.iterations << " converged=" << (report.converged ? "yes" : "no")
                  << "\n";
    });

    // --- boundaries ----------------------------------------------------
    auto* bnd_cmd = app.add_subcommand("boundaries", "Score and select singular boundaries");
    std::string bnd_points, bnd_offsets, bnd_config, bnd_mode = "allpairs", bnd_out;
    double bnd_rho = 0.10;
    bnd_cmd->add_option("--points", bnd_points)->required();
    bnd_cmd->add_option("--offsets", bnd_offsets)->required();
    bnd_cmd->add_option("--mode", bnd_mode, "allpairs or empirical");
    bnd_cmd->add_option("--rho", bnd_rho, "Top fraction of boundaries to keep");
    bnd_cmd->add_option("--config", bnd_config, "Run-config JSON (base/solver/seed)");
    bnd_cmd->add_option("--out", bnd_out, "boundaries JSON output")->required();
    bnd_cmd->callback([&]() {
        RunConfig cfg = load_config_or_default(bnd_config, global);
        cfg.boundaries.mode = bnd_mode;
        if (bnd_mode != "allpairs" && bnd_mode != "empirical") {
            throw ConfigError("boundaries: mode must be allpairs or empirical");
        }
        const CellContext ctx = make_cell_context(bnd_points, bnd_offsets, cfg);
        const auto candidates = candidate_boundaries(ctx.cloud, ctx.offsets,
                                                     ctx.assignments, cfg.adjacency_mode());
        const SingularSet singular = select_singular(candidates, bnd_rho);
        save_boundaries_json(bnd_out, singular.records);
        std::cout << "boundaries: " << candidates.size() << " candidates, kept "
                  << singular.records.size() << "\n";
    });

    // --- synthesize ----------------------------------------------------
    auto* syn_cmd = app.add_subcommand("synthesize", "Generate ambiguity samples");
    std::string syn_points, syn_offsets, syn_boundaries, syn_config;
    std::string syn_codec = "identity", syn_slab = "auto", syn_out;
    Index syn_per_boundary = 32;
    syn_cmd->add_option("--points", syn_points)->required();
    syn_cmd->add_option("--offsets", syn_offsets)->required();
    syn_cmd->add_option("--boundaries", syn_boundaries)->required();
    syn_cmd->add_option("--codec", syn_codec, "identity | affine:<json> | external:<dir>");
    syn_cmd->add_option("--per-boundary", syn_per_boundary, "Samples per boundary");
    syn_cmd->add_option("--slab", syn_slab, "auto | off | <float>");
    syn_cmd->add_option("--config", syn_config, "Run-config JSON (base/solver/seed)");
    syn_cmd->add_option("--out", syn_out, "OTPC output of decoded samples")->required();
    syn_cmd->callback([&]() {
        RunConfig cfg = load_config_or_default(syn_config, global);
        cfg.synthesis.codec = syn_codec;
        cfg.synthesis.slab = syn_slab;
        cfg.synthesis.per_boundary = syn_per_boundary;
        const CellContext ctx = make_cell_context(syn_points, syn_offsets, cfg);
        SingularSet singular;
        singular.records = load_boundaries_json(syn_boundaries);
        singular.rho = cfg.boundaries.rho;

        SynthesisConfig synth;
        synth.per_boundary = cfg.synthesis.per_boundary;
        synth.slab = cfg.make_slab();
        synth.slab_auto_factor = cfg.synthesis.slab_auto_factor;
        synth.guard = cfg.synthesis.guard;
        synth.retry_cap = cfg.synthesis.retry_cap;
        synth.threads = cfg.threads;
        const auto otis = generate_otis(ctx.cloud, ctx.offsets, singular, ctx.stats,
                                        cfg.make_codec(), ctx.measure,
                                        SeededRng::derive(cfg.seed, 0x73796E74ull), synth);

        Matrix x(static_cast<Index>(otis.size()), otis.empty() ? 0 : otis.front().x_hat.size());
        for (std::size_t k = 0; k < otis.size(); ++k) {
            x.row(static_cast<Index>(k)) = otis[k].x_hat.transpose();
        }
        save_otpc(syn_out, x);
        std::filesystem::path meta = syn_out;
        meta.replace_filename(meta.stem().string() + "_meta.json");
        save_otis_meta_json(meta, otis);
        std::cout << "synthesize: " << otis.size() << " samples\n";
    });

    // --- train-toy -----------------------------------------------------
    auto* train_cmd = app.add_subcommand("train-toy", "Train the toy classifier");
    std::string tr_id, tr_labels, tr_otis, tr_config, tr_out, tr_history;
    train_cmd->add_option("--id", tr_id, "ID training points (OTPC or CSV)")->required();
    train_cmd->add_option("--labels", tr_labels, "Labels CSV for --id")->required();
    train_cmd->add_option("--otis", tr_otis, "OTIS pool (OTPC); optional");
    train_cmd->add_option("--config", tr_config, "Run-config JSON (trainer/seed)");
    train_cmd->add_option("--out", tr_out, "model JSON output")->required();
    train_cmd->add_option("--history", tr_history, "history CSV output")->required();
    train_cmd->callback([&]() {
        const RunConfig cfg = load_config_or_default(tr_config, global);
        const Matrix id_x = load_points(tr_id).points;
        const auto id_y = load_labels_csv(tr_labels);
        Matrix otis_x(0, id_x.cols());
        if (!tr_otis.empty()) {
            otis_x = load_points(tr_otis).points;
        }
        int max_label = 0;
        for (int y : id_y) max_label = std::max(max_label, y);

        std::vector<Index> layers;
        layers.push_back(id_x.cols());
        for (Index h : cfg.trainer.hidden) layers.push_back(h);
        layers.push_back(max_label + 1);
        ToyClassifier model =
            ToyClassifier::init(layers, SeededRng::derive(cfg.seed, 0x6D6F64656Cull));

        TrainConfig tcfg;
        tcfg.epochs = cfg.trainer.epochs;
        tcfg.batch_size = cfg.trainer.batch_size;
        tcfg.learning_rate = cfg.trainer.learning_rate;
        tcfg.ood_weight = cfg.trainer.ood_weight;
        tcfg.seed = SeededRng::derive(cfg.seed, 0x747261696Eull);
        const TrainHistory history = train(model, id_x, id_y, otis_x, tcfg);
        save_model_json(tr_out, model);
        save_history_csv(tr_history, history);
        std::cout << "train-toy: " << history.size() << " epochs, final train acc="
                  << (history.empty() ? 0.0 : history.back().train_accuracy) << "\n";
    });

    // --- evaluate ------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("evaluate", "Confidence and OOD metrics");
    std::string ev_model, ev_id, ev_labels, ev_ood, ev_out, ev_hist;
    eval_cmd->add_option("--model", ev_model)->required();
    eval_cmd->add_option("--id", ev_id, "ID points (OTPC or CSV)")->required();
    eval_cmd->add_option("--labels", ev_labels, "Labels CSV for --id")->required();
    eval_cmd->add_option("--ood", ev_ood, "OOD points (OTPC or CSV)")->required();
    eval_cmd->add_option("--out", ev_out, "report JSON output")->required();
    eval_cmd->add_option("--hist", ev_hist, "confidence histogram CSV output");
    eval_cmd->callback([&]() {
        const ToyClassifier model = load_model_json(ev_model);
        const Matrix id_x = load_points(ev_id).points;
        const auto id_y = load_labels_csv(ev_labels);
        const Matrix ood_x = load_points(ev_ood).points;
        const MetricsConfig mcfg;

        const ConfidenceReport rep = make_confidence_report(model, id_x, id_y, ood_x);
        nlohmann::json report = {{"id_mmc", mmc(rep.id_scores)},
                                 {"ood_mmc", mmc(rep.ood_scores)},
                                 {"auroc", auroc(rep.id_scores, rep.ood_scores)},
                                 {"fpr95", fpr_at_tpr(rep.id_scores, rep.ood_scores, mcfg.fpr_tpr)},
                                 {"ece", ece(rep.id_scores, rep.id_correct, mcfg.ece_bins)},
                                 {"id_accuracy", accuracy(model, id_x, id_y)}};
        std::ofstream out(ev_out);
        if (!out) throw IoError("cannot open " + ev_out + " for writing");
        out << report.dump(2) << "\n";
        if (!ev_hist.empty()) {
            const auto id_hist = confidence_histogram(rep.id_scores, mcfg.hist_bins);
            const auto ood_hist = confidence_histogram(rep.ood_scores, mcfg.hist_bins);
            std::ofstream hist(ev_hist);
            if (!hist) throw IoError("cannot open " + ev_hist + " for writing");
            hist << "bin_lo,bin_hi,id_count,ood_count\n";
            for (std::size_t b = 0; b < id_hist.size(); ++b) {
                hist << id_hist[b].lo << "," << id_hist[b].hi << "," << id_hist[b].count
                     << "," << ood_hist[b].count << "\n";
            }
        }
        std::cout << "evaluate: " << report.dump() << "\n";
    });

    // --- run -----------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Full pipeline from a single config");
    std::string run_config;
    run_cmd->add_option("config", run_config, "Run-config JSON")->required();
    run_cmd->callback([&]() {
        const RunConfig cfg = load_config_or_default(run_config, global);
        const PipelineResult result = run_pipeline(cfg);
        std::cout << "run: out_dir=" << result.out_dir.string()
                  << " E=" << result.solve_report.final_energy
                  << " id_acc=" << result.id_accuracy << " ood_mmc=" << result.ood_mmc
                  << "\n";
    });

    // --- sweep ---------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "Ablation over modes and rho values");
    std::string sweep_config, sweep_out = "sweep.csv";
    std::vector<double> sweep_rhos = {0.10};
    std::vector<std::string> sweep_modes = {"topk"};
    sweep_cmd->add_option("config", sweep_config, "Run-config JSON")->required();
    sweep_cmd->add_option("--rhos", sweep_rhos, "Top-fraction values")->delimiter(',');
    sweep_cmd->add_option("--modes", sweep_modes, "topk,ranb,linterp,iinterp")
        ->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "CSV output");
    sweep_cmd->callback([&]() {
        const RunConfig cfg = load_config_or_default(sweep_config, global);
        std::vector<SweepMode> modes;
        for (const auto& m : sweep_modes) modes.push_back(parse_sweep_mode(m));
        const auto rows = ablation_sweep(cfg, sweep_rhos, modes);
        save_sweep_csv(sweep_out, rows);
        std::cout << "sweep: " << rows.size() << " rows -> " << sweep_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "otsing: error: " << error_category(e) << ": " << e.what() << "\n";
        return error_exit_code(e);
    }
    return 0;
}
