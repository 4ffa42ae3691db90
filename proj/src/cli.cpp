#include "reseq/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "reseq/errors.hpp"
#include "reseq/evalkit.hpp"
#include "reseq/json_util.hpp"
#include "reseq/layout.hpp"
#include "reseq/parallel.hpp"
#include "reseq/pipeline.hpp"
#include "reseq/server.hpp"

namespace reseq {

namespace fs = std::filesystem;

namespace {

// Flags shared by the pipeline subcommands. Unset optionals leave the config
// file (or built-in default) value alone.
struct CommonFlags {
    std::string config;
    std::optional<std::string> images;
    std::optional<std::string> features;
    std::optional<std::string> matrix;
    std::optional<std::string> weights;
    std::optional<std::string> metric;
    std::optional<int> k;
    std::optional<double> q;
    std::optional<std::uint64_t> fit_seed;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> exact_threshold;
    std::optional<int> two_opt_passes;
    std::vector<std::string> exclude;
    std::optional<unsigned> threads;
    bool no_prune = false;
};

void add_input_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON project config; flags override its values");
    cmd->add_option("--images", f.images, "directory of PNG/JPEG frames");
    cmd->add_option("--features", f.features, "PFA1 feature archive");
    cmd->add_option("--matrix", f.matrix, "PDM1 distance matrix to use instead of computing one");
    cmd->add_option("--weights", f.weights, "calibration weights JSON (lpips)");
    cmd->add_option("--metric", f.metric, "lpips | cosine | l2-image | l2-feature");
    cmd->add_option("--exclude", f.exclude, "frame ids to leave out")->delimiter(',');
    cmd->add_option("--threads", f.threads, "worker threads (capped by RESEQ_THREADS)");
}

void add_prune_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--k", f.k, "nearest neighbours in the outlier statistic (default 5)");
    cmd->add_option("--q", f.q, "quantile of the fitted distribution used as threshold (default 0.9)");
    cmd->add_option("--fit-seed", f.fit_seed, "seed for the distribution fit restarts");
}

void add_solver_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_flag("--no-prune", f.no_prune, "skip outlier pruning");
    cmd->add_option("--seed", f.seed, "solver seed");
    cmd->add_option("--exact-threshold", f.exact_threshold, "largest frame count solved exactly");
    cmd->add_option("--two-opt-passes", f.two_opt_passes, "local-search sweep cap per start");
}

// An explicit thread count is still capped by RESEQ_THREADS.
unsigned capped_threads(unsigned requested) {
    const char* cap = std::getenv("RESEQ_THREADS");
    if (requested == 0 || !cap) return requested;
    try {
        const long v = std::stol(cap);
        if (v >= 1) return std::min<unsigned>(requested, static_cast<unsigned>(v));
    } catch (const std::exception&) {
    }
    return requested;
}

ProjectConfig make_config(const CommonFlags& f) {
    ProjectConfig c = f.config.empty() ? ProjectConfig{} : load_project_config(f.config);
    if (f.images) c.images = *f.images;
    if (f.features) c.features = *f.features;
    if (f.matrix) c.matrix = *f.matrix;
    if (f.weights) c.weights = *f.weights;
    if (f.metric) c.metric = parse_metric(*f.metric);
    if (f.k) c.k = *f.k;
    if (f.q) c.q = *f.q;
    if (f.fit_seed) c.fit_seed = *f.fit_seed;
    if (f.seed) c.solver.seed = *f.seed;
    if (f.exact_threshold) c.solver.exact_threshold = *f.exact_threshold;
    if (f.two_opt_passes) c.solver.two_opt_passes = *f.two_opt_passes;
    if (!f.exclude.empty()) c.excluded = f.exclude;
    if (f.threads) c.threads = *f.threads;
    if (f.no_prune) c.no_prune = true;
    c.threads = capped_threads(c.threads);
    resolve_inputs(c);
    return c;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestError(path, "cannot open for writing");
    f << text;
    if (!f) throw IngestError(path, "write failed");
}

std::string read_text(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

// Matrix over the frames that survive pruning (or all of them with no_prune).
DistanceMatrix surviving_matrix(const ProjectConfig& c, const FrameCollection& frames) {
    DistanceMatrix m = obtain_matrix(c, frames);
    if (c.no_prune) return m;
    return prune_outliers(m, prune_config(c)).matrix;
}

struct ErrorInfo {
    int code = kExitFailure;
    std::string kind = "internal";
    std::string message;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

ErrorInfo classify(const std::exception& e) {
    ErrorInfo info;
    info.message = e.what();
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        info.kind = err->kind();
        if (dynamic_cast<const PruneError*>(err)) {
            info.code = kExitPruned;
        } else if (dynamic_cast<const BindError*>(err)) {
            info.code = kExitBind;
        } else if (dynamic_cast<const ContractError*>(err) || dynamic_cast<const IngestError*>(err) ||
                   dynamic_cast<const FormatError*>(err) || dynamic_cast<const ValidationError*>(err)) {
            info.code = kExitUsage;
        }
        if (const auto* fe = dynamic_cast<const FormatError*>(err)) info.extra["offset"] = fe->offset();
        if (const auto* ie = dynamic_cast<const IngestError*>(err)) info.extra["path"] = ie->path();
        if (const auto* ve = dynamic_cast<const ValidationError*>(err)) {
            info.extra["row"] = ve->row();
            info.extra["col"] = ve->col();
        }
    }
    return info;
}

void report_error(const ErrorInfo& info, bool json, std::ostream& err) {
    if (json) {
        nlohmann::ordered_json j = {{"kind", info.kind}, {"message", info.message}, {"exit_code", info.code}};
        for (const auto& [k, v] : info.extra.items()) j[k] = v;
        err << nlohmann::ordered_json{{"error", j}}.dump() << "\n";
    } else {
        std::string line = info.message;
        std::replace(line.begin(), line.end(), '\n', ' ');
        err << "reseq: " << info.kind << " error: " << line << "\n";
    }
}

std::vector<EvalCase> load_eval_cases(const fs::path& root, const ProjectConfig& c,
                                      const std::vector<std::string>& skip, std::vector<std::string>& excluded) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IngestError(root.string(), "cases root is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<EvalCase> cases;
    for (const auto& dir : dirs) {
        const std::string name = dir.filename().string();
        if (std::find(skip.begin(), skip.end(), name) != skip.end()) {
            excluded.push_back(name);
            continue;
        }
        EvalCase ec_;
        ec_.name = name;
        const auto files = list_image_files(dir);
        if (!files.empty()) ec_.frames = ingest_images(files, c.threads);
        const fs::path feat = dir / "features.pfa1";
        if (fs::exists(feat)) {
            FeatureArchive a = load_archive(feat);
            if (!a.normalized()) a = channel_unit_normalize(a);
            if (c.weights) ec_.weights = load_weights(*c.weights, a);
            ec_.features = std::move(a);
        }
        cases.push_back(std::move(ec_));
    }
    return cases;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"reseq: perceptual resequencing of image collections"};
    app.require_subcommand(1);
    app.fallthrough();
    bool json_errors = false;
    app.add_flag("--json-errors", json_errors, "print errors as one JSON line");

    CommonFlags f;

    auto* dist = app.add_subcommand("dist", "compute the pairwise distance matrix (PDM1)");
    std::string dist_out;
    add_input_flags(dist, f);
    dist->add_option("--out,-o", dist_out, "output PDM1 path")->required();

    auto* prune = app.add_subcommand("prune", "remove outlier frames");
    std::string prune_out;
    std::string prune_report;
    add_input_flags(prune, f);
    add_prune_flags(prune, f);
    prune->add_option("--out,-o", prune_out, "pruned PDM1 path");
    prune->add_option("--report", prune_report, "report JSON path (default stdout)");

    std::string seq_out;
    std::string export_dir;
    auto add_seq_cmd = [&](const char* name, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        add_input_flags(cmd, f);
        add_prune_flags(cmd, f);
        add_solver_flags(cmd, f);
        cmd->add_option("--out,-o", seq_out, "sequence JSON path (default stdout)");
        cmd->add_option("--export-frames", export_dir, "copy frames as 000001.png, ... in sequence order");
        return cmd;
    };
    std::optional<std::string> start;
    std::optional<std::string> end;
    std::vector<std::string> keyframes;
    auto* path = add_seq_cmd("path", "shortest Hamiltonian path");
    path->add_option("--start", start, "first frame id");
    path->add_option("--end", end, "last frame id");
    auto* cycle = add_seq_cmd("cycle", "shortest Hamiltonian cycle (loop)");
    auto* keys = add_seq_cmd("keyframes", "in-betweens along the spanning tree");
    keys->add_option("--frames", keyframes, "key-frame ids in order")->delimiter(',')->required();

    auto* eval = app.add_subcommand("eval", "reconstruction benchmark over ordered cases");
    std::string cases_root;
    std::vector<std::string> eval_metrics{"l2-image"};
    std::vector<std::string> skip_cases;
    std::uint64_t shuffle_seed = 0;
    std::string eval_csv;
    std::string eval_json;
    add_input_flags(eval, f);
    add_solver_flags(eval, f);
    eval->add_option("--cases", cases_root, "directory with one subdirectory per ordered case")->required();
    eval->add_option("--metrics", eval_metrics, "metrics to compare")->delimiter(',');
    eval->add_option("--exclude-case", skip_cases, "case names to leave out")->delimiter(',');
    eval->add_option("--shuffle-seed", shuffle_seed, "seed for shuffling each case");
    eval->add_option("--csv", eval_csv, "per-case CSV path");
    eval->add_option("--out,-o", eval_json, "report JSON path (default stdout)");

    auto* layout = app.add_subcommand("layout", "composite images and the 2D tree embedding");
    std::string layout_seq;
    std::string layout_style = "linear";
    std::string layout_out;
    std::string embed_out;
    int gutter = 8;
    add_input_flags(layout, f);
    add_prune_flags(layout, f);
    add_solver_flags(layout, f);
    layout->add_option("--sequence", layout_seq, "sequence JSON to lay out");
    layout->add_option("--style", layout_style, "linear | radial");
    layout->add_option("--gutter", gutter, "pixels between frames in a linear strip");
    layout->add_option("--out,-o", layout_out, "composite PNG path");
    layout->add_option("--embedding", embed_out, "write the tree embedding JSON here");

    auto* calibrate = app.add_subcommand("calibrate", "fit per-channel lpips weights to judgments");
    std::string judgments_path;
    std::string weights_out;
    CalibrationConfig calib;
    add_input_flags(calibrate, f);
    calibrate->add_option("--judgments", judgments_path, "JSON list of {ref, d0, d1, h}")->required();
    calibrate->add_option("--out,-o", weights_out, "weights JSON path")->required();
    calibrate->add_option("--epochs", calib.epochs, "gradient steps");
    calibrate->add_option("--learning-rate", calib.learning_rate, "step size");
    calibrate->add_option("--batch-size", calib.batch_size, "0 = full batch");
    calibrate->add_option("--seed", calib.seed, "mini-batch shuffle seed");

    auto* serve = app.add_subcommand("serve", "HTTP API for the studio");
    std::string host = "127.0.0.1";
    int port = 8080;
    add_input_flags(serve, f);
    add_prune_flags(serve, f);
    add_solver_flags(serve, f);
    serve->add_option("--host", host, "listen address");
    serve->add_option("--port", port, "listen port (0 = any free port)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        ErrorInfo info;
        info.code = kExitUsage;
        info.kind = "usage";
        info.message = e.what();
        report_error(info, json_errors, err);
        return kExitUsage;
    }

    try {
        if (dist->parsed()) {
            const ProjectConfig c = make_config(f);
            const DistanceMatrix m = compute_matrix(c, load_frames(c));
            save_matrix(m, dist_out);
        } else if (prune->parsed()) {
            const ProjectConfig c = make_config(f);
            const PruneOutcome r = prune_outliers(obtain_matrix(c, load_frames(c)), prune_config(c));
            if (!prune_out.empty()) save_matrix(r.matrix, prune_out);
            write_text(prune_report, prune_report_to_json(r.report), out);
        } else if (path->parsed() || cycle->parsed() || keys->parsed()) {
            const ProjectConfig c = make_config(f);
            const FrameCollection frames = load_frames(c);
            const CompleteGraph g = build_graph(surviving_matrix(c, frames));
            SequenceResult r;
            if (path->parsed()) {
                r = shortest_hamiltonian_path(g, start, end, c.solver);
            } else if (cycle->parsed()) {
                r = shortest_hamiltonian_cycle(g, c.solver);
            } else {
                r = keyframe_path(minimum_spanning_tree(g), g, keyframes);
            }
            write_text(seq_out, sequence_to_json(r), out);
            if (!export_dir.empty()) export_frames(r, frames, export_dir);
        } else if (eval->parsed()) {
            const ProjectConfig c = make_config(f);
            std::vector<Metric> metrics;
            for (const auto& name : eval_metrics) metrics.push_back(parse_metric(name));
            std::vector<std::string> excluded;
            const auto cases = load_eval_cases(cases_root, c, skip_cases, excluded);
            ReconstructionConfig rc;
            rc.shuffle_seed = shuffle_seed;
            rc.solver = c.solver;
            rc.matrix.threads = c.threads;
            const EvalReport report = run_suite(cases, metrics, rc, excluded);
            if (!eval_csv.empty()) write_text(eval_csv, eval_report_csv(report), out);
            write_text(eval_json, eval_report_json(report), out);
        } else if (layout->parsed()) {
            if (layout_out.empty() && embed_out.empty()) {
                throw ContractError("layout needs --out (composite PNG) and/or --embedding (JSON)");
            }
            const ProjectConfig c = make_config(f);
            const FrameCollection frames = load_frames(c);
            if (!layout_out.empty()) {
                if (layout_seq.empty()) throw ContractError("layout --out needs --sequence");
                LayoutOptions opts;
                opts.gutter = gutter;
                render_layout(sequence_from_json(read_text(layout_seq)), frames, parse_layout_style(layout_style),
                              layout_out, opts);
            }
            if (!embed_out.empty()) {
                const CompleteGraph g = build_graph(surviving_matrix(c, frames));
                const MstTree t = minimum_spanning_tree(g);
                write_text(embed_out, embedding_to_json(embed_mst_2d(t, g.matrix(), {c.embed_matrix_distances})),
                           out);
            }
        } else if (calibrate->parsed()) {
            const ProjectConfig c = make_config(f);
            if (!c.features) throw ContractError("calibrate needs a feature archive (--features)");
            FeatureArchive archive = load_archive(*c.features);
            if (!archive.normalized()) archive = channel_unit_normalize(archive);
            const auto judgments = load_judgments(judgments_path);
            const CalibrationResult r = fit_calibration(archive, judgments, calib);
            save_weights(r.weights, weights_out);
            nlohmann::ordered_json j = {{"initial_loss", r.initial_loss}, {"final_loss", r.final_loss},
                                        {"best_epoch", r.best_epoch},     {"slope", r.judge.slope},
                                        {"bias", r.judge.bias}};
            out << dump_json(j);
        } else if (serve->parsed()) {
            const ProjectConfig c = make_config(f);
            EngineServer server(build_snapshot(c), [c] { return build_snapshot(c); });
            const int bound = server.bind(host, port);
            out << "listening on http://" << host << ":" << bound << std::endl;
            server.run();
        }
    } catch (const std::exception& e) {
        const ErrorInfo info = classify(e);
        report_error(info, json_errors, err);
        return info.code;
    }
    return kExitOk;
}

}  // namespace reseq
