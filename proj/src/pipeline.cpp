#include "reseq/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "reseq/errors.hpp"
#include "reseq/image_io.hpp"
#include "reseq/json_util.hpp"

namespace reseq {

namespace fs = std::filesystem;

namespace {

template <class T>
T get_as(const nlohmann::json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ContractError(std::string("config key '") + key + "' has the wrong type");
    }
}

fs::path resolve_against(const fs::path& p, const fs::path& base) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

FeatureArchive load_metric_archive(const ProjectConfig& config) {
    FeatureArchive archive = load_archive(*config.features);
    const bool needs_unit = config.metric == Metric::lpips || config.metric == Metric::cosine;
    if (needs_unit && !archive.normalized()) archive = channel_unit_normalize(archive);
    return archive;
}

DistanceMatrix drop_excluded(DistanceMatrix m, const std::vector<std::string>& excluded) {
    if (excluded.empty()) return m;
    return m.without(excluded);
}

std::string extension_of(const FrameRecord& rec) {
    if (rec.source_path) {
        std::string ext = fs::path(*rec.source_path).extension().string();
        if (!ext.empty()) return ext;
    }
    return ".png";
}

}  // namespace

ProjectConfig project_config_from_json(const std::string& text, const fs::path& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(e.byte, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("config must be a JSON object");

    ProjectConfig c;
    for (const auto& [key, value] : j.items()) {
        const char* k = key.c_str();
        if (key == "images") {
            c.images = resolve_against(get_as<std::string>(value, k), base_dir);
        } else if (key == "features") {
            c.features = resolve_against(get_as<std::string>(value, k), base_dir);
        } else if (key == "matrix") {
            c.matrix = resolve_against(get_as<std::string>(value, k), base_dir);
        } else if (key == "weights") {
            c.weights = resolve_against(get_as<std::string>(value, k), base_dir);
        } else if (key == "metric") {
            c.metric = parse_metric(get_as<std::string>(value, k));
        } else if (key == "k") {
            c.k = get_as<int>(value, k);
        } else if (key == "q") {
            c.q = get_as<double>(value, k);
        } else if (key == "fit_seed") {
            c.fit_seed = get_as<std::uint64_t>(value, k);
        } else if (key == "exclude") {
            c.excluded = get_as<std::vector<std::string>>(value, k);
        } else if (key == "threads") {
            c.threads = get_as<unsigned>(value, k);
        } else if (key == "no_prune") {
            c.no_prune = get_as<bool>(value, k);
        } else if (key == "embed_matrix_distances") {
            c.embed_matrix_distances = get_as<bool>(value, k);
        } else if (key == "solver") {
            if (!value.is_object()) throw ContractError("config key 'solver' must be an object");
            for (const auto& [sk, sv] : value.items()) {
                if (sk == "seed") {
                    c.solver.seed = get_as<std::uint64_t>(sv, "solver.seed");
                } else if (sk == "exact_threshold") {
                    c.solver.exact_threshold = get_as<std::size_t>(sv, "solver.exact_threshold");
                } else if (sk == "two_opt_passes") {
                    c.solver.two_opt_passes = get_as<int>(sv, "solver.two_opt_passes");
                } else {
                    throw ContractError("unknown config key 'solver." + sk + "'");
                }
            }
        } else {
            throw ContractError("unknown config key '" + key + "'");
        }
    }
    return c;
}

ProjectConfig load_project_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(path.string(), "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return project_config_from_json(ss.str(), fs::absolute(path).parent_path());
}

void resolve_inputs(ProjectConfig& config) {
    for (auto* p : {&config.images, &config.features, &config.matrix, &config.weights}) {
        if (!*p) continue;
        **p = fs::absolute(**p).lexically_normal();
        std::error_code ec;
        if (!fs::exists(**p, ec)) throw IngestError((*p)->string(), "no such file or directory");
    }
    if (config.k < 1) throw ContractError("k must be >= 1");
    if (!(config.q > 0.0 && config.q < 1.0)) throw ContractError("q must lie in (0,1)");
}

FrameCollection load_frames(const ProjectConfig& config) {
    if (config.images) {
        const auto files = list_image_files(*config.images);
        if (files.empty()) throw IngestError(config.images->string(), "no PNG or JPEG files");
        return ingest_images(files, config.threads);
    }
    FrameCollection out;
    std::vector<std::string> ids;
    if (config.matrix) {
        ids = load_matrix(*config.matrix).frame_ids();
        out.source_kind = SourceKind::distances;
    } else if (config.features) {
        ids = load_archive(*config.features).frame_ids();
        out.source_kind = SourceKind::features;
    } else {
        throw ContractError("no input: give an image directory, a feature archive or a distance matrix");
    }
    for (auto& id : ids) out.frames.push_back({std::move(id), std::nullopt, std::nullopt});
    return out;
}

DistanceMatrix compute_matrix(const ProjectConfig& config, const FrameCollection& frames) {
    const MatrixOptions opts{config.threads};
    if (config.metric == Metric::l2_image) {
        if (!config.images) throw ContractError("l2-image needs an image directory (--images)");
        return drop_excluded(compute_distance_matrix(frames, config.metric, opts), config.excluded);
    }
    if (!config.features) {
        throw ContractError(std::string(metric_name(config.metric)) + " needs a feature archive (--features)");
    }
    const FeatureArchive archive = load_metric_archive(config);
    std::optional<CalibrationWeights> w;
    if (config.weights) {
        if (config.metric != Metric::lpips) throw ContractError("calibration weights only apply to lpips");
        w = load_weights(*config.weights, archive);
    }
    return drop_excluded(compute_distance_matrix(archive, config.metric, w ? &*w : nullptr, opts), config.excluded);
}

DistanceMatrix obtain_matrix(const ProjectConfig& config, const FrameCollection& frames) {
    if (config.matrix) return drop_excluded(load_matrix(*config.matrix), config.excluded);
    return compute_matrix(config, frames);
}

PruneConfig prune_config(const ProjectConfig& config) {
    PruneConfig pc;
    pc.k = config.k;
    pc.q = config.q;
    pc.fit.seed = config.fit_seed;
    return pc;
}

std::shared_ptr<const EngineSnapshot> build_snapshot(const ProjectConfig& config) {
    FrameCollection frames = load_frames(config);
    auto full = std::make_shared<const DistanceMatrix>(obtain_matrix(config, frames));
    std::optional<PruneReport> report;
    std::shared_ptr<const DistanceMatrix> surviving = full;
    if (!config.no_prune) {
        PruneOutcome outcome = prune_outliers(*full, prune_config(config));
        report = std::move(outcome.report);
        surviving = std::make_shared<const DistanceMatrix>(std::move(outcome.matrix));
    }
    CompleteGraph graph = build_graph(surviving);
    MstTree tree = minimum_spanning_tree(graph);
    Embedding2D embedding = embed_mst_2d(tree, *surviving, {config.embed_matrix_distances});
    CompleteGraph full_graph = build_graph(full);
    MstTree full_tree = minimum_spanning_tree(full_graph);
    return std::make_shared<const EngineSnapshot>(EngineSnapshot{
        .config = config,
        .frames = std::move(frames),
        .prune = std::move(report),
        .graph = std::move(graph),
        .tree = std::move(tree),
        .embedding = std::move(embedding),
        .full_graph = std::move(full_graph),
        .full_tree = std::move(full_tree),
    });
}

SequenceResult solve_request(const EngineSnapshot& snap, const nlohmann::json& body) {
    if (!body.is_object()) throw ContractError("sequence request must be a JSON object");
    auto str = [&](const char* key) -> std::optional<std::string> {
        if (!body.contains(key) || body[key].is_null()) return std::nullopt;
        if (!body[key].is_string()) throw ContractError(std::string("'") + key + "' must be a string");
        return body[key].get<std::string>();
    };
    std::vector<std::string> keyframes;
    if (body.contains("keyframes") && !body["keyframes"].is_null()) {
        const auto& kf = body["keyframes"];
        if (!kf.is_array()) throw ContractError("'keyframes' must be an array of ids");
        for (const auto& v : kf) {
            if (!v.is_string()) throw ContractError("'keyframes' must be an array of ids");
            keyframes.push_back(v.get<std::string>());
        }
    }
    bool no_prune = false;
    if (body.contains("no_prune") && !body["no_prune"].is_null()) {
        if (!body["no_prune"].is_boolean()) throw ContractError("'no_prune' must be a boolean");
        no_prune = body["no_prune"].get<bool>();
    }
    const std::string kind = str("kind").value_or(keyframes.empty() ? "path" : "keyframe");
    const CompleteGraph& g = no_prune ? snap.full_graph : snap.graph;
    const MstTree& t = no_prune ? snap.full_tree : snap.tree;
    if (kind == "keyframe" || kind == "keyframes") {
        return keyframe_path(t, g, keyframes);
    }
    if (!keyframes.empty()) throw ContractError("keyframes only apply to kind 'keyframe'");
    if (kind == "path") return shortest_hamiltonian_path(g, str("start"), str("end"), snap.config.solver);
    if (kind == "cycle") {
        if (str("start") || str("end")) throw ContractError("a cycle takes no start or end");
        return shortest_hamiltonian_cycle(g, snap.config.solver);
    }
    throw ContractError("unknown sequence kind '" + kind + "' (expected path, cycle or keyframe)");
}

std::string frames_json(const EngineSnapshot& snap) {
    std::set<std::string> removed;
    if (snap.prune) removed.insert(snap.prune->removed_ids.begin(), snap.prune->removed_ids.end());
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& id : snap.full_graph.matrix().frame_ids()) {
        arr.push_back({{"id", id}, {"outlier", removed.count(id) > 0}});
    }
    return dump_json(arr);
}

std::string mst_json(const MstTree& tree) {
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& e : tree.edges()) {
        edges.push_back({{"u", tree.ids()[e.u]}, {"v", tree.ids()[e.v]}, {"weight", e.weight}});
    }
    nlohmann::ordered_json j = {{"nodes", tree.ids()}, {"edges", edges}, {"total_weight", tree.total_weight()}};
    return dump_json(j);
}

std::string outliers_json(const EngineSnapshot& snap) {
    if (snap.prune) return prune_report_to_json(*snap.prune);
    nlohmann::ordered_json j = {{"removed", nlohmann::ordered_json::array()},
                                {"kept", snap.full_graph.matrix().frame_ids()},
                                {"pruning", "disabled"}};
    return dump_json(j);
}

std::vector<fs::path> export_frames(const SequenceResult& seq, const FrameCollection& frames, const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (std::size_t i = 0; i < seq.order.size(); ++i) {
        const auto& rec = frames.frames[frames.index_of(seq.order[i])];
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu", i + 1);
        const fs::path out = dir / (std::string(name) + extension_of(rec));
        if (rec.source_path) {
            fs::copy_file(*rec.source_path, out, fs::copy_options::overwrite_existing);
        } else if (rec.pixels) {
            write_png(*rec.pixels, out);
        } else {
            throw ContractError("frame '" + rec.id + "' has no image to export");
        }
        written.push_back(out);
    }
    return written;
}

}  // namespace reseq
