#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reseq/frameset.hpp"
#include "reseq/graphseq.hpp"
#include "reseq/layout.hpp"
#include "reseq/metrics.hpp"
#include "reseq/outliers.hpp"

namespace reseq {

// Everything a pipeline run needs. Loaded from a JSON document, then
// overridden by command-line flags.
struct ProjectConfig {
    std::optional<std::filesystem::path> images;    // directory of PNG/JPEG frames
    std::optional<std::filesystem::path> features;  // PFA1 archive
    std::optional<std::filesystem::path> matrix;    // PDM1 input; skips distance computation
    std::optional<std::filesystem::path> weights;   // calibration weights JSON
    Metric metric = Metric::l2_image;
    int k = 5;
    double q = 0.9;
    std::uint64_t fit_seed = 0;
    SolverConfig solver;
    std::vector<std::string> excluded;
    unsigned threads = 0;  // 0 = default_thread_count()
    bool no_prune = false;
    bool embed_matrix_distances = false;
};

// Keys: images, features, matrix, weights, metric, k, q, fit_seed,
// solver{seed, exact_threshold, two_opt_passes}, exclude, threads, no_prune,
// embed_matrix_distances. Relative paths resolve against base_dir. Unknown
// keys are a ContractError so typos do not pass silently.
ProjectConfig project_config_from_json(const std::string& text, const std::filesystem::path& base_dir);
ProjectConfig load_project_config(const std::filesystem::path& path);

// Makes every input path absolute and checks it exists (IngestError otherwise).
void resolve_inputs(ProjectConfig& config);

// Decoded frames when an image directory is configured; otherwise id-only
// records taken from the matrix or archive.
FrameCollection load_frames(const ProjectConfig& config);

// Distances for the configured metric. lpips, cosine and l2-feature read the
// archive; l2-image reads the decoded frames. Excluded ids are dropped.
DistanceMatrix compute_matrix(const ProjectConfig& config, const FrameCollection& frames);

// The configured PDM1 if any, otherwise compute_matrix. Excluded ids are dropped.
DistanceMatrix obtain_matrix(const ProjectConfig& config, const FrameCollection& frames);

PruneConfig prune_config(const ProjectConfig& config);

// Immutable bundle served over HTTP. Everything derived from one matrix.
struct EngineSnapshot {
    ProjectConfig config;
    FrameCollection frames;
    std::optional<PruneReport> prune;  // empty when pruning is disabled
    CompleteGraph graph;               // surviving frames
    MstTree tree;
    Embedding2D embedding;
    CompleteGraph full_graph;          // before pruning
    MstTree full_tree;
};

std::shared_ptr<const EngineSnapshot> build_snapshot(const ProjectConfig& config);

// Body: {"kind": "path"|"cycle"|"keyframe", "keyframes": [...], "start": id,
// "end": id, "no_prune": bool}. kind defaults to keyframe when keyframes are
// given, path otherwise. ContractError on malformed requests or unknown ids.
SequenceResult solve_request(const EngineSnapshot& snap, const nlohmann::json& body);

// JSON documents served by the API.
std::string frames_json(const EngineSnapshot& snap);
std::string mst_json(const MstTree& tree);
std::string outliers_json(const EngineSnapshot& snap);

// Writes 000001.<ext>, 000002.<ext>, ... in sequence order. Copies the source
// file when there is one, otherwise encodes the pixels as PNG. Returns the
// written paths.
std::vector<std::filesystem::path> export_frames(const SequenceResult& seq, const FrameCollection& frames,
                                                 const std::filesystem::path& dir);

}  // namespace reseq
