#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reseq/frameset.hpp"

namespace reseq {

enum class Metric { lpips, cosine, l2_image, l2_feature };

// CLI spelling: "lpips", "cosine", "l2-image", "l2-feature".
std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

// Nonnegative per-channel weights, one vector per archive layer.
struct CalibrationWeights {
    std::vector<std::string> layer_names;
    std::vector<std::vector<double>> per_layer;

    static CalibrationWeights uniform(const FeatureArchive& archive, double value = 1.0);
    // ContractError unless shapes match the archive layers and entries are finite and >= 0.
    void check_against(const FeatureArchive& archive) const;

    bool operator==(const CalibrationWeights&) const = default;
};

// JSON object {layer_name: [w...]}. Layer order follows the archive on load.
CalibrationWeights load_weights(const std::filesystem::path& path, const FeatureArchive& archive);
void save_weights(const CalibrationWeights& w, const std::filesystem::path& path);
std::string weights_to_json(const CalibrationWeights& w);
CalibrationWeights weights_from_json(std::string_view text, const FeatureArchive& archive);

// Sum over layers of the spatial mean of ||w_l * (y_i - y_j)||^2 over unit-
// normalized activations. ContractError on unnormalized archive or weight shape mismatch.
double lpips_distance(const FeatureArchive& archive, std::size_t i, std::size_t j, const CalibrationWeights& w);

// Sum over layers of (1 - spatial mean of the channel dot product).
double cosine_distance(const FeatureArchive& archive, std::size_t i, std::size_t j);

// Euclidean distance over all 3*w*h channel values.
double l2_image_distance(const FrameRecord& a, const FrameRecord& b);

// Euclidean distance between two flat feature vectors of equal length.
double l2_feature_distance(std::span<const float> a, std::span<const float> b);
double l2_feature_distance(std::span<const std::vector<float>> vecs, std::size_t i, std::size_t j);

struct MatrixOptions {
    unsigned threads = 0;  // 0 = default_thread_count()
};

// lpips / cosine / l2_feature over an archive. weights default to uniform 1.
DistanceMatrix compute_distance_matrix(const FeatureArchive& archive, Metric metric,
                                       const CalibrationWeights* weights = nullptr, const MatrixOptions& opts = {});
// l2_image over decoded frames.
DistanceMatrix compute_distance_matrix(const FrameCollection& frames, Metric metric, const MatrixOptions& opts = {});

// ---------------------------------------------------------------------------
// Calibration against two-alternative judgments.

struct JudgmentTriple {
    std::string ref_id;
    std::string distorted0_id;
    std::string distorted1_id;
    double h = 0.5;  // fraction judging distorted1 closer to the reference
};

// Judge G(d0, d1) = logistic(slope * (d0 - d1) + bias).
struct JudgeNetParams {
    double slope = 1.0;
    double bias = 0.0;
};

double judge(const JudgeNetParams& g, double d0, double d1);

// Cross-entropy of prediction judge(g,d0,d1) against target h, computed in a
// form that stays finite for saturated logits.
double judgment_loss(const JudgeNetParams& g, double d0, double d1, double h);

struct CalibrationConfig {
    double learning_rate = 0.05;
    int epochs = 200;
    std::uint64_t seed = 0;
    // 0 = full batch; otherwise mini-batches in a seed-shuffled order.
    std::size_t batch_size = 0;
};

struct CalibrationResult {
    CalibrationWeights weights;
    JudgeNetParams judge;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int best_epoch = 0;  // 0 = initial parameters were never improved on
};

// Mean cross-entropy over judgments for given parameters.
double calibration_loss(const FeatureArchive& archive, std::span<const JudgmentTriple> judgments,
                        const CalibrationWeights& w, const JudgeNetParams& g);

// Gradient of calibration_loss with respect to every weight entry (layer-major)
// followed by slope and bias.
std::vector<double> calibration_gradient(const FeatureArchive& archive, std::span<const JudgmentTriple> judgments,
                                         const CalibrationWeights& w, const JudgeNetParams& g);

// Gradient descent on (weights, slope, bias) from weights = 1, slope = 1,
// bias = 0. Weights are clamped at 0 after each step. Returns the best
// parameters seen, so final_loss <= initial_loss.
CalibrationResult fit_calibration(const FeatureArchive& archive, std::span<const JudgmentTriple> judgments,
                                  const CalibrationConfig& config);

// JSON list [{"ref":..., "d0":..., "d1":..., "h":...}].
std::vector<JudgmentTriple> load_judgments(const std::filesystem::path& path);

}  // namespace reseq
