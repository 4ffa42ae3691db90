#include "reseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reseq/errors.hpp"
#include "reseq/kernels.hpp"
#include "reseq/parallel.hpp"

namespace reseq {

using nlohmann::json;

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::lpips: return "lpips";
        case Metric::cosine: return "cosine";
        case Metric::l2_image: return "l2-image";
        case Metric::l2_feature: return "l2-feature";
    }
    return "unknown";
}

Metric parse_metric(std::string_view name) {
    for (Metric m : {Metric::lpips, Metric::cosine, Metric::l2_image, Metric::l2_feature}) {
        if (metric_name(m) == name) return m;
    }
    throw ContractError("unknown metric '" + std::string(name) + "' (expected lpips, cosine, l2-image, l2-feature)");
}

// ---------------------------------------------------------------------------
// Weights

CalibrationWeights CalibrationWeights::uniform(const FeatureArchive& archive, double value) {
    CalibrationWeights w;
    for (const auto& l : archive.layers()) {
        w.layer_names.push_back(l.name);
        w.per_layer.emplace_back(l.c, value);
    }
    return w;
}

void CalibrationWeights::check_against(const FeatureArchive& archive) const {
    const auto& layers = archive.layers();
    if (per_layer.size() != layers.size()) {
        throw ContractError("calibration weights have " + std::to_string(per_layer.size()) + " layers, archive has " +
                            std::to_string(layers.size()));
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (per_layer[l].size() != layers[l].c) {
            throw ContractError("calibration weights for layer '" + layers[l].name + "' have length " +
                                std::to_string(per_layer[l].size()) + ", expected " + std::to_string(layers[l].c));
        }
        for (double v : per_layer[l]) {
            if (!std::isfinite(v) || v < 0.0) {
                throw ContractError("calibration weight for layer '" + layers[l].name + "' is negative or non-finite");
            }
        }
    }
}

std::string weights_to_json(const CalibrationWeights& w) {
    json j = json::object();
    for (std::size_t l = 0; l < w.per_layer.size(); ++l) j[w.layer_names.at(l)] = w.per_layer[l];
    return j.dump(2);
}

CalibrationWeights weights_from_json(std::string_view text, const FeatureArchive& archive) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(e.byte, std::string("calibration weights are not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("calibration weights must be a JSON object");
    CalibrationWeights w;
    for (const auto& layer : archive.layers()) {
        if (!j.contains(layer.name)) throw ContractError("calibration weights missing layer '" + layer.name + "'");
        try {
            w.per_layer.push_back(j.at(layer.name).get<std::vector<double>>());
        } catch (const json::exception&) {
            throw FormatError("calibration weights for layer '" + layer.name + "' must be a number array");
        }
        w.layer_names.push_back(layer.name);
    }
    if (j.size() != archive.layers().size()) {
        throw ContractError("calibration weights name layers that the archive does not have");
    }
    w.check_against(archive);
    return w;
}

CalibrationWeights load_weights(const std::filesystem::path& path, const FeatureArchive& archive) {
    const auto bytes = read_file_bytes(path);
    return weights_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), archive);
}

void save_weights(const CalibrationWeights& w, const std::filesystem::path& path) {
    const std::string text = weights_to_json(w) + "\n";
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------
// Pairwise distances

namespace {

void require_normalized(const FeatureArchive& archive, const char* metric) {
    if (!archive.normalized()) {
        throw ContractError(std::string(metric) + " requires a channel-normalized feature archive");
    }
}

void require_index(const FeatureArchive& archive, std::size_t i) {
    if (i >= archive.frame_count()) throw ContractError("frame index " + std::to_string(i) + " out of range");
}

double lpips_unchecked(const FeatureArchive& archive, std::size_t i, std::size_t j, const CalibrationWeights& w) {
    const auto& ks = kernels::active();
    double total = 0.0;
    for (std::size_t l = 0; l < archive.layers().size(); ++l) {
        const auto& spec = archive.layers()[l];
        const std::size_t hw = spec.spatial();
        const auto a = archive.tensor(i, l);
        const auto b = archive.tensor(j, l);
        const auto& wl = w.per_layer[l];
        double layer = 0.0;
        for (std::size_t c = 0; c < spec.c; ++c) {
            if (wl[c] == 0.0) continue;
            layer += wl[c] * wl[c] * ks.sum_sq_diff(a.data() + c * hw, b.data() + c * hw, hw);
        }
        total += layer / static_cast<double>(hw);
    }
    return total;
}

double cosine_unchecked(const FeatureArchive& archive, std::size_t i, std::size_t j) {
    const auto& ks = kernels::active();
    double total = 0.0;
    for (std::size_t l = 0; l < archive.layers().size(); ++l) {
        const auto a = archive.tensor(i, l);
        const auto b = archive.tensor(j, l);
        total += 1.0 - ks.dot(a.data(), b.data(), a.size()) / static_cast<double>(archive.layers()[l].spatial());
    }
    return total;
}

void require_same_raster_shape(const FrameRecord& a, const FrameRecord& b) {
    if (!a.pixels || !b.pixels) {
        throw ContractError("l2-image needs pixels for frames '" + a.id + "' and '" + b.id + "'");
    }
    if (a.pixels->width != b.pixels->width || a.pixels->height != b.pixels->height) {
        throw ContractError("l2-image needs equal dimensions: '" + a.id + "' is " + std::to_string(a.pixels->width) +
                            "x" + std::to_string(a.pixels->height) + ", '" + b.id + "' is " +
                            std::to_string(b.pixels->width) + "x" + std::to_string(b.pixels->height));
    }
}

// Fills the upper triangle pair-by-pair. Each pair writes only its own two
// cells, so the result is the same for any schedule.
template <class PairFn>
void fill_pairs(DistanceMatrix& m, unsigned threads, PairFn&& fn) {
    const std::size_t n = m.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - (n > 0 ? 1 : 0)) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    parallel_for(pairs.size(), threads, [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        const double d = fn(i, j);
        if (!std::isfinite(d)) {
            throw ContractError("non-finite distance between '" + m.frame_ids()[i] + "' and '" + m.frame_ids()[j] + "'");
        }
        m.set_symmetric(i, j, static_cast<float>(std::max(0.0, d)));
    });
}

}  // namespace

double lpips_distance(const FeatureArchive& archive, std::size_t i, std::size_t j, const CalibrationWeights& w) {
    require_normalized(archive, "lpips");
    require_index(archive, i);
    require_index(archive, j);
    w.check_against(archive);
    return lpips_unchecked(archive, i, j, w);
}

double cosine_distance(const FeatureArchive& archive, std::size_t i, std::size_t j) {
    require_normalized(archive, "cosine");
    require_index(archive, i);
    require_index(archive, j);
    return cosine_unchecked(archive, i, j);
}

double l2_image_distance(const FrameRecord& a, const FrameRecord& b) {
    require_same_raster_shape(a, b);
    return std::sqrt(kernels::sum_sq_diff(a.pixels->rgb, b.pixels->rgb));
}

double l2_feature_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw ContractError("l2-feature vectors differ in length: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    }
    return std::sqrt(kernels::sum_sq_diff(a, b));
}

double l2_feature_distance(std::span<const std::vector<float>> vecs, std::size_t i, std::size_t j) {
    if (i >= vecs.size() || j >= vecs.size()) throw ContractError("feature vector index out of range");
    return l2_feature_distance(vecs[i], vecs[j]);
}

DistanceMatrix compute_distance_matrix(const FeatureArchive& archive, Metric metric, const CalibrationWeights* weights,
                                       const MatrixOptions& opts) {
    DistanceMatrix m(archive.frame_ids(), std::string(metric_name(metric)));
    switch (metric) {
        case Metric::lpips: {
            require_normalized(archive, "lpips");
            const CalibrationWeights w = weights ? *weights : CalibrationWeights::uniform(archive);
            w.check_against(archive);
            fill_pairs(m, opts.threads, [&](std::size_t i, std::size_t j) { return lpips_unchecked(archive, i, j, w); });
            break;
        }
        case Metric::cosine:
            require_normalized(archive, "cosine");
            fill_pairs(m, opts.threads, [&](std::size_t i, std::size_t j) { return cosine_unchecked(archive, i, j); });
            break;
        case Metric::l2_feature:
            fill_pairs(m, opts.threads, [&](std::size_t i, std::size_t j) {
                return std::sqrt(kernels::sum_sq_diff(archive.frame_values(i), archive.frame_values(j)));
            });
            break;
        case Metric::l2_image:
            throw ContractError("l2-image needs decoded frames, not a feature archive");
    }
    return m;
}

DistanceMatrix compute_distance_matrix(const FrameCollection& frames, Metric metric, const MatrixOptions& opts) {
    if (metric != Metric::l2_image) {
        throw ContractError(std::string(metric_name(metric)) + " needs a feature archive (--features)");
    }
    frames.validate();
    for (std::size_t i = 1; i < frames.size(); ++i) require_same_raster_shape(frames.frames[0], frames.frames[i]);
    if (frames.size() == 1 && !frames.frames[0].pixels) {
        throw ContractError("l2-image needs pixels for frame '" + frames.frames[0].id + "'");
    }
    DistanceMatrix m(frames.ids(), std::string(metric_name(metric)));
    fill_pairs(m, opts.threads, [&](std::size_t i, std::size_t j) {
        return std::sqrt(kernels::sum_sq_diff(frames.frames[i].pixels->rgb, frames.frames[j].pixels->rgb));
    });
    return m;
}

// ---------------------------------------------------------------------------
// Judge and calibration

namespace {

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// -h log s(z) - (1-h) log(1 - s(z)) == softplus(z) - h z
double cross_entropy_logit(double z, double h) { return softplus(z) - h * z; }

// Per-triple, per-(layer, channel) difference of spatially averaged squared
// activation differences: D(ref, d0) - D(ref, d1). The distance difference for
// weights w is then sum(w^2 * delta).
struct PreparedJudgments {
    std::vector<std::vector<double>> delta;  // [triple][flat channel]
    std::vector<double> h;
};

PreparedJudgments prepare(const FeatureArchive& archive, std::span<const JudgmentTriple> judgments) {
    require_normalized(archive, "calibration");
    if (judgments.empty()) throw ContractError("calibration needs at least one judgment");
    const auto& ks = kernels::active();
    std::size_t channels = 0;
    for (const auto& l : archive.layers()) channels += l.c;

    PreparedJudgments out;
    for (const auto& t : judgments) {
        if (!(t.h >= 0.0 && t.h <= 1.0)) throw ContractError("judgment h must lie in [0,1]");
        const std::size_t r = archive.index_of(t.ref_id);
        const std::size_t a = archive.index_of(t.distorted0_id);
        const std::size_t b = archive.index_of(t.distorted1_id);
        std::vector<double> delta;
        delta.reserve(channels);
        for (std::size_t l = 0; l < archive.layers().size(); ++l) {
            const auto& spec = archive.layers()[l];
            const std::size_t hw = spec.spatial();
            const auto tr = archive.tensor(r, l);
            const auto ta = archive.tensor(a, l);
            const auto tb = archive.tensor(b, l);
            for (std::size_t c = 0; c < spec.c; ++c) {
                const double s0 = ks.sum_sq_diff(tr.data() + c * hw, ta.data() + c * hw, hw);
                const double s1 = ks.sum_sq_diff(tr.data() + c * hw, tb.data() + c * hw, hw);
                delta.push_back((s0 - s1) / static_cast<double>(hw));
            }
        }
        out.delta.push_back(std::move(delta));
        out.h.push_back(t.h);
    }
    return out;
}

std::vector<double> flatten(const CalibrationWeights& w) {
    std::vector<double> out;
    for (const auto& l : w.per_layer) out.insert(out.end(), l.begin(), l.end());
    return out;
}

void unflatten(std::span<const double> flat, CalibrationWeights& w) {
    std::size_t k = 0;
    for (auto& l : w.per_layer) {
        for (double& v : l) v = flat[k++];
    }
}

double logit(const std::vector<double>& delta, std::span<const double> w, const JudgeNetParams& g) {
    double diff = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) diff += w[k] * w[k] * delta[k];
    return g.slope * diff + g.bias;
}

double mean_loss(const PreparedJudgments& p, std::span<const std::size_t> batch, std::span<const double> w,
                 const JudgeNetParams& g) {
    double total = 0.0;
    for (std::size_t t : batch) total += cross_entropy_logit(logit(p.delta[t], w, g), p.h[t]);
    return total / static_cast<double>(batch.size());
}

// Writes d(mean loss)/d(w..., slope, bias) into grad.
void mean_gradient(const PreparedJudgments& p, std::span<const std::size_t> batch, std::span<const double> w,
                   const JudgeNetParams& g, std::vector<double>& grad) {
    const std::size_t nw = w.size();
    grad.assign(nw + 2, 0.0);
    for (std::size_t t : batch) {
        const auto& delta = p.delta[t];
        double diff = 0.0;
        for (std::size_t k = 0; k < nw; ++k) diff += w[k] * w[k] * delta[k];
        const double dz = logistic(g.slope * diff + g.bias) - p.h[t];
        for (std::size_t k = 0; k < nw; ++k) grad[k] += dz * g.slope * 2.0 * w[k] * delta[k];
        grad[nw] += dz * diff;
        grad[nw + 1] += dz;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : grad) v *= inv;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace

double judge(const JudgeNetParams& g, double d0, double d1) {
    if (!std::isfinite(d0) || !std::isfinite(d1) || d0 < 0.0 || d1 < 0.0) {
        throw ContractError("judge needs finite nonnegative distances");
    }
    return logistic(g.slope * (d0 - d1) + g.bias);
}

double judgment_loss(const JudgeNetParams& g, double d0, double d1, double h) {
    return cross_entropy_logit(g.slope * (d0 - d1) + g.bias, h);
}

double calibration_loss(const FeatureArchive& archive, std::span<const JudgmentTriple> judgments,
                        const CalibrationWeights& w, const JudgeNetParams& g) {
    w.check_against(archive);
    const auto p = prepare(archive, judgments);
    const auto flat = flatten(w);
    return mean_loss(p, all_indices(p.h.size()), flat, g);
}

std::vector<double> calibration_gradient(const FeatureArchive& archive, std::span<const JudgmentTriple> judgments,
                                         const CalibrationWeights& w, const JudgeNetParams& g) {
    w.check_against(archive);
    const auto p = prepare(archive, judgments);
    const auto flat = flatten(w);
    std::vector<double> grad;
    mean_gradient(p, all_indices(p.h.size()), flat, g, grad);
    return grad;
}

CalibrationResult fit_calibration(const FeatureArchive& archive, std::span<const JudgmentTriple> judgments,
                                  const CalibrationConfig& config) {
    const auto p = prepare(archive, judgments);
    const std::size_t count = p.h.size();
    const auto everything = all_indices(count);

    CalibrationResult result;
    result.weights = CalibrationWeights::uniform(archive);
    std::vector<double> w = flatten(result.weights);
    JudgeNetParams g{1.0, 0.0};

    result.initial_loss = mean_loss(p, everything, w, g);
    if (!std::isfinite(result.initial_loss)) throw NumericalError(0, "initial loss is not finite");
    result.final_loss = result.initial_loss;
    result.judge = g;
    std::vector<double> best_w = w;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order = everything;
    const std::size_t batch = config.batch_size == 0 ? count : std::min(config.batch_size, count);
    std::vector<double> grad;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        if (batch < count) std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < count; start += batch) {
            const std::span<const std::size_t> slice(order.data() + start, std::min(batch, count - start));
            mean_gradient(p, slice, w, g, grad);
            for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::max(0.0, w[k] - config.learning_rate * grad[k]);
            g.slope -= config.learning_rate * grad[w.size()];
            g.bias -= config.learning_rate * grad[w.size() + 1];
        }
        const double loss = mean_loss(p, everything, w, g);
        if (!std::isfinite(loss)) throw NumericalError(epoch, "training loss became non-finite");
        if (loss < result.final_loss) {
            result.final_loss = loss;
            result.judge = g;
            result.best_epoch = epoch;
            best_w = w;
        }
    }
    unflatten(best_w, result.weights);
    return result;
}

std::vector<JudgmentTriple> load_judgments(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw FormatError(e.byte, std::string("judgments file is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw FormatError("judgments file must be a JSON array");
    std::vector<JudgmentTriple> out;
    for (const auto& item : j) {
        try {
            JudgmentTriple t;
            t.ref_id = item.at("ref").get<std::string>();
            t.distorted0_id = item.at("d0").get<std::string>();
            t.distorted1_id = item.at("d1").get<std::string>();
            t.h = item.at("h").get<double>();
            out.push_back(std::move(t));
        } catch (const json::exception&) {
            throw FormatError("each judgment needs string 'ref', 'd0', 'd1' and number 'h'");
        }
    }
    return out;
}

}  // namespace reseq
