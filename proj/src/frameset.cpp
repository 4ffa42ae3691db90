#include "reseq/frameset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "reseq/errors.hpp"
#include "reseq/image_io.hpp"
#include "reseq/kernels.hpp"
#include "reseq/parallel.hpp"

namespace reseq {

Raster Raster::filled(int width, int height, float r, float g, float b) {
    Raster out;
    out.width = width;
    out.height = height;
    out.rgb.resize(out.value_count());
    for (std::size_t i = 0; i < out.rgb.size(); i += 3) {
        out.rgb[i] = r;
        out.rgb[i + 1] = g;
        out.rgb[i + 2] = b;
    }
    return out;
}

void Raster::validate() const {
    if (width < 1 || height < 1) {
        throw ContractError("raster must be at least 1x1, got " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
    if (rgb.size() != value_count()) throw ContractError("raster buffer size does not match dimensions");
    for (float v : rgb) {
        if (!(v >= 0.0f && v <= 1.0f)) throw ContractError("raster channel value outside [0,1]");
    }
}

std::vector<std::string> FrameCollection::ids() const {
    std::vector<std::string> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f.id);
    return out;
}

std::size_t FrameCollection::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].id == id) return i;
    }
    throw ContractError("unknown frame id '" + id + "'");
}

void FrameCollection::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& f : frames) {
        if (f.id.empty()) throw ContractError("frame id must be non-empty");
        if (!seen.insert(f.id).second) throw ContractError("duplicate frame id '" + f.id + "'");
        if (f.pixels) f.pixels->validate();
    }
}

// ---------------------------------------------------------------------------
// FeatureArchive

FeatureArchive::FeatureArchive(std::vector<std::string> frame_ids, std::vector<LayerSpec> layers, bool normalized)
    : frame_ids_(std::move(frame_ids)), layers_(std::move(layers)), normalized_(normalized) {
    for (const auto& l : layers_) {
        if (l.c < 1 || l.h < 1 || l.w < 1) {
            throw ContractError("layer '" + l.name + "' has a zero dimension");
        }
    }
    compute_offsets();
    data_.assign(frame_stride_ * frame_ids_.size(), 0.0f);
}

void FeatureArchive::compute_offsets() {
    layer_offsets_.clear();
    std::size_t off = 0;
    for (const auto& l : layers_) {
        layer_offsets_.push_back(off);
        off += l.size();
    }
    frame_stride_ = off;
}

std::span<const float> FeatureArchive::tensor(std::size_t frame, std::size_t layer) const {
    return {data_.data() + frame * frame_stride_ + layer_offsets_[layer], layers_[layer].size()};
}

std::span<float> FeatureArchive::tensor(std::size_t frame, std::size_t layer) {
    return {data_.data() + frame * frame_stride_ + layer_offsets_[layer], layers_[layer].size()};
}

std::span<const float> FeatureArchive::frame_values(std::size_t frame) const {
    return {data_.data() + frame * frame_stride_, frame_stride_};
}

std::size_t FeatureArchive::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < frame_ids_.size(); ++i) {
        if (frame_ids_[i] == id) return i;
    }
    throw ContractError("unknown frame id '" + id + "'");
}

void FeatureArchive::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& id : frame_ids_) {
        if (id.empty()) throw ContractError("frame id must be non-empty");
        if (!seen.insert(id).second) throw ContractError("duplicate frame id '" + id + "'");
    }
    for (const auto& l : layers_) {
        if (l.c < 1 || l.h < 1 || l.w < 1) throw ContractError("layer '" + l.name + "' has a zero dimension");
    }
    if (data_.size() != frame_stride_ * frame_ids_.size()) {
        throw ContractError("archive payload size does not match its shape");
    }
    for (float v : data_) {
        if (!std::isfinite(v)) throw ContractError("archive contains a non-finite activation");
    }
    if (!normalized_) return;

    std::vector<double> norms;
    for (std::size_t f = 0; f < frame_ids_.size(); ++f) {
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& spec = layers_[l];
            const auto t = tensor(f, l);
            const std::size_t hw = spec.spatial();
            norms.assign(hw, 0.0);
            for (std::size_t c = 0; c < spec.c; ++c) {
                kernels::active().accumulate_squares(norms.data(), t.data() + c * hw, hw);
            }
            for (std::size_t p = 0; p < hw; ++p) {
                const double n = std::sqrt(norms[p]);
                if (n != 0.0 && std::abs(n - 1.0) > 1e-4) {
                    throw ContractError("archive flagged normalized but frame '" + frame_ids_[f] + "' layer '" +
                                        spec.name + "' position " + std::to_string(p) + " has channel norm " +
                                        std::to_string(n));
                }
            }
        }
    }
}

void normalize_channels_in_place(FeatureArchive& archive) {
    const auto& ks = kernels::active();
    std::vector<double> acc;
    for (std::size_t f = 0; f < archive.frame_count(); ++f) {
        for (std::size_t l = 0; l < archive.layers().size(); ++l) {
            const auto& spec = archive.layers()[l];
            const std::size_t hw = spec.spatial();
            auto t = archive.tensor(f, l);
            acc.assign(hw, 0.0);
            for (std::size_t c = 0; c < spec.c; ++c) ks.accumulate_squares(acc.data(), t.data() + c * hw, hw);
            for (double& a : acc) a = a > 0.0 ? 1.0 / std::sqrt(a) : 1.0;
            for (std::size_t c = 0; c < spec.c; ++c) ks.scale_by(t.data() + c * hw, acc.data(), hw);
        }
    }
    archive.set_normalized(true);
}

FeatureArchive channel_unit_normalize(const FeatureArchive& archive) {
    if (archive.normalized()) throw ContractError("archive is already channel-normalized");
    FeatureArchive out = archive;
    normalize_channels_in_place(out);
    return out;
}

// ---------------------------------------------------------------------------
// DistanceMatrix

DistanceMatrix::DistanceMatrix(std::vector<std::string> frame_ids, std::string metric_tag)
    : frame_ids_(std::move(frame_ids)), metric_tag_(std::move(metric_tag)) {
    values_.assign(frame_ids_.size() * frame_ids_.size(), 0.0f);
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> frame_ids, std::string metric_tag, std::vector<float> values)
    : frame_ids_(std::move(frame_ids)), metric_tag_(std::move(metric_tag)), values_(std::move(values)) {
    if (values_.size() != frame_ids_.size() * frame_ids_.size()) {
        throw ContractError("distance matrix needs " + std::to_string(frame_ids_.size() * frame_ids_.size()) +
                            " values, got " + std::to_string(values_.size()));
    }
}

void DistanceMatrix::set_symmetric(std::size_t i, std::size_t j, float v) {
    values_[i * size() + j] = v;
    values_[j * size() + i] = v;
}

std::optional<std::size_t> DistanceMatrix::find(const std::string& id) const {
    for (std::size_t i = 0; i < frame_ids_.size(); ++i) {
        if (frame_ids_[i] == id) return i;
    }
    return std::nullopt;
}

std::size_t DistanceMatrix::index_of(const std::string& id) const {
    if (auto i = find(id)) return *i;
    throw ContractError("unknown frame id '" + id + "'");
}

DistanceMatrix DistanceMatrix::submatrix(std::span<const std::size_t> keep) const {
    std::vector<std::string> ids;
    ids.reserve(keep.size());
    for (std::size_t k : keep) ids.push_back(frame_ids_.at(k));
    DistanceMatrix out(std::move(ids), metric_tag_);
    for (std::size_t a = 0; a < keep.size(); ++a) {
        for (std::size_t b = 0; b < keep.size(); ++b) {
            out.values_[a * keep.size() + b] = (*this)(keep[a], keep[b]);
        }
    }
    return out;
}

DistanceMatrix DistanceMatrix::without(std::span<const std::string> ids) const {
    std::vector<bool> drop(size(), false);
    for (const auto& id : ids) drop[index_of(id)] = true;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!drop[i]) keep.push_back(i);
    }
    return submatrix(keep);
}

void DistanceMatrix::validate() const {
    const std::size_t n = size();
    if (values_.size() != n * n) throw ValidationError(0, 0, "value count does not match frame count");
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) {
        if (frame_ids_[i].empty()) throw ValidationError(i, i, "empty frame id");
        if (!seen.insert(frame_ids_[i]).second) throw ValidationError(i, i, "duplicate frame id '" + frame_ids_[i] + "'");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if ((*this)(i, i) != 0.0f) throw ValidationError(i, i, "nonzero diagonal");
        for (std::size_t j = i + 1; j < n; ++j) {
            const float a = (*this)(i, j);
            const float b = (*this)(j, i);
            if (!std::isfinite(a) || !std::isfinite(b)) throw ValidationError(i, j, "non-finite distance");
            if (a < 0.0f || b < 0.0f) throw ValidationError(i, j, "negative distance");
            if (a != b) {
                throw ValidationError(i, j, "asymmetric entries (" + std::to_string(i) + "," + std::to_string(j) +
                                                ")/(" + std::to_string(j) + "," + std::to_string(i) + ")");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Ingestion

std::vector<std::string> resolve_frame_ids(std::span<const std::filesystem::path> paths) {
    std::unordered_map<std::string, int> seen_count;
    std::vector<std::string> ids;
    ids.reserve(paths.size());
    for (const auto& p : paths) {
        const std::string stem = p.stem().string();
        if (stem.empty()) throw FormatError("path '" + p.string() + "' has an empty file stem");
        const int k = seen_count[stem]++;
        ids.push_back(k == 0 ? stem : stem + "_" + std::to_string(k));
    }
    std::unordered_set<std::string> unique;
    for (const auto& id : ids) {
        if (!unique.insert(id).second) {
            throw FormatError("frame id '" + id + "' is still duplicated after suffixing");
        }
    }
    return ids;
}

FrameCollection ingest_images(std::span<const std::filesystem::path> paths, unsigned threads) {
    FrameCollection out;
    out.source_kind = SourceKind::images;
    const auto ids = resolve_frame_ids(paths);
    out.frames.resize(paths.size());
    parallel_for(paths.size(), threads, [&](std::size_t i) {
        FrameRecord& rec = out.frames[i];
        rec.id = ids[i];
        rec.source_path = paths[i].string();
        rec.pixels = decode_image_file(paths[i]);
    });
    return out;
}

std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IngestError(dir.string(), "not a directory");
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace reseq
