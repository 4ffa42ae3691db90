#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reseq {

// RGB raster with channel values in [0,1], stored row-major with interleaved
// channels (r,g,b per pixel).
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;

    std::size_t value_count() const { return static_cast<std::size_t>(width) * height * 3; }
    float& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    static Raster filled(int width, int height, float r, float g, float b);
    // Throws ContractError if dimensions or values are out of range.
    void validate() const;
};

struct FrameRecord {
    std::string id;
    std::optional<Raster> pixels;
    std::optional<std::string> source_path;
};

enum class SourceKind { images, features, distances };

struct FrameCollection {
    std::vector<FrameRecord> frames;
    SourceKind source_kind = SourceKind::images;

    std::size_t size() const { return frames.size(); }
    std::vector<std::string> ids() const;
    // Index of the frame with this id; ContractError if absent.
    std::size_t index_of(const std::string& id) const;
    void validate() const;
};

struct LayerSpec {
    std::string name;
    std::uint32_t c = 0;
    std::uint32_t h = 0;
    std::uint32_t w = 0;

    std::size_t spatial() const { return static_cast<std::size_t>(h) * w; }
    std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
    bool operator==(const LayerSpec&) const = default;
};

// Per-frame, per-layer activation tensors. Storage is one contiguous float
// buffer ordered frame-major, layer-minor, each tensor channel-major then
// row-major over (h, w): the exact PFA1 payload order.
class FeatureArchive {
public:
    FeatureArchive() = default;
    // Zero-filled archive with the given shape.
    FeatureArchive(std::vector<std::string> frame_ids, std::vector<LayerSpec> layers, bool normalized = false);

    const std::vector<std::string>& frame_ids() const { return frame_ids_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    bool normalized() const { return normalized_; }
    void set_normalized(bool v) { normalized_ = v; }

    std::size_t frame_count() const { return frame_ids_.size(); }
    std::size_t frame_stride() const { return frame_stride_; }

    std::span<const float> tensor(std::size_t frame, std::size_t layer) const;
    std::span<float> tensor(std::size_t frame, std::size_t layer);
    // All layers of one frame, concatenated.
    std::span<const float> frame_values(std::size_t frame) const;

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    std::size_t index_of(const std::string& id) const;

    // Checks shape invariants, id uniqueness, finiteness and (when normalized)
    // unit channel norms within 1e-4. Throws ContractError.
    void validate() const;

    bool operator==(const FeatureArchive&) const = default;

private:
    void compute_offsets();

    std::vector<std::string> frame_ids_;
    std::vector<LayerSpec> layers_;
    bool normalized_ = false;
    std::vector<std::size_t> layer_offsets_;
    std::size_t frame_stride_ = 0;
    std::vector<float> data_;
};

// Symmetric, zero-diagonal, nonnegative float matrix over named frames.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    DistanceMatrix(std::vector<std::string> frame_ids, std::string metric_tag);
    DistanceMatrix(std::vector<std::string> frame_ids, std::string metric_tag, std::vector<float> values);

    std::size_t size() const { return frame_ids_.size(); }
    const std::vector<std::string>& frame_ids() const { return frame_ids_; }
    const std::string& metric_tag() const { return metric_tag_; }

    float operator()(std::size_t i, std::size_t j) const { return values_[i * size() + j]; }
    // Writes both (i,j) and (j,i).
    void set_symmetric(std::size_t i, std::size_t j, float v);

    std::span<const float> values() const { return values_; }
    std::span<const float> row(std::size_t i) const { return {values_.data() + i * size(), size()}; }

    std::size_t index_of(const std::string& id) const;
    std::optional<std::size_t> find(const std::string& id) const;

    // Rows/columns at the given indices, in the given order.
    DistanceMatrix submatrix(std::span<const std::size_t> keep) const;
    // Drops the listed ids; ContractError for unknown ids.
    DistanceMatrix without(std::span<const std::string> ids) const;

    // Throws ValidationError naming the first offending (i,j).
    void validate() const;

    bool operator==(const DistanceMatrix&) const = default;

private:
    std::vector<std::string> frame_ids_;
    std::string metric_tag_;
    std::vector<float> values_;
};

// Divides every spatial channel vector by its Euclidean norm; zero vectors stay
// zero. ContractError when the archive is already flagged normalized.
FeatureArchive channel_unit_normalize(const FeatureArchive& archive);
// Same arithmetic without the flag guard, in place.
void normalize_channels_in_place(FeatureArchive& archive);

// Frame ids for a path list: file stem, with _1, _2, ... appended to repeats.
// FormatError if ids still collide after suffixing.
std::vector<std::string> resolve_frame_ids(std::span<const std::filesystem::path> paths);

// Decodes PNG/JPEG files into frames, preserving order. threads = 0 picks the
// engine default; the result does not depend on it.
FrameCollection ingest_images(std::span<const std::filesystem::path> paths, unsigned threads = 0);

// Regular files in a directory with image extensions, sorted by filename.
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir);

// PFA1 / PDM1 readers and writers. Byte layouts are fixed: see README.
void save_archive(const FeatureArchive& archive, const std::filesystem::path& path);
FeatureArchive load_archive(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_archive(const FeatureArchive& archive);
FeatureArchive decode_archive(std::span<const std::uint8_t> bytes);

void save_matrix(const DistanceMatrix& m, const std::filesystem::path& path);
DistanceMatrix load_matrix(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_matrix(const DistanceMatrix& m);
DistanceMatrix decode_matrix(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace reseq
