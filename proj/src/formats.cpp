// PFA1 (feature archive) and PDM1 (distance matrix) codecs.
//
// Both files share one framing:
//   bytes 0..3   ASCII magic
//   bytes 4..7   u32 little-endian header length H
//   bytes 8..8+H UTF-8 JSON header
//   remainder    little-endian IEEE-754 binary32 payload
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "reseq/errors.hpp"
#include "reseq/frameset.hpp"

namespace reseq {
namespace {

using nlohmann::json;

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kPreamble = 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_floats(std::vector<std::uint8_t>& out, std::span<const float> values) {
    const std::size_t base = out.size();
    out.resize(base + values.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data() + base, values.data(), values.size() * 4);
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(values[i]);
            for (int b = 0; b < 4; ++b) out[base + i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
        }
    }
}

void get_floats(const std::uint8_t* src, std::span<float> dst) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(dst.data(), src, dst.size() * 4);
    } else {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::bit_cast<float>(get_u32(src + i * 4));
    }
}

std::vector<std::uint8_t> frame(const char (&magic)[5], const json& header) {
    const std::string text = header.dump();
    std::vector<std::uint8_t> out(magic, magic + 4);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    return out;
}

struct Framed {
    json header;
    std::size_t payload_offset;
};

Framed unframe(std::span<const std::uint8_t> bytes, const char (&magic)[5]) {
    if (bytes.size() < 4) throw FormatError(bytes.size(), "file too short for magic");
    if (std::memcmp(bytes.data(), magic, 4) != 0) {
        throw FormatError(0, std::string("bad magic, expected \"") + magic + "\"");
    }
    if (bytes.size() < kPreamble) throw FormatError(bytes.size(), "file too short for header length");
    const std::uint32_t hlen = get_u32(bytes.data() + 4);
    if (bytes.size() - kPreamble < hlen) {
        throw FormatError(4, "header length " + std::to_string(hlen) + " exceeds remaining " +
                                 std::to_string(bytes.size() - kPreamble) + " bytes");
    }
    Framed out;
    try {
        out.header = json::parse(bytes.begin() + kPreamble, bytes.begin() + kPreamble + hlen);
    } catch (const json::parse_error& e) {
        throw FormatError(kPreamble + (e.byte > 0 ? e.byte - 1 : 0), std::string("header is not valid JSON: ") + e.what());
    }
    if (!out.header.is_object()) throw FormatError(kPreamble, "header is not a JSON object");
    out.payload_offset = kPreamble + hlen;
    return out;
}

template <class T>
T field(const json& header, const char* key) {
    if (!header.contains(key)) throw FormatError(kPreamble, std::string("header missing '") + key + "'");
    try {
        return header.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(kPreamble, std::string("header field '") + key + "' has the wrong type");
    }
}

void check_version(const json& header) {
    const auto v = field<std::uint32_t>(header, "version");
    if (v != kFormatVersion) throw FormatError(kPreamble, "unsupported version " + std::to_string(v));
}

void check_payload(std::size_t offset, std::size_t actual, std::size_t expected) {
    if (actual != expected) {
        throw FormatError(offset, "payload size mismatch: header implies " + std::to_string(expected) +
                                      " bytes, found " + std::to_string(actual));
    }
}

}  // namespace

std::vector<std::uint8_t> encode_archive(const FeatureArchive& archive) {
    json layers = json::array();
    for (const auto& l : archive.layers()) layers.push_back({{"name", l.name}, {"c", l.c}, {"h", l.h}, {"w", l.w}});
    const json header = {{"version", kFormatVersion},
                         {"frame_ids", archive.frame_ids()},
                         {"layers", layers},
                         {"normalized", archive.normalized()}};
    auto out = frame("PFA1", header);
    put_floats(out, archive.data());
    return out;
}

FeatureArchive decode_archive(std::span<const std::uint8_t> bytes) {
    const Framed f = unframe(bytes, "PFA1");
    check_version(f.header);
    auto ids = field<std::vector<std::string>>(f.header, "frame_ids");
    const bool normalized = field<bool>(f.header, "normalized");
    const auto layer_json = field<json>(f.header, "layers");
    if (!layer_json.is_array()) throw FormatError(kPreamble, "header field 'layers' must be an array");
    std::vector<LayerSpec> layers;
    for (const auto& lj : layer_json) {
        LayerSpec l;
        l.name = field<std::string>(lj, "name");
        l.c = field<std::uint32_t>(lj, "c");
        l.h = field<std::uint32_t>(lj, "h");
        l.w = field<std::uint32_t>(lj, "w");
        if (l.c < 1 || l.h < 1 || l.w < 1) throw FormatError(kPreamble, "layer '" + l.name + "' has a zero dimension");
        layers.push_back(std::move(l));
    }

    FeatureArchive archive(std::move(ids), std::move(layers), normalized);
    check_payload(f.payload_offset, bytes.size() - f.payload_offset, archive.data().size() * 4);
    get_floats(bytes.data() + f.payload_offset, archive.data());
    try {
        archive.validate();
    } catch (const ContractError& e) {
        throw FormatError(f.payload_offset, e.what());
    }
    return archive;
}

std::vector<std::uint8_t> encode_matrix(const DistanceMatrix& m) {
    const json header = {{"version", kFormatVersion}, {"frame_ids", m.frame_ids()}, {"metric_tag", m.metric_tag()}};
    auto out = frame("PDM1", header);
    put_floats(out, m.values());
    return out;
}

DistanceMatrix decode_matrix(std::span<const std::uint8_t> bytes) {
    const Framed f = unframe(bytes, "PDM1");
    check_version(f.header);
    auto ids = field<std::vector<std::string>>(f.header, "frame_ids");
    auto tag = field<std::string>(f.header, "metric_tag");
    const std::size_t n = ids.size();
    check_payload(f.payload_offset, bytes.size() - f.payload_offset, n * n * 4);
    std::vector<float> values(n * n);
    get_floats(bytes.data() + f.payload_offset, values);
    DistanceMatrix m(std::move(ids), std::move(tag), std::move(values));
    m.validate();
    return m;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(path.string(), "cannot open for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IngestError(path.string(), "read failed");
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestError(path.string(), "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IngestError(path.string(), "write failed");
}

void save_archive(const FeatureArchive& archive, const std::filesystem::path& path) {
    write_file_bytes(path, encode_archive(archive));
}

FeatureArchive load_archive(const std::filesystem::path& path) { return decode_archive(read_file_bytes(path)); }

void save_matrix(const DistanceMatrix& m, const std::filesystem::path& path) {
    m.validate();
    write_file_bytes(path, encode_matrix(m));
}

DistanceMatrix load_matrix(const std::filesystem::path& path) { return decode_matrix(read_file_bytes(path)); }

}  // namespace reseq
