#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "reseq/frameset.hpp"

namespace reseq {

// 8-bit sRGB decoded to v/255, no linearization. Grayscale and alpha inputs are
// expanded/dropped to RGB. Throws IngestError.
Raster decode_image_file(const std::filesystem::path& path);
Raster decode_png(std::span<const std::uint8_t> bytes, const std::string& label);
Raster decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& label);

// Quantizes to 8 bits with round-to-nearest.
std::vector<std::uint8_t> encode_png(const Raster& raster);
void write_png(const Raster& raster, const std::filesystem::path& path);

}  // namespace reseq
