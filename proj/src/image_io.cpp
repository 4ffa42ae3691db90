#include "reseq/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

#include "reseq/errors.hpp"

namespace reseq {
namespace {

Raster from_bytes(const std::uint8_t* rgb8, int width, int height) {
    Raster out;
    out.width = width;
    out.height = height;
    out.rgb.resize(out.value_count());
    for (std::size_t i = 0; i < out.rgb.size(); ++i) out.rgb[i] = static_cast<float>(rgb8[i]) / 255.0f;
    return out;
}

bool has_png_signature(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool has_jpeg_signature(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

}  // namespace

Raster decode_png(std::span<const std::uint8_t> bytes, const std::string& label) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw IngestError(label, std::string("PNG decode failed: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    // A null background composites alpha over black; 8-bit sRGB is kept as is.
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IngestError(label, "PNG decode failed: " + msg);
    }
    return from_bytes(buffer.data(), static_cast<int>(image.width), static_cast<int>(image.height));
}

Raster decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& label) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    std::vector<std::uint8_t> buffer;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IngestError(label, std::string("JPEG decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int width = static_cast<int>(cinfo.output_width);
    const int height = static_cast<int>(cinfo.output_height);
    buffer.resize(static_cast<std::size_t>(width) * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = buffer.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_bytes(buffer.data(), width, height);
}

Raster decode_image_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    const std::string label = path.string();
    if (has_png_signature(bytes)) return decode_png(bytes, label);
    if (has_jpeg_signature(bytes)) return decode_jpeg(bytes, label);
    throw IngestError(label, "not a PNG or JPEG file");
}

std::vector<std::uint8_t> encode_png(const Raster& raster) {
    raster.validate();
    std::vector<std::uint8_t> rgb8(raster.rgb.size());
    for (std::size_t i = 0; i < rgb8.size(); ++i) {
        rgb8[i] = static_cast<std::uint8_t>(std::lround(std::clamp(raster.rgb[i], 0.0f, 1.0f) * 255.0f));
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(raster.width);
    image.height = static_cast<png_uint_32>(raster.height);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb8.data(), 0, nullptr)) {
        throw Error(std::string("PNG encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb8.data(), 0, nullptr)) {
        throw Error(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

void write_png(const Raster& raster, const std::filesystem::path& path) {
    write_file_bytes(path, encode_png(raster));
}

}  // namespace reseq
