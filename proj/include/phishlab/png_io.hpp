#pragma once

#include "phishlab/raster.hpp"

#include <png.h>

#include <csetjmp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace phishlab {

class PngError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Raster decode_png(std::span<const std::uint8_t> data) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, data.data(), data.size()))
        throw PngError(std::string("png decode: ") + image.message);
    image.format = PNG_FORMAT_RGBA;
    if (image.width < 1 || image.height < 1) {
        png_image_free(&image);
        throw PngError("png decode: empty image");
    }
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw PngError("png decode: " + msg);
    }
    return Raster(static_cast<int>(image.width), static_cast<int>(image.height), std::move(pixels));
}

namespace detail {

inline void png_append(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

inline void png_fail(png_structp png, png_const_charp msg) {
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
    png_longjmp(png, 1);
}

// Plain C frame for setjmp: no C++ objects live here. Returns false with
// err filled on failure.
inline bool png_write_rows(png_structp png, png_infop info, std::vector<std::uint8_t>* out, png_uint_32 w,
                           png_uint_32 h, png_bytepp rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_set_write_fn(png, out, png_append, nullptr);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    // frames go over the wire once, so encode time beats size
    png_set_compression_level(png, 1);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
    png_set_rows(png, info, rows);
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    return true;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const Raster& img) {
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_fail, nullptr);
    if (!png) throw PngError("png encode: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw PngError("png encode: out of memory");
    }
    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
    const std::size_t stride = static_cast<std::size_t>(img.width()) * 4;
    for (std::size_t y = 0; y < rows.size(); ++y)
        rows[y] = const_cast<png_bytep>(img.bytes().data() + y * stride);
    const bool ok = detail::png_write_rows(png, info, &out, static_cast<png_uint_32>(img.width()),
                                           static_cast<png_uint_32>(img.height()), rows.data());
    png_destroy_write_struct(&png, &info);
    if (!ok) throw PngError("png encode: " + err);
    return out;
}

inline Raster read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PngError("cannot open " + path.string());
    std::vector<std::uint8_t> data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return decode_png(data);
    } catch (const PngError& e) {
        throw PngError(path.string() + ": " + e.what());
    }
}

inline void write_png(const std::filesystem::path& path, const Raster& img) {
    auto data = encode_png(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PngError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw PngError("short write to " + path.string());
}

}  // namespace phishlab
