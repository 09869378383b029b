// 8-bit PNG decode/encode via libpng. Decoded values are mapped to [0,1]
// by /255; writers clamp to [0,1] and round to 8 bits.
#pragma once

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "blurmap/image.hpp"

namespace blurmap {

namespace detail {

struct FileCloser {
    std::FILE* fp = nullptr;
    ~FileCloser() {
        if (fp) std::fclose(fp);
    }
};

}  // namespace detail

/// Decodes any 8/16-bit gray, palette, RGB or RGBA PNG to interleaved RGB
/// floats. Gray is replicated across channels, 16-bit is stripped to 8,
/// alpha is dropped.
inline RgbImage read_png_rgb(const std::string& path) {
    detail::FileCloser f;
    f.fp = std::fopen(path.c_str(), "rb");
    if (!f.fp) throw std::runtime_error("cannot open PNG for reading: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }

    std::vector<unsigned char> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }

    png_init_io(png, f.fp);
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported PNG layout: " + path);
    }

    pixels.resize(static_cast<size_t>(w) * h * 3);
    rows.resize(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RgbImage out(w, h);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(pixels[i]) / 255.0f;
    return out;
}

/// BT.601 luma of the RGB decode.
inline GrayImage read_png_gray(const std::string& path) {
    return rgb_to_gray(read_png_rgb(path));
}

namespace detail {

inline unsigned char to_byte(float v) {
    float c = std::min(std::max(v, 0.0f), 1.0f);
    return static_cast<unsigned char>(std::lround(c * 255.0f));
}

inline void write_png(const std::string& path, int w, int h, int channels,
                      const std::vector<unsigned char>& pixels) {
    FileCloser f;
    f.fp = std::fopen(path.c_str(), "wb");
    if (!f.fp) throw std::runtime_error("cannot open PNG for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }

    std::vector<png_bytep> rows(static_cast<size_t>(h));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG: " + path);
    }

    png_init_io(png, f.fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(pixels.data() + static_cast<size_t>(y) * w * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline void write_png_gray(const std::string& path, const GrayImage& img) {
    std::vector<unsigned char> px(img.pixels());
    for (size_t i = 0; i < px.size(); ++i) px[i] = detail::to_byte(img.data[i]);
    detail::write_png(path, img.width, img.height, 1, px);
}

inline void write_png_rgb(const std::string& path, const RgbImage& img) {
    std::vector<unsigned char> px(img.data.size());
    for (size_t i = 0; i < px.size(); ++i) px[i] = detail::to_byte(img.data[i]);
    detail::write_png(path, img.width, img.height, 3, px);
}

}  // namespace blurmap
