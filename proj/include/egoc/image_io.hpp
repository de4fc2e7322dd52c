// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "egoc/tensor.hpp"

namespace egoc::io {

/// Images load as {H, W, C} tensors of intensities in [0, 1]; C is 1
/// (grayscale) or 3 (RGB). Supported containers: binary PPM/PGM and 8-bit
/// PNG.

namespace detail {

inline int ppm_next_int(std::istream& is) {
    // Skips whitespace and '#' comments, as the format allows between tokens.
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (std::isspace(c)) {
            c = is.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw std::runtime_error("ppm: malformed header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = is.get();
    }
    return value;
}

}  // namespace detail

inline Tensor read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("ppm: cannot open '" + path + "'");
    char m0 = 0, m1 = 0;
    is.get(m0);
    is.get(m1);
    if (m0 != 'P' || (m1 != '5' && m1 != '6')) throw std::runtime_error("ppm: not a binary P5/P6 file");
    const int channels = (m1 == '6') ? 3 : 1;
    const int width = detail::ppm_next_int(is);
    const int height = detail::ppm_next_int(is);
    const int maxval = detail::ppm_next_int(is);
    if (width < 1 || height < 1) throw std::runtime_error("ppm: bad dimensions");
    if (maxval < 1 || maxval > 255) throw std::runtime_error("ppm: only 8-bit images supported");
    // Header terminates with exactly one whitespace byte before the payload.

    const std::size_t count =
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
    std::vector<std::uint8_t> raw(count);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(is.gcount()) != count)
        throw std::runtime_error("ppm: truncated pixel data");

    Tensor img({static_cast<std::size_t>(height), static_cast<std::size_t>(width),
                static_cast<std::size_t>(channels)},
               0.0);
    const double inv = 1.0 / maxval;
    for (std::size_t e = 0; e < count; ++e) img[e] = raw[e] * inv;
    return img;
}

inline void write_ppm(const std::string& path, const Tensor& img) {
    if (img.rank() != 3 || (img.dim(2) != 1 && img.dim(2) != 3))
        throw std::invalid_argument("ppm: image must be H×W×1 or H×W×3");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("ppm: cannot open '" + path + "' for writing");
    os << (img.dim(2) == 3 ? "P6" : "P5") << "\n"
       << img.dim(1) << " " << img.dim(0) << "\n255\n";
    std::vector<std::uint8_t> raw(img.numel());
    for (std::size_t e = 0; e < img.numel(); ++e) {
        const double v = std::clamp(img[e], 0.0, 1.0);
        raw[e] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os.good()) throw std::runtime_error("ppm: write to '" + path + "' failed");
}

inline Tensor read_png(const std::string& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!fp) throw std::runtime_error("png: cannot open '" + path + "'");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: allocation failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png: allocation failure");
    }
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int channels = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png: failed to decode '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    // Normalize every variant to 8-bit gray or RGB without alpha.
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png: unsupported channel layout in '" + path + "'");
    }
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    pixels.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Tensor img({static_cast<std::size_t>(height), static_cast<std::size_t>(width),
                static_cast<std::size_t>(channels)},
               0.0);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < static_cast<std::size_t>(width) * channels; ++x)
            img[y * width * channels + x] = pixels[y * rowbytes + x] / 255.0;
    return img;
}

inline void write_png(const std::string& path, const Tensor& img) {
    if (img.rank() != 3 || (img.dim(2) != 1 && img.dim(2) != 3))
        throw std::invalid_argument("png: image must be H×W×1 or H×W×3");
    const std::size_t height = img.dim(0);
    const std::size_t width = img.dim(1);
    const int channels = static_cast<int>(img.dim(2));

    std::vector<std::uint8_t> raw(img.numel());
    for (std::size_t e = 0; e < img.numel(); ++e) {
        const double v = std::clamp(img[e], 0.0, 1.0);
        raw[e] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }

    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("png: cannot open '" + path + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: allocation failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png: failed to encode '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (std::size_t y = 0; y < height; ++y)
        rows[y] = raw.data() + y * width * static_cast<std::size_t>(channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Dispatches on extension: .png, or .ppm/.pgm for the raw formats.
inline Tensor read_image(const std::string& path) {
    const auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png") return read_png(path);
    if (ext == ".ppm" || ext == ".pgm") return read_ppm(path);
    throw std::runtime_error("image: unsupported extension '" + ext + "' for '" + path + "'");
}

}  // namespace egoc::io
