#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <vector>

#include <png.h>

#include "accflow/types.hpp"

namespace accflow {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

/// Lossless PNG write for 8-bit gray (1 channel) or RGB (3 channel) images.
inline void write_png(const std::filesystem::path& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_png: only gray8 and rgb8 supported");

    detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw std::runtime_error("write_png: cannot open " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("write_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: libpng error writing " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(std::size_t(img.height));
    const std::size_t stride = std::size_t(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y)
        rows[std::size_t(y)] = const_cast<png_bytep>(img.data.data() + std::size_t(y) * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// PNG read; palette/16-bit/alpha inputs are normalized to gray8 or rgb8.
inline ImageU8 read_png(const std::filesystem::path& path) {
    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw std::runtime_error("read_png: cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("read_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("read_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: libpng error reading " + path.string());
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: unsupported channel layout in " + path.string());
    }

    ImageU8 img(int(w), int(h), channels);
    std::vector<png_bytep> rows(h);
    const std::size_t stride = std::size_t(w) * channels;
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.data.data() + std::size_t(y) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

/// Mask file convention: 8-bit gray, 0 = visible, 255 = occluded.
inline ImageU8 mask_to_image(const OcclusionMask& mask) {
    ImageU8 img(mask.width(), mask.height(), 1);
    for (std::size_t i = 0; i < mask.data().size(); ++i)
        img.data[i] = mask.data()[i] ? 255 : 0;
    return img;
}

inline OcclusionMask image_to_mask(const ImageU8& img) {
    if (img.channels != 1)
        throw std::invalid_argument("image_to_mask: expected a grayscale image");
    OcclusionMask mask(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        mask.data()[i] = img.data[i] >= 128 ? 1 : 0;
    return mask;
}

inline void write_mask_png(const std::filesystem::path& path, const OcclusionMask& mask) {
    write_png(path, mask_to_image(mask));
}

inline OcclusionMask read_mask_png(const std::filesystem::path& path) {
    return image_to_mask(read_png(path));
}

}  // namespace accflow
