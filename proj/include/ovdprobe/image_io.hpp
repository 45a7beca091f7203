#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ovdprobe/geometry.hpp"

namespace ovdprobe {

struct ImageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Decodes any format OpenCV understands (PNG, JPEG) into RGB. Alpha is dropped.
RgbImage decode_image(const std::vector<std::uint8_t>& bytes);
RgbImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const RgbImage& image, const std::filesystem::path& path);

/// Single-channel PNG, 255 where the raster is set.
std::vector<std::uint8_t> encode_mask_png(const BinaryRaster& mask);

/// Loads a single-channel image; any nonzero value is set.
BinaryRaster read_mask(const std::filesystem::path& path);

/// 8-bit RGBA, row-major, 4 bytes per pixel.
void write_rgba_png(int width, int height, const std::vector<std::uint8_t>& rgba,
                    const std::filesystem::path& path);

RgbImage crop(const RgbImage& image, const PixelRect& rect);
BinaryRaster crop(const BinaryRaster& mask, const PixelRect& rect);

/// Copies `patch` into `target` with its top-left corner at (x, y).
void paste(RgbImage& target, const RgbImage& patch, int x, int y);

RgbImage resize_bilinear(const RgbImage& image, int width, int height);
BinaryRaster resize_nearest(const BinaryRaster& mask, int width, int height);

inline constexpr const char* kResampleFilter = "bilinear";

}  // namespace ovdprobe
