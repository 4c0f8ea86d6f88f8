#pragma once

#include <filesystem>
#include <string_view>

#include "cathseg/image.hpp"

namespace cathseg {

/// Grayscale pixels as stored on disk, before normalization.
struct RawImage {
  PixelGrid<double> pixels;
  int max_value = 255;  // 255 or 65535 for PNG, maxval for PGM
};

/// Reads 8/16-bit grayscale (or RGB, converted to luma) PNG and ASCII/binary PGM.
/// Throws IoError.
RawImage read_raw_image(const std::filesystem::path& path);

/// Reads and percentile-normalizes an image.
Image load_image(const std::filesystem::path& path);

/// Any nonzero pixel becomes 1.
BinaryMask load_mask(const std::filesystem::path& path);

/// Probability maps are stored as 16-bit PNG scaled to [0, 65535].
ProbabilityMap load_probability(const std::filesystem::path& path);

struct RgbImage {
  PixelGrid<std::uint8_t> r, g, b;
  RgbImage(int width, int height)
      : r(PixelGrid<std::uint8_t>::Zero(height, width)), g(r), b(r) {}
  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }
};

void write_png_gray8(const std::filesystem::path& path, const PixelGrid<std::uint8_t>& pixels);
void write_png_gray16(const std::filesystem::path& path, const PixelGrid<std::uint16_t>& pixels);
void write_png_rgb8(const std::filesystem::path& path, const RgbImage& image);
/// ASCII (P2) PGM.
void write_pgm(const std::filesystem::path& path, const PixelGrid<std::uint16_t>& pixels, int max_value);

/// [0, 1] intensities quantized to 16 bits.
void write_image_png(const std::filesystem::path& path, const Image& image);
/// Masks are written as {0, 255}.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
void write_probability_png(const std::filesystem::path& path, const ProbabilityMap& map);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace cathseg
