#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace s3dc {

/// Interleaved RGB8 raster, rows top to bottom.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t r = 0, std::uint8_t g = 0, std::uint8_t b = 0);

  bool empty() const noexcept { return width <= 0 || height <= 0; }
  std::uint8_t* at(int x, int y) { return &rgb[3 * (static_cast<std::size_t>(y) * width + x)]; }
  const std::uint8_t* at(int x, int y) const {
    return &rgb[3 * (static_cast<std::size_t>(y) * width + x)];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Single-channel raster in the 0..255 intensity range.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  bool empty() const noexcept { return width <= 0 || height <= 0; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

enum class ImageFormat { kPng, kJpeg };

// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_gray(const Image& image);

// Bilinear resampling with pixel-center alignment.
GrayImage resize_bilinear(const GrayImage& image, int width, int height);
Image resize_nearest(const Image& image, int width, int height);

std::vector<std::uint8_t> encode_png(const Image& image);
// Baseline (non-progressive) JPEG, 4:2:0 chroma subsampling.
std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality);
// Detects PNG or JPEG by signature.
Image decode_image(std::span<const std::uint8_t> bytes);
ImageFormat sniff_format(std::span<const std::uint8_t> bytes);

Image read_image(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const std::string& text, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace s3dc
