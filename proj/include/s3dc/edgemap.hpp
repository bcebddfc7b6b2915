#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "s3dc/image.hpp"

namespace s3dc {

inline constexpr double kDefaultSigma = 1.4;
inline constexpr int kByteGridResolution = 256;

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> gx, gy, magnitude;
  std::vector<std::uint8_t> orientation;  // quantized degrees: 0, 45, 90 or 135

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

// Gaussian smoothing (radius ceil(3 sigma), reflect-101 borders) followed by
// 3x3 Sobel derivatives. gx grows to the right, gy grows downward.
GradientField gradient_field(const GrayImage& image, double sigma = kDefaultSigma);

// Binary D x D grid.
struct EdgeMap {
  int resolution = 0;
  double threshold = 0;
  std::vector<std::uint8_t> grid;  // row-major, 0 or 1

  EdgeMap() = default;
  EdgeMap(int d, double t) : resolution(d), threshold(t), grid(static_cast<std::size_t>(d) * d, 0) {}

  bool at(int row, int col) const { return grid[static_cast<std::size_t>(row) * resolution + col] != 0; }
  void set(int row, int col, bool on = true) {
    grid[static_cast<std::size_t>(row) * resolution + col] = on ? 1 : 0;
  }
  std::size_t nnz() const;
  double sparsity() const;

  friend bool operator==(const EdgeMap&, const EdgeMap&) = default;
};

/// Canny edges with t_high = t and t_low = t / 2. Non-maximum suppression
/// keeps a pixel whose magnitude is greater than its backward neighbor and
/// not less than its forward neighbor along the quantized orientation.
/// Weak pixels survive when 8-connected to a strong pixel through a chain of
/// weak or strong pixels. The image must be square.
EdgeMap canny(const GrayImage& image, double t, double sigma = kDefaultSigma);
EdgeMap canny(const GradientField& field, double t);

// Max-pools onto a 256 x 256 grid. Maps below 256 pass through unchanged.
EdgeMap downsample_to_byte_grid(const EdgeMap& edges);

// 1 - 1 / (2 log2 D); D must be a power of two >= 2.
double breakeven_sparsity(std::uint32_t resolution);

enum class EdgeEncoding : std::uint8_t { kDenseBitmap, kCoo };

struct EncodedEdges {
  EdgeEncoding encoding = EdgeEncoding::kCoo;
  int resolution = 0;
  double threshold = 0;
  std::uint32_t nnz = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const EncodedEdges&, const EncodedEdges&) = default;
};

// Bits per coordinate: ceil(log2 D).
int coordinate_bits(std::uint32_t resolution);
// Whole bytes per stored coordinate: ceil(coordinate_bits / 8).
int coordinate_bytes(std::uint32_t resolution);
std::uint64_t dense_bits(std::uint32_t resolution);
std::uint64_t coo_bits(std::uint32_t resolution, std::uint64_t nnz);
std::size_t expected_payload_size(EdgeEncoding encoding, std::uint32_t resolution, std::uint64_t nnz);

/// Selects COO when N * 2 * ceil(log2 D) < D^2 bits, else the dense bitmap.
/// COO: row-major sorted (row, col) pairs, each coordinate little-endian in
/// coordinate_bytes(D) bytes. Dense: row-major bits, MSB first in each byte.
EncodedEdges encode_edges(const EdgeMap& edges);
EdgeMap decode_edges(const EncodedEdges& encoded);

struct SparsityCell {
  double mean_percent = 0;
  double std_percent = 0;  // population standard deviation
};

struct SparsityTable {
  std::vector<int> resolutions;
  std::vector<double> thresholds;
  std::vector<std::vector<SparsityCell>> cells;  // [resolution][threshold]
  std::vector<std::optional<double>> breakeven_percent;  // absent for non-powers of two
};

SparsityTable profile_sparsity(const std::vector<GrayImage>& views, const std::vector<int>& resolutions,
                               const std::vector<double>& thresholds, double sigma = kDefaultSigma);

// Aligned text table: one row per resolution, "mean ± std" per threshold,
// then the breakeven column.
std::string format_sparsity_table(const SparsityTable& table);

}  // namespace s3dc
