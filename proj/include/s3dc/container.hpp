#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "s3dc/descriptor.hpp"
#include "s3dc/edgemap.hpp"
#include "s3dc/mesh.hpp"
#include "s3dc/render.hpp"

namespace s3dc {

enum class CompressionMode { kSemantic, kStructured };

inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 8;      // magic, version, flags, desc_len
inline constexpr std::size_t kEdgeHeaderBytes = 8;  // resolution, threshold, nnz

struct CompressedContainer {
  CompressionMode mode = CompressionMode::kSemantic;
  SemanticDescriptor descriptor;
  std::optional<EncodedEdges> edges;
  std::optional<std::uint16_t> edge_threshold;
  // Edges always come from the front render; not serialized.
  CameraTag source_front_view = CameraTag::kFront;
  std::uint8_t format_version = kFormatVersion;
};

// Compares serialized content: the descriptor's char_budget is not stored.
bool operator==(const CompressedContainer& a, const CompressedContainer& b);

/// S3DC layout, integers little-endian:
///   "S3DC" | version u8 | flags u8 (bit0 has_edges, bit1 coo) | desc_len u16 |
///   descriptor | [resolution u16 | threshold u16 | nnz u32 | payload]
std::vector<std::uint8_t> pack(const CompressedContainer& container);

// Errors: kBadMagic, kTruncated, kUnknownVersion, and kFormat for anything
// else malformed. The unpacked descriptor's char_budget is its length.
CompressedContainer unpack(std::span<const std::uint8_t> bytes);

struct ContainerStats {
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  double ratio = 0;
};

ContainerStats compression_stats(const SizeBreakdown& original, std::span<const std::uint8_t> packed);

}  // namespace s3dc
