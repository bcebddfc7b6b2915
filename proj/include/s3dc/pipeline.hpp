#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "s3dc/backends.hpp"
#include "s3dc/container.hpp"
#include "s3dc/render.hpp"

namespace s3dc {

struct CompressionJob {
  std::filesystem::path input_path;
  CompressionMode mode = CompressionMode::kSemantic;
  std::size_t char_budget = 250;
  std::optional<std::uint16_t> edge_threshold;  // required in structured mode
  RenderConfig render_config;
  BackendSettings backends = BackendSettings::mock(0);

  void validate() const;
};

struct CompressionResult {
  CompressedContainer container;
  std::vector<std::uint8_t> packed;
  ContainerStats stats;
  std::string description;          // raw captioner output before simplification
  ViewImage composite;              // the 3x2 grid sent to the captioner
  std::optional<EdgeMap> edges;     // 256 x 256 grid, structured mode only
};

/// load, normalize, render six views, describe the composite, simplify and
/// clamp; in structured mode also Canny on the front view's luma, max-pooled
/// to the byte grid and encoded. Errors keep their kind and gain the failing
/// stage as a message prefix.
CompressionResult compress(const CompressionJob& job);

struct DecompressionResult {
  TexturedMesh mesh;
  ViewImage primary_view;  // generated image after background masking
};

/// Generates the primary view (edge-conditioned when the container carries
/// edges), masks its background and lifts it to a mesh.
DecompressionResult decompress(const CompressedContainer& container, const BackendSettings& backends);
// Unpacks first, so a malformed container fails before any backend call.
DecompressionResult decompress(std::span<const std::uint8_t> packed, const BackendSettings& backends);

}  // namespace s3dc
