#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "s3dc/image.hpp"
#include "s3dc/mesh.hpp"

namespace s3dc {

enum class CameraTag { kFront, kBack, kLeft, kRight, kTop, kBottom, kComposite, kExternal };

std::string_view camera_name(CameraTag tag) noexcept;

struct ViewImage {
  Image pixels;
  // Per-pixel coverage, 255 = object. Same dimensions as `pixels` when present.
  std::optional<std::vector<std::uint8_t>> alpha;
  CameraTag camera = CameraTag::kExternal;
};

struct RenderConfig {
  int resolution = 512;
  std::array<std::uint8_t, 3> background{255, 255, 255};
  Vec3 light_direction = normalized({1, 1, 1});
  double ambient = 0.3;
};

inline constexpr std::array<std::uint8_t, 3> kDefaultAlbedo{180, 180, 180};

// Fraction of the image side left empty around the unit cube on each border.
inline constexpr double kViewMargin = 0.1;

/// Orthographic z-buffer render of a unit-cube-normalized mesh along one
/// axis. The front camera looks down -Z with +X right and +Y up; back, left,
/// right, top and bottom follow as the other cube faces. Flat Lambertian
/// shading (ambient + (1 - ambient) * max(0, n.l)) with nearest-texel lookup,
/// or a flat gray albedo when the mesh has no texture. Pixel centers are
/// sampled with a top-left fill rule.
ViewImage render_view(const TexturedMesh& mesh, const RenderConfig& config, CameraTag camera);

/// Views in the order front, back, left, right, top, bottom.
std::array<ViewImage, 6> render_views(const TexturedMesh& mesh, const RenderConfig& config);

/// 3x2 grid: front, right, back on the first row; left, top, bottom below.
ViewImage concat_grid(std::span<const ViewImage, 6> views);

/// Flood-fills near-uniform background from the four corners (4-connected,
/// per-channel tolerance against each corner's color) and marks the rest as
/// object coverage. RGB values are left untouched.
ViewImage mask_background(const ViewImage& view, int tolerance = 12);

std::size_t coverage_count(const ViewImage& view);
double mask_iou(const ViewImage& a, const ViewImage& b);

}  // namespace s3dc
