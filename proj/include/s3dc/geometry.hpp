#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "s3dc/mesh.hpp"

namespace s3dc {

struct DecimationParams {
  double target_triangle_ratio = 0.5;  // (0, 1]
  // Error-threshold growth for pass-based simplifiers. Validated (> 0) but
  // unused by the global priority-queue order implemented here.
  double aggressiveness = 7.0;
};

struct DecimationResult {
  TexturedMesh mesh;
  std::size_t target_triangles = 0;
  bool clamped = false;         // ratio asked for fewer than 4 triangles
  bool target_reached = false;  // false when every remaining collapse was blocked
};

/// Quadric-error edge collapse. Collapses are taken in increasing cost order
/// (ties broken by lowest vertex indices) until the triangle count reaches
/// `max(4, ceil(ratio * |T|))`. Each collapse places the surviving vertex at
/// the quadric-optimal point, or at the edge midpoint when the 3x3 system is
/// singular. Collapses that would break the link condition, flip a face, or
/// touch a texture seam are skipped. The surviving vertex's uv is
/// interpolated along the collapsed edge.
DecimationResult decimate(const TexturedMesh& mesh, const DecimationParams& params);

struct PointSet {
  std::vector<Vec3> points;
  std::vector<std::uint32_t> triangle_ids;  // source triangle per point
  std::uint64_t source_seed = 0;
  std::size_t count() const noexcept { return points.size(); }
};

// Area-uniform surface samples; deterministic given `seed` on every platform.
PointSet sample_surface(const TexturedMesh& mesh, std::size_t n, std::uint64_t seed);

// Uniform scale so the longest bounding-box axis spans [0,1]; every axis is
// centered at 0.5.
TexturedMesh normalize_unit_cube(const TexturedMesh& mesh);

struct Bounds {
  Vec3 lo, hi;
};
Bounds bounding_box(const TexturedMesh& mesh);

double triangle_area(const TexturedMesh& mesh, std::size_t tri);

// Recomputes area-weighted per-vertex normals.
void compute_normals(TexturedMesh& mesh);

// std::mt19937_64 with a platform-independent [0,1) mapping (the standard
// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : engine_() % bound; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace s3dc
