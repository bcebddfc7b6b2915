#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "s3dc/image.hpp"

namespace s3dc {

struct Vec2 {
  double x = 0, y = 0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double length(const Vec3& v);
Vec3 normalized(const Vec3& v);

using Triangle = std::array<std::uint32_t, 3>;

// Texture raster plus the exact encoded bytes it was loaded from (or recoded
// to). When `encoded` is empty the texture is written as PNG.
struct Texture {
  Image image;
  std::vector<std::uint8_t> encoded;
  ImageFormat format = ImageFormat::kPng;
};

// Triangle mesh with OBJ-style attribute indexing: `uv_triangles`, when
// non-empty, parallels `triangles` and indexes into `uvs`. A vertex referenced
// with more than one uv index lies on a texture seam.
struct TexturedMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec2> uvs;
  std::vector<Triangle> uv_triangles;
  std::vector<Vec3> normals;  // empty or one per vertex
  std::optional<Texture> texture;

  bool has_uvs() const noexcept { return !uv_triangles.empty(); }
};

// Throws kDomain when any TexturedMesh invariant is violated.
void validate(const TexturedMesh& mesh);

struct SizeBreakdown {
  std::uint64_t mesh_bytes = 0;
  std::uint64_t texture_bytes = 0;
  std::uint64_t total_bytes = 0;
  friend bool operator==(const SizeBreakdown&, const SizeBreakdown&) = default;
};

struct SaveOptions {
  // Used only for textures without retained encoded bytes. 0 selects PNG.
  int jpeg_quality = 0;
};

// Loads an OBJ file, resolving `mtllib` and `map_Kd` relative to it.
// Polygons are fan-triangulated; fully degenerate triangles are dropped.
// `warnings` (optional) collects non-fatal problems such as a missing texture.
TexturedMesh load_object(const std::filesystem::path& path,
                         std::vector<std::string>* warnings = nullptr);

// Parses OBJ text; `path` names the source in errors and anchors mtllib lookups.
TexturedMesh parse_obj(std::istream& in, const std::filesystem::path& path,
                       std::vector<std::string>* warnings = nullptr);

// Writes `<stem>.obj`, and when textured `<stem>.mtl` plus `<stem>_albedo.{png,jpg}`.
SizeBreakdown save_object(const TexturedMesh& mesh, const std::filesystem::path& path,
                          const SaveOptions& options = {});

// Byte counts of an OBJ plus the MTL and texture files it references.
SizeBreakdown size_breakdown(const std::filesystem::path& path);

// Re-encodes the texture as baseline JPEG at `quality` (1..100).
TexturedMesh recode_texture(const TexturedMesh& mesh, int quality);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

}  // namespace s3dc
