#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <unistd.h>

#include "s3dc/mesh.hpp"

namespace s3dc::testing {

// Unit cube [0,1]^3, outward CCW triangles, each face mapped to the full
// texture square.
inline TexturedMesh make_cube(bool with_uvs = true) {
  TexturedMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  // Each quad listed CCW seen from outside.
  const std::array<std::array<std::uint32_t, 4>, 6> quads = {{
      {4, 5, 6, 7},  // +z
      {1, 0, 3, 2},  // -z
      {5, 1, 2, 6},  // +x
      {0, 4, 7, 3},  // -x
      {7, 6, 2, 3},  // +y
      {0, 1, 5, 4},  // -y
  }};
  if (with_uvs) m.uvs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
    if (with_uvs) {
      m.uv_triangles.push_back({0, 1, 2});
      m.uv_triangles.push_back({0, 2, 3});
    }
  }
  return m;
}

// Icosphere of radius 1 centred at the origin: 20 * 4^subdivisions triangles.
inline TexturedMesh make_icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TexturedMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : m.vertices) v = normalized(v);
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      m.vertices.push_back(normalized((m.vertices[a] + m.vertices[b]) * 0.5));
      auto idx = static_cast<std::uint32_t>(m.vertices.size() - 1);
      midpoint[key] = idx;
      return idx;
    };
    std::vector<Triangle> next;
    for (const auto& tri : m.triangles) {
      auto a = mid(tri[0], tri[1]), b = mid(tri[1], tri[2]), c = mid(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    m.triangles = std::move(next);
  }
  return m;
}

inline TexturedMesh make_unit_square() {
  TexturedMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

inline Image solid_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return Image(w, h, r, g, b);
}

inline Image noise_image(int w, int h, std::uint32_t seed) {
  Image img(w, h);
  std::mt19937 rng(seed);
  for (auto& px : img.rgb) px = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

// Smooth gradient with a few shapes, closer to a photographic texture than noise.
inline Image photo_like_image(int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* p = img.at(x, y);
      double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
      p[0] = static_cast<std::uint8_t>(127 + 120 * std::sin(6 * u + 3 * v));
      p[1] = static_cast<std::uint8_t>(127 + 120 * std::cos(5 * v - 2 * u));
      p[2] = static_cast<std::uint8_t>(255 * u * v);
      if ((x / 16 + y / 16) % 5 == 0) p[2] = 30;
    }
  }
  return img;
}

// 64 x 64 dark wood texture with plank lines.
inline Image crate_texture() {
  Image img(64, 64, 90, 60, 30);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (y % 16 == 0 || x == 0 || x == 63) {
        auto* p = img.at(x, y);
        p[0] = 50;
        p[1] = 30;
        p[2] = 15;
      }
    }
  }
  return img;
}

// Unit cube carrying the crate texture on every face.
inline TexturedMesh make_textured_cube() {
  auto m = make_cube(true);
  m.texture = Texture{crate_texture(), {}, ImageFormat::kPng};
  return m;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("s3dc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string read_text(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

// Saves `mesh` to `path`, then pads the OBJ with a trailing comment so the
// object's files total exactly `total_bytes`.
inline SizeBreakdown save_padded(const TexturedMesh& mesh, const std::filesystem::path& path,
                                 std::uint64_t total_bytes) {
  auto sizes = save_object(mesh, path);
  if (sizes.total_bytes < total_bytes) {
    auto bytes = read_file(path);
    const auto pad = total_bytes - sizes.total_bytes;
    std::string comment = "#" + std::string(pad - 2, 'x') + "\n";
    bytes.insert(bytes.end(), comment.begin(), comment.end());
    write_file(path, bytes);
  }
  return size_breakdown(path);
}

}  // namespace s3dc::testing
