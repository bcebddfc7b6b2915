// Offline backends. Every output is a pure function of the inputs and the
// seed, computed with integer arithmetic where it reaches the pixels.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "backends_internal.hpp"
#include "s3dc/error.hpp"

namespace s3dc::detail {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t image_hash(const Image& image, std::uint64_t seed) {
  auto h = fnv1a(image.rgb);
  return mix(h ^ mix(seed) ^ (static_cast<std::uint64_t>(image.width) << 32) ^
             static_cast<std::uint64_t>(image.height));
}

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& words, std::uint64_t h, int slot) {
  return words[mix(h + static_cast<std::uint64_t>(slot)) % N];
}

std::string_view color_name(double r, double g, double b) {
  const double hi = std::max({r, g, b}), lo = std::min({r, g, b});
  if (hi - lo < 30) return hi > 200 ? "white" : (hi < 50 ? "black" : "gray");
  double hue;
  if (hi == r) {
    hue = 60 * std::fmod((g - b) / (hi - lo) + 6, 6.0);
  } else if (hi == g) {
    hue = 60 * ((b - r) / (hi - lo) + 2);
  } else {
    hue = 60 * ((r - g) / (hi - lo) + 4);
  }
  if (hue < 20 || hue >= 330) return hi < 140 ? "brown" : "red";
  if (hue < 45) return hi < 140 ? "brown" : "orange";
  if (hue < 70) return "yellow";
  if (hue < 165) return "green";
  if (hue < 200) return "cyan";
  if (hue < 260) return "blue";
  if (hue < 300) return "purple";
  return "pink";
}

class MockCaptioner final : public Captioner {
 public:
  explicit MockCaptioner(std::uint64_t seed) : seed_(seed) {}

  std::string complete(const std::string& prompt, const Image* image) override {
    if (prompt.starts_with(kSimplifyPrompt)) return simplify(prompt);
    if (image != nullptr) return caption(*image);
    return "The request carried no image so there is nothing to describe.";
  }

 private:
  std::string caption(const Image& image) const {
    const auto h = image_hash(image, seed_);
    const auto* bg = &image.rgb[0];
    std::uint64_t count = 0;
    double sum[3] = {0, 0, 0};
    for (std::size_t i = 0; i + 2 < image.rgb.size(); i += 3) {
      bool object = false;
      for (int c = 0; c < 3; ++c) {
        if (std::abs(int(image.rgb[i + c]) - int(bg[c])) > 12) object = true;
      }
      if (!object) continue;
      ++count;
      for (int c = 0; c < 3; ++c) sum[c] += image.rgb[i + c];
    }
    const auto pixels = static_cast<std::uint64_t>(image.width) * image.height;
    std::string_view color = "gray";
    if (count > 0) color = color_name(sum[0] / count, sum[1] / count, sum[2] / count);
    const auto percent = pixels == 0 ? 0 : count * 100 / pixels;
    std::string_view size = percent < 10 ? "small" : (percent < 30 ? "medium sized" : "large");

    static constexpr std::array<std::string_view, 6> kShape{
        "boxy", "rounded", "angular", "compact", "blocky", "faceted"};
    static constexpr std::array<std::string_view, 4> kFinish{"matte", "smooth", "satin", "dull"};
    static constexpr std::array<std::string_view, 4> kOutline{
        "square", "rectangular", "symmetric", "regular"};
    static constexpr std::array<std::string_view, 4> kPattern{
        "plain and untextured", "uniform without markings", "evenly shaded", "flat and clean"};
    static constexpr std::array<std::string_view, 4> kFeature{
        "crisp straight creases", "sharp right angle corners", "clean flat bevels",
        "well defined edges"};
    static constexpr std::array<std::string_view, 4> kDetail{
        "no handles or openings", "no visible seams or text", "no decorations of any kind",
        "no holes or protrusions"};

    std::string out;
    out += "The object is a ";
    out += pick(kShape, h, 0);
    out += ' ';
    out += size;
    out += " item shown in a single ";
    out += color;
    out += " tone with a ";
    out += pick(kFinish, h, 1);
    out += " surface. It sits upright facing the viewer with its main body centered and its "
           "outline reading as ";
    out += pick(kOutline, h, 2);
    out += " from every side. The ";
    out += color;
    out += " faces are ";
    out += pick(kPattern, h, 3);
    out += " and catch the light evenly, with ";
    out += pick(kFeature, h, 4);
    out += " along the borders. Its silhouette covers about ";
    out += std::to_string(percent);
    out += " percent of the frame. Fine details include ";
    out += pick(kDetail, h, 5);
    out += ".";
    return out;
  }

  static std::string simplify(const std::string& prompt) {
    static const std::set<std::string> kStop{
        "the", "a",     "an",   "is",    "of",   "and",   "with",  "its",  "it",
        "from", "every", "to",  "as",    "in",   "on",    "at",    "about", "each",
        "are", "be",    "by",   "for",   "into", "this",  "that",  "or",   "any",
        "no",  "some",  "shown", "sits", "item", "reading", "catch", "include"};
    auto body_start = prompt.find("\n\n");
    std::string body = body_start == std::string::npos ? "" : prompt.substr(body_start + 2);
    std::vector<std::string> words;
    std::set<std::string> seen;
    std::string word;
    auto flush = [&] {
      if (!word.empty() && !kStop.count(word) && seen.insert(word).second) words.push_back(word);
      word.clear();
    };
    for (char c : body) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else {
        flush();
      }
    }
    flush();
    // The budget is a soft request, so the mock answers in full and leaves
    // clamping to the client, as real captioners often do.
    std::string out;
    for (const auto& w : words) {
      if (!out.empty()) out += ' ';
      out += w;
    }
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out + ".";
  }

  std::uint64_t seed_;
};

Rgb background_color(std::uint64_t h) {
  auto b = mix(h ^ 0x5bd1e995ULL);
  return {static_cast<std::uint8_t>(200 + b % 56), static_cast<std::uint8_t>(200 + (b >> 8) % 56),
          static_cast<std::uint8_t>(200 + (b >> 16) % 56)};
}

std::uint64_t descriptor_hash(const SemanticDescriptor& d, std::uint64_t seed) {
  return mix(seed) ^ fnv1a(d.text);
}

Image filled(int resolution, Rgb color) {
  return Image(resolution, resolution, color[0], color[1], color[2]);
}

// Colored ellipse with a darker band over a pastel background.
Image procedural_blob(std::uint64_t h, int r) {
  auto img = filled(r, background_color(h));
  auto b = mix(h ^ 0xc2b2ae35ULL);
  Rgb body{static_cast<std::uint8_t>(20 + b % 140), static_cast<std::uint8_t>(20 + (b >> 8) % 140),
           static_cast<std::uint8_t>(20 + (b >> 16) % 140)};
  Rgb band{static_cast<std::uint8_t>(body[0] / 2), static_cast<std::uint8_t>(body[1] / 2),
           static_cast<std::uint8_t>(body[2] / 2)};
  const std::int64_t cx = r / 2 + static_cast<std::int64_t>((b >> 24) % (r / 10 + 1)) - r / 20;
  const std::int64_t cy = r / 2 + static_cast<std::int64_t>((b >> 32) % (r / 10 + 1)) - r / 20;
  const std::int64_t rx = r / 5 + static_cast<std::int64_t>((b >> 40) % (r * 3 / 20 + 1));
  const std::int64_t ry = r / 5 + static_cast<std::int64_t>((b >> 48) % (r * 3 / 20 + 1));
  const std::int64_t band_half = std::max<std::int64_t>(1, ry / 8);
  for (std::int64_t y = 0; y < r; ++y) {
    for (std::int64_t x = 0; x < r; ++x) {
      const auto dx = x - cx, dy = y - cy;
      if (dx * dx * ry * ry + dy * dy * rx * rx > rx * rx * ry * ry) continue;
      const auto& c = (dy >= -band_half && dy <= band_half) ? band : body;
      auto* p = &img.rgb[(static_cast<std::size_t>(y) * r + x) * 3];
      p[0] = c[0];
      p[1] = c[1];
      p[2] = c[2];
    }
  }
  return img;
}

class MockGenerator final : public ImageGenerator {
 public:
  MockGenerator(std::uint64_t seed, int resolution) : seed_(seed), resolution_(resolution) {}
  Image generate(const SemanticDescriptor& d) override {
    return procedural_blob(descriptor_hash(d, seed_), resolution_);
  }

 private:
  std::uint64_t seed_;
  int resolution_;
};

class MockConditionedGenerator final : public ConditionedImageGenerator {
 public:
  MockConditionedGenerator(std::uint64_t seed, int resolution)
      : seed_(seed), resolution_(resolution) {}

  Image generate(const SemanticDescriptor& d, const EdgeMap& edges) override {
    const auto h = descriptor_hash(d, seed_);
    if (edges.nnz() == 0) return procedural_blob(h, resolution_);
    auto img = filled(resolution_, background_color(h));
    const auto ink = mix(h ^ 0x27d4eb2fULL);
    const Rgb dark{static_cast<std::uint8_t>(ink % 48), static_cast<std::uint8_t>((ink >> 8) % 48),
                   static_cast<std::uint8_t>((ink >> 16) % 48)};
    const std::int64_t r = resolution_, dd = edges.resolution;
    for (std::int64_t y = 0; y < r; ++y) {
      for (std::int64_t x = 0; x < r; ++x) {
        if (!edges.at(static_cast<int>(y * dd / r), static_cast<int>(x * dd / r))) continue;
        auto* p = &img.rgb[(static_cast<std::size_t>(y) * r + x) * 3];
        p[0] = dark[0];
        p[1] = dark[1];
        p[2] = dark[2];
      }
    }
    return img;
  }

 private:
  std::uint64_t seed_;
  int resolution_;
};

// Extrudes the alpha silhouette into a prism of depth kMockPrismDepth.
// x grows right and y up, image aspect preserved; the front cap faces +Z and
// carries a front projection of the image.
class MockImageTo3d final : public ImageTo3d {
 public:
  TexturedMesh reconstruct(const ViewImage& input) override {
    const ViewImage view = input.alpha ? input : mask_background(input);
    const auto& alpha = *view.alpha;
    const int w = view.pixels.width, h = view.pixels.height;
    const int side = std::max(w, h);
    const int cell = (side + kMockMaxCells - 1) / kMockMaxCells;
    const int gw = (w + cell - 1) / cell, gh = (h + cell - 1) / cell;

    std::vector<std::uint8_t> occ(static_cast<std::size_t>(gw) * gh, 0);
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        int inside = 0, total = 0;
        for (int y = gy * cell; y < std::min(h, (gy + 1) * cell); ++y) {
          for (int x = gx * cell; x < std::min(w, (gx + 1) * cell); ++x) {
            ++total;
            if (alpha[static_cast<std::size_t>(y) * w + x] >= 128) ++inside;
          }
        }
        occ[static_cast<std::size_t>(gy) * gw + gx] = 2 * inside >= total && inside > 0;
      }
    }
    auto occupied = [&](int gx, int gy) {
      return gx >= 0 && gy >= 0 && gx < gw && gy < gh &&
             occ[static_cast<std::size_t>(gy) * gw + gx] != 0;
    };

    TexturedMesh mesh;
    std::map<std::array<int, 3>, std::uint32_t> index;
    auto vertex = [&](int gx, int gy, int layer) {
      auto [it, fresh] = index.try_emplace({gx, gy, layer}, 0);
      if (fresh) {
        const int px = std::min(gx * cell, w), py = std::min(gy * cell, h);
        it->second = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back({static_cast<double>(px) / side,
                                 static_cast<double>(h - py) / side,
                                 layer == 1 ? kMockPrismDepth : 0.0});
        mesh.uvs.push_back({static_cast<double>(px) / w, 1.0 - static_cast<double>(py) / h});
      }
      return it->second;
    };
    auto tri = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
      mesh.triangles.push_back({a, b, c});
      mesh.uv_triangles.push_back({a, b, c});
    };
    // Quad p0..p3, flipped if needed so its normal points along `out`.
    auto quad = [&](std::array<std::uint32_t, 4> q, const Vec3& out) {
      const auto& v = mesh.vertices;
      auto n = cross(v[q[1]] - v[q[0]], v[q[2]] - v[q[0]]);
      if (dot(n, out) < 0) std::swap(q[1], q[3]);
      tri(q[0], q[1], q[2]);
      tri(q[0], q[2], q[3]);
    };

    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        if (!occupied(gx, gy)) continue;
        for (int layer = 0; layer < 2; ++layer) {
          quad({vertex(gx, gy + 1, layer), vertex(gx + 1, gy + 1, layer), vertex(gx + 1, gy, layer),
                vertex(gx, gy, layer)},
               {0, 0, layer == 1 ? 1.0 : -1.0});
        }
        if (!occupied(gx - 1, gy)) {
          quad({vertex(gx, gy, 0), vertex(gx, gy + 1, 0), vertex(gx, gy + 1, 1), vertex(gx, gy, 1)},
               {-1, 0, 0});
        }
        if (!occupied(gx + 1, gy)) {
          quad({vertex(gx + 1, gy, 0), vertex(gx + 1, gy + 1, 0), vertex(gx + 1, gy + 1, 1),
                vertex(gx + 1, gy, 1)},
               {1, 0, 0});
        }
        if (!occupied(gx, gy - 1)) {
          quad({vertex(gx, gy, 0), vertex(gx + 1, gy, 0), vertex(gx + 1, gy, 1), vertex(gx, gy, 1)},
               {0, 1, 0});
        }
        if (!occupied(gx, gy + 1)) {
          quad({vertex(gx, gy + 1, 0), vertex(gx + 1, gy + 1, 0), vertex(gx + 1, gy + 1, 1),
                vertex(gx, gy + 1, 1)},
               {0, -1, 0});
        }
      }
    }
    require(!mesh.triangles.empty(), ErrorKind::kBackend, "image_to_3d: empty silhouette");
    mesh.texture = Texture{view.pixels, {}, ImageFormat::kPng};
    return mesh;
  }
};

// 4 x 4 grid of mean RGB in [0, 1].
class MockEmbedder final : public Embedder {
 public:
  std::vector<double> embed(const Image& image) override {
    std::vector<double> out(48, 0.0);
    for (int gy = 0; gy < 4; ++gy) {
      for (int gx = 0; gx < 4; ++gx) {
        const int x0 = gx * image.width / 4, x1 = (gx + 1) * image.width / 4;
        const int y0 = gy * image.height / 4, y1 = (gy + 1) * image.height / 4;
        std::uint64_t sum[3] = {0, 0, 0}, n = 0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            const auto* p = image.at(x, y);
            for (int c = 0; c < 3; ++c) sum[c] += p[c];
            ++n;
          }
        }
        for (int c = 0; c < 3; ++c) {
          out[static_cast<std::size_t>((gy * 4 + gx) * 3 + c)] =
              n == 0 ? 0.0 : static_cast<double>(sum[c]) / (255.0 * static_cast<double>(n));
        }
      }
    }
    return out;
  }
};

}  // namespace

std::unique_ptr<Captioner> make_mock_captioner(std::uint64_t seed) {
  return std::make_unique<MockCaptioner>(seed);
}
std::unique_ptr<ImageGenerator> make_mock_generator(std::uint64_t seed, int resolution) {
  return std::make_unique<MockGenerator>(seed, resolution);
}
std::unique_ptr<ConditionedImageGenerator> make_mock_conditioned_generator(std::uint64_t seed,
                                                                           int resolution) {
  return std::make_unique<MockConditionedGenerator>(seed, resolution);
}
std::unique_ptr<ImageTo3d> make_mock_image_to_3d(std::uint64_t) {
  return std::make_unique<MockImageTo3d>();
}
std::unique_ptr<Embedder> make_mock_embedder(std::uint64_t) {
  return std::make_unique<MockEmbedder>();
}

}  // namespace s3dc::detail
