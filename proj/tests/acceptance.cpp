// Acceptance suite: one PASS/FAIL line per primary criterion. Every check
// compares against an oracle computed here, independently of the library.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "s3dc/container.hpp"
#include "s3dc/edgemap.hpp"
#include "s3dc/error.hpp"
#include "s3dc/evalkit.hpp"
#include "s3dc/geometry.hpp"
#include "s3dc/pipeline.hpp"

using namespace s3dc;
namespace fx = s3dc::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Outcome()> check;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---- breakeven ------------------------------------------------------------

Outcome breakeven() {
  double worst = 0;
  for (std::uint32_t d : {2u, 64u, 128u, 256u, 512u, 1024u, 2048u}) {
    // log2 of a power of two by counting shifts, not std::log2.
    int bits = 0;
    for (std::uint32_t v = d; v > 1; v >>= 1) ++bits;
    worst = std::max(worst, std::abs(breakeven_sparsity(d) - (1.0 - 1.0 / (2.0 * bits))));
  }
  const double b2048 = breakeven_sparsity(2048);
  const bool printed = std::round(b2048 * 1e4) / 1e4 == 0.9545;
  const bool pass = worst <= 1e-12 && std::abs(b2048 - 21.0 / 22.0) <= 1e-6 && printed && b2048 > 0.95;
  return {pass, fmt("max |err| vs closed form %.1e; D=2048 -> %.8f (0.9545 at 4 d.p., > 95%%)", worst, b2048)};
}

// ---- codec -----------------------------------------------------------------

// Size the codec must produce: COO when its bit count beats the dense
// bitmap's, each coordinate padded to whole bytes.
std::size_t oracle_payload(std::uint32_t d, std::uint64_t n) {
  int bits = 0;
  while ((1ull << bits) < d) ++bits;
  const std::uint64_t coo = n * 2 * bits, dense = std::uint64_t{d} * d;
  if (coo < dense) return n * 2 * ((bits + 7) / 8);
  return (dense + 7) / 8;
}

Outcome codec() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  int mismatched_maps = 0, wrong_sizes = 0, coo = 0;
  for (int i = 0; i < 1000; ++i) {
    const int d = i % 2 ? 64 : 256;
    const double density = 0.001 + u(rng) * (0.5 - 0.001);
    EdgeMap m(d, 100);
    for (auto& g : m.grid) g = u(rng) < density;
    auto enc = encode_edges(m);
    coo += enc.encoding == EdgeEncoding::kCoo;
    if (decode_edges(enc).grid != m.grid) ++mismatched_maps;
    const auto n = static_cast<std::uint64_t>(std::count(m.grid.begin(), m.grid.end(), 1));
    if (enc.payload.size() != oracle_payload(static_cast<std::uint32_t>(d), n)) ++wrong_sizes;
  }
  return {mismatched_maps == 0 && wrong_sizes == 0,
          fmt("1000 maps (%d COO): %d round-trip mismatches, %d payload size mismatches", coo, mismatched_maps,
              wrong_sizes)};
}

// ---- Canny ------------------------------------------------------------------

std::vector<GrayImage> synthetic_corpus() {
  std::vector<GrayImage> corpus;
  std::mt19937 rng(7);
  for (int i = 0; i < 20; ++i) {
    const int w = 48 + 16 * (i % 5), h = w;  // canny takes square rasters
    switch (i % 4) {
      case 0: corpus.push_back(to_gray(fx::noise_image(w, h, 100 + i))); break;
      case 1: corpus.push_back(to_gray(fx::photo_like_image(w, h))); break;
      case 2: {  // black and white rectangles, strong enough for t = 500
        GrayImage g(w, h, i % 8 ? 0.0 : 255.0);
        for (int k = 0; k < 6; ++k) {
          int x0 = rng() % w, y0 = rng() % h, x1 = std::min(w, x0 + 5 + int(rng() % 30)),
              y1 = std::min(h, y0 + 5 + int(rng() % 30));
          double v = rng() % 2 ? 255.0 : 0.0;
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) g.at(x, y) = v;
        }
        corpus.push_back(g);
        break;
      }
      default: {  // disc with a radial ramp
        GrayImage g(w, h, 0.0);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            double r = std::hypot(x - w / 2.0, y - h / 2.0);
            g.at(x, y) = r < h / 3.0 ? 255 - 3 * r : 20 + (x * 7 + i) % 50;
          }
        corpus.push_back(g);
      }
    }
  }
  return corpus;
}

Outcome canny_nesting() {
  std::size_t violations = 0, e100 = 0, e250 = 0, e500 = 0;
  for (const auto& img : synthetic_corpus()) {
    auto a = canny(img, 100), b = canny(img, 250), c = canny(img, 500);
    e100 += a.nnz(), e250 += b.nnz(), e500 += c.nnz();
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
      violations += (c.grid[i] && !b.grid[i]) + (b.grid[i] && !a.grid[i]);
    }
  }
  return {violations == 0 && e500 > 0 && e100 > e500,
          fmt("20 images, edge pixels %zu >= %zu >= %zu, %zu violations", e100, e250, e500, violations)};
}

// Peak Sobel magnitude of a unit step after the default Gaussian, by brute
// force: the image is constant along y, so only the horizontal profile matters.
double unit_step_magnitude() {
  const double sigma = kDefaultSigma;
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> w;
  for (int k = -radius; k <= radius; ++k) w.push_back(std::exp(-(k * k) / (2 * sigma * sigma)));
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  auto smoothed = [&](int x) {
    double s = 0;
    for (int k = -radius; k <= radius; ++k) s += (x + k >= 0 ? 1.0 : 0.0) * w[k + radius] / sum;
    return s;
  };
  double peak = 0;
  for (int x = -radius - 2; x <= radius + 2; ++x) peak = std::max(peak, 4 * (smoothed(x + 1) - smoothed(x - 1)));
  return peak;
}

Outcome canny_analytic() {
  const double unit = unit_step_magnitude();
  int wrong = 0, cases = 0;
  for (double height : {40.0, 100.0, 180.0, 255.0}) {
    GrayImage img(48, 48, 0.0);
    for (int y = 0; y < 48; ++y)
      for (int x = 24; x < 48; ++x) img.at(x, y) = height;
    const double m = unit * height;
    for (double t : {0.25 * m, 0.9 * m, m * (1 - 1e-9), m * (1 + 1e-9), 1.1 * m, 4 * m}) {
      auto e = canny(img, t);
      const bool expect = t <= m;
      bool present = e.nnz() > 0;
      // When present, the edge is one full column on either side of the
      // step: the two columns tie in exact arithmetic.
      if (present) {
        bool left = true, right = true;
        for (int r = 0; r < 48; ++r) left = left && e.at(r, 23), right = right && e.at(r, 24);
        present = (left || right) && e.nnz() == 48;
      }
      wrong += present != expect;
      ++cases;
    }
  }
  return {wrong == 0, fmt("%d threshold cases around oracle magnitude %.4f x height, %d wrong", cases, unit, wrong)};
}

// ---- F-score ----------------------------------------------------------------

FScore brute_force_f(const std::vector<Vec3>& orig, const std::vector<Vec3>& dec, double d) {
  auto covered = [&](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    std::size_t hit = 0;
    for (const auto& p : from) {
      for (const auto& q : to) {
        const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
        if (dx * dx + dy * dy + dz * dz <= d * d) {
          ++hit;
          break;
        }
      }
    }
    return from.empty() ? 0.0 : static_cast<double>(hit) / from.size();
  };
  FScore s;
  s.precision = covered(dec, orig);
  s.recall = covered(orig, dec);
  s.f = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0;
  return s;
}

Outcome fscore_oracle() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 500, k = 1 + rng() % 500;
    const double d = 0.01 + 0.2 * u(rng);
    std::vector<Vec3> a(n), b(k);
    for (auto& p : a) p = {u(rng), u(rng), u(rng)};
    for (auto& p : b) p = {u(rng), u(rng), u(rng) * 0.5};
    auto fast = f_score_points(a, b, d);
    auto slow = brute_force_f(a, b, d);
    mismatches += fast.precision != slow.precision || fast.recall != slow.recall || fast.f != slow.f;
  }
  const auto sphere = fx::make_icosphere(2);
  const double self = f_score(sphere, sphere).f;
  return {mismatches == 0 && self == 1.0,
          fmt("100 pairs: %d inexact; identical meshes F = %.2f", mismatches, self)};
}

// ---- decimation ---------------------------------------------------------------

Outcome decimation() {
  const auto sphere = fx::make_icosphere(3);
  const std::size_t original = sphere.triangles.size();
  std::vector<std::size_t> counts;
  double f_half = 0;
  for (double ratio : {0.25, 0.5, 0.75}) {
    auto r = decimate(sphere, {.target_triangle_ratio = ratio});
    counts.push_back(r.mesh.triangles.size());
    if (ratio == 0.5) f_half = f_score(sphere, r.mesh).f;
  }
  const double target = 0.5 * original;
  const bool within = std::abs(static_cast<double>(counts[1]) - target) <= 0.05 * target;
  const bool monotone = counts[0] < counts[1] && counts[1] < counts[2];
  return {within && monotone && f_half >= 0.95,
          fmt("%zu tris -> %zu/%zu/%zu at 0.25/0.5/0.75 (target %.0f); F(0.5) = %.4f", original, counts[0], counts[1],
              counts[2], target, f_half)};
}

// ---- mean rank ------------------------------------------------------------------

Outcome mean_rank_check() {
  // A=0, B=1, C=2; rankings list methods best to worst.
  const std::vector<std::vector<int>> fixture = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}};
  const auto mr = mean_rank(fixture);
  // Hand-computed zero-indexed positions: A 0,0,1  B 1,2,0  C 2,1,2.
  const std::vector<double> oracle = {1.0 / 3, 3.0 / 3, 5.0 / 3};
  const std::vector<double> stated = {1.0 / 3, 4.0 / 3, 7.0 / 3};
  bool matches_oracle = true, matches_stated = true;
  for (int k = 0; k < 3; ++k) {
    matches_oracle = matches_oracle && std::abs(mr[k] - oracle[k]) < 1e-15;
    matches_stated = matches_stated && std::abs(mr[k] - stated[k]) < 1e-15;
  }

  std::mt19937_64 rng(5);
  int conservation_failures = 0;
  for (int set = 0; set < 1000; ++set) {
    const int m = 2 + static_cast<int>(rng() % 9), participants = 1 + static_cast<int>(rng() % 12);
    std::vector<std::vector<int>> rankings(participants, std::vector<int>(m));
    for (auto& r : rankings) {
      std::iota(r.begin(), r.end(), 0);
      std::shuffle(r.begin(), r.end(), rng);
    }
    const auto v = mean_rank(rankings);
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    conservation_failures += std::abs(total - m * (m - 1) / 2.0) > 1e-9;
  }
  // The stated B and C values sum with A to 4, not m(m-1)/2 = 3, so they
  // cannot hold together with conservation. Report that rather than pass.
  return {matches_stated && conservation_failures == 0,
          fmt("got MR = %.4f, %.4f, %.4f (oracle %s); criterion expects 1/3, 4/3, 7/3, which sum to 4 and "
              "contradict conservation (3) and zero-indexed positions; conservation failures: %d/1000",
              mr[0], mr[1], mr[2], matches_oracle ? "agrees" : "DISAGREES", conservation_failures)};
}

// ---- sparsity profile -------------------------------------------------------------

Outcome sparsity_profile() {
  auto corpus = synthetic_corpus();
  corpus.resize(8);
  const std::vector<int> res = {64, 128, 256};
  const std::vector<double> ts = {50, 300, 550, 800};
  auto table = profile_sparsity(corpus, res, ts);
  int decreases = 0;
  for (const auto& row : table.cells) {
    for (std::size_t j = 1; j < row.size(); ++j) decreases += row[j].mean_percent < row[j - 1].mean_percent;
  }
  std::vector<GrayImage> flat = {GrayImage(50, 40, 0.0), GrayImage(33, 70, 128.0), GrayImage(64, 64, 255.0)};
  auto flat_table = profile_sparsity(flat, {64, 2048}, ts);
  int not_hundred = 0;
  for (const auto& row : flat_table.cells)
    for (const auto& c : row) not_hundred += c.mean_percent != 100.0 || c.std_percent != 0.0;
  return {decreases == 0 && not_hundred == 0,
          fmt("%d decreasing steps over %zu rows; %d constant-image cells differ from 100.0", decreases, res.size(),
              not_hundred)};
}

// ---- end-to-end ----------------------------------------------------------------------

Outcome end_to_end() {
  fx::TempDir dir;
  const auto settings = BackendSettings::mock(1);

  auto cube = fx::make_textured_cube();
  save_object(cube, dir / "cube.obj");
  CompressionJob structured;
  structured.input_path = dir / "cube.obj";
  structured.mode = CompressionMode::kStructured;
  structured.char_budget = 250;
  structured.edge_threshold = 300;
  structured.backends = settings;
  auto compressed = compress(structured);
  auto out = decompress(std::span<const std::uint8_t>(compressed.packed), settings);
  RenderConfig config;
  config.resolution = 256;
  auto front = [&](const TexturedMesh& m) { return render_view(normalize_unit_cube(m), config, CameraTag::kFront); };
  const double iou = mask_iou(front(cube), front(out.mesh));
  const auto edges = compressed.container.edges ? compressed.container.edges->nnz : 0u;

  const auto sizes = fx::save_padded(fx::make_cube(), dir / "big.obj", 1'000'000);
  CompressionJob semantic;
  semantic.input_path = dir / "big.obj";
  semantic.mode = CompressionMode::kSemantic;
  semantic.char_budget = 50;
  semantic.backends = settings;
  auto small = compress(semantic);
  const double ratio = static_cast<double>(sizes.total_bytes) / small.packed.size();

  return {iou >= 0.5 && edges > 0 && small.packed.size() == 58 && sizes.total_bytes == 1'000'000 && ratio >= 1.7e4,
          fmt("structured t=300 d=250: %u edge pixels, %zu-byte container, IoU %.3f; semantic d=50: %zu bytes, "
              "ratio %.0f on %llu bytes",
              edges, compressed.packed.size(), iou, small.packed.size(), ratio,
              static_cast<unsigned long long>(sizes.total_bytes))};
}

// ---- container --------------------------------------------------------------------------

CompressedContainer random_container(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  CompressedContainer c;
  const int len = 1 + static_cast<int>(rng() % 300);
  for (int i = 0; i < len; ++i) {
    const int k = static_cast<int>(rng() % 27);
    c.descriptor.text.push_back(k == 26 ? ' ' : static_cast<char>('a' + k));
  }
  c.descriptor.char_budget = c.descriptor.text.size();
  if (rng() % 2) {
    const int d = std::array<int, 3>{64, 128, 256}[rng() % 3];
    const auto t = static_cast<std::uint16_t>(1 + rng() % 1000);
    EdgeMap m(d, t);
    const double density = u(rng) * 0.5;
    for (auto& g : m.grid) g = u(rng) < density;
    c.mode = CompressionMode::kStructured;
    c.edges = encode_edges(m);
    c.edge_threshold = t;
  }
  return c;
}

ErrorKind unpack_kind(std::span<const std::uint8_t> bytes) {
  try {
    unpack(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kDomain;  // accepted: counts as no error class
}

Outcome container() {
  std::mt19937_64 rng(77);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    auto c = random_container(rng);
    auto bytes = pack(c);
    auto back = unpack(bytes);
    failures += !(back == c) || pack(back) != bytes;
  }
  CompressedContainer sample;
  sample.descriptor = {"a wooden chair", 14};
  auto bytes = pack(sample);
  auto magic = bytes, version = bytes, truncated = bytes;
  magic[1] = 'X';
  version[4] = 9;
  truncated.pop_back();
  const auto k1 = unpack_kind(magic), k2 = unpack_kind(version), k3 = unpack_kind(truncated);
  const bool distinct = k1 == ErrorKind::kBadMagic && k2 == ErrorKind::kUnknownVersion && k3 == ErrorKind::kTruncated;
  return {failures == 0 && distinct, fmt("1000 round trips, %d failures; corruption -> %s / %s / %s", failures,
                                         to_string(k1), to_string(k2), to_string(k3))};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"breakeven formula", 1, breakeven},
      {"edge codec round trip and size", 5, codec},
      {"canny threshold nesting", 10, canny_nesting},
      {"canny analytic step", 0, canny_analytic},
      {"f-score vs brute force", 30, fscore_oracle},
      {"decimation", 10, decimation},
      {"mean rank", 0, mean_rank_check},
      {"sparsity profile", 0, sparsity_profile},
      {"end-to-end mock pipeline", 60, end_to_end},
      {"container round trip and corruption", 0, container},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds == 0 || seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  %-38s %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds,
                in_time ? "" : fmt(", over %.0f s budget", c.budget_seconds).c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
