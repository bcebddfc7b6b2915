#include "s3dc/edgemap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "s3dc/error.hpp"

namespace s3dc {

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

GrayImage smooth(const GrayImage& image, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = image.width, h = image.height;
  GrayImage tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * image.at(reflect101(x + k, w), y);
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp.at(x, reflect101(y + k, h));
      out.at(x, y) = acc;
    }
  }
  return out;
}

std::uint8_t quantize(double gx, double gy) {
  if (gx == 0 && gy == 0) return 0;
  double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 180.0;
  if (deg < 22.5 || deg >= 157.5) return 0;
  if (deg < 67.5) return 45;
  if (deg < 112.5) return 90;
  return 135;
}

}  // namespace

GradientField gradient_field(const GrayImage& image, double sigma) {
  require(!image.empty(), ErrorKind::kDomain, "gradient_field: empty image");
  require(sigma > 0, ErrorKind::kDomain, "gradient_field: sigma must be > 0");
  const GrayImage s = smooth(image, sigma);
  const int w = s.width, h = s.height;
  GradientField f;
  f.width = w;
  f.height = h;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  f.gx.resize(n);
  f.gy.resize(n);
  f.magnitude.resize(n);
  f.orientation.resize(n);
  for (int y = 0; y < h; ++y) {
    const int ym = reflect101(y - 1, h), yp = reflect101(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xm = reflect101(x - 1, w), xp = reflect101(x + 1, w);
      const double gx = (s.at(xp, ym) + 2 * s.at(xp, y) + s.at(xp, yp)) -
                        (s.at(xm, ym) + 2 * s.at(xm, y) + s.at(xm, yp));
      const double gy = (s.at(xm, yp) + 2 * s.at(x, yp) + s.at(xp, yp)) -
                        (s.at(xm, ym) + 2 * s.at(x, ym) + s.at(xp, ym));
      const std::size_t i = f.index(x, y);
      f.gx[i] = gx;
      f.gy[i] = gy;
      f.magnitude[i] = std::sqrt(gx * gx + gy * gy);
      f.orientation[i] = quantize(gx, gy);
    }
  }
  return f;
}

std::size_t EdgeMap::nnz() const {
  return static_cast<std::size_t>(std::count(grid.begin(), grid.end(), std::uint8_t{1}));
}

double EdgeMap::sparsity() const {
  if (grid.empty()) return 1.0;
  return 1.0 - static_cast<double>(nnz()) / static_cast<double>(grid.size());
}

EdgeMap canny(const GradientField& f, double t) {
  require(t > 0, ErrorKind::kDomain, "canny: threshold must be > 0");
  require(f.width == f.height && f.width > 0, ErrorKind::kDomain, "canny: image must be square");
  const int w = f.width, h = f.height;
  const double high = t, low = t / 2.0;

  auto mag = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return f.magnitude[f.index(x, y)];
  };

  // 0 = suppressed, 1 = weak, 2 = strong
  std::vector<std::uint8_t> cls(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = f.index(x, y);
      const double m = f.magnitude[i];
      if (m < low) continue;
      int dx = 1, dy = 0;
      switch (f.orientation[i]) {
        case 0: dx = 1, dy = 0; break;
        case 45: dx = 1, dy = 1; break;
        case 90: dx = 0, dy = 1; break;
        default: dx = -1, dy = 1; break;
      }
      if (!(m > mag(x - dx, y - dy) && m >= mag(x + dx, y + dy))) continue;
      cls[i] = m >= high ? 2 : 1;
      if (cls[i] == 2) stack.push_back({x, y});
    }
  }

  EdgeMap out(w, t);
  for (auto [x, y] : stack) out.set(y, x);
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    for (int ny = y - 1; ny <= y + 1; ++ny) {
      for (int nx = x - 1; nx <= x + 1; ++nx) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        if (cls[f.index(nx, ny)] == 0 || out.at(ny, nx)) continue;
        out.set(ny, nx);
        stack.push_back({nx, ny});
      }
    }
  }
  return out;
}

EdgeMap canny(const GrayImage& image, double t, double sigma) {
  require(t > 0, ErrorKind::kDomain, "canny: threshold must be > 0");
  require(image.width == image.height, ErrorKind::kDomain, "canny: image must be square");
  return canny(gradient_field(image, sigma), t);
}

EdgeMap downsample_to_byte_grid(const EdgeMap& edges) {
  const int d = edges.resolution;
  if (d < kByteGridResolution) return edges;
  EdgeMap out(kByteGridResolution, edges.threshold);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      if (!edges.at(r, c)) continue;
      out.set(static_cast<int>(static_cast<long long>(r) * kByteGridResolution / d),
              static_cast<int>(static_cast<long long>(c) * kByteGridResolution / d));
    }
  }
  return out;
}

double breakeven_sparsity(std::uint32_t resolution) {
  require(resolution >= 2 && std::has_single_bit(resolution), ErrorKind::kDomain,
          "breakeven_sparsity: resolution must be a power of two >= 2");
  const double log2d = static_cast<double>(std::countr_zero(resolution));
  return 1.0 - 1.0 / (2.0 * log2d);
}

int coordinate_bits(std::uint32_t resolution) {
  return resolution <= 1 ? 0 : static_cast<int>(std::bit_width(resolution - 1));
}

int coordinate_bytes(std::uint32_t resolution) { return (coordinate_bits(resolution) + 7) / 8; }

std::uint64_t dense_bits(std::uint32_t resolution) {
  return static_cast<std::uint64_t>(resolution) * resolution;
}

std::uint64_t coo_bits(std::uint32_t resolution, std::uint64_t nnz) {
  return nnz * 2 * static_cast<std::uint64_t>(coordinate_bits(resolution));
}

std::size_t expected_payload_size(EdgeEncoding encoding, std::uint32_t resolution, std::uint64_t nnz) {
  if (encoding == EdgeEncoding::kDenseBitmap) return static_cast<std::size_t>((dense_bits(resolution) + 7) / 8);
  return static_cast<std::size_t>(nnz * 2 * static_cast<std::uint64_t>(coordinate_bytes(resolution)));
}

EncodedEdges encode_edges(const EdgeMap& edges) {
  require(edges.resolution > 0 &&
              edges.grid.size() == static_cast<std::size_t>(edges.resolution) * edges.resolution,
          ErrorKind::kDomain, "encode_edges: grid does not match resolution");
  const auto d = static_cast<std::uint32_t>(edges.resolution);
  EncodedEdges out;
  out.resolution = edges.resolution;
  out.threshold = edges.threshold;
  out.nnz = static_cast<std::uint32_t>(edges.nnz());
  out.encoding = coo_bits(d, out.nnz) < dense_bits(d) ? EdgeEncoding::kCoo : EdgeEncoding::kDenseBitmap;
  out.payload.reserve(expected_payload_size(out.encoding, d, out.nnz));
  if (out.encoding == EdgeEncoding::kCoo) {
    const int width = coordinate_bytes(d);
    auto put = [&](std::uint32_t v) {
      for (int b = 0; b < width; ++b) out.payload.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    };
    for (std::uint32_t r = 0; r < d; ++r) {
      for (std::uint32_t c = 0; c < d; ++c) {
        if (!edges.at(static_cast<int>(r), static_cast<int>(c))) continue;
        put(r);
        put(c);
      }
    }
  } else {
    out.payload.assign(expected_payload_size(out.encoding, d, out.nnz), 0);
    for (std::size_t i = 0; i < edges.grid.size(); ++i) {
      if (edges.grid[i]) out.payload[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
  }
  return out;
}

EdgeMap decode_edges(const EncodedEdges& encoded) {
  require(encoded.resolution > 0, ErrorKind::kFormat, "decode_edges: resolution must be > 0");
  const auto d = static_cast<std::uint32_t>(encoded.resolution);
  const std::size_t expected = expected_payload_size(encoded.encoding, d, encoded.nnz);
  require(encoded.payload.size() == expected, ErrorKind::kFormat,
          "decode_edges: payload is " + std::to_string(encoded.payload.size()) + " bytes, expected " +
              std::to_string(expected));
  EdgeMap out(encoded.resolution, encoded.threshold);
  if (encoded.encoding == EdgeEncoding::kCoo) {
    const int width = coordinate_bytes(d);
    std::size_t pos = 0;
    auto get = [&]() {
      std::uint32_t v = 0;
      for (int b = 0; b < width; ++b) v |= static_cast<std::uint32_t>(encoded.payload[pos++]) << (8 * b);
      return v;
    };
    std::int64_t previous = -1;
    for (std::uint32_t k = 0; k < encoded.nnz; ++k) {
      const std::uint32_t r = get(), c = get();
      require(r < d && c < d, ErrorKind::kFormat, "decode_edges: coordinate outside the grid");
      const std::int64_t linear = static_cast<std::int64_t>(r) * d + c;
      require(linear > previous, ErrorKind::kFormat, "decode_edges: coordinates not strictly row-major sorted");
      previous = linear;
      out.set(static_cast<int>(r), static_cast<int>(c));
    }
  } else {
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
      out.grid[i] = (encoded.payload[i / 8] >> (7 - i % 8)) & 1u;
    }
    // Padding bits past D^2 must be clear, and the count must agree.
    for (std::size_t i = out.grid.size(); i < encoded.payload.size() * 8; ++i) {
      require(((encoded.payload[i / 8] >> (7 - i % 8)) & 1u) == 0, ErrorKind::kFormat,
              "decode_edges: nonzero padding bits");
    }
    require(out.nnz() == encoded.nnz, ErrorKind::kFormat, "decode_edges: nnz disagrees with bitmap");
  }
  return out;
}

SparsityTable profile_sparsity(const std::vector<GrayImage>& views, const std::vector<int>& resolutions,
                               const std::vector<double>& thresholds, double sigma) {
  require(!views.empty(), ErrorKind::kDomain, "profile_sparsity: no views");
  require(!resolutions.empty() && !thresholds.empty(), ErrorKind::kDomain,
          "profile_sparsity: need at least one resolution and one threshold");
  SparsityTable table;
  table.resolutions = resolutions;
  table.thresholds = thresholds;
  for (int d : resolutions) {
    require(d > 0, ErrorKind::kDomain, "profile_sparsity: resolution must be > 0");
    std::vector<std::vector<double>> samples(thresholds.size());
    for (const auto& view : views) {
      const auto field = gradient_field(resize_bilinear(view, d, d), sigma);
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        samples[k].push_back(100.0 * canny(field, thresholds[k]).sparsity());
      }
    }
    std::vector<SparsityCell> row;
    for (const auto& s : samples) {
      double mean = 0;
      for (double v : s) mean += v;
      mean /= static_cast<double>(s.size());
      double var = 0;
      for (double v : s) var += (v - mean) * (v - mean);
      row.push_back({mean, std::sqrt(var / static_cast<double>(s.size()))});
    }
    table.cells.push_back(std::move(row));
    const auto ud = static_cast<std::uint32_t>(d);
    table.breakeven_percent.push_back(
        ud >= 2 && std::has_single_bit(ud) ? std::optional<double>(100.0 * breakeven_sparsity(ud))
                                           : std::nullopt);
  }
  return table;
}

std::string format_sparsity_table(const SparsityTable& table) {
  std::ostringstream out;
  char buf[64];
  out << "Resolution";
  for (double t : table.thresholds) {
    std::snprintf(buf, sizeof(buf), " | %13g", t);
    out << buf;
  }
  out << " | Breakeven\n";
  for (std::size_t r = 0; r < table.resolutions.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%10d", table.resolutions[r]);
    out << buf;
    for (const auto& cell : table.cells[r]) {
      std::snprintf(buf, sizeof(buf), " | %5.1f ± %5.1f", cell.mean_percent, cell.std_percent);
      out << buf;
    }
    if (table.breakeven_percent[r]) {
      std::snprintf(buf, sizeof(buf), " | %9.2f\n", *table.breakeven_percent[r]);
    } else {
      std::snprintf(buf, sizeof(buf), " | %9s\n", "n/a");
    }
    out << buf;
  }
  return out.str();
}

}  // namespace s3dc
