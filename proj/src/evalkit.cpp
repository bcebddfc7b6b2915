#include "s3dc/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "s3dc/error.hpp"
#include "s3dc/geometry.hpp"

namespace s3dc {

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    auto h = static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xc2b2ae3d27d4eb4fULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667b19e3779f9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Uniform grid over one point set answering "any point within d?" exactly.
class NeighborGrid {
 public:
  NeighborGrid(std::span<const Vec3> points, double d)
      // Slightly oversized cells keep rounding in floor() from pushing a
      // neighbor at distance exactly d two cells away.
      : points_(points), d2_(d * d), inv_cell_(1.0 / (d * (1.0 + 1e-9))) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i])].push_back(i);
  }

  bool has_neighbor(const Vec3& p) const {
    const auto k = key(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == cells_.end()) continue;
          for (auto i : it->second) {
            const auto& q = points_[i];
            const double ex = p.x - q.x, ey = p.y - q.y, ez = p.z - q.z;
            if (ex * ex + ey * ey + ez * ez <= d2_) return true;
          }
        }
      }
    }
    return false;
  }

 private:
  CellKey key(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x * inv_cell_)),
            static_cast<std::int64_t>(std::floor(p.y * inv_cell_)),
            static_cast<std::int64_t>(std::floor(p.z * inv_cell_))};
  }

  std::span<const Vec3> points_;
  double d2_;
  double inv_cell_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

double covered_fraction(std::span<const Vec3> queries, const NeighborGrid& grid) {
  if (queries.empty()) return 0;
  std::size_t hits = 0;
  for (const auto& p : queries) hits += grid.has_neighbor(p) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::optional<double> mean_of(const std::vector<ReportRow>& rows,
                              std::optional<double> ReportRow::*field) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.error || !(r.*field)) continue;
    sum += *(r.*field);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    any = true;
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  require(!quoted, ErrorKind::kParse, "csv: unterminated quote");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::kParse,
          "csv: invalid number " + s);
  return v;
}

std::string two_decimals(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << *v;
  return out.str();
}

}  // namespace

void FScoreParams::validate() const {
  require(distance_threshold > 0, ErrorKind::kDomain, "distance threshold must be > 0");
  require(sample_count >= 1, ErrorKind::kDomain, "sample count must be >= 1");
}

FScore f_score_points(std::span<const Vec3> original, std::span<const Vec3> decompressed, double d) {
  require(d > 0, ErrorKind::kDomain, "distance threshold must be > 0");
  FScore s;
  s.precision = covered_fraction(decompressed, NeighborGrid(original, d));
  s.recall = covered_fraction(original, NeighborGrid(decompressed, d));
  s.f = (s.precision + s.recall) == 0 ? 0.0
                                      : 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

FScore f_score(const TexturedMesh& original, const TexturedMesh& decompressed, const FScoreParams& params) {
  params.validate();
  auto a = sample_surface(normalize_unit_cube(original), params.sample_count, params.seed);
  auto b = sample_surface(normalize_unit_cube(decompressed), params.sample_count, params.seed);
  return f_score_points(a.points, b.points, params.distance_threshold);
}

double cosine_score(const ViewImage& a, const ViewImage& b, Embedder& embedder, int expected_dimension) {
  auto va = embed_image(a, embedder, expected_dimension);
  auto vb = embed_image(b, embedder, expected_dimension);
  require(va.size() == vb.size(), ErrorKind::kBackend, "embedding dimensions differ");
  double c = std::inner_product(va.begin(), va.end(), vb.begin(), 0.0);
  return std::clamp(c, -1.0, 1.0);
}

std::vector<double> mean_rank(const std::vector<std::vector<int>>& rankings) {
  require(!rankings.empty(), ErrorKind::kValidation, "no rankings supplied");
  const auto m = rankings.front().size();
  require(m >= 1, ErrorKind::kValidation, "ranking is empty");
  std::vector<double> sum(m, 0.0);
  for (std::size_t p = 0; p < rankings.size(); ++p) {
    const auto& r = rankings[p];
    require(r.size() == m, ErrorKind::kValidation,
            "ranking " + std::to_string(p) + " has " + std::to_string(r.size()) +
                " entries, expected " + std::to_string(m));
    std::vector<bool> seen(m, false);
    for (std::size_t pos = 0; pos < m; ++pos) {
      const int method = r[pos];
      require(method >= 0 && static_cast<std::size_t>(method) < m, ErrorKind::kValidation,
              "ranking " + std::to_string(p) + " names unknown method " + std::to_string(method));
      require(!seen[method], ErrorKind::kValidation,
              "ranking " + std::to_string(p) + " repeats method " + std::to_string(method));
      seen[method] = true;
      sum[method] += static_cast<double>(pos);
    }
  }
  for (auto& s : sum) s /= static_cast<double>(rankings.size());
  return sum;
}

EvalReport build_report(const std::filesystem::path& original, const std::vector<Candidate>& candidates,
                        Embedder& embedder, const ReportOptions& options,
                        const std::optional<std::vector<std::vector<int>>>& rankings) {
  options.fscore.validate();
  std::optional<std::vector<double>> ranks;
  if (rankings) {
    ranks = mean_rank(*rankings);
    require(ranks->size() == candidates.size(), ErrorKind::kValidation,
            "rankings cover " + std::to_string(ranks->size()) + " methods but there are " +
                std::to_string(candidates.size()) + " candidates");
  }
  const auto reference = normalize_unit_cube(load_object(original));
  const auto original_bytes = size_breakdown(original).total_bytes;
  const auto reference_view = render_view(reference, options.render, CameraTag::kFront);

  std::vector<std::future<ReportRow>> pending;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    pending.push_back(std::async(std::launch::async, [&, i] {
      const auto& cand = candidates[i];
      ReportRow row;
      row.label = cand.label;
      try {
        auto mesh = normalize_unit_cube(load_object(cand.mesh_path));
        row.f = f_score(reference, mesh, options.fscore).f;
        auto view = render_view(mesh, options.render, CameraTag::kFront);
        row.c = cosine_score(reference_view, view, embedder, options.embedding_dimension);
        const auto compressed = cand.container_path ? std::filesystem::file_size(*cand.container_path)
                                                    : size_breakdown(cand.mesh_path).total_bytes;
        require(compressed > 0, ErrorKind::kDomain, "candidate has zero size");
        row.ratio = static_cast<double>(original_bytes) / static_cast<double>(compressed);
        if (ranks) row.mr = (*ranks)[i];
      } catch (const std::exception& e) {
        row = ReportRow{cand.label, std::nullopt, std::nullopt, std::nullopt, std::nullopt, e.what()};
      }
      return row;
    }));
  }
  EvalReport report;
  for (auto& p : pending) report.rows.push_back(p.get());
  ReportRow average;
  average.label = "average";
  average.f = mean_of(report.rows, &ReportRow::f);
  average.c = mean_of(report.rows, &ReportRow::c);
  average.mr = mean_of(report.rows, &ReportRow::mr);
  average.ratio = mean_of(report.rows, &ReportRow::ratio);
  report.rows.push_back(std::move(average));
  return report;
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "label,f,c,mr,ratio\n";
  auto value = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : report.rows) {
    out += csv_field(r.label) + "," + value(r.f) + "," + value(r.c) + "," + value(r.mr) + "," +
           value(r.ratio) + "\n";
  }
  return out;
}

EvalReport report_from_csv(std::string_view csv) {
  auto rows = parse_csv(csv);
  require(!rows.empty() && rows[0] == std::vector<std::string>{"label", "f", "c", "mr", "ratio"},
          ErrorKind::kParse, "csv: expected header label,f,c,mr,ratio");
  EvalReport report;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() == 1 && r[0].empty()) continue;
    require(r.size() == 5, ErrorKind::kParse, "csv: row " + std::to_string(i) + " needs 5 fields");
    report.rows.push_back({r[0], parse_optional(r[1]), parse_optional(r[2]), parse_optional(r[3]),
                           parse_optional(r[4]), std::nullopt});
  }
  return report;
}

std::string format_ratio(double ratio) {
  if (!std::isfinite(ratio) || ratio <= 0) return "-";
  int exponent = static_cast<int>(std::floor(std::log10(ratio)));
  long mantissa = std::lround(ratio / std::pow(10.0, exponent));
  if (mantissa >= 10) {
    mantissa = 1;
    ++exponent;
  }
  return std::to_string(mantissa) + "e" + std::to_string(exponent);
}

std::string format_report(const EvalReport& report) {
  std::size_t width = 6;
  for (const auto& r : report.rows) width = std::max(width, r.label.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Method" << std::right << std::setw(7)
      << "F" << std::setw(7) << "C" << std::setw(7) << "MR" << std::setw(7) << "x" << "\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.label << std::right;
    if (r.error) {
      out << "  error: " << *r.error << "\n";
      continue;
    }
    out << std::setw(7) << two_decimals(r.f) << std::setw(7) << two_decimals(r.c) << std::setw(7)
        << two_decimals(r.mr) << std::setw(7) << (r.ratio ? format_ratio(*r.ratio) : "-") << "\n";
  }
  return out.str();
}

}  // namespace s3dc
