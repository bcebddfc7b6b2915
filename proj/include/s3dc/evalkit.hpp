#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s3dc/backends.hpp"
#include "s3dc/mesh.hpp"
#include "s3dc/render.hpp"

namespace s3dc {

struct FScoreParams {
  double distance_threshold = 0.05;  // in unit-cube coordinates
  std::size_t sample_count = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FScore {
  double precision = 0;
  double recall = 0;
  double f = 0;
};

/// P is the fraction of `decompressed` points within d (inclusive) of some
/// `original` point, R the converse, F their harmonic mean (0 when both are
/// 0). Exact; a uniform grid of cell size d limits the search to 27 cells.
FScore f_score_points(std::span<const Vec3> original, std::span<const Vec3> decompressed, double d);

// Normalizes each mesh to the unit cube, samples both with params.seed and
// scores the samples.
FScore f_score(const TexturedMesh& original, const TexturedMesh& decompressed,
               const FScoreParams& params = {});

// Cosine of the two client-normalized embeddings, clamped to [-1, 1].
double cosine_score(const ViewImage& a, const ViewImage& b, Embedder& embedder,
                    int expected_dimension = 0);

/// Each ranking lists method indices from best to worst. Returns each
/// method's mean zero-indexed position. Non-permutations raise kValidation.
std::vector<double> mean_rank(const std::vector<std::vector<int>>& rankings);

struct Candidate {
  std::string label;
  std::filesystem::path mesh_path;
  std::optional<std::filesystem::path> container_path;  // sizes the ratio when present
};

struct ReportRow {
  std::string label;
  std::optional<double> f, c, mr, ratio;
  std::optional<std::string> error;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvalReport {
  std::vector<ReportRow> rows;  // candidates in input order, then "average"
};

struct ReportOptions {
  FScoreParams fscore;
  RenderConfig render;  // front views for the cosine score
  int embedding_dimension = 0;
};

/// Scores every candidate against the original in parallel. A failing
/// candidate yields a row carrying only its error. `rankings`, when given,
/// index candidates in input order.
EvalReport build_report(const std::filesystem::path& original, const std::vector<Candidate>& candidates,
                        Embedder& embedder, const ReportOptions& options = {},
                        const std::optional<std::vector<std::vector<int>>>& rankings = std::nullopt);

// Header label,f,c,mr,ratio; missing values are empty fields.
std::string report_to_csv(const EvalReport& report);
EvalReport report_from_csv(std::string_view csv);
// Aligned table with two-decimal scores and one-digit scientific ratios.
std::string format_report(const EvalReport& report);
// 1 significant digit, e.g. 17241 -> "2e4".
std::string format_ratio(double ratio);

}  // namespace s3dc
