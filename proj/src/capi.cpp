#include "s3dc/s3dc.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>

#include "s3dc/backends.hpp"
#include "s3dc/edgemap.hpp"
#include "s3dc/error.hpp"
#include "s3dc/evalkit.hpp"
#include "s3dc/geometry.hpp"
#include "s3dc/pipeline.hpp"
#include "s3dc/rank_service.hpp"

namespace fs = std::filesystem;

struct s3dc_settings {
  s3dc::BackendSettings settings;
};

struct s3dc_compressed {
  s3dc::CompressionResult result;
};

struct s3dc_report {
  std::string csv;
  std::string table;
};

struct s3dc_rank_server {
  std::unique_ptr<s3dc::RankStore> store;
  std::unique_ptr<s3dc::RankServer> server;
  int port = 0;
};

namespace {

thread_local std::string last_error;

s3dc_status to_status(s3dc::ErrorKind kind) { return static_cast<s3dc_status>(kind); }

template <typename F>
s3dc_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return S3DC_OK;
  } catch (const s3dc::Error& e) {
    last_error = e.what();
    return to_status(e.kind());
  } catch (const fs::filesystem_error& e) {
    last_error = e.what();
    return S3DC_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return S3DC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return S3DC_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return S3DC_ERR_INTERNAL;
  }
}

void require_arg(const void* p, const char* name) {
  s3dc::require(p != nullptr, s3dc::ErrorKind::kUsage, std::string(name) + " must not be null");
}

std::vector<std::vector<int>> read_rankings(const fs::path& path) {
  std::ifstream in(path);
  s3dc::require(static_cast<bool>(in), s3dc::ErrorKind::kIo, "cannot open rankings file " + path.string());
  std::vector<std::vector<int>> rankings;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
      continue;
    }
    std::istringstream fields(line);
    std::vector<int> ranking;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      int value = 0;
      try {
        value = std::stoi(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      s3dc::require(used == token.size(), s3dc::ErrorKind::kParse,
                    path.string() + ":" + std::to_string(line_no) + ": not an integer: " + token);
      ranking.push_back(value);
    }
    rankings.push_back(std::move(ranking));
  }
  return rankings;
}

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

extern "C" {

const char* s3dc_last_error(void) { return last_error.c_str(); }

const char* s3dc_status_name(s3dc_status status) {
  if (status == S3DC_OK) return "ok";
  if (status == S3DC_ERR_INTERNAL) return "internal";
  if (status >= S3DC_ERR_DOMAIN && status <= S3DC_ERR_USAGE) {
    return s3dc::to_string(static_cast<s3dc::ErrorKind>(status));
  }
  return "unknown";
}

s3dc_status s3dc_settings_load(const char* config_path, s3dc_settings** out) {
  return guard([&] {
    require_arg(out, "out");
    std::optional<fs::path> path;
    if (config_path) path = config_path;
    *out = new s3dc_settings{s3dc::load_backend_settings(path)};
  });
}

s3dc_status s3dc_settings_mock(uint64_t seed, s3dc_settings** out) {
  return guard([&] {
    require_arg(out, "out");
    *out = new s3dc_settings{s3dc::BackendSettings::mock(seed)};
  });
}

s3dc_status s3dc_settings_use_mock(s3dc_settings* settings, uint64_t seed) {
  return guard([&] {
    require_arg(settings, "settings");
    for (auto kind : {s3dc::BackendKind::kCaptioner, s3dc::BackendKind::kGenerator,
                      s3dc::BackendKind::kConditionedGenerator, s3dc::BackendKind::kImageTo3d,
                      s3dc::BackendKind::kEmbedder}) {
      settings->settings.get(kind).mock_seed = seed;
    }
  });
}

int s3dc_settings_is_mock(const s3dc_settings* settings) {
  return settings && settings->settings.captioner.mock_seed.has_value() ? 1 : 0;
}

void s3dc_settings_free(s3dc_settings* settings) { delete settings; }

s3dc_status s3dc_compress(const char* obj_path, const s3dc_compress_options* options,
                          const s3dc_settings* settings, s3dc_compressed** out) {
  return guard([&] {
    require_arg(obj_path, "obj_path");
    require_arg(options, "options");
    require_arg(settings, "settings");
    require_arg(out, "out");
    s3dc::CompressionJob job;
    job.input_path = obj_path;
    job.mode = options->mode == S3DC_MODE_STRUCTURED ? s3dc::CompressionMode::kStructured
                                                     : s3dc::CompressionMode::kSemantic;
    job.char_budget = options->char_budget;
    if (options->edge_threshold > 0) {
      s3dc::require(options->edge_threshold <= 0xFFFF, s3dc::ErrorKind::kDomain,
                    "edge threshold must fit in 16 bits");
      job.edge_threshold = static_cast<std::uint16_t>(options->edge_threshold);
    }
    if (options->resolution > 0) job.render_config.resolution = static_cast<int>(options->resolution);
    job.backends = settings->settings;
    *out = new s3dc_compressed{s3dc::compress(job)};
  });
}

const uint8_t* s3dc_compressed_data(const s3dc_compressed* c, size_t* size) {
  if (!c) return nullptr;
  if (size) *size = c->result.packed.size();
  return c->result.packed.data();
}

uint64_t s3dc_compressed_original_bytes(const s3dc_compressed* c) {
  return c ? c->result.stats.original_bytes : 0;
}

double s3dc_compressed_ratio(const s3dc_compressed* c) { return c ? c->result.stats.ratio : 0; }

const char* s3dc_compressed_descriptor(const s3dc_compressed* c) {
  return c ? c->result.container.descriptor.text.c_str() : "";
}

uint64_t s3dc_compressed_edge_count(const s3dc_compressed* c) {
  return c && c->result.container.edges ? c->result.container.edges->nnz : 0;
}

void s3dc_compressed_free(s3dc_compressed* c) { delete c; }

s3dc_status s3dc_decompress_file(const char* container_path, const s3dc_settings* settings, const char* out_dir) {
  return guard([&] {
    require_arg(container_path, "container_path");
    require_arg(settings, "settings");
    require_arg(out_dir, "out_dir");
    auto bytes = s3dc::read_file(container_path);
    auto result = s3dc::decompress(bytes, settings->settings);
    fs::path dir(out_dir);
    fs::create_directories(dir);
    s3dc::save_object(result.mesh, dir / "object.obj");
    s3dc::write_file(dir / "primary_view.png", s3dc::encode_png(result.primary_view.pixels));
    s3dc::write_file(dir / "source.s3dc", bytes);
  });
}

s3dc_status s3dc_baseline(const char* obj_path, double ratio, int quality, const char* out_dir,
                          s3dc_baseline_info* info) {
  return guard([&] {
    require_arg(obj_path, "obj_path");
    require_arg(out_dir, "out_dir");
    s3dc::require(quality >= 1 && quality <= 100, s3dc::ErrorKind::kDomain, "quality must be in 1..100");
    auto original = s3dc::load_object(obj_path);
    auto original_size = s3dc::size_breakdown(obj_path);
    s3dc::DecimationParams params;
    params.target_triangle_ratio = ratio;
    auto decimated = s3dc::decimate(original, params);
    auto mesh = std::move(decimated.mesh);
    if (mesh.texture) mesh = s3dc::recode_texture(mesh, quality);
    fs::create_directories(out_dir);
    auto size = s3dc::save_object(mesh, fs::path(out_dir) / "object.obj");
    if (info) {
      info->original_triangles = original.triangles.size();
      info->triangles = mesh.triangles.size();
      info->original_bytes = original_size.total_bytes;
      info->bytes = size.total_bytes;
      info->ratio = size.total_bytes ? static_cast<double>(original_size.total_bytes) / size.total_bytes : 0;
    }
  });
}

s3dc_status s3dc_evaluate(const char* original_path, const char* const* labels, const char* const* paths,
                          size_t count, const char* rankings_path, const s3dc_eval_options* options,
                          const s3dc_settings* settings, s3dc_report** out) {
  return guard([&] {
    require_arg(original_path, "original_path");
    require_arg(settings, "settings");
    require_arg(out, "out");
    s3dc::require(count > 0 && labels && paths, s3dc::ErrorKind::kUsage, "at least one candidate is required");
    std::vector<s3dc::Candidate> candidates;
    for (size_t i = 0; i < count; ++i) {
      require_arg(labels[i], "label");
      require_arg(paths[i], "path");
      s3dc::Candidate c{labels[i], paths[i], std::nullopt};
      if (fs::is_directory(c.mesh_path)) {
        const fs::path dir = c.mesh_path;
        c.mesh_path = dir / "object.obj";
        if (fs::exists(dir / "source.s3dc")) c.container_path = dir / "source.s3dc";
      }
      candidates.push_back(std::move(c));
    }
    std::optional<std::vector<std::vector<int>>> rankings;
    if (rankings_path) rankings = read_rankings(rankings_path);

    s3dc::ReportOptions report_options;
    if (options) {
      if (options->distance_threshold > 0) report_options.fscore.distance_threshold = options->distance_threshold;
      if (options->sample_count > 0) report_options.fscore.sample_count = options->sample_count;
      report_options.fscore.seed = options->seed;
    }
    report_options.embedding_dimension = settings->settings.embedder.embedding_dimension;
    auto embedder = s3dc::make_embedder(settings->settings.embedder);
    auto report = s3dc::build_report(original_path, candidates, *embedder, report_options, rankings);
    *out = new s3dc_report{s3dc::report_to_csv(report), s3dc::format_report(report)};
  });
}

const char* s3dc_report_csv(const s3dc_report* report) { return report ? report->csv.c_str() : ""; }
const char* s3dc_report_table(const s3dc_report* report) { return report ? report->table.c_str() : ""; }
void s3dc_report_free(s3dc_report* report) { delete report; }

double s3dc_breakeven_sparsity(uint32_t resolution) {
  double value = 0;
  if (guard([&] { value = s3dc::breakeven_sparsity(resolution); }) != S3DC_OK) return -1;
  return value;
}

s3dc_status s3dc_profile_sparsity(const char* views_dir, const int* resolutions, size_t resolution_count,
                                  const double* thresholds, size_t threshold_count, char** table) {
  return guard([&] {
    require_arg(views_dir, "views_dir");
    require_arg(table, "table");
    s3dc::require(resolution_count > 0 && resolutions, s3dc::ErrorKind::kUsage, "no resolutions given");
    s3dc::require(threshold_count > 0 && thresholds, s3dc::ErrorKind::kUsage, "no thresholds given");
    s3dc::require(fs::is_directory(views_dir), s3dc::ErrorKind::kIo,
                  std::string("not a directory: ") + views_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(views_dir)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    s3dc::require(!files.empty(), s3dc::ErrorKind::kIo, std::string("no PNG or JPEG images in ") + views_dir);
    std::vector<s3dc::GrayImage> views;
    for (const auto& f : files) views.push_back(s3dc::to_gray(s3dc::decode_image(s3dc::read_file(f))));
    auto result = s3dc::profile_sparsity(views, {resolutions, resolutions + resolution_count},
                                         {thresholds, thresholds + threshold_count});
    auto text = s3dc::format_sparsity_table(result);
    *table = static_cast<char*>(std::malloc(text.size() + 1));
    if (!*table) throw std::bad_alloc();
    std::memcpy(*table, text.c_str(), text.size() + 1);
  });
}

void s3dc_string_free(char* text) { std::free(text); }

s3dc_status s3dc_rank_server_create(const char* data_dir, const char* static_dir, const char* host, int port,
                                    s3dc_rank_server** out) {
  return guard([&] {
    require_arg(data_dir, "data_dir");
    require_arg(out, "out");
    s3dc::require(port >= 0 && port <= 65535, s3dc::ErrorKind::kDomain, "port must be in 0..65535");
    auto server = std::make_unique<s3dc_rank_server>();
    server->store = std::make_unique<s3dc::RankStore>(data_dir);
    server->server = std::make_unique<s3dc::RankServer>(*server->store, static_dir ? fs::path(static_dir) : fs::path());
    server->port = server->server->bind(host ? host : "127.0.0.1", port);
    *out = server.release();
  });
}

int s3dc_rank_server_port(const s3dc_rank_server* server) { return server ? server->port : 0; }

s3dc_status s3dc_rank_server_run(s3dc_rank_server* server) {
  return guard([&] {
    require_arg(server, "server");
    server->server->listen();
  });
}

void s3dc_rank_server_stop(s3dc_rank_server* server) {
  if (server) server->server->stop();
}

void s3dc_rank_server_free(s3dc_rank_server* server) { delete server; }

}  // extern "C"
