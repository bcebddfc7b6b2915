// Command-line front end. Talks to the library only through the C API.
#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "s3dc/s3dc.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Preset {
  s3dc_mode mode;
  unsigned chars;
  unsigned threshold;
};

// Named method rows: structured at four edge thresholds,
// semantic at three character budgets.
const std::map<std::string, Preset> kPresets = {
    {"struct-100", {S3DC_MODE_STRUCTURED, 250, 100}}, {"struct-250", {S3DC_MODE_STRUCTURED, 250, 250}},
    {"struct-500", {S3DC_MODE_STRUCTURED, 250, 500}}, {"struct-750", {S3DC_MODE_STRUCTURED, 250, 750}},
    {"sem-250", {S3DC_MODE_SEMANTIC, 250, 0}},        {"sem-100", {S3DC_MODE_SEMANTIC, 100, 0}},
    {"sem-50", {S3DC_MODE_SEMANTIC, 50, 0}},
};

// Usage errors found after CLI11 parsing (flag combinations).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int report(s3dc_status status, const std::string& command) {
  if (status == S3DC_OK) return kExitOk;
  std::cerr << "s3dc " << command << ": " << s3dc_last_error() << " [" << s3dc_status_name(status) << "]\n";
  return status == S3DC_ERR_USAGE ? kExitUsage : kExitFailure;
}

struct SettingsHandle {
  s3dc_settings* ptr = nullptr;
  ~SettingsHandle() { s3dc_settings_free(ptr); }
};

s3dc_status load_settings(const std::string& config, std::optional<std::uint64_t> seed, SettingsHandle& out) {
  const char* path = config.empty() ? std::getenv("S3DC_CONFIG") : config.c_str();
  auto status = s3dc_settings_load(path, &out.ptr);
  if (status == S3DC_OK && seed && s3dc_settings_is_mock(out.ptr)) status = s3dc_settings_use_mock(out.ptr, *seed);
  return status;
}

std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", r);
  return buf;
}

std::atomic<s3dc_rank_server*> active_server{nullptr};

void handle_signal(int) {
  // stop() only flips a flag and shuts the listening socket.
  if (auto* s = active_server.load()) s3dc_rank_server_stop(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic compression of textured 3D objects"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  std::string config;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config, "key=value backend config (default: $S3DC_CONFIG)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "seed for the mock backends");

  // compress
  auto* compress = app.add_subcommand("compress", "compress an OBJ into an .s3dc container");
  std::string c_input, c_output, c_mode, c_preset;
  std::optional<unsigned> c_chars, c_threshold;
  unsigned c_resolution = 0;
  compress->add_option("obj", c_input, "input OBJ")->required()->check(CLI::ExistingFile);
  compress->add_option("--mode", c_mode, "semantic or structured")->check(CLI::IsMember({"semantic", "structured"}));
  compress->add_option("--chars,-d", c_chars, "descriptor character budget d")->check(CLI::Range(1u, 65535u));
  compress->add_option("--edge-threshold,-t", c_threshold, "Canny threshold t (structured mode)")
      ->check(CLI::Range(1u, 65535u));
  auto* preset_opt = compress->add_option("--preset", c_preset, "struct-{100,250,500,750} or sem-{250,100,50}")
                         ->check(CLI::IsMember([] {
                           std::vector<std::string> names;
                           for (const auto& [name, _] : kPresets) names.push_back(name);
                           return names;
                         }()));
  preset_opt->excludes("--mode");
  compress->add_option("--resolution", c_resolution, "view resolution in pixels")->check(CLI::Range(16u, 4096u));
  compress->add_option("-o,--output", c_output, "output .s3dc path")->required();

  // decompress
  auto* decompress = app.add_subcommand("decompress", "regenerate an object from an .s3dc container");
  std::string d_input, d_output;
  decompress->add_option("s3dc", d_input, "input container")->required()->check(CLI::ExistingFile);
  decompress->add_option("-o,--output", d_output, "output directory")->required();

  // baseline
  auto* baseline = app.add_subcommand("baseline", "decimate the mesh and recode its texture as JPEG");
  std::string b_input, b_output;
  double b_ratio = 0.5;
  int b_quality = 75;
  baseline->add_option("obj", b_input, "input OBJ")->required()->check(CLI::ExistingFile);
  baseline->add_option("--ratio", b_ratio, "fraction of triangles to keep")->check(CLI::Range(1e-9, 1.0));
  baseline->add_option("--quality", b_quality, "JPEG quality")->check(CLI::Range(1, 100));
  baseline->add_option("-o,--output", b_output, "output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "score candidates against the original");
  std::string e_original, e_rankings, e_output;
  std::vector<std::string> e_candidates;
  double e_distance = 0.05;
  unsigned e_samples = 10000;
  eval->add_option("--original", e_original, "original OBJ")->required()->check(CLI::ExistingFile);
  eval->add_option("--candidate", e_candidates, "label=path (OBJ or decompress output directory)")
      ->required()
      ->take_all();
  eval->add_option("--rankings", e_rankings, "one ranking per line, candidate indices best to worst")
      ->check(CLI::ExistingFile);
  eval->add_option("--distance", e_distance, "F-score distance threshold")->check(CLI::PositiveNumber);
  eval->add_option("--samples", e_samples, "surface samples per mesh")->check(CLI::Range(1u, 10000000u));
  eval->add_option("-o,--output", e_output, "report CSV path")->required();

  // profile-sparsity
  auto* profile = app.add_subcommand("profile-sparsity", "edge sparsity table over a directory of views");
  std::string p_dir;
  // Defaults give the usual six-resolution, four-threshold sparsity table.
  std::vector<int> p_resolutions{64, 128, 256, 512, 1024, 2048};
  std::vector<double> p_thresholds{50, 300, 550, 800};
  profile->add_option("views_dir", p_dir, "directory of PNG/JPEG views")->required()->check(CLI::ExistingDirectory);
  profile->add_option("--resolutions", p_resolutions, "square resolutions")->check(CLI::Range(2, 8192));
  profile->add_option("--thresholds", p_thresholds, "Canny thresholds")->check(CLI::PositiveNumber);

  // serve-rank
  auto* serve = app.add_subcommand("serve-rank", "run the ranking service");
  int s_port = 8080;
  std::string s_data, s_host = "127.0.0.1", s_static;
  serve->add_option("--port", s_port, "listen port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_option("--data", s_data, "data directory")->required();
  serve->add_option("--host", s_host, "listen address");
  serve->add_option("--static", s_static, "directory served under /ui")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    SettingsHandle settings;
    const bool needs_backends = command == "compress" || command == "decompress" || command == "eval";
    if (needs_backends) {
      if (int rc = report(load_settings(config, seed, settings), command)) return rc;
    }

    if (command == "compress") {
      s3dc_compress_options options{S3DC_MODE_SEMANTIC, 250, 0, c_resolution};
      if (!c_preset.empty()) {
        const auto& p = kPresets.at(c_preset);
        options.mode = p.mode;
        options.char_budget = p.chars;
        options.edge_threshold = p.threshold;
      }
      if (!c_mode.empty()) options.mode = c_mode == "structured" ? S3DC_MODE_STRUCTURED : S3DC_MODE_SEMANTIC;
      if (c_chars) options.char_budget = *c_chars;
      if (c_threshold) options.edge_threshold = *c_threshold;
      if (options.mode == S3DC_MODE_STRUCTURED && options.edge_threshold == 0) {
        throw UsageError("structured mode requires --edge-threshold");
      }
      if (options.mode == S3DC_MODE_SEMANTIC && options.edge_threshold != 0) {
        throw UsageError("--edge-threshold only applies to structured mode");
      }
      s3dc_compressed* result = nullptr;
      if (int rc = report(s3dc_compress(c_input.c_str(), &options, settings.ptr, &result), command)) return rc;
      std::size_t size = 0;
      const auto* data = s3dc_compressed_data(result, &size);
      std::ofstream out(c_output, std::ios::binary);
      out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
      out.close();
      if (!out) {
        s3dc_compressed_free(result);
        std::cerr << "s3dc compress: cannot write " << c_output << "\n";
        return kExitFailure;
      }
      std::cout << "descriptor: " << s3dc_compressed_descriptor(result) << "\n";
      if (options.mode == S3DC_MODE_STRUCTURED) std::cout << "edges: " << s3dc_compressed_edge_count(result) << "\n";
      std::cout << "original: " << s3dc_compressed_original_bytes(result) << " bytes\n"
                << "compressed: " << size << " bytes\n"
                << "ratio: " << format_ratio(s3dc_compressed_ratio(result)) << "\n";
      s3dc_compressed_free(result);
      return kExitOk;
    }

    if (command == "decompress") {
      if (int rc = report(s3dc_decompress_file(d_input.c_str(), settings.ptr, d_output.c_str()), command)) return rc;
      std::cout << "wrote " << (fs::path(d_output) / "object.obj").string() << "\n";
      return kExitOk;
    }

    if (command == "baseline") {
      s3dc_baseline_info info{};
      if (int rc = report(s3dc_baseline(b_input.c_str(), b_ratio, b_quality, b_output.c_str(), &info), command)) {
        return rc;
      }
      std::cout << "triangles: " << info.original_triangles << " -> " << info.triangles << "\n"
                << "bytes: " << info.original_bytes << " -> " << info.bytes << "\n"
                << "ratio: " << format_ratio(info.ratio) << "\n";
      return kExitOk;
    }

    if (command == "eval") {
      std::vector<std::string> labels, paths;
      for (const auto& spec : e_candidates) {
        auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
          throw UsageError("--candidate expects label=path, got " + spec);
        }
        labels.push_back(spec.substr(0, eq));
        paths.push_back(spec.substr(eq + 1));
        if (!fs::exists(paths.back())) throw UsageError("candidate path does not exist: " + paths.back());
      }
      std::vector<const char*> label_ptrs, path_ptrs;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        label_ptrs.push_back(labels[i].c_str());
        path_ptrs.push_back(paths[i].c_str());
      }
      s3dc_eval_options options{e_distance, e_samples, seed.value_or(0)};
      s3dc_report* rep = nullptr;
      auto status = s3dc_evaluate(e_original.c_str(), label_ptrs.data(), path_ptrs.data(), labels.size(),
                                  e_rankings.empty() ? nullptr : e_rankings.c_str(), &options, settings.ptr, &rep);
      if (int rc = report(status, command)) return rc;
      std::ofstream out(e_output);
      out << s3dc_report_csv(rep);
      out.close();
      std::cout << s3dc_report_table(rep);
      s3dc_report_free(rep);
      if (!out) {
        std::cerr << "s3dc eval: cannot write " << e_output << "\n";
        return kExitFailure;
      }
      return kExitOk;
    }

    if (command == "profile-sparsity") {
      char* table = nullptr;
      auto status = s3dc_profile_sparsity(p_dir.c_str(), p_resolutions.data(), p_resolutions.size(),
                                          p_thresholds.data(), p_thresholds.size(), &table);
      if (int rc = report(status, command)) return rc;
      std::cout << table;
      s3dc_string_free(table);
      return kExitOk;
    }

    if (command == "serve-rank") {
      s3dc_rank_server* server = nullptr;
      auto status = s3dc_rank_server_create(s_data.c_str(), s_static.empty() ? nullptr : s_static.c_str(),
                                            s_host.c_str(), s_port, &server);
      if (int rc = report(status, command)) return rc;
      active_server = server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cout << "listening on http://" << s_host << ":" << s3dc_rank_server_port(server) << std::endl;
      status = s3dc_rank_server_run(server);
      active_server = nullptr;
      s3dc_rank_server_free(server);
      return report(status, command);
    }
  } catch (const UsageError& e) {
    std::cerr << "s3dc " << command << ": " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
