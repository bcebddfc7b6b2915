#include "s3dc/backends.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "backends_internal.hpp"
#include "s3dc/error.hpp"

namespace s3dc {

namespace {

constexpr BackendKind kAllKinds[] = {BackendKind::kCaptioner, BackendKind::kGenerator,
                                     BackendKind::kConditionedGenerator, BackendKind::kImageTo3d,
                                     BackendKind::kEmbedder};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
T parse_value(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(ErrorKind::kParse, "invalid value for " + std::string(key) + ": " + std::string(value));
  }
  return out;
}

void apply_field(BackendConfig& config, std::string_view field, std::string_view key,
                 std::string_view value) {
  if (field == "endpoint") {
    config.endpoint = std::string(value);
  } else if (field == "timeout") {
    config.timeout_seconds = parse_value<double>(key, value);
  } else if (field == "retries") {
    config.retries = parse_value<int>(key, value);
  } else if (field == "model") {
    config.model = std::string(value);
  } else if (field == "resolution") {
    config.image_resolution = parse_value<int>(key, value);
  } else if (field == "dimension") {
    config.embedding_dimension = parse_value<int>(key, value);
  } else if (field == "backoff") {
    config.backoff_base_seconds = parse_value<double>(key, value);
  } else if (field == "poll") {
    config.poll_interval_seconds = parse_value<double>(key, value);
  } else {
    fail(ErrorKind::kParse, "unknown config key: " + std::string(key));
  }
}

bool is_mock(const BackendConfig& config) { return config.mock_seed.has_value(); }

}  // namespace

std::string_view backend_kind_name(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::kCaptioner: return "captioner";
    case BackendKind::kGenerator: return "generator";
    case BackendKind::kConditionedGenerator: return "conditioned_generator";
    case BackendKind::kImageTo3d: return "image_to_3d";
    case BackendKind::kEmbedder: return "embedder";
  }
  return "unknown";
}

std::string credential_env_var(BackendKind kind) {
  return "S3DC_" + upper(backend_kind_name(kind)) + "_API_KEY";
}

void BackendConfig::validate() const {
  require(retries >= 0, ErrorKind::kDomain, "retries must be >= 0");
  require(timeout_seconds > 0, ErrorKind::kDomain, "timeout must be > 0");
  require(backoff_base_seconds >= 0, ErrorKind::kDomain, "backoff must be >= 0");
  require(poll_interval_seconds > 0, ErrorKind::kDomain, "poll interval must be > 0");
  require(image_resolution >= 16, ErrorKind::kDomain, "image resolution must be >= 16");
  require(embedding_dimension >= 0, ErrorKind::kDomain, "embedding dimension must be >= 0");
  if (!mock_seed) {
    require(!endpoint.empty(), ErrorKind::kDomain,
            std::string(backend_kind_name(kind)) + ": endpoint required for http backend");
  }
}

BackendConfig& BackendSettings::get(BackendKind kind) {
  switch (kind) {
    case BackendKind::kCaptioner: return captioner;
    case BackendKind::kGenerator: return generator;
    case BackendKind::kConditionedGenerator: return conditioned_generator;
    case BackendKind::kImageTo3d: return image_to_3d;
    case BackendKind::kEmbedder: return embedder;
  }
  fail(ErrorKind::kDomain, "unknown backend kind");
}

const BackendConfig& BackendSettings::get(BackendKind kind) const {
  return const_cast<BackendSettings*>(this)->get(kind);
}

BackendSettings BackendSettings::mock(std::uint64_t seed) {
  BackendSettings s;
  for (auto kind : kAllKinds) s.get(kind).mock_seed = seed;
  return s;
}

std::optional<std::string> process_env(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  if (value == nullptr) return std::nullopt;
  return std::string(value);
}

BackendSettings parse_backend_settings(std::string_view text, const EnvLookup& env) {
  BackendSettings settings;
  std::string backend = "mock";
  std::uint64_t seed = 0;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::kParse, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key == "backend") {
      backend = std::string(value);
    } else if (key == "seed") {
      seed = parse_value<std::uint64_t>(key, value);
    } else {
      auto dot = key.find('.');
      bool matched = false;
      if (dot != std::string_view::npos) {
        for (auto kind : kAllKinds) {
          if (key.substr(0, dot) == backend_kind_name(kind)) {
            apply_field(settings.get(kind), key.substr(dot + 1), key, value);
            matched = true;
          }
        }
      }
      if (!matched) fail(ErrorKind::kParse, "unknown config key: " + std::string(key));
    }
  }

  if (auto v = env("S3DC_BACKEND")) backend = *v;
  if (auto v = env("S3DC_SEED")) seed = parse_value<std::uint64_t>("S3DC_SEED", *v);
  if (backend != "mock" && backend != "http") {
    fail(ErrorKind::kParse, "backend must be mock or http, got " + backend);
  }
  for (auto kind : kAllKinds) {
    auto& config = settings.get(kind);
    auto prefix = "S3DC_" + upper(backend_kind_name(kind));
    if (auto v = env(prefix + "_ENDPOINT")) config.endpoint = *v;
    if (auto v = env(credential_env_var(kind))) config.credential = *v;
    if (backend == "mock") config.mock_seed = seed;
  }
  return settings;
}

BackendSettings load_backend_settings(const std::optional<std::filesystem::path>& path,
                                      const EnvLookup& env) {
  if (!path) return parse_backend_settings("", env);
  std::ifstream in(*path);
  if (!in) fail(ErrorKind::kIo, "cannot open config " + path->string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_backend_settings(text.str(), env);
}

std::unique_ptr<Captioner> make_captioner(const BackendConfig& config) {
  config.validate();
  return is_mock(config) ? detail::make_mock_captioner(*config.mock_seed)
                         : detail::make_http_captioner(config);
}

std::unique_ptr<ImageGenerator> make_generator(const BackendConfig& config) {
  config.validate();
  return is_mock(config) ? detail::make_mock_generator(*config.mock_seed, config.image_resolution)
                         : detail::make_http_generator(config);
}

std::unique_ptr<ConditionedImageGenerator> make_conditioned_generator(const BackendConfig& config) {
  config.validate();
  return is_mock(config)
             ? detail::make_mock_conditioned_generator(*config.mock_seed, config.image_resolution)
             : detail::make_http_conditioned_generator(config);
}

std::unique_ptr<ImageTo3d> make_image_to_3d(const BackendConfig& config) {
  config.validate();
  return is_mock(config) ? detail::make_mock_image_to_3d(*config.mock_seed)
                         : detail::make_http_image_to_3d(config);
}

std::unique_ptr<Embedder> make_embedder(const BackendConfig& config) {
  config.validate();
  return is_mock(config) ? detail::make_mock_embedder(*config.mock_seed)
                         : detail::make_http_embedder(config);
}

std::string describe(const ViewImage& composite, Captioner& captioner) {
  require(composite.pixels.width > 0 && composite.pixels.height > 0, ErrorKind::kDomain,
          "describe: empty composite");
  auto text = captioner.complete(std::string(kDescribePrompt), &composite.pixels);
  require(!trim(text).empty(), ErrorKind::kBackend, "captioner returned an empty description");
  return text;
}

SemanticDescriptor simplify_and_clamp(const std::string& description, std::size_t char_budget,
                                      Captioner& captioner) {
  require(char_budget >= 1, ErrorKind::kDomain, "character budget must be >= 1");
  auto prompt = std::string(kSimplifyPrompt) + std::to_string(char_budget) + "\n\n" + description;
  auto raw = captioner.complete(prompt, nullptr);
  auto text = clamp_description(raw, char_budget);
  require(!text.empty(), ErrorKind::kEmptyDescriptor, "empty descriptor after filtering");
  return {std::move(text), char_budget};
}

ViewImage generate_image(const SemanticDescriptor& descriptor, ImageGenerator& generator) {
  require(is_descriptor_charset(descriptor.text) && !descriptor.text.empty() &&
              descriptor.text.size() <= descriptor.char_budget,
          ErrorKind::kDomain, "invalid descriptor");
  return {generator.generate(descriptor), std::nullopt, CameraTag::kExternal};
}

ViewImage generate_image_conditioned(const SemanticDescriptor& descriptor, const EdgeMap& edges,
                                     ConditionedImageGenerator& generator) {
  require(is_descriptor_charset(descriptor.text) && !descriptor.text.empty() &&
              descriptor.text.size() <= descriptor.char_budget,
          ErrorKind::kDomain, "invalid descriptor");
  require(edges.resolution > 0 &&
              edges.grid.size() == static_cast<std::size_t>(edges.resolution) * edges.resolution,
          ErrorKind::kDomain, "invalid edge map");
  return {generator.generate(descriptor, edges), std::nullopt, CameraTag::kExternal};
}

TexturedMesh image_to_3d(const ViewImage& image, ImageTo3d& backend) {
  require(image.pixels.width > 0 && image.pixels.height > 0, ErrorKind::kDomain,
          "image_to_3d: empty image");
  auto mesh = backend.reconstruct(image);
  try {
    validate(mesh);
  } catch (const Error& e) {
    fail(ErrorKind::kBackend, std::string("image_to_3d returned an invalid mesh: ") + e.what());
  }
  require(!mesh.triangles.empty(), ErrorKind::kBackend, "image_to_3d returned an empty mesh");
  return mesh;
}

std::vector<double> embed_image(const ViewImage& image, Embedder& embedder, int expected_dimension) {
  require(image.pixels.width > 0 && image.pixels.height > 0, ErrorKind::kDomain,
          "embed_image: empty image");
  auto v = embedder.embed(image.pixels);
  require(!v.empty(), ErrorKind::kBackend, "embedder returned an empty vector");
  if (expected_dimension > 0 && v.size() != static_cast<std::size_t>(expected_dimension)) {
    fail(ErrorKind::kBackend, "embedding dimension " + std::to_string(v.size()) +
                                  " does not match configured " +
                                  std::to_string(expected_dimension));
  }
  double norm = 0;
  for (double x : v) {
    require(std::isfinite(x), ErrorKind::kBackend, "embedder returned a non-finite value");
    norm += x * x;
  }
  norm = std::sqrt(norm);
  require(norm > 0, ErrorKind::kBackend, "embedder returned a zero vector");
  for (double& x : v) x /= norm;
  return v;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  }
  require(clean.size() % 4 == 0, ErrorKind::kBackend, "malformed base64 payload");
  std::vector<std::uint8_t> out(clean.size() / 4 * 3);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                          static_cast<int>(clean.size()));
  require(n >= 0, ErrorKind::kBackend, "malformed base64 payload");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace detail {

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(secret, pos)) != std::string::npos) {
    text.replace(pos, secret.size(), "[redacted]");
    pos += 10;
  }
  return text;
}

}  // namespace detail

}  // namespace s3dc
