#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s3dc/descriptor.hpp"
#include "s3dc/edgemap.hpp"
#include "s3dc/mesh.hpp"
#include "s3dc/render.hpp"

namespace s3dc {

inline constexpr std::string_view kDescribePrompt =
    "Describe this object in as much detail as possible so that it's possible to recreate it "
    "based only on your description. Focus only on the object itself and not the background. "
    "Describe the shape of the object, its orientation, its colors, patterns, features, feature "
    "sizes in a single paragraph. Describe the main general single object and NOT some parts as "
    "multiple objects.";

// The character budget is appended directly after the trailing space.
inline constexpr std::string_view kSimplifyPrompt =
    "Reduce this description into the most important words. Only use lowercase letters. "
    "Restrict the response to this number of characters: ";

enum class BackendKind { kCaptioner, kGenerator, kConditionedGenerator, kImageTo3d, kEmbedder };

std::string_view backend_kind_name(BackendKind kind) noexcept;
// Environment variable holding the credential, e.g. S3DC_CAPTIONER_API_KEY.
std::string credential_env_var(BackendKind kind);

struct BackendConfig {
  BackendKind kind = BackendKind::kCaptioner;
  std::string endpoint{};  // base URL, e.g. https://host:8443/v1/chat/completions
  std::string credential{};  // sent as a bearer token, never echoed
  double timeout_seconds = 60.0;
  int retries = 2;
  std::optional<std::uint64_t> mock_seed{};  // set = offline mock
  double backoff_base_seconds = 1.0;
  double poll_interval_seconds = 1.0;
  std::string model{};         // captioner model name
  int image_resolution = 512;  // generator output side
  int embedding_dimension = 0;  // 0 accepts whatever the backend returns

  void validate() const;
};

// One config per backend kind.
struct BackendSettings {
  BackendConfig captioner{.kind = BackendKind::kCaptioner};
  BackendConfig generator{.kind = BackendKind::kGenerator};
  BackendConfig conditioned_generator{.kind = BackendKind::kConditionedGenerator};
  BackendConfig image_to_3d{.kind = BackendKind::kImageTo3d};
  BackendConfig embedder{.kind = BackendKind::kEmbedder};

  BackendConfig& get(BackendKind kind);
  const BackendConfig& get(BackendKind kind) const;

  // All five backends as mocks sharing one seed.
  static BackendSettings mock(std::uint64_t seed);
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

/// Reads `key = value` lines (`#` comments). Recognized keys: `backend`
/// (mock or http), `seed`, and `<kind>.<field>` where field is one of
/// endpoint, timeout, retries, model, resolution, dimension, backoff, poll.
/// Environment overrides: S3DC_BACKEND, S3DC_SEED, S3DC_<KIND>_ENDPOINT and
/// the per-kind credential variables.
BackendSettings parse_backend_settings(std::string_view text, const EnvLookup& env = process_env);
BackendSettings load_backend_settings(const std::optional<std::filesystem::path>& path,
                                      const EnvLookup& env = process_env);

class Captioner {
 public:
  virtual ~Captioner() = default;
  // One chat turn: the prompt plus an optional image attachment.
  virtual std::string complete(const std::string& prompt, const Image* image) = 0;
};

class ImageGenerator {
 public:
  virtual ~ImageGenerator() = default;
  virtual Image generate(const SemanticDescriptor& descriptor) = 0;
};

class ConditionedImageGenerator {
 public:
  virtual ~ConditionedImageGenerator() = default;
  virtual Image generate(const SemanticDescriptor& descriptor, const EdgeMap& edges) = 0;
};

class ImageTo3d {
 public:
  virtual ~ImageTo3d() = default;
  virtual TexturedMesh reconstruct(const ViewImage& image) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const Image& image) = 0;
};

std::unique_ptr<Captioner> make_captioner(const BackendConfig& config);
std::unique_ptr<ImageGenerator> make_generator(const BackendConfig& config);
std::unique_ptr<ConditionedImageGenerator> make_conditioned_generator(const BackendConfig& config);
std::unique_ptr<ImageTo3d> make_image_to_3d(const BackendConfig& config);
std::unique_ptr<Embedder> make_embedder(const BackendConfig& config);

// Sends the describe prompt verbatim with the composite attached.
std::string describe(const ViewImage& composite, Captioner& captioner);

// Sends the simplify prompt with the budget appended, then enforces the
// descriptor charset and budget locally.
SemanticDescriptor simplify_and_clamp(const std::string& description, std::size_t char_budget,
                                      Captioner& captioner);

ViewImage generate_image(const SemanticDescriptor& descriptor, ImageGenerator& generator);
ViewImage generate_image_conditioned(const SemanticDescriptor& descriptor, const EdgeMap& edges,
                                     ConditionedImageGenerator& generator);
TexturedMesh image_to_3d(const ViewImage& image, ImageTo3d& backend);

// L2-normalized embedding. A nonzero `expected_dimension` must match.
std::vector<double> embed_image(const ViewImage& image, Embedder& embedder,
                                int expected_dimension = 0);

// Depth of the mock extrusion along +Z and the cap on silhouette cells per side.
inline constexpr double kMockPrismDepth = 0.25;
inline constexpr int kMockMaxCells = 128;

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace s3dc
