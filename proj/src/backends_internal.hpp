#pragma once

#include <memory>

#include "s3dc/backends.hpp"

namespace s3dc::detail {

std::unique_ptr<Captioner> make_mock_captioner(std::uint64_t seed);
std::unique_ptr<ImageGenerator> make_mock_generator(std::uint64_t seed, int resolution);
std::unique_ptr<ConditionedImageGenerator> make_mock_conditioned_generator(std::uint64_t seed,
                                                                           int resolution);
std::unique_ptr<ImageTo3d> make_mock_image_to_3d(std::uint64_t seed);
std::unique_ptr<Embedder> make_mock_embedder(std::uint64_t seed);

std::unique_ptr<Captioner> make_http_captioner(const BackendConfig& config);
std::unique_ptr<ImageGenerator> make_http_generator(const BackendConfig& config);
std::unique_ptr<ConditionedImageGenerator> make_http_conditioned_generator(
    const BackendConfig& config);
std::unique_ptr<ImageTo3d> make_http_image_to_3d(const BackendConfig& config);
std::unique_ptr<Embedder> make_http_embedder(const BackendConfig& config);

// Replaces every occurrence of `secret` in `text`.
std::string redact(std::string text, const std::string& secret);

}  // namespace s3dc::detail
