#include "s3dc/pipeline.hpp"

#include <future>

#include "s3dc/error.hpp"
#include "s3dc/geometry.hpp"

namespace s3dc {

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  }
}

std::array<ViewImage, 6> render_parallel(const TexturedMesh& mesh, const RenderConfig& config) {
  static constexpr CameraTag kOrder[] = {CameraTag::kFront, CameraTag::kBack,  CameraTag::kLeft,
                                         CameraTag::kRight, CameraTag::kTop,   CameraTag::kBottom};
  std::array<std::future<ViewImage>, 6> pending;
  for (std::size_t i = 0; i < 6; ++i) {
    pending[i] = std::async(std::launch::async,
                            [&mesh, &config, i] { return render_view(mesh, config, kOrder[i]); });
  }
  std::array<ViewImage, 6> views;
  for (std::size_t i = 0; i < 6; ++i) views[i] = pending[i].get();
  return views;
}

}  // namespace

void CompressionJob::validate() const {
  require(char_budget >= 1, ErrorKind::kDomain, "character budget must be >= 1");
  require(char_budget <= 0xFFFF, ErrorKind::kDomain, "character budget exceeds 65535");
  if (mode == CompressionMode::kStructured) {
    require(edge_threshold.has_value(), ErrorKind::kDomain, "structured mode needs an edge threshold");
    require(*edge_threshold > 0, ErrorKind::kDomain, "edge threshold must be > 0");
  }
}

CompressionResult compress(const CompressionJob& job) {
  job.validate();
  CompressionResult out;
  auto mesh = stage("load", [&] { return load_object(job.input_path); });
  auto original = stage("size", [&] { return size_breakdown(job.input_path); });
  mesh = stage("normalize", [&] { return normalize_unit_cube(mesh); });
  auto views = stage("render", [&] { return render_parallel(mesh, job.render_config); });
  out.composite = stage("concat", [&] { return concat_grid(views); });

  auto captioner = stage("describe", [&] { return make_captioner(job.backends.captioner); });
  out.description = stage("describe", [&] { return describe(out.composite, *captioner); });
  out.container.mode = job.mode;
  out.container.descriptor =
      stage("simplify", [&] { return simplify_and_clamp(out.description, job.char_budget, *captioner); });

  if (job.mode == CompressionMode::kStructured) {
    out.edges = stage("edges", [&] {
      const double t = *job.edge_threshold;
      return downsample_to_byte_grid(canny(to_gray(views[0].pixels), t));
    });
    out.container.edges = stage("edges", [&] { return encode_edges(*out.edges); });
    out.container.edge_threshold = job.edge_threshold;
  }
  out.packed = stage("pack", [&] { return pack(out.container); });
  out.stats = compression_stats(original, out.packed);
  return out;
}

DecompressionResult decompress(const CompressedContainer& container, const BackendSettings& backends) {
  auto generated = stage("generate", [&] {
    if (container.edges) {
      auto edges = decode_edges(*container.edges);
      auto gen = make_conditioned_generator(backends.conditioned_generator);
      return generate_image_conditioned(container.descriptor, edges, *gen);
    }
    auto gen = make_generator(backends.generator);
    return generate_image(container.descriptor, *gen);
  });
  DecompressionResult out;
  out.primary_view = stage("mask", [&] { return mask_background(generated); });
  out.mesh = stage("image_to_3d", [&] {
    auto backend = make_image_to_3d(backends.image_to_3d);
    return image_to_3d(out.primary_view, *backend);
  });
  return out;
}

DecompressionResult decompress(std::span<const std::uint8_t> packed, const BackendSettings& backends) {
  auto container = stage("unpack", [&] { return unpack(packed); });
  return decompress(container, backends);
}

}  // namespace s3dc
