// HTTP clients. The captioner speaks the OpenAI chat-completion format; the
// generators and image-to-3D use a small JSON job protocol:
//   POST <endpoint>/jobs          -> {"id": "..."}
//   GET  <endpoint>/jobs/<id>     -> {"status": "queued|running|succeeded|failed",
//                                     "result": {...}, "error": "..."}
// The embedder is a single POST returning {"embedding": [...]}.

#include <chrono>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "backends_internal.hpp"
#include "s3dc/error.hpp"

namespace s3dc::detail {

namespace {

using nlohmann::json;

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // no trailing slash
};

Url split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  require(scheme_end != std::string::npos && (url.starts_with("http://") || url.starts_with("https://")),
          ErrorKind::kDomain, "endpoint must be an http(s) URL");
  auto path_start = url.find('/', scheme_end + 3);
  Url out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

double jitter() {
  thread_local std::mt19937_64 engine{std::random_device{}()};
  return std::uniform_real_distribution<double>(1.0, 1.25)(engine);
}

// Stateless apart from configuration, so one instance serves concurrent calls.
class Transport {
 public:
  explicit Transport(const BackendConfig& config) : config_(config), url_(split_url(config.endpoint)) {}

  json post(const std::string& suffix, const json& body) const { return send(true, suffix, body.dump()); }
  json get(const std::string& suffix) const { return send(false, suffix, {}); }

  [[noreturn]] void fail_backend(const std::string& what) const {
    fail(ErrorKind::kBackend,
         redact(std::string(backend_kind_name(config_.kind)) + ": " + what, config_.credential));
  }

  const BackendConfig& config() const { return config_; }

 private:
  json send(bool is_post, const std::string& suffix, const std::string& body) const {
    const auto path = url_.path + suffix;
    const auto attempts = config_.retries + 1;
    std::string last;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        auto delay = config_.backoff_base_seconds * std::pow(2.0, attempt - 1) * jitter();
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      httplib::Client client(url_.origin);
      if (!client.is_valid()) fail_backend("unsupported endpoint " + url_.origin);
      const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::duration<double>(config_.timeout_seconds));
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Headers headers;
      if (!config_.credential.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.credential);
      }
      auto res = is_post ? client.Post(path, headers, body, "application/json")
                         : client.Get(path, headers);
      if (!res) {
        last = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 200 && res->status < 300) {
        auto parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) fail_backend("malformed JSON from " + url_.origin + path);
        return parsed;
      }
      last = "HTTP " + std::to_string(res->status);
      if (res->status != 429 && res->status < 500) {
        fail_backend(last + " from " + url_.origin + path + ": " + res->body.substr(0, 200));
      }
    }
    fail_backend("request to " + url_.origin + path + " failed after " + std::to_string(attempts) +
                 " attempts: " + last);
  }

  BackendConfig config_;
  Url url_;
};

std::string png_base64(const Image& image) { return base64_encode(encode_png(image)); }

Image decode_png_field(const Transport& t, const json& object, const char* key) {
  if (!object.is_object() || !object.contains(key) || !object[key].is_string()) {
    t.fail_backend(std::string("response lacks ") + key);
  }
  try {
    return decode_image(base64_decode(object[key].get<std::string>()));
  } catch (const Error& e) {
    t.fail_backend(std::string("undecodable image in ") + key + ": " + e.what());
  }
}

// Submits a job and polls it until it finishes or the timeout elapses.
json run_job(const Transport& t, const json& request) {
  auto submitted = t.post("/jobs", request);
  if (!submitted.contains("id") || !submitted["id"].is_string()) t.fail_backend("job submission returned no id");
  const auto id = submitted["id"].get<std::string>();
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(t.config().timeout_seconds);
  while (true) {
    auto state = t.get("/jobs/" + id);
    const auto status = state.value("status", std::string());
    if (status == "succeeded") {
      if (!state.contains("result")) t.fail_backend("job " + id + " succeeded without a result");
      return state["result"];
    }
    if (status == "failed") t.fail_backend("job " + id + " failed: " + state.value("error", std::string("unknown")));
    if (std::chrono::steady_clock::now() >= deadline) {
      t.fail_backend("job " + id + " timed out after " + format_double(t.config().timeout_seconds) + " s");
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(t.config().poll_interval_seconds));
  }
}

class HttpCaptioner final : public Captioner {
 public:
  explicit HttpCaptioner(const BackendConfig& config) : t_(config) {}

  std::string complete(const std::string& prompt, const Image* image) override {
    json content = json::array({{{"type", "text"}, {"text", prompt}}});
    if (image != nullptr) {
      content.push_back({{"type", "image_url"},
                         {"image_url", {{"url", "data:image/png;base64," + png_base64(*image)}}}});
    }
    json body = {{"model", t_.config().model.empty() ? "default" : t_.config().model},
                 {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
    auto res = t_.post("", body);
    try {
      return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      t_.fail_backend("chat completion response lacks choices[0].message.content");
    }
  }

 private:
  Transport t_;
};

class HttpGenerator final : public ImageGenerator {
 public:
  explicit HttpGenerator(const BackendConfig& config) : t_(config) {}

  Image generate(const SemanticDescriptor& d) override {
    const int r = t_.config().image_resolution;
    auto result = run_job(t_, {{"task", "text_to_image"}, {"prompt", d.text}, {"width", r}, {"height", r}});
    return decode_png_field(t_, result, "png_base64");
  }

 private:
  Transport t_;
};

class HttpConditionedGenerator final : public ConditionedImageGenerator {
 public:
  explicit HttpConditionedGenerator(const BackendConfig& config) : t_(config) {}

  Image generate(const SemanticDescriptor& d, const EdgeMap& edges) override {
    Image control(edges.resolution, edges.resolution);
    for (int y = 0; y < edges.resolution; ++y) {
      for (int x = 0; x < edges.resolution; ++x) {
        if (!edges.at(y, x)) continue;
        auto* p = control.at(x, y);
        p[0] = p[1] = p[2] = 255;
      }
    }
    const int r = t_.config().image_resolution;
    auto result = run_job(t_, {{"task", "edge_conditioned"},
                               {"prompt", d.text},
                               {"width", r},
                               {"height", r},
                               {"control", {{"type", "canny"}, {"png_base64", png_base64(control)}}}});
    return decode_png_field(t_, result, "png_base64");
  }

 private:
  Transport t_;
};

class HttpImageTo3d final : public ImageTo3d {
 public:
  explicit HttpImageTo3d(const BackendConfig& config) : t_(config) {}

  TexturedMesh reconstruct(const ViewImage& view) override {
    json request = {{"task", "image_to_3d"}, {"png_base64", png_base64(view.pixels)}};
    if (view.alpha) {
      Image mask(view.pixels.width, view.pixels.height);
      for (std::size_t i = 0; i < view.alpha->size(); ++i) {
        mask.rgb[3 * i] = mask.rgb[3 * i + 1] = mask.rgb[3 * i + 2] = (*view.alpha)[i];
      }
      request["mask_png_base64"] = png_base64(mask);
    }
    auto result = run_job(t_, request);
    if (!result.is_object() || !result.contains("obj") || !result["obj"].is_string()) {
      t_.fail_backend("image_to_3d result lacks obj text");
    }
    std::istringstream obj(result["obj"].get<std::string>());
    TexturedMesh mesh;
    try {
      mesh = parse_obj(obj, "image_to_3d_result.obj");
    } catch (const Error& e) {
      t_.fail_backend(std::string("unparseable mesh: ") + e.what());
    }
    if (result.contains("texture_png_base64")) {
      auto bytes = base64_decode(result["texture_png_base64"].get<std::string>());
      mesh.texture = Texture{decode_image(bytes), bytes, sniff_format(bytes)};
    }
    return mesh;
  }

 private:
  Transport t_;
};

class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(const BackendConfig& config) : t_(config) {}

  std::vector<double> embed(const Image& image) override {
    json body = {{"png_base64", png_base64(image)}};
    if (!t_.config().model.empty()) body["model"] = t_.config().model;
    auto res = t_.post("", body);
    try {
      return res.at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
      t_.fail_backend("embedding response lacks a numeric embedding array");
    }
  }

 private:
  Transport t_;
};

}  // namespace

std::unique_ptr<Captioner> make_http_captioner(const BackendConfig& config) {
  return std::make_unique<HttpCaptioner>(config);
}
std::unique_ptr<ImageGenerator> make_http_generator(const BackendConfig& config) {
  return std::make_unique<HttpGenerator>(config);
}
std::unique_ptr<ConditionedImageGenerator> make_http_conditioned_generator(
    const BackendConfig& config) {
  return std::make_unique<HttpConditionedGenerator>(config);
}
std::unique_ptr<ImageTo3d> make_http_image_to_3d(const BackendConfig& config) {
  return std::make_unique<HttpImageTo3d>(config);
}
std::unique_ptr<Embedder> make_http_embedder(const BackendConfig& config) {
  return std::make_unique<HttpEmbedder>(config);
}

}  // namespace s3dc::detail
