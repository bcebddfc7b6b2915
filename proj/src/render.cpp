#include "s3dc/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "s3dc/error.hpp"

namespace s3dc {

std::string_view camera_name(CameraTag tag) noexcept {
  switch (tag) {
    case CameraTag::kFront: return "front";
    case CameraTag::kBack: return "back";
    case CameraTag::kLeft: return "left";
    case CameraTag::kRight: return "right";
    case CameraTag::kTop: return "top";
    case CameraTag::kBottom: return "bottom";
    case CameraTag::kComposite: return "composite";
    case CameraTag::kExternal: return "external";
  }
  return "external";
}

namespace {

struct CameraBasis {
  Vec3 right, up, forward;  // forward = viewing direction
};

CameraBasis basis_for(CameraTag camera) {
  switch (camera) {
    case CameraTag::kFront: return {{1, 0, 0}, {0, 1, 0}, {0, 0, -1}};
    case CameraTag::kBack: return {{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    case CameraTag::kRight: return {{0, 0, -1}, {0, 1, 0}, {-1, 0, 0}};
    case CameraTag::kLeft: return {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}};
    case CameraTag::kTop: return {{1, 0, 0}, {0, 0, -1}, {0, -1, 0}};
    case CameraTag::kBottom: return {{1, 0, 0}, {0, 0, 1}, {0, 1, 0}};
    default: fail(ErrorKind::kDomain, "render: not an axis camera");
  }
}

struct ScreenVertex {
  double x, y, depth;
};

bool top_left(const ScreenVertex& a, const ScreenVertex& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  return (dy == 0 && dx > 0) || dy < 0;
}

double edge_fn(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

void check_normalized(const TexturedMesh& mesh) {
  for (const auto& v : mesh.vertices) {
    for (int i = 0; i < 3; ++i) {
      require(v[i] >= -0.01 && v[i] <= 1.01, ErrorKind::kDomain,
              "render: mesh is not normalized to the unit cube");
    }
  }
}

}  // namespace

ViewImage render_view(const TexturedMesh& mesh, const RenderConfig& config, CameraTag camera) {
  require(config.resolution >= 16, ErrorKind::kDomain, "render: resolution must be >= 16");
  check_normalized(mesh);
  const CameraBasis cam = basis_for(camera);
  const int res = config.resolution;
  const auto& bg = config.background;

  ViewImage view;
  view.camera = camera;
  view.pixels = Image(res, res, bg[0], bg[1], bg[2]);
  view.alpha = std::vector<std::uint8_t>(static_cast<std::size_t>(res) * res, 0);
  std::vector<double> zbuf(static_cast<std::size_t>(res) * res,
                           std::numeric_limits<double>::infinity());

  const Vec3 center{0.5, 0.5, 0.5};
  const double span = 1.0 + 2.0 * kViewMargin;
  auto project = [&](const Vec3& p) {
    const Vec3 d = p - center;
    const double s = dot(d, cam.right) + 0.5;
    const double t = dot(d, cam.up) + 0.5;
    return ScreenVertex{(s + kViewMargin) / span * res, (1.0 - (t + kViewMargin) / span) * res,
                        dot(d, cam.forward)};
  };

  const bool textured = mesh.texture.has_value() && mesh.has_uvs() && !mesh.texture->image.empty();
  const Vec3 light = normalized(config.light_direction);

  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto& tri = mesh.triangles[f];
    std::array<ScreenVertex, 3> sv{project(mesh.vertices[tri[0]]), project(mesh.vertices[tri[1]]),
                                   project(mesh.vertices[tri[2]])};
    std::array<int, 3> corner{0, 1, 2};
    double area = edge_fn(sv[0], sv[1], sv[2].x, sv[2].y);
    if (area == 0) continue;
    if (area < 0) {
      std::swap(sv[1], sv[2]);
      std::swap(corner[1], corner[2]);
      area = -area;
    }

    Vec3 n = normalized(cross(mesh.vertices[tri[1]] - mesh.vertices[tri[0]],
                              mesh.vertices[tri[2]] - mesh.vertices[tri[0]]));
    if (dot(n, cam.forward) > 0) n = n * -1.0;
    const double shade = config.ambient + (1.0 - config.ambient) * std::max(0.0, dot(n, light));

    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({sv[0].x, sv[1].x, sv[2].x}))));
    const int x1 = std::min(res - 1, static_cast<int>(std::ceil(std::max({sv[0].x, sv[1].x, sv[2].x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({sv[0].y, sv[1].y, sv[2].y}))));
    const int y1 = std::min(res - 1, static_cast<int>(std::ceil(std::max({sv[0].y, sv[1].y, sv[2].y}))));
    const bool tl0 = top_left(sv[1], sv[2]);
    const bool tl1 = top_left(sv[2], sv[0]);
    const bool tl2 = top_left(sv[0], sv[1]);

    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = edge_fn(sv[1], sv[2], px, py);
        const double w1 = edge_fn(sv[2], sv[0], px, py);
        const double w2 = edge_fn(sv[0], sv[1], px, py);
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        if ((w0 == 0 && !tl0) || (w1 == 0 && !tl1) || (w2 == 0 && !tl2)) continue;
        const double b0 = w0 / area, b1 = w1 / area, b2 = w2 / area;
        const double depth = b0 * sv[0].depth + b1 * sv[1].depth + b2 * sv[2].depth;
        const std::size_t idx = static_cast<std::size_t>(y) * res + x;
        if (!(depth < zbuf[idx])) continue;
        zbuf[idx] = depth;

        std::array<double, 3> albedo{static_cast<double>(kDefaultAlbedo[0]),
                                     static_cast<double>(kDefaultAlbedo[1]),
                                     static_cast<double>(kDefaultAlbedo[2])};
        if (textured) {
          const auto& uvt = mesh.uv_triangles[f];
          const Vec2& u0 = mesh.uvs[uvt[corner[0]]];
          const Vec2& u1 = mesh.uvs[uvt[corner[1]]];
          const Vec2& u2 = mesh.uvs[uvt[corner[2]]];
          const double u = b0 * u0.x + b1 * u1.x + b2 * u2.x;
          const double v = b0 * u0.y + b1 * u1.y + b2 * u2.y;
          const Image& tex = mesh.texture->image;
          const int tx = std::clamp(static_cast<int>(std::floor(u * tex.width)), 0, tex.width - 1);
          const int ty = std::clamp(static_cast<int>(std::floor((1.0 - v) * tex.height)), 0, tex.height - 1);
          const std::uint8_t* texel = tex.at(tx, ty);
          albedo = {static_cast<double>(texel[0]), static_cast<double>(texel[1]),
                    static_cast<double>(texel[2])};
        }
        std::uint8_t* out = view.pixels.at(x, y);
        for (int c = 0; c < 3; ++c) {
          out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(albedo[c] * shade), 0L, 255L));
        }
        (*view.alpha)[idx] = 255;
      }
    }
  }
  return view;
}

std::array<ViewImage, 6> render_views(const TexturedMesh& mesh, const RenderConfig& config) {
  return {render_view(mesh, config, CameraTag::kFront), render_view(mesh, config, CameraTag::kBack),
          render_view(mesh, config, CameraTag::kLeft), render_view(mesh, config, CameraTag::kRight),
          render_view(mesh, config, CameraTag::kTop), render_view(mesh, config, CameraTag::kBottom)};
}

ViewImage concat_grid(std::span<const ViewImage, 6> views) {
  const int w = views[0].pixels.width, h = views[0].pixels.height;
  for (const auto& v : views) {
    require(v.pixels.width == w && v.pixels.height == h, ErrorKind::kDomain,
            "concat_grid: views differ in resolution");
  }
  auto find = [&](CameraTag tag) -> const ViewImage& {
    for (const auto& v : views) {
      if (v.camera == tag) return v;
    }
    fail(ErrorKind::kDomain, std::string("concat_grid: missing view ") +
                                 std::string(camera_name(tag)));
  };
  const std::array<CameraTag, 6> layout{CameraTag::kFront, CameraTag::kRight, CameraTag::kBack,
                                        CameraTag::kLeft,  CameraTag::kTop,   CameraTag::kBottom};
  ViewImage out;
  out.camera = CameraTag::kComposite;
  out.pixels = Image(3 * w, 2 * h);
  for (int cell = 0; cell < 6; ++cell) {
    const Image& src = find(layout[cell]).pixels;
    const int ox = (cell % 3) * w, oy = (cell / 3) * h;
    for (int y = 0; y < h; ++y) std::memcpy(out.pixels.at(ox, oy + y), src.at(0, y), 3 * static_cast<std::size_t>(w));
  }
  return out;
}

ViewImage mask_background(const ViewImage& view, int tolerance) {
  require(!view.alpha.has_value(), ErrorKind::kDomain,
          "mask_background: image already carries a coverage mask");
  const Image& img = view.pixels;
  require(!img.empty(), ErrorKind::kDomain, "mask_background: empty image");
  const int w = img.width, h = img.height;
  std::vector<std::uint8_t> background(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> stack;

  const std::array<std::pair<int, int>, 4> corners{{{0, 0}, {w - 1, 0}, {0, h - 1}, {w - 1, h - 1}}};
  for (auto [cx, cy] : corners) {
    const std::size_t seed_idx = static_cast<std::size_t>(cy) * w + cx;
    if (background[seed_idx]) continue;
    const std::uint8_t* seed = img.at(cx, cy);
    const std::array<int, 3> ref{seed[0], seed[1], seed[2]};
    auto similar = [&](int x, int y) {
      const std::uint8_t* p = img.at(x, y);
      for (int c = 0; c < 3; ++c) {
        if (std::abs(p[c] - ref[c]) > tolerance) return false;
      }
      return true;
    };
    background[seed_idx] = 1;
    stack.push_back({cx, cy});
    while (!stack.empty()) {
      auto [x, y] = stack.back();
      stack.pop_back();
      const std::array<std::pair<int, int>, 4> next{{{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}}};
      for (auto [nx, ny] : next) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t idx = static_cast<std::size_t>(ny) * w + nx;
        if (background[idx] || !similar(nx, ny)) continue;
        background[idx] = 1;
        stack.push_back({nx, ny});
      }
    }
  }

  std::size_t filled = 0;
  for (auto b : background) filled += b;
  if (static_cast<double>(filled) > 0.98 * static_cast<double>(background.size())) {
    fail(ErrorKind::kNoObject, "mask_background: no object found");
  }
  ViewImage out = view;
  out.alpha = std::vector<std::uint8_t>(background.size());
  for (std::size_t i = 0; i < background.size(); ++i) (*out.alpha)[i] = background[i] ? 0 : 255;
  return out;
}

std::size_t coverage_count(const ViewImage& view) {
  if (!view.alpha) return 0;
  return static_cast<std::size_t>(std::count_if(view.alpha->begin(), view.alpha->end(),
                                                [](std::uint8_t a) { return a != 0; }));
}

double mask_iou(const ViewImage& a, const ViewImage& b) {
  require(a.alpha && b.alpha && a.alpha->size() == b.alpha->size(), ErrorKind::kDomain,
          "mask_iou: masks missing or of different size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.alpha->size(); ++i) {
    const bool x = (*a.alpha)[i] != 0, y = (*b.alpha)[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace s3dc
