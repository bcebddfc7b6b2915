#include "s3dc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "s3dc/error.hpp"

namespace s3dc {

Bounds bounding_box(const TexturedMesh& mesh) {
  require(!mesh.vertices.empty(), ErrorKind::kDomain, "bounding box of an empty mesh");
  Bounds b{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    for (int i = 0; i < 3; ++i) {
      b.lo[i] = std::min(b.lo[i], v[i]);
      b.hi[i] = std::max(b.hi[i], v[i]);
    }
  }
  return b;
}

double triangle_area(const TexturedMesh& mesh, std::size_t tri) {
  const auto& t = mesh.triangles[tri];
  const Vec3& a = mesh.vertices[t[0]];
  return 0.5 * length(cross(mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a));
}

void compute_normals(TexturedMesh& mesh) {
  mesh.normals.assign(mesh.vertices.size(), Vec3{});
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    Vec3 n = cross(mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a);
    for (auto i : t) mesh.normals[i] = mesh.normals[i] + n;
  }
  for (auto& n : mesh.normals) n = normalized(n);
}

TexturedMesh normalize_unit_cube(const TexturedMesh& mesh) {
  require(!mesh.vertices.empty(), ErrorKind::kDomain, "normalize: empty mesh");
  const Bounds b = bounding_box(mesh);
  const Vec3 extent = b.hi - b.lo;
  const double longest = std::max({extent.x, extent.y, extent.z});
  require(longest > 0, ErrorKind::kDomain, "normalize: mesh has zero extent");
  const double scale = 1.0 / longest;
  const Vec3 center = (b.lo + b.hi) * 0.5;
  TexturedMesh out = mesh;
  for (auto& v : out.vertices) {
    for (int i = 0; i < 3; ++i) v[i] = (v[i] - center[i]) * scale + 0.5;
  }
  return out;
}

PointSet sample_surface(const TexturedMesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    total += triangle_area(mesh, i);
    cumulative[i] = total;
  }
  require(total > 0, ErrorKind::kDomain, "sample_surface: mesh has zero surface area");

  PointSet out;
  out.source_seed = seed;
  out.points.reserve(n);
  out.triangle_ids.reserve(n);
  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    auto tri = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    // Skip zero-area triangles an upper_bound can land on at the seam of two
    // equal cumulative values.
    while (triangle_area(mesh, tri) == 0 && tri + 1 < cumulative.size()) ++tri;
    const auto& t = mesh.triangles[tri];
    const double s = std::sqrt(rng.uniform());
    const double r = rng.uniform();
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    out.points.push_back(a * (1 - s) + b * (s * (1 - r)) + c * (s * r));
    out.triangle_ids.push_back(static_cast<std::uint32_t>(tri));
  }
  return out;
}

// ------------------------------------------------------------- decimation

namespace {

// Symmetric 4x4 quadric, upper triangle row-major.
struct Quadric {
  std::array<double, 10> q{};

  static Quadric plane(const Vec3& n, double d, double weight) {
    Quadric r;
    const double a = n.x, b = n.y, c = n.z;
    r.q = {a * a, a * b, a * c, a * d, b * b, b * c, b * d, c * c, c * d, d * d};
    for (auto& x : r.q) x *= weight;
    return r;
  }
  Quadric& operator+=(const Quadric& o) {
    for (int i = 0; i < 10; ++i) q[i] += o.q[i];
    return *this;
  }
  double error(const Vec3& v) const {
    const double x = v.x, y = v.y, z = v.z;
    return q[0] * x * x + 2 * q[1] * x * y + 2 * q[2] * x * z + 2 * q[3] * x + q[4] * y * y +
           2 * q[5] * y * z + 2 * q[6] * y + q[7] * z * z + 2 * q[8] * z + q[9];
  }
  // Solves the 3x3 gradient system by Cramer's rule.
  bool optimum(Vec3& out) const {
    const double a11 = q[0], a12 = q[1], a13 = q[2];
    const double a22 = q[4], a23 = q[5], a33 = q[7];
    const double b1 = -q[3], b2 = -q[6], b3 = -q[8];
    const double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
                       a13 * (a12 * a23 - a22 * a13);
    if (std::abs(det) < 1e-12) return false;
    out.x = (b1 * (a22 * a33 - a23 * a23) - a12 * (b2 * a33 - a23 * b3) +
             a13 * (b2 * a23 - a22 * b3)) / det;
    out.y = (a11 * (b2 * a33 - a23 * b3) - b1 * (a12 * a33 - a23 * a13) +
             a13 * (a12 * b3 - b2 * a13)) / det;
    out.z = (a11 * (a22 * b3 - b2 * a23) - a12 * (a12 * b3 - b2 * a13) +
             b1 * (a12 * a23 - a22 * a13)) / det;
    return true;
  }
};

struct Candidate {
  double cost;
  std::uint32_t a, b;  // a < b
  std::uint32_t stamp_a, stamp_b;
  Vec3 target;
};

struct CandidateOrder {
  bool operator()(const Candidate& l, const Candidate& r) const {
    if (l.cost != r.cost) return l.cost > r.cost;
    if (l.a != r.a) return l.a > r.a;
    return l.b > r.b;
  }
};

class Decimator {
 public:
  explicit Decimator(const TexturedMesh& mesh) : mesh_(mesh) {
    const auto nv = mesh_.vertices.size();
    incident_.resize(nv);
    stamp_.assign(nv, 0);
    alive_vertex_.assign(nv, true);
    seam_.assign(nv, false);
    boundary_.assign(nv, false);
    quadric_.assign(nv, Quadric{});
    alive_tri_.assign(mesh_.triangles.size(), true);
    live_tris_ = mesh_.triangles.size();

    std::vector<std::int64_t> uv_of(nv, -1);
    for (std::uint32_t t = 0; t < mesh_.triangles.size(); ++t) {
      for (int k = 0; k < 3; ++k) {
        const auto v = mesh_.triangles[t][k];
        incident_[v].push_back(t);
        if (mesh_.has_uvs()) {
          const auto uv = static_cast<std::int64_t>(mesh_.uv_triangles[t][k]);
          if (uv_of[v] < 0) {
            uv_of[v] = uv;
          } else if (uv_of[v] != uv && mesh_.uvs[uv_of[v]] != mesh_.uvs[uv]) {
            seam_[v] = true;
          }
        }
      }
    }
    for (std::uint32_t t = 0; t < mesh_.triangles.size(); ++t) {
      Vec3 n;
      double area = face_normal(t, n);
      if (area <= 0) continue;
      const Vec3& p = mesh_.vertices[mesh_.triangles[t][0]];
      Quadric q = Quadric::plane(n, -dot(n, p), area);
      for (auto v : mesh_.triangles[t]) quadric_[v] += q;
    }
    add_boundary_constraints();
  }

  DecimationResult run(std::size_t target) {
    DecimationResult result;
    result.target_triangles = target;
    for (std::uint32_t v = 0; v < mesh_.vertices.size(); ++v) push_edges(v);
    while (live_tris_ > target && !queue_.empty()) {
      Candidate c = queue_.top();
      queue_.pop();
      if (!alive_vertex_[c.a] || !alive_vertex_[c.b]) continue;
      if (stamp_[c.a] != c.stamp_a || stamp_[c.b] != c.stamp_b) continue;
      collapse_if_valid(c);
    }
    result.target_reached = live_tris_ <= target;
    result.mesh = compact();
    return result;
  }

 private:
  double face_normal(std::uint32_t t, Vec3& n) const {
    const auto& tri = mesh_.triangles[t];
    const Vec3& a = mesh_.vertices[tri[0]];
    Vec3 c = cross(mesh_.vertices[tri[1]] - a, mesh_.vertices[tri[2]] - a);
    double len = length(c);
    n = len > 0 ? c * (1.0 / len) : Vec3{};
    return 0.5 * len;
  }

  // Boundary edges get a heavily weighted plane perpendicular to their face.
  void add_boundary_constraints() {
    std::vector<std::pair<std::uint64_t, std::uint32_t>> edges;
    for (std::uint32_t t = 0; t < mesh_.triangles.size(); ++t) {
      for (int k = 0; k < 3; ++k) {
        auto u = mesh_.triangles[t][k], w = mesh_.triangles[t][(k + 1) % 3];
        edges.push_back({edge_key(u, w), t});
      }
    }
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 0; i < edges.size();) {
      std::size_t j = i;
      while (j < edges.size() && edges[j].first == edges[i].first) ++j;
      if (j - i == 1) {
        const auto key = edges[i].first;
        const auto u = static_cast<std::uint32_t>(key >> 32);
        const auto w = static_cast<std::uint32_t>(key & 0xffffffffu);
        boundary_[u] = boundary_[w] = true;
        Vec3 n;
        if (face_normal(edges[i].second, n) > 0) {
          Vec3 e = mesh_.vertices[w] - mesh_.vertices[u];
          Vec3 side = normalized(cross(e, n));
          Quadric q = Quadric::plane(side, -dot(side, mesh_.vertices[u]), 1000.0 * dot(e, e));
          quadric_[u] += q;
          quadric_[w] += q;
        }
      }
      i = j;
    }
  }

  static std::uint64_t edge_key(std::uint32_t u, std::uint32_t w) {
    if (u > w) std::swap(u, w);
    return (static_cast<std::uint64_t>(u) << 32) | w;
  }

  std::vector<std::uint32_t> neighbors(std::uint32_t v) const {
    std::vector<std::uint32_t> out;
    for (auto t : incident_[v]) {
      for (auto w : mesh_.triangles[t]) {
        if (w != v) out.push_back(w);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void push_edges(std::uint32_t v) {
    if (!alive_vertex_[v]) return;
    for (auto w : neighbors(v)) {
      if (v < w) push_candidate(v, w);
    }
  }

  void push_candidate(std::uint32_t a, std::uint32_t b) {
    if (seam_[a] || seam_[b]) return;
    Quadric q = quadric_[a];
    q += quadric_[b];
    const Vec3& pa = mesh_.vertices[a];
    const Vec3& pb = mesh_.vertices[b];
    const Vec3 mid = (pa + pb) * 0.5;
    Vec3 target;
    if (!q.optimum(target)) {
      target = mid;
    } else if (length(target - mid) > 2.0 * length(pb - pa)) {
      // Nearly singular systems can place the optimum far off the surface.
      target = mid;
      for (const Vec3& alt : {pa, pb}) {
        if (q.error(alt) < q.error(target)) target = alt;
      }
    }
    queue_.push({std::max(0.0, q.error(target)), a, b, stamp_[a], stamp_[b], target});
  }

  bool link_condition(std::uint32_t a, std::uint32_t b) const {
    auto na = neighbors(a);
    auto nb = neighbors(b);
    std::vector<std::uint32_t> common;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
    std::vector<std::uint32_t> opposite;
    for (auto t : incident_[a]) {
      const auto& tri = mesh_.triangles[t];
      if (std::find(tri.begin(), tri.end(), b) == tri.end()) continue;
      for (auto w : tri) {
        if (w != a && w != b) opposite.push_back(w);
      }
    }
    std::sort(opposite.begin(), opposite.end());
    return common == opposite;
  }

  bool flips(std::uint32_t a, std::uint32_t b, const Vec3& target) const {
    for (auto v : {a, b}) {
      for (auto t : incident_[v]) {
        const auto& tri = mesh_.triangles[t];
        bool has_a = std::find(tri.begin(), tri.end(), a) != tri.end();
        bool has_b = std::find(tri.begin(), tri.end(), b) != tri.end();
        if (has_a && has_b) continue;
        std::array<Vec3, 3> p{};
        for (int k = 0; k < 3; ++k) {
          p[k] = (tri[k] == a || tri[k] == b) ? target : mesh_.vertices[tri[k]];
        }
        Vec3 before = cross(mesh_.vertices[tri[1]] - mesh_.vertices[tri[0]],
                            mesh_.vertices[tri[2]] - mesh_.vertices[tri[0]]);
        Vec3 after = cross(p[1] - p[0], p[2] - p[0]);
        if (dot(before, after) <= 0 || length(after) == 0) return true;
      }
    }
    return false;
  }

  void collapse_if_valid(const Candidate& c) {
    const auto a = c.a, b = c.b;
    std::size_t shared = 0;
    for (auto t : incident_[a]) {
      const auto& tri = mesh_.triangles[t];
      if (std::find(tri.begin(), tri.end(), b) != tri.end()) ++shared;
    }
    if (shared == 0) return;
    if (live_tris_ - shared < 4) return;
    if (boundary_[a] && boundary_[b] && shared != 1) return;
    if (!link_condition(a, b)) return;
    if (flips(a, b, c.target)) return;

    if (mesh_.has_uvs()) {
      const auto ua = uv_index(a), ub = uv_index(b);
      const Vec3 e = mesh_.vertices[b] - mesh_.vertices[a];
      const double denom = dot(e, e);
      const double s = denom > 0 ? std::clamp(dot(c.target - mesh_.vertices[a], e) / denom, 0.0, 1.0) : 0.0;
      const Vec2 uva = mesh_.uvs[ua], uvb = mesh_.uvs[ub];
      mesh_.uvs.push_back({uva.x + (uvb.x - uva.x) * s, uva.y + (uvb.y - uva.y) * s});
      const auto fresh = static_cast<std::uint32_t>(mesh_.uvs.size() - 1);
      for (auto v : {a, b}) {
        for (auto t : incident_[v]) {
          for (int k = 0; k < 3; ++k) {
            if (mesh_.triangles[t][k] == v) mesh_.uv_triangles[t][k] = fresh;
          }
        }
      }
    }

    mesh_.vertices[a] = c.target;
    quadric_[a] += quadric_[b];
    boundary_[a] = boundary_[a] || boundary_[b];
    alive_vertex_[b] = false;
    std::vector<std::uint32_t> merged;
    for (auto t : incident_[a]) {
      const auto& tri = mesh_.triangles[t];
      if (std::find(tri.begin(), tri.end(), b) != tri.end()) {
        alive_tri_[t] = false;
        --live_tris_;
      } else {
        merged.push_back(t);
      }
    }
    for (auto t : incident_[b]) {
      if (!alive_tri_[t]) continue;
      for (auto& v : mesh_.triangles[t]) {
        if (v == b) v = a;
      }
      merged.push_back(t);
    }
    // Dead triangles still list b; prune them from every neighbor.
    for (auto t : incident_[b]) {
      if (alive_tri_[t]) continue;
      for (auto w : mesh_.triangles[t]) {
        if (w == a || w == b) continue;
        auto& list = incident_[w];
        list.erase(std::remove(list.begin(), list.end(), t), list.end());
      }
    }
    incident_[a] = std::move(merged);
    incident_[b].clear();
    ++stamp_[a];
    for (auto w : neighbors(a)) push_candidate(std::min(a, w), std::max(a, w));
  }

  std::uint32_t uv_index(std::uint32_t v) const {
    const auto t = incident_[v].front();
    for (int k = 0; k < 3; ++k) {
      if (mesh_.triangles[t][k] == v) return mesh_.uv_triangles[t][k];
    }
    return 0;
  }

  TexturedMesh compact() const {
    TexturedMesh out;
    out.texture = mesh_.texture;
    std::vector<std::int64_t> vmap(mesh_.vertices.size(), -1);
    std::vector<std::int64_t> uvmap(mesh_.uvs.size(), -1);
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
      if (!alive_tri_[t]) continue;
      Triangle tri{}, uvt{};
      for (int k = 0; k < 3; ++k) {
        const auto v = mesh_.triangles[t][k];
        if (vmap[v] < 0) {
          vmap[v] = static_cast<std::int64_t>(out.vertices.size());
          out.vertices.push_back(mesh_.vertices[v]);
        }
        tri[k] = static_cast<std::uint32_t>(vmap[v]);
        if (mesh_.has_uvs()) {
          const auto u = mesh_.uv_triangles[t][k];
          if (uvmap[u] < 0) {
            uvmap[u] = static_cast<std::int64_t>(out.uvs.size());
            out.uvs.push_back(mesh_.uvs[u]);
          }
          uvt[k] = static_cast<std::uint32_t>(uvmap[u]);
        }
      }
      out.triangles.push_back(tri);
      if (mesh_.has_uvs()) out.uv_triangles.push_back(uvt);
    }
    if (!mesh_.normals.empty()) compute_normals(out);
    return out;
  }

  TexturedMesh mesh_;
  std::vector<std::vector<std::uint32_t>> incident_;
  std::vector<std::uint32_t> stamp_;
  std::vector<bool> alive_vertex_, seam_, boundary_, alive_tri_;
  std::vector<Quadric> quadric_;
  std::size_t live_tris_ = 0;
  std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> queue_;
};

}  // namespace

DecimationResult decimate(const TexturedMesh& mesh, const DecimationParams& params) {
  require(params.target_triangle_ratio > 0 && params.target_triangle_ratio <= 1,
          ErrorKind::kDomain, "decimate: target_triangle_ratio must be in (0, 1]");
  require(params.aggressiveness > 0, ErrorKind::kDomain, "decimate: aggressiveness must be > 0");
  validate(mesh);
  const auto requested = static_cast<std::size_t>(
      std::ceil(params.target_triangle_ratio * static_cast<double>(mesh.triangles.size())));
  const bool clamped = requested < 4;
  const std::size_t target = std::max<std::size_t>(4, requested);
  if (target >= mesh.triangles.size()) {
    DecimationResult r{mesh, target, clamped, true};
    return r;
  }
  Decimator d(mesh);
  DecimationResult r = d.run(target);
  r.clamped = clamped;
  return r;
}

}  // namespace s3dc
