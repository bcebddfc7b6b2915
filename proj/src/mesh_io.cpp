#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "s3dc/error.hpp"
#include "s3dc/mesh.hpp"

namespace s3dc {

double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

Vec3 normalized(const Vec3& v) {
  double len = length(v);
  return len > 0 ? v * (1.0 / len) : Vec3{};
}

std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

void validate(const TexturedMesh& mesh) {
  const auto nv = mesh.vertices.size();
  for (const auto& t : mesh.triangles) {
    for (auto i : t) require(i < nv, ErrorKind::kDomain, "triangle index out of range");
    require(!(t[0] == t[1] && t[1] == t[2]), ErrorKind::kDomain, "degenerate triangle");
  }
  if (mesh.has_uvs()) {
    require(mesh.uv_triangles.size() == mesh.triangles.size(), ErrorKind::kDomain,
            "uv triangle count differs from triangle count");
    for (const auto& t : mesh.uv_triangles) {
      for (auto i : t) require(i < mesh.uvs.size(), ErrorKind::kDomain, "uv index out of range");
    }
  }
  require(mesh.normals.empty() || mesh.normals.size() == nv, ErrorKind::kDomain,
          "normals must be per-vertex");
}

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  fail(ErrorKind::kParse, path.string() + ":" + std::to_string(line) + ": " + what);
}

bool parse_number(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool parse_int(std::string_view token, long long& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Rest of the line after the keyword, trimmed. File names may contain spaces.
std::string rest_of_line(std::string_view line, std::string_view keyword) {
  auto pos = line.find(keyword);
  std::string_view rest = line.substr(pos + keyword.size());
  while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
  while (!rest.empty() && (rest.back() == ' ' || rest.back() == '\t' || rest.back() == '\r')) {
    rest.remove_suffix(1);
  }
  return std::string(rest);
}

// map_Kd may carry options (-s, -o ...); the file name is the last token.
std::optional<std::filesystem::path> find_map_kd(const std::filesystem::path& mtl_path) {
  std::ifstream in(mtl_path);
  if (!in) return std::nullopt;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = split_ws(line);
    if (tokens.size() >= 2 && tokens[0] == "map_Kd") {
      return mtl_path.parent_path() / std::string(tokens.back());
    }
  }
  return std::nullopt;
}

std::vector<std::filesystem::path> find_mtllibs(const std::filesystem::path& obj_path) {
  std::ifstream in(obj_path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + obj_path.string());
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = split_ws(line);
    if (tokens.size() >= 2 && tokens[0] == "mtllib") {
      out.push_back(obj_path.parent_path() / rest_of_line(line, "mtllib"));
    }
  }
  return out;
}

struct Corner {
  long long v = 0, vt = 0, vn = 0;  // 1-based after resolution; 0 = absent
};

}  // namespace

TexturedMesh parse_obj(std::istream& in, const std::filesystem::path& path,
                      std::vector<std::string>* warnings) {
  TexturedMesh mesh;
  std::vector<Vec3> raw_normals;
  struct PendingFace {
    std::array<Corner, 3> corners;
    std::size_t line;
  };
  std::vector<PendingFace> faces;
  std::vector<std::filesystem::path> mtllibs;
  bool any_uv = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    const auto& key = tokens[0];
    if (key == "v") {
      Vec3 p;
      if (tokens.size() < 4 || !parse_number(tokens[1], p.x) || !parse_number(tokens[2], p.y) ||
          !parse_number(tokens[3], p.z)) {
        parse_fail(path, line_no, "malformed vertex");
      }
      mesh.vertices.push_back(p);
    } else if (key == "vt") {
      Vec2 t;
      if (tokens.size() < 3 || !parse_number(tokens[1], t.x) || !parse_number(tokens[2], t.y)) {
        parse_fail(path, line_no, "malformed texture coordinate");
      }
      mesh.uvs.push_back(t);
    } else if (key == "vn") {
      Vec3 n;
      if (tokens.size() < 4 || !parse_number(tokens[1], n.x) || !parse_number(tokens[2], n.y) ||
          !parse_number(tokens[3], n.z)) {
        parse_fail(path, line_no, "malformed normal");
      }
      raw_normals.push_back(n);
    } else if (key == "f") {
      if (tokens.size() < 4) parse_fail(path, line_no, "face needs at least three corners");
      std::vector<Corner> corners;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        Corner c;
        std::string_view tok = tokens[i];
        std::array<std::string_view, 3> parts{};
        std::size_t field = 0, start = 0;
        for (std::size_t k = 0; k <= tok.size(); ++k) {
          if (k == tok.size() || tok[k] == '/') {
            if (field > 2) parse_fail(path, line_no, "malformed face corner");
            parts[field++] = tok.substr(start, k - start);
            start = k + 1;
          }
        }
        auto resolve = [&](std::string_view s, std::size_t count, long long& out) {
          if (s.empty()) return;
          long long idx = 0;
          if (!parse_int(s, idx) || idx == 0) parse_fail(path, line_no, "malformed face index");
          out = idx < 0 ? static_cast<long long>(count) + idx + 1 : idx;
          if (out <= 0) parse_fail(path, line_no, "face index out of range");
        };
        if (parts[0].empty()) parse_fail(path, line_no, "face corner without vertex index");
        resolve(parts[0], mesh.vertices.size(), c.v);
        resolve(parts[1], mesh.uvs.size(), c.vt);
        resolve(parts[2], raw_normals.size(), c.vn);
        corners.push_back(c);
      }
      bool has_vt = corners.front().vt != 0;
      for (const auto& c : corners) {
        if ((c.vt != 0) != has_vt) parse_fail(path, line_no, "inconsistent uv indices in face");
      }
      any_uv = any_uv || has_vt;
      for (std::size_t i = 1; i + 1 < corners.size(); ++i) {
        faces.push_back({{corners[0], corners[i], corners[i + 1]}, line_no});
      }
    } else if (key == "mtllib") {
      if (tokens.size() < 2) parse_fail(path, line_no, "mtllib without file name");
      mtllibs.push_back(path.parent_path() / rest_of_line(line, "mtllib"));
    }
    // o, g, s, usemtl, l, p and unknown records carry nothing we keep.
  }

  std::optional<Vec2> fallback_uv;
  for (const auto& face : faces) {
    Triangle tri{}, uv_tri{};
    for (int k = 0; k < 3; ++k) {
      const Corner& c = face.corners[k];
      if (c.v > static_cast<long long>(mesh.vertices.size())) {
        parse_fail(path, face.line, "vertex index " + std::to_string(c.v) + " out of range");
      }
      if (c.vt > static_cast<long long>(mesh.uvs.size())) {
        parse_fail(path, face.line, "uv index " + std::to_string(c.vt) + " out of range");
      }
      if (c.vn > static_cast<long long>(raw_normals.size())) {
        parse_fail(path, face.line, "normal index " + std::to_string(c.vn) + " out of range");
      }
      tri[k] = static_cast<std::uint32_t>(c.v - 1);
      if (c.vt != 0) {
        uv_tri[k] = static_cast<std::uint32_t>(c.vt - 1);
      } else if (any_uv) {
        if (!fallback_uv) {
          fallback_uv = Vec2{};
          mesh.uvs.push_back(*fallback_uv);
        }
        uv_tri[k] = static_cast<std::uint32_t>(mesh.uvs.size() - 1);
      }
      if (c.vn != 0) {
        if (mesh.normals.empty()) mesh.normals.assign(mesh.vertices.size(), Vec3{});
        mesh.normals[tri[k]] = raw_normals[c.vn - 1];
      }
    }
    if (tri[0] == tri[1] && tri[1] == tri[2]) continue;
    mesh.triangles.push_back(tri);
    if (any_uv) mesh.uv_triangles.push_back(uv_tri);
  }

  for (const auto& mtl : mtllibs) {
    std::error_code ec;
    if (!std::filesystem::exists(mtl, ec)) {
      if (warnings) warnings->push_back("material library not found: " + mtl.string());
      continue;
    }
    auto tex_path = find_map_kd(mtl);
    if (!tex_path) continue;
    try {
      Texture tex;
      tex.encoded = read_file(*tex_path);
      tex.format = sniff_format(tex.encoded);
      tex.image = decode_image(tex.encoded);
      mesh.texture = std::move(tex);
      break;
    } catch (const Error& e) {
      if (warnings) warnings->push_back("texture unavailable (" + tex_path->string() + "): " + e.what());
    }
  }

  validate(mesh);
  return mesh;
}

TexturedMesh load_object(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return parse_obj(in, path, warnings);
}

SizeBreakdown save_object(const TexturedMesh& mesh, const std::filesystem::path& path,
                          const SaveOptions& options) {
  validate(mesh);
  const std::string stem = path.stem().string();
  const auto dir = path.parent_path();
  SizeBreakdown sizes;

  std::vector<std::uint8_t> texture_bytes;
  std::string texture_name;
  if (mesh.texture) {
    const Texture& tex = *mesh.texture;
    ImageFormat format = tex.format;
    if (!tex.encoded.empty()) {
      texture_bytes = tex.encoded;
    } else if (options.jpeg_quality > 0) {
      texture_bytes = encode_jpeg(tex.image, options.jpeg_quality);
      format = ImageFormat::kJpeg;
    } else {
      texture_bytes = encode_png(tex.image);
      format = ImageFormat::kPng;
    }
    texture_name = stem + (format == ImageFormat::kPng ? "_albedo.png" : "_albedo.jpg");
  }

  std::ostringstream obj;
  obj << "# s3dc\n";
  if (mesh.texture) obj << "mtllib " << stem << ".mtl\nusemtl material0\n";
  for (const auto& v : mesh.vertices) {
    obj << "v " << format_double(v.x) << ' ' << format_double(v.y) << ' ' << format_double(v.z)
        << '\n';
  }
  for (const auto& t : mesh.uvs) {
    obj << "vt " << format_double(t.x) << ' ' << format_double(t.y) << '\n';
  }
  for (const auto& n : mesh.normals) {
    obj << "vn " << format_double(n.x) << ' ' << format_double(n.y) << ' ' << format_double(n.z)
        << '\n';
  }
  const bool has_n = !mesh.normals.empty();
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    obj << 'f';
    for (int k = 0; k < 3; ++k) {
      const auto v = mesh.triangles[f][k] + 1;
      obj << ' ' << v;
      if (mesh.has_uvs()) {
        obj << '/' << mesh.uv_triangles[f][k] + 1;
        if (has_n) obj << '/' << v;
      } else if (has_n) {
        obj << "//" << v;
      }
    }
    obj << '\n';
  }
  const std::string obj_text = obj.str();
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(obj_text.data()), obj_text.size()));
  sizes.mesh_bytes = obj_text.size();

  if (mesh.texture) {
    std::string mtl = "newmtl material0\nKd 1 1 1\nmap_Kd " + texture_name + "\n";
    write_file(dir / (stem + ".mtl"),
               std::span(reinterpret_cast<const std::uint8_t*>(mtl.data()), mtl.size()));
    write_file(dir / texture_name, texture_bytes);
    sizes.mesh_bytes += mtl.size();
    sizes.texture_bytes = texture_bytes.size();
  }
  sizes.total_bytes = sizes.mesh_bytes + sizes.texture_bytes;
  return sizes;
}

SizeBreakdown size_breakdown(const std::filesystem::path& path) {
  std::error_code ec;
  auto file_size = [&](const std::filesystem::path& p) -> std::uint64_t {
    auto n = std::filesystem::file_size(p, ec);
    return ec ? 0 : n;
  };
  if (!std::filesystem::is_regular_file(path, ec)) {
    fail(ErrorKind::kIo, "missing object file " + path.string());
  }
  SizeBreakdown sizes;
  sizes.mesh_bytes = std::filesystem::file_size(path);
  for (const auto& mtl : find_mtllibs(path)) {
    if (!std::filesystem::is_regular_file(mtl, ec)) continue;
    sizes.mesh_bytes += file_size(mtl);
    if (auto tex = find_map_kd(mtl); tex && std::filesystem::is_regular_file(*tex, ec)) {
      sizes.texture_bytes += file_size(*tex);
    }
  }
  sizes.total_bytes = sizes.mesh_bytes + sizes.texture_bytes;
  return sizes;
}

TexturedMesh recode_texture(const TexturedMesh& mesh, int quality) {
  require(mesh.texture.has_value(), ErrorKind::kDomain, "recode_texture: mesh has no texture");
  require(quality >= 1 && quality <= 100, ErrorKind::kDomain, "recode_texture: quality must be in 1..100");
  TexturedMesh out = mesh;
  Texture& tex = *out.texture;
  tex.encoded = encode_jpeg(mesh.texture->image, quality);
  tex.format = ImageFormat::kJpeg;
  tex.image = decode_image(tex.encoded);
  return out;
}

}  // namespace s3dc
