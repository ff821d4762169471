#include "visyreve/meshrender.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "visyreve/error.hpp"

namespace visyreve {

void TriangleMesh::validate() const {
  if (triangles.empty()) {
    throw Error(ErrorCode::InvalidArgument, "mesh has no triangles");
  }
  for (const Vec3& v : vertices) {
    if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, "mesh has non-finite vertices");
  }
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int i : t) {
      if (i < 0 || i >= n) throw Error(ErrorCode::InvalidArgument, "triangle index out of range");
    }
  }
}

namespace {

[[noreturn]] void parse_error(const std::filesystem::path& path, int line, const std::string& why) {
  throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + why);
}

}  // namespace

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(std::filesystem::exists(path) ? ErrorCode::IoError : ErrorCode::MissingFile,
                "cannot open " + path.string());
  }
  TriangleMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) parse_error(path, line_no, "vertex needs three coordinates");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string token;
      while (ss >> token) {
        // "i", "i/j", "i//k" or "i/j/k"; only the position index matters
        const std::string head = token.substr(0, token.find('/'));
        std::size_t used = 0;
        long idx = 0;
        try {
          idx = std::stol(head, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != head.size() || idx == 0) {
          parse_error(path, line_no, "bad face index '" + token + "'");
        }
        const long n = static_cast<long>(mesh.vertices.size());
        const long resolved = idx > 0 ? idx - 1 : n + idx;
        if (resolved < 0 || resolved >= n) {
          parse_error(path, line_no, "face index " + std::to_string(idx) + " out of range");
        }
        face.push_back(static_cast<int>(resolved));
      }
      if (face.size() < 3) parse_error(path, line_no, "face needs at least three vertices");
      for (std::size_t i = 1; i + 1 < face.size(); ++i) {
        mesh.triangles.push_back({face[0], face[i], face[i + 1]});
      }
    }
  }
  if (mesh.triangles.empty()) parse_error(path, line_no, "no faces in file");
  return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](float v) { return v > 0.0f; }));
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

}  // namespace

void save_depth(const DepthMap& depth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const std::uint32_t header[2] = {to_little(static_cast<std::uint32_t>(depth.width)),
                                   to_little(static_cast<std::uint32_t>(depth.height))};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(depth.values.data()),
              static_cast<std::streamsize>(depth.values.size() * sizeof(float)));
  } else {
    for (float v : depth.values) {
      const float le = to_little(v);
      out.write(reinterpret_cast<const char*>(&le), sizeof(float));
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

DepthMap load_depth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(std::filesystem::exists(path) ? ErrorCode::IoError : ErrorCode::MissingFile,
                "cannot open " + path.string());
  }
  std::uint32_t header[2];
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) {
    throw Error(ErrorCode::IoError, "truncated depth header in " + path.string());
  }
  DepthMap d(static_cast<int>(to_little(header[0])), static_cast<int>(to_little(header[1])));
  in.read(reinterpret_cast<char*>(d.values.data()),
          static_cast<std::streamsize>(d.values.size() * sizeof(float)));
  if (!in) throw Error(ErrorCode::IoError, "truncated depth data in " + path.string());
  for (float& v : d.values) v = to_little(v);
  return d;
}

Mask mask_from_depth(const DepthMap& depth) {
  Mask m(depth.width, depth.height);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    m.values[i] = depth.values[i] > 0.0f ? 1 : 0;
  }
  return m;
}

namespace {

// Edge function of p against the directed edge a->b. Evaluated with the
// endpoints in a canonical order so that the two triangles sharing an edge
// see exactly negated values and no pixel on the edge is lost.
template <typename V>
double edge(const V& a, const V& b, double px, double py) {
  const bool swap = (b.x < a.x) || (b.x == a.x && b.y < a.y);
  const V& p = swap ? b : a;
  const V& q = swap ? a : b;
  const double e = (q.x - p.x) * (py - p.y) - (q.y - p.y) * (px - p.x);
  return swap ? -e : e;
}

// Top-left rule for pixel centers exactly on an edge (with y pointing down and
// triangles oriented so that their area is positive): top and left edges
// are owned. A shared edge runs in opposite directions in its two triangles,
// so exactly one of them owns it.
template <typename V>
bool owns_edge(const V& a, const V& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

}  // namespace

void DepthRenderer::raster(const ScreenVertex& a, const ScreenVertex& b0, const ScreenVertex& c0,
                           std::int32_t id) {
  double area = edge(a, b0, c0.x, c0.y);
  if (!(std::abs(area) > 1e-12)) return;
  const ScreenVertex& b = area > 0.0 ? b0 : c0;
  const ScreenVertex& c = area > 0.0 ? c0 : b0;
  area = std::abs(area);

  const int w = depth_.width;
  const int h = depth_.height;
  const double min_x = std::min({a.x, b.x, c.x});
  const double max_x = std::max({a.x, b.x, c.x});
  const double min_y = std::min({a.y, b.y, c.y});
  const double max_y = std::max({a.y, b.y, c.y});
  if (max_x < 0.0 || max_y < 0.0 || min_x > w - 1 || min_y > h - 1) return;
  const int x0 = std::max(0, static_cast<int>(std::ceil(min_x)));
  const int x1 = std::min(w - 1, static_cast<int>(std::floor(max_x)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(min_y)));
  const int y1 = std::min(h - 1, static_cast<int>(std::floor(max_y)));

  const bool own_bc = owns_edge(b, c);
  const bool own_ca = owns_edge(c, a);
  const bool own_ab = owns_edge(a, b);
  const double inv_area = 1.0 / area;

  for (int y = y0; y <= y1; ++y) {
    const double py = y;
    for (int x = x0; x <= x1; ++x) {
      const double px = x;
      const double wa = edge(b, c, px, py);
      if (wa < 0.0 || (wa == 0.0 && !own_bc)) continue;
      const double wb = edge(c, a, px, py);
      if (wb < 0.0 || (wb == 0.0 && !own_ca)) continue;
      const double wc = edge(a, b, px, py);
      if (wc < 0.0 || (wc == 0.0 && !own_ab)) continue;
      const double inv_z = (wa * a.inv_z + wb * b.inv_z + wc * c.inv_z) * inv_area;
      if (!(inv_z > 0.0)) continue;
      const double z = 1.0 / inv_z;
      const std::size_t i = std::size_t(y) * w + x;
      if (z < zbuffer_[i]) {
        zbuffer_[i] = z;
        ids_[i] = id;
      }
    }
  }
}

const DepthMap& DepthRenderer::render(const TriangleMesh& mesh, const Pose& pose,
                                      const Intrinsics& k) {
  k.validate();
  mesh.validate();
  depth_.width = k.width;
  depth_.height = k.height;
  const std::size_t n = std::size_t(k.width) * k.height;
  depth_.values.assign(n, DepthMap::kInvalid);
  zbuffer_.assign(n, std::numeric_limits<double>::infinity());
  ids_.assign(n, -1);

  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = pose.transform(mesh.vertices[i]);

  auto to_screen = [&k](const Vec3& p) {
    return ScreenVertex{k.fx * p.x() / p.z() + k.px, k.fy * p.y() / p.z() + k.py, 1.0 / p.z()};
  };

  std::vector<Vec3> poly;
  std::vector<Vec3> clipped;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    poly.assign({cam[tri[0]], cam[tri[1]], cam[tri[2]]});
    // clip against z >= near
    clipped.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec3& p = poly[i];
      const Vec3& q = poly[(i + 1) % poly.size()];
      const bool p_in = p.z() >= kNearPlane;
      const bool q_in = q.z() >= kNearPlane;
      if (p_in) clipped.push_back(p);
      if (p_in != q_in) {
        const double s = (kNearPlane - p.z()) / (q.z() - p.z());
        Vec3 r = p + s * (q - p);
        r.z() = kNearPlane;
        clipped.push_back(r);
      }
    }
    if (clipped.size() < 3) continue;
    const ScreenVertex s0 = to_screen(clipped[0]);
    for (std::size_t i = 1; i + 1 < clipped.size(); ++i) {
      raster(s0, to_screen(clipped[i]), to_screen(clipped[i + 1]), static_cast<std::int32_t>(t));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (ids_[i] >= 0) depth_.values[i] = static_cast<float>(zbuffer_[i]);
  }
  return depth_;
}

DepthMap render_depth(const TriangleMesh& mesh, const Pose& pose, const Intrinsics& k) {
  DepthRenderer r;
  return r.render(mesh, pose, k);
}

}  // namespace visyreve
