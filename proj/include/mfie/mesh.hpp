#pragma once

#include "mfie/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace mfie {

/// Interior edge of a closed triangulation.
///
/// `vertices` is stored with vertices[0] < vertices[1]. The plus triangle
/// (slot 0) traverses the edge as vertices[0] -> vertices[1] in its
/// counter-clockwise order, the minus triangle (slot 1) traverses it in the
/// opposite direction. `local` is the local edge index inside each triangle,
/// which equals the local index of the free vertex.
struct Edge {
  std::array<int, 2> vertices{};
  std::array<int, 2> triangles{};
  std::array<int, 2> free_vertices{};
  std::array<int, 2> local{};
};

struct SphereProjection {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

enum class MeshFormat { msh_ascii, off };

/// Closed, consistently and outward oriented triangle surface.
///
/// Construction validates the 2-manifold and orientation invariants and
/// builds the edge connectivity; the object is immutable afterwards.
class TriangleMesh {
 public:
  using Tri = std::array<int, 3>;

  TriangleMesh(std::vector<Vec3> vertices, std::vector<Tri> triangles)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    validate_indices();
    compute_geometry();
    build_edges();
    check_outward();
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Tri>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  /// Edge index of local edge i (opposite local vertex i) of triangle t.
  int triangle_edge(int t, int i) const { return triangle_edges_[t][i]; }
  const Vec3& vertex(int t, int i) const { return vertices_[triangles_[t][i]]; }

  const Vec3& normal(int t) const { return normals_[t]; }
  double area(int t) const { return areas_[t]; }
  Vec3 centroid(int t) const { return (vertex(t, 0) + vertex(t, 1) + vertex(t, 2)) / 3.0; }

  /// Longest edge of triangle t.
  double diameter(int t) const {
    const Vec3& a = vertex(t, 0);
    const Vec3& b = vertex(t, 1);
    const Vec3& c = vertex(t, 2);
    return std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
  }

  Vec3 point(int t, const std::array<double, 3>& bary) const {
    return bary[0] * vertex(t, 0) + bary[1] * vertex(t, 1) + bary[2] * vertex(t, 2);
  }

  long euler_characteristic() const {
    return static_cast<long>(num_vertices()) - static_cast<long>(num_edges()) +
           static_cast<long>(num_triangles());
  }

  double total_area() const {
    double s = 0.0;
    for (double a : areas_) s += a;
    return s;
  }

  double mean_edge_length() const {
    double s = 0.0;
    for (const Edge& e : edges_) s += (vertices_[e.vertices[1]] - vertices_[e.vertices[0]]).norm();
    return edges_.empty() ? 0.0 : s / static_cast<double>(edges_.size());
  }

  double bounding_box_diagonal() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const Vec3& v : vertices_) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
  }

  /// Enclosed volume by the divergence theorem (positive for outward normals).
  double signed_volume() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const int ti = static_cast<int>(t);
      s += vertex(ti, 0).dot(vertex(ti, 1).cross(vertex(ti, 2)));
    }
    return s / 6.0;
  }

 private:
  static std::uint64_t key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }

  void validate_indices() const {
    if (triangles_.empty()) throw TopologyError("mesh has no triangles");
    const int nv = static_cast<int>(vertices_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const Tri& tri = triangles_[t];
      for (int v : tri) {
        if (v < 0 || v >= nv) {
          throw ParseError("triangle " + std::to_string(t) + " references missing vertex " +
                           std::to_string(v));
        }
      }
      if (tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0]) {
        throw DegenerateTriangleError("triangle " + std::to_string(t) + " repeats a vertex");
      }
    }
  }

  void compute_geometry() {
    const double diag = bounding_box_diagonal();
    const double min_area = 1e-12 * diag * diag;
    normals_.resize(triangles_.size());
    areas_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const int ti = static_cast<int>(t);
      const Vec3 c = (vertex(ti, 1) - vertex(ti, 0)).cross(vertex(ti, 2) - vertex(ti, 0));
      const double twice = c.norm();
      areas_[t] = 0.5 * twice;
      if (!(areas_[t] > min_area)) {
        throw DegenerateTriangleError("triangle " + std::to_string(t) + " has area " +
                                      std::to_string(areas_[t]) + " below threshold");
      }
      normals_[t] = c / twice;
    }
  }

  void build_edges() {
    std::unordered_map<std::uint64_t, int> lookup;
    lookup.reserve(triangles_.size() * 2);
    triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
    // number of incidences per edge; slot filled by direction
    std::vector<int> filled;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const Tri& tri = triangles_[t];
      for (int i = 0; i < 3; ++i) {
        const int from = tri[(i + 1) % 3];
        const int to = tri[(i + 2) % 3];
        auto [it, inserted] = lookup.try_emplace(key(from, to), static_cast<int>(edges_.size()));
        if (inserted) {
          Edge e;
          e.vertices = {std::min(from, to), std::max(from, to)};
          e.triangles = {-1, -1};
          edges_.push_back(e);
          filled.push_back(0);
        }
        const int ei = it->second;
        Edge& e = edges_[ei];
        if (++filled[ei] > 2) {
          throw TopologyError("non-manifold edge (" + std::to_string(e.vertices[0]) + ", " +
                              std::to_string(e.vertices[1]) + ") shared by more than two triangles");
        }
        const int slot = (from == e.vertices[0]) ? 0 : 1;
        if (e.triangles[slot] != -1) {
          throw TopologyError("inconsistent orientation: edge (" + std::to_string(e.vertices[0]) +
                              ", " + std::to_string(e.vertices[1]) +
                              ") traversed in the same direction by triangles " +
                              std::to_string(e.triangles[slot]) + " and " + std::to_string(t));
        }
        e.triangles[slot] = static_cast<int>(t);
        e.free_vertices[slot] = tri[i];
        e.local[slot] = i;
        triangle_edges_[t][i] = ei;
      }
    }
    for (const Edge& e : edges_) {
      if (e.triangles[0] == -1 || e.triangles[1] == -1) {
        throw TopologyError("edge with single adjacent triangle (" + std::to_string(e.vertices[0]) +
                            ", " + std::to_string(e.vertices[1]) + "): surface is not closed");
      }
    }
  }

  void check_outward() const {
    if (!(signed_volume() > 0.0)) {
      throw TopologyError("inconsistent orientation: triangles are ordered with inward normals");
    }
  }

  std::vector<Vec3> vertices_;
  std::vector<Tri> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<Vec3> normals_;
  std::vector<double> areas_;
};

// ---------------------------------------------------------------------------
// File formats

namespace detail {

inline std::string next_data_line(std::istream& in, int& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
  }
  throw ParseError("unexpected end of file after line " + std::to_string(line_no));
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline TriangleMesh read_off(std::istream& in) {
  int line_no = 0;
  std::string line = detail::next_data_line(in, line_no);
  std::istringstream head(line);
  std::string magic;
  head >> magic;
  if (magic.rfind("OFF", 0) != 0) throw ParseError("OFF: missing 'OFF' header");
  long nv = -1, nf = -1, ne = -1;
  if (!(head >> nv)) {
    std::istringstream counts(detail::next_data_line(in, line_no));
    counts >> nv >> nf >> ne;
  } else {
    head >> nf >> ne;
  }
  if (nv < 0 || nf < 0) throw ParseError("OFF: bad vertex/face counts at line " + std::to_string(line_no));

  std::vector<Vec3> vertices(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    std::istringstream ls(detail::next_data_line(in, line_no));
    Vec3 v;
    if (!(ls >> v.x() >> v.y() >> v.z())) {
      throw ParseError("OFF: malformed vertex at line " + std::to_string(line_no));
    }
    vertices[static_cast<std::size_t>(i)] = v;
  }
  std::vector<TriangleMesh::Tri> triangles(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    std::istringstream ls(detail::next_data_line(in, line_no));
    int n = 0;
    TriangleMesh::Tri t{};
    if (!(ls >> n) || n != 3) {
      throw ParseError("OFF: only triangular faces are supported (line " + std::to_string(line_no) + ")");
    }
    if (!(ls >> t[0] >> t[1] >> t[2])) {
      throw ParseError("OFF: malformed face at line " + std::to_string(line_no));
    }
    triangles[static_cast<std::size_t>(i)] = t;
  }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

/// ASCII Gmsh MSH v2: $Nodes plus $Elements of type 2 (3-node triangle).
/// Other element types (points, lines, volumes) are skipped.
inline TriangleMesh read_msh(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool have_format = false;
  std::vector<Vec3> vertices;
  std::unordered_map<long, int> node_index;
  std::vector<TriangleMesh::Tri> triangles;

  auto expect_end = [&](const std::string& tag) {
    if (!std::getline(in, line) || detail::trim(line) != tag) {
      throw ParseError("MSH: expected " + tag + " after line " + std::to_string(line_no));
    }
    ++line_no;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = detail::trim(line);
    if (s == "$MeshFormat") {
      std::getline(in, line);
      ++line_no;
      std::istringstream ls(line);
      double version = 0.0;
      int file_type = -1;
      ls >> version >> file_type;
      if (version < 2.0 || version >= 3.0) throw ParseError("MSH: only format version 2 is supported");
      if (file_type != 0) throw ParseError("MSH: binary files are not supported");
      have_format = true;
      expect_end("$EndMeshFormat");
    } else if (s == "$Nodes") {
      std::getline(in, line);
      ++line_no;
      const long n = std::stol(detail::trim(line));
      vertices.reserve(static_cast<std::size_t>(n));
      for (long i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw ParseError("MSH: truncated $Nodes section");
        ++line_no;
        std::istringstream ls(line);
        long id = 0;
        Vec3 v;
        if (!(ls >> id >> v.x() >> v.y() >> v.z())) {
          throw ParseError("MSH: malformed node at line " + std::to_string(line_no));
        }
        node_index[id] = static_cast<int>(vertices.size());
        vertices.push_back(v);
      }
      expect_end("$EndNodes");
    } else if (s == "$Elements") {
      std::getline(in, line);
      ++line_no;
      const long n = std::stol(detail::trim(line));
      for (long i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw ParseError("MSH: truncated $Elements section");
        ++line_no;
        std::istringstream ls(line);
        long id = 0, type = 0, ntags = 0;
        if (!(ls >> id >> type >> ntags)) {
          throw ParseError("MSH: malformed element at line " + std::to_string(line_no));
        }
        for (long k = 0; k < ntags; ++k) {
          long tag;
          ls >> tag;
        }
        if (type != 2) continue;
        TriangleMesh::Tri t{};
        for (int k = 0; k < 3; ++k) {
          long node = 0;
          if (!(ls >> node)) throw ParseError("MSH: malformed triangle at line " + std::to_string(line_no));
          auto it = node_index.find(node);
          if (it == node_index.end()) {
            throw ParseError("MSH: element references unknown node " + std::to_string(node));
          }
          t[k] = it->second;
        }
        triangles.push_back(t);
      }
      expect_end("$EndElements");
    }
  }
  if (!have_format) throw ParseError("MSH: missing $MeshFormat section");
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

inline TriangleMesh load_mesh(const std::string& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file '" + path + "'");
  return format == MeshFormat::off ? read_off(in) : read_msh(in);
}

/// Format from the file extension (.off, .msh).
inline MeshFormat format_from_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "off" || ext == "OFF") return MeshFormat::off;
  if (ext == "msh" || ext == "MSH") return MeshFormat::msh_ascii;
  throw ParseError("cannot infer mesh format from '" + path + "' (expected .off or .msh)");
}

inline TriangleMesh load_mesh(const std::string& path) { return load_mesh(path, format_from_path(path)); }

inline void write_off(const TriangleMesh& mesh, std::ostream& out) {
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.num_edges() << '\n';
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

// ---------------------------------------------------------------------------
// Generators

/// Structured closed cube of side `edge_length` centred at the origin.
/// Each face carries a uniform (d x d) grid; the quad diagonal alternates in a
/// checkerboard pattern.
inline TriangleMesh make_cuboid(double edge_length, int divisions_per_edge) {
  const int d = divisions_per_edge;
  if (d < 1) throw DomainError("make_cuboid: divisions_per_edge must be >= 1");
  if (!(edge_length > 0.0)) throw DomainError("make_cuboid: edge_length must be positive");

  const int n = d + 1;
  std::vector<int> lattice(static_cast<std::size_t>(n) * n * n, -1);
  std::vector<Vec3> vertices;
  auto vid = [&](std::array<int, 3> ijk) {
    int& slot = lattice[(static_cast<std::size_t>(ijk[0]) * n + ijk[1]) * n + ijk[2]];
    if (slot < 0) {
      slot = static_cast<int>(vertices.size());
      vertices.emplace_back(edge_length * (ijk[0] / double(d) - 0.5), edge_length * (ijk[1] / double(d) - 0.5),
                            edge_length * (ijk[2] / double(d) - 0.5));
    }
    return slot;
  };

  std::vector<TriangleMesh::Tri> triangles;
  triangles.reserve(static_cast<std::size_t>(12) * d * d);
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      // (u, v, axis) is a right-handed permutation for side = 1
      int u = (axis + 1) % 3;
      int v = (axis + 2) % 3;
      if (side == 0) std::swap(u, v);
      auto corner = [&](int i, int j) {
        std::array<int, 3> ijk{};
        ijk[axis] = side * d;
        ijk[u] = i;
        ijk[v] = j;
        return vid(ijk);
      };
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          const int c00 = corner(i, j), c10 = corner(i + 1, j), c11 = corner(i + 1, j + 1),
                    c01 = corner(i, j + 1);
          if ((i + j) % 2 == 0) {
            triangles.push_back({c00, c10, c11});
            triangles.push_back({c00, c11, c01});
          } else {
            triangles.push_back({c00, c10, c01});
            triangles.push_back({c10, c11, c01});
          }
        }
      }
    }
  }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

/// 1-to-4 midpoint subdivision. New vertex for edge e gets index V + e, so
/// V' = V + E and F' = 4F. With a projection the new vertices are pushed
/// radially onto the sphere.
inline TriangleMesh refine(const TriangleMesh& mesh, std::optional<SphereProjection> projection = std::nullopt) {
  std::vector<Vec3> vertices = mesh.vertices();
  const int nv = static_cast<int>(vertices.size());
  vertices.reserve(vertices.size() + mesh.num_edges());
  for (const Edge& e : mesh.edges()) {
    Vec3 m = 0.5 * (mesh.vertices()[e.vertices[0]] + mesh.vertices()[e.vertices[1]]);
    if (projection) {
      const Vec3 d = m - projection->center;
      m = projection->center + projection->radius * d / d.norm();
    }
    vertices.push_back(m);
  }
  std::vector<TriangleMesh::Tri> triangles;
  triangles.reserve(4 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles()[t];
    const int ti = static_cast<int>(t);
    // local edge i is opposite vertex i
    const int m12 = nv + mesh.triangle_edge(ti, 0);
    const int m20 = nv + mesh.triangle_edge(ti, 1);
    const int m01 = nv + mesh.triangle_edge(ti, 2);
    triangles.push_back({v[0], m01, m20});
    triangles.push_back({v[1], m12, m01});
    triangles.push_back({v[2], m20, m12});
    triangles.push_back({m01, m12, m20});
  }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

/// Icosahedron refined `refinement_level` times with spherical projection.
inline TriangleMesh make_sphere(double radius, int refinement_level) {
  if (!(radius > 0.0)) throw DomainError("make_sphere: radius must be positive");
  if (refinement_level < 0) throw DomainError("make_sphere: refinement_level must be >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v) p *= radius / p.norm();
  std::vector<TriangleMesh::Tri> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  TriangleMesh mesh(std::move(v), std::move(f));
  for (int level = 0; level < refinement_level; ++level) {
    mesh = refine(mesh, SphereProjection{Vec3::Zero(), radius});
  }
  return mesh;
}

}  // namespace mfie
