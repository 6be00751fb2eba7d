#pragma once

#include "mfie/core.hpp"
#include "mfie/mesh.hpp"
#include "mfie/quadrature.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace mfie {

enum class BasisOrder { lo, full_first };
enum class FunctionKind { lo, ho };

inline const char* to_string(BasisOrder o) { return o == BasisOrder::lo ? "lo" : "ho"; }

struct BasisFunction {
  FunctionKind kind;
  int edge;
  int plus_triangle;
  int minus_triangle;
};

/// Per-triangle data for evaluating the (up to six) functions supported on
/// it. Local slot i < 3 is the RWG of local edge i, slot i + 3 its
/// hierarchical complement.
struct LocalBasis {
  Triangle3 tri;
  std::array<double, 3> coef{};     // +-l / (2A)
  std::array<Vec3, 3> grad_bary{};  // gradients of the barycentric coordinates
  std::array<std::array<int, 2>, 3> ho_vertices{};  // local (a, b) with mu = lambda_a - lambda_b
  std::array<int, 6> global{};      // global function index per slot, -1 if absent
  int count = 3;

  explicit LocalBasis(const Triangle3& t) : tri(t) {}

  Vec3 rwg(int i, const Vec3& r) const { return coef[i] * (r - tri.v[i]); }

  double mu(int i, const Bary& b) const { return b[ho_vertices[i][0]] - b[ho_vertices[i][1]]; }
  Vec3 grad_mu(int i) const { return grad_bary[ho_vertices[i][0]] - grad_bary[ho_vertices[i][1]]; }

  Vec3 value(int slot, const Vec3& r, const Bary& b) const {
    if (slot < 3) return rwg(slot, r);
    return mu(slot - 3, b) * rwg(slot - 3, r);
  }

  double divergence(int slot, const Vec3& r, const Bary& b) const {
    if (slot < 3) return 2.0 * coef[slot];
    const int i = slot - 3;
    return grad_mu(i).dot(rwg(i, r)) + 2.0 * coef[i] * mu(i, b);
  }

  /// Columns: slot; rows 0..2 the vector value, row 3 the surface divergence.
  using Values = Eigen::Matrix<double, 4, Eigen::Dynamic, 0, 4, 6>;

  Values values(const Vec3& r) const { return values(r, tri.barycentric(r)); }

  Values values(const Vec3& r, const Bary& b) const {
    Values out(4, count);
    for (int s = 0; s < count; ++s) {
      out.block<3, 1>(0, s) = value(s, r, b);
      out(3, s) = divergence(s, r, b);
    }
    return out;
  }

  /// Value and in-plane gradient at an arbitrary point of the plane (the
  /// polynomial extension is used outside the triangle).
  DensityJet<Values> jet(const Vec3& r) const {
    const Bary b = tri.barycentric(r);
    DensityJet<Values> j{values(r, b), {Values(4, count), Values(4, count), Values(4, count)}};
    for (int dir = 0; dir < 3; ++dir) {
      const Vec3 d = Vec3::Unit(dir);
      for (int s = 0; s < count; ++s) {
        const int i = s % 3;
        Vec3 dv;
        double ddiv;
        if (s < 3) {
          dv = coef[i] * d;
          ddiv = 0.0;
        } else {
          const Vec3 gm = grad_mu(i);
          dv = gm.dot(d) * rwg(i, r) + mu(i, b) * coef[i] * d;
          ddiv = 3.0 * coef[i] * gm.dot(d);
        }
        j.gradient[dir].block<3, 1>(0, s) = dv;
        j.gradient[dir](3, s) = ddiv;
      }
    }
    return j;
  }
};

/// Div-conforming expansion set on a closed mesh.
///
/// Indices 0..N/2-1 are RWG functions (index == edge index); in
/// FULL_FIRST mode index e + N/2 is the hierarchical complement
/// (lambda_a - lambda_b) f_RWG on the same edge, with (a, b) the edge's
/// stored vertex order.
class BasisSet {
 public:
  BasisSet(std::shared_ptr<const TriangleMesh> mesh, BasisOrder order) : mesh_(std::move(mesh)), order_(order) {
    const TriangleMesh& m = *mesh_;
    const int ne = static_cast<int>(m.num_edges());
    num_lo_ = ne;
    const int per = order_ == BasisOrder::lo ? 3 : 6;
    functions_.reserve(static_cast<std::size_t>(order_ == BasisOrder::lo ? ne : 2 * ne));
    for (int e = 0; e < ne; ++e) {
      const Edge& ed = m.edges()[e];
      functions_.push_back({FunctionKind::lo, e, ed.triangles[0], ed.triangles[1]});
    }
    if (order_ == BasisOrder::full_first) {
      for (int e = 0; e < ne; ++e) {
        const Edge& ed = m.edges()[e];
        functions_.push_back({FunctionKind::ho, e, ed.triangles[0], ed.triangles[1]});
      }
    }
    local_.reserve(m.num_triangles());
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const int ti = static_cast<int>(t);
      LocalBasis lb(Triangle3(m.vertex(ti, 0), m.vertex(ti, 1), m.vertex(ti, 2)));
      lb.count = per;
      for (int j = 0; j < 3; ++j) {
        const Vec3& p1 = lb.tri.v[(j + 1) % 3];
        const Vec3& p2 = lb.tri.v[(j + 2) % 3];
        lb.grad_bary[j] = lb.tri.n.cross(p2 - p1) / (2.0 * lb.tri.area);
      }
      for (int i = 0; i < 3; ++i) {
        const int e = m.triangle_edge(ti, i);
        const Edge& ed = m.edges()[e];
        const double sign = ed.triangles[0] == ti ? 1.0 : -1.0;
        const double len = (m.vertices()[ed.vertices[1]] - m.vertices()[ed.vertices[0]]).norm();
        lb.coef[i] = sign * len / (2.0 * lb.tri.area);
        for (int ab = 0; ab < 2; ++ab) {
          const auto& tv = m.triangles()[t];
          lb.ho_vertices[i][ab] = tv[0] == ed.vertices[ab] ? 0 : (tv[1] == ed.vertices[ab] ? 1 : 2);
        }
        lb.global[i] = e;
        lb.global[i + 3] = order_ == BasisOrder::full_first ? e + ne : -1;
      }
      local_.push_back(lb);
    }
  }

  const TriangleMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const TriangleMesh> mesh_ptr() const { return mesh_; }
  BasisOrder order() const { return order_; }
  int size() const { return static_cast<int>(functions_.size()); }
  int num_lo() const { return num_lo_; }
  const BasisFunction& function(int n) const { return functions_.at(static_cast<std::size_t>(n)); }
  const LocalBasis& local(int t) const { return local_[static_cast<std::size_t>(t)]; }

  /// Local slot of function n on triangle t; throws DomainError outside the support.
  int slot(int n, int t) const {
    const BasisFunction& f = function(n);
    if (t != f.plus_triangle && t != f.minus_triangle) {
      throw DomainError("basis function " + std::to_string(n) + " has no support on triangle " + std::to_string(t));
    }
    const Edge& e = mesh_->edges()[f.edge];
    const int i = t == f.plus_triangle ? e.local[0] : e.local[1];
    return f.kind == FunctionKind::lo ? i : i + 3;
  }

 private:
  std::shared_ptr<const TriangleMesh> mesh_;
  BasisOrder order_;
  int num_lo_ = 0;
  std::vector<BasisFunction> functions_;
  std::vector<LocalBasis> local_;
};

inline BasisSet build_basis(std::shared_ptr<const TriangleMesh> mesh, BasisOrder order) {
  return BasisSet(std::move(mesh), order);
}

inline BasisSet build_basis(const TriangleMesh& mesh, BasisOrder order) {
  return BasisSet(std::make_shared<const TriangleMesh>(mesh), order);
}

/// beta_n at barycentric point `bary` of `triangle` (1/m).
inline Vec3 eval_basis(const BasisSet& set, int index, int triangle, const Bary& bary) {
  const int s = set.slot(index, triangle);
  const LocalBasis& lb = set.local(triangle);
  return lb.value(s, lb.tri.point(bary), bary);
}

/// alpha_n = beta_n x n.
inline Vec3 eval_rotated(const BasisSet& set, int index, int triangle, const Bary& bary) {
  return eval_basis(set, index, triangle, bary).cross(set.local(triangle).tri.n);
}

/// Surface divergence (1/m^2); constant per triangle for RWG, affine for HO.
inline double surface_divergence(const BasisSet& set, int index, int triangle,
                                 const Bary& bary = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}) {
  const int s = set.slot(index, triangle);
  const LocalBasis& lb = set.local(triangle);
  return lb.divergence(s, lb.tri.point(bary), bary);
}

/// Coefficients [i]_n of j = sum_n beta_n [i]_n; length equals BasisSet::size().
using CoefficientVector = ComplexVector;

}  // namespace mfie
