#pragma once

#include "mfie/basis.hpp"
#include "mfie/core.hpp"
#include "mfie/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mfie {

/// Incident plane wave e^inc(r) = E0 e exp(-jk khat . r), time convention exp(+jwt).
struct PlaneWave {
  Vec3 direction = -Vec3::UnitZ();  // khat
  CVec3 polarization = CVec3(1.0, 0.0, 0.0);
  Complex amplitude = 1.0;  // E0, V/m
  double k = 2.0 * kPi;     // rad/m
  double eta = kEta0;

  void validate() const {
    if (std::abs(direction.norm() - 1.0) > 1e-12) throw DomainError("plane wave: |k| must be 1");
    if (std::abs(polarization.norm() - 1.0) > 1e-12) throw DomainError("plane wave: |e| must be 1");
    if (std::abs(polarization.dot(direction.cast<Complex>())) > 1e-12) {
      throw DomainError("plane wave: polarization not perpendicular to propagation direction");
    }
    if (!(k > 0.0)) throw DomainError("plane wave: wavenumber must be positive");
  }

  CVec3 e_field(const Vec3& r) const { return amplitude * std::exp(Complex(0.0, -k * direction.dot(r))) * polarization; }

  /// h^inc = (1/eta) khat x e^inc.
  CVec3 h_field(const Vec3& r) const { return ccross(direction, e_field(r)) / eta; }
};

inline double wavenumber(double wavelength) {
  if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
  return 2.0 * kPi / wavelength;
}

/// Quadrature routing for the integral operators.
struct AssemblyOptions {
  int smooth_degree = 6;        // separated pairs, both triangles
  int near_degree = 8;          // near pairs, both triangles, subdivided once
  double near_threshold = 2.0;  // near if centroid distance < threshold * max diameter
  int gram_degree = 6;
  int rhs_degree = 10;
  GradedRule touching{};  // outer rule of touching pairs
  SingularRule singular{};
  double polar_radius = 0.25;  // touching pairs: polar inner rule within polar_radius * source diameter
  int threads = 0;  // 0: runtime default

  void validate() const {
    for (int d : {smooth_degree, near_degree, gram_degree, rhs_degree}) {
      if (d < 1 || d > 10) throw DomainError("quadrature degree must be in 1..10");
    }
    if (!(near_threshold >= 0.0)) throw DomainError("near threshold must be non-negative");
    if (!(polar_radius >= 0.0)) throw DomainError("polar radius must be non-negative");
    if (touching.along < 1 || touching.across < 1 || touching.power < 1) {
      throw DomainError("touching rule: along, across and power must be positive");
    }
    if (singular.angular < 1 || singular.radial < 1 || !(singular.sinh_span > 0.0) || !(singular.panel_ratio > 1.0)) {
      throw DomainError("singular rule: invalid parameters");
    }
  }
};

enum class PairRoute { far, near, touching };

namespace detail {

using Values = LocalBasis::Values;
using Rotated = Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 6>;
using CBlock = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;

struct PointData {
  Vec3 r;
  double w;    // rule weight times triangle area
  Values v;    // basis values and divergence
  Rotated a;   // rotated functions beta x n
};

inline std::vector<PointData> tabulate(const LocalBasis& lb, const QuadratureRule& rule) {
  std::vector<PointData> out;
  out.reserve(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    PointData p;
    p.r = lb.tri.point(rule.points[q]);
    p.w = rule.weights[q] * lb.tri.area;
    p.v = lb.values(p.r, rule.points[q]);
    p.a.resize(3, lb.count);
    for (int s = 0; s < lb.count; ++s) p.a.col(s) = p.v.block<3, 1>(0, s).cross(lb.tri.n);
    out.push_back(std::move(p));
  }
  return out;
}

/// Greedy colouring of the triangles so that no two triangles of one colour
/// share an edge (hence no basis function): rows written by one colour are
/// disjoint.
inline std::vector<std::vector<int>> edge_colouring(const TriangleMesh& m) {
  const int nt = static_cast<int>(m.num_triangles());
  std::vector<int> colour(nt, -1);
  std::vector<std::vector<int>> groups;
  for (int t = 0; t < nt; ++t) {
    unsigned used = 0;
    for (int i = 0; i < 3; ++i) {
      const Edge& e = m.edges()[m.triangle_edge(t, i)];
      const int other = e.triangles[0] == t ? e.triangles[1] : e.triangles[0];
      if (colour[other] >= 0) used |= 1u << colour[other];
    }
    int c = 0;
    while (used & (1u << c)) ++c;
    colour[t] = c;
    if (c >= static_cast<int>(groups.size())) groups.resize(c + 1);
    groups[c].push_back(t);
  }
  return groups;
}

inline bool touching(const TriangleMesh& m, int a, int b) {
  for (int i : m.triangles()[a]) {
    for (int j : m.triangles()[b]) {
      if (i == j) return true;
    }
  }
  return false;
}

struct LocalBlocks {
  CBlock vec, div, k;
  void reset(int rows, int cols, bool want_t, bool want_k) {
    if (want_t) {
      vec.setZero(rows, cols);
      div.setZero(rows, cols);
    }
    if (want_k) k.setZero(rows, cols);
  }
};

/// Accumulates test(r_i) x inner(r_i) into the local blocks.
template <class Weak, class Curl>
void contract(const PointData& obs, double w, const Weak* weak, const Curl* curl, LocalBlocks& out) {
  const int rows = static_cast<int>(obs.v.cols());
  if (weak) {
    const int cols = static_cast<int>(weak->cols());
    for (int m = 0; m < rows; ++m) {
      for (int n = 0; n < cols; ++n) {
        out.vec(m, n) += w * (obs.v(0, m) * (*weak)(0, n) + obs.v(1, m) * (*weak)(1, n) + obs.v(2, m) * (*weak)(2, n));
        out.div(m, n) += w * obs.v(3, m) * (*weak)(3, n);
      }
    }
  }
  if (curl) {
    const int cols = static_cast<int>(curl->cols());
    for (int m = 0; m < rows; ++m) {
      for (int n = 0; n < cols; ++n) {
        out.k(m, n) -= w * (obs.a(0, m) * (*curl)(0, n) + obs.a(1, m) * (*curl)(1, n) + obs.a(2, m) * (*curl)(2, n));
      }
    }
  }
}

using WeakAcc = Eigen::Matrix<Complex, 4, Eigen::Dynamic, 0, 4, 6>;
using CurlAcc = Eigen::Matrix<Complex, 3, Eigen::Dynamic, 0, 3, 6>;

/// Inner integrals at r with a regular source table.
inline void inner_regular(const Vec3& r, const std::vector<PointData>& src, double k, bool want_t, bool want_k,
                          WeakAcc& weak, CurlAcc& curl) {
  const int cols = static_cast<int>(src.front().v.cols());
  weak.setZero(4, cols);
  curl.setZero(3, cols);
  for (const PointData& s : src) {
    const Vec3 d = r - s.r;
    const double R = d.norm();
    const Complex e = std::exp(Complex(0.0, -k * R));
    const double inv = 1.0 / (4.0 * kPi * R);
    if (want_t) weak += (s.w * e * inv) * s.v.cast<Complex>();
    if (want_k) {
      const Complex g1 = -s.w * Complex(1.0, k * R) * e * inv / (R * R);
      for (int c = 0; c < cols; ++c) {
        const Vec3 cr = d.cross(Vec3(s.v(0, c), s.v(1, c), s.v(2, c)));
        curl.col(c) += g1 * cr.cast<Complex>();
      }
    }
  }
}

/// Tensor-product pair integration with precomputed point tables.
inline void pair_regular(const std::vector<PointData>& obs, const std::vector<PointData>& src, double k, bool want_t,
                         bool want_k, LocalBlocks& out) {
  WeakAcc weak;
  CurlAcc curl;
  for (const PointData& o : obs) {
    inner_regular(o.r, src, k, want_t, want_k, weak, curl);
    contract(o, o.w, want_t ? &weak : nullptr, want_k ? &curl : nullptr, out);
  }
}

}  // namespace detail

/// Dense operator assembly for one basis set.
///
/// The assembler traverses ordered triangle pairs (observation t, source s)
/// and scatters 3x3 (LO) or 6x6 (FULL_FIRST) local blocks to the global
/// function indices. Pairs are routed to
///   - far: smooth_degree rule on both triangles,
///   - near: subdivided near_degree rule on both triangles,
///   - touching (shared vertex, edge or coincident): outer rule graded
///     towards the shared vertex or edge, singularity-subtracted inner integrals.
/// Both regular routes use the same rule on either side, so the (t, s) and
/// (s, t) blocks of T are transposes up to rounding; for touching pairs the
/// weak part is always integrated with the lower-indexed triangle as the
/// observer, which makes them exact transposes.
class OperatorAssembler {
 public:
  OperatorAssembler(const BasisSet& set, AssemblyOptions opts = {}) : set_(set), opts_(opts) {
    opts_.validate();
    const TriangleMesh& m = set_.mesh();
    const QuadratureRule smooth = gauss_triangle_rule(opts_.smooth_degree);
    const QuadratureRule near_rule = gauss_triangle_rule(opts_.near_degree);
    const QuadratureRule near = subdivide(near_rule);
    for (int i = 0; i < 3; ++i) {
      touch_rules_[i] = graded_triangle_rule(TouchKind::vertex, i, opts_.touching);
      touch_rules_[3 + i] = graded_triangle_rule(TouchKind::edge, i, opts_.touching);
    }
    touch_rules_[6] = graded_triangle_rule(TouchKind::self, 0, opts_.touching);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const LocalBasis& lb = set_.local(static_cast<int>(t));
      smooth_.push_back(detail::tabulate(lb, smooth));
      near_.push_back(detail::tabulate(lb, near));
    }
    colours_ = detail::edge_colouring(m);
    // touching neighbours via shared vertices, paired with the index of the
    // unordered pair in pairs_
    std::vector<std::vector<int>> at_vertex(m.num_vertices());
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      for (int v : m.triangles()[t]) at_vertex[v].push_back(static_cast<int>(t));
    }
    touch_.resize(m.num_triangles());
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      std::vector<int> nb;
      for (int v : m.triangles()[t]) nb.insert(nb.end(), at_vertex[v].begin(), at_vertex[v].end());
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      for (int s : nb) {
        if (s < static_cast<int>(t)) continue;
        const int p = static_cast<int>(pairs_.size());
        pairs_.push_back({static_cast<int>(t), s});
        touch_[t].push_back({s, p});
        if (s != static_cast<int>(t)) touch_[s].push_back({static_cast<int>(t), p});
      }
    }
    for (auto& list : touch_) std::sort(list.begin(), list.end());
  }

  PairRoute route(int t, int s) const {
    const TriangleMesh& m = set_.mesh();
    if (detail::touching(m, t, s)) return PairRoute::touching;
    const double dist = (m.centroid(t) - m.centroid(s)).norm();
    const double diam = std::max(m.diameter(t), m.diameter(s));
    return dist < opts_.near_threshold * diam ? PairRoute::near : PairRoute::far;
  }

  /// Fills whichever of K and T is non-null (N x N each).
  /// K_mn = -<alpha_m, int grad g x beta_n>, T = jk eta <beta, g beta> + (eta / (jk)) <div, g div>.
  void assemble(double k, double eta, ComplexDenseMatrix* K, ComplexDenseMatrix* T) const {
    if (!(k > 0.0)) throw DomainError("assembly: wavenumber must be positive");
    const int N = set_.size();
    const bool want_k = K != nullptr, want_t = T != nullptr;
    if (want_k) K->setZero(N, N);
    if (want_t) T->setZero(N, N);
    const int nt = static_cast<int>(set_.mesh().num_triangles());
    const Complex cv = Complex(0.0, k * eta);
    const Complex cd = eta / Complex(0.0, k);

    // touching pairs t <= s: weak part (and curl) with t as the observer, reused
    // transposed for (s, t)
    std::vector<detail::LocalBlocks> canonical(want_t ? pairs_.size() : 0);
    const int np = static_cast<int>(canonical.size());
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_count())
    for (int p = 0; p < np; ++p) {
      const auto [t, s] = pairs_[p];
      canonical[p].reset(set_.local(t).count, set_.local(s).count, true, want_k);
      touching_sweep(t, s, k, true, want_k, canonical[p]);
      if (t == s) symmetrise(canonical[p]);
    }

    for (const std::vector<int>& group : colours_) {
      const int count = static_cast<int>(group.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(thread_count())
      for (int gi = 0; gi < count; ++gi) {
        const int t = group[gi];
        const LocalBasis& lt = set_.local(t);
        detail::LocalBlocks blk, mirror;
        std::size_t next = 0;  // cursor into the sorted touching list of t
        for (int s = 0; s < nt; ++s) {
          const auto& list = touch_[t];
          if (next < list.size() && list[next].first == s) {
            const int p = list[next++].second;
            if (!want_t) {
              blk.reset(lt.count, set_.local(s).count, false, true);
              touching_sweep(t, s, k, false, true, blk);
            } else if (t <= s) {
              blk = canonical[p];
            } else {
              blk.reset(lt.count, set_.local(s).count, false, want_k);
              if (want_k) touching_sweep(t, s, k, false, true, blk);
              blk.vec = canonical[p].vec.transpose();
              blk.div = canonical[p].div.transpose();
            }
          } else {
            pair_blocks(t, s, k, want_t, want_k, blk, mirror);
          }
          scatter(lt, set_.local(s), blk, want_t, want_k, cv, cd, K, T);
        }
      }
    }
  }

  /// Local blocks of one ordered pair: vec = <beta_a, g beta_b>, div = <div_a, g div_b>,
  /// k = -<alpha_a, grad g x beta_b> over observation triangle t and source s.
  void pair_blocks(int t, int s, double k, bool want_t, bool want_k, detail::LocalBlocks& blk,
                   detail::LocalBlocks& mirror) const {
    blk.reset(set_.local(t).count, set_.local(s).count, want_t, want_k);
    const PairRoute r = route(t, s);
    if (r == PairRoute::far) {
      detail::pair_regular(smooth_[t], smooth_[s], k, want_t, want_k, blk);
    } else if (r == PairRoute::near) {
      detail::pair_regular(near_[t], near_[s], k, want_t, want_k, blk);
    } else {
      touching_pair(t, s, k, want_t, want_k, blk, mirror);
    }
  }

  detail::LocalBlocks pair_blocks(int t, int s, double k, bool want_t = true, bool want_k = true) const {
    detail::LocalBlocks blk, mirror;
    pair_blocks(t, s, k, want_t, want_k, blk, mirror);
    return blk;
  }

  const AssemblyOptions& options() const { return opts_; }
  std::size_t colour_count() const { return colours_.size(); }

 private:
  int thread_count() const {
#ifdef _OPENMP
    return opts_.threads > 0 ? opts_.threads : omp_get_max_threads();
#else
    return 1;
#endif
  }

  void touching_pair(int t, int s, double k, bool want_t, bool want_k, detail::LocalBlocks& blk,
                     detail::LocalBlocks& mirror) const {
    const LocalBasis& lt = set_.local(t);
    const LocalBasis& ls = set_.local(s);
    const bool self_observer = t <= s;
    // curl (and the weak part when t is the canonical observer)
    if (want_k || (want_t && self_observer)) {
      touching_sweep(t, s, k, want_t && self_observer, want_k, blk);
    }
    if (want_t && !self_observer) {
      mirror.reset(ls.count, lt.count, true, false);
      touching_sweep(s, t, k, true, false, mirror);
      blk.vec = mirror.vec.transpose();
      blk.div = mirror.div.transpose();
    }
    if (want_t && t == s) symmetrise(blk);
  }

  /// Averages the two orderings of a self block.
  static void symmetrise(detail::LocalBlocks& blk) {
    blk.vec = 0.5 * (blk.vec + blk.vec.transpose()).eval();
    blk.div = 0.5 * (blk.div + blk.div.transpose()).eval();
  }

  /// Graded outer rule on t; per point the inner integral over s is singular
  /// (polar) within polar_radius * diam(s) of s and regular beyond.
  void touching_sweep(int t, int s, double k, bool weak, bool curl, detail::LocalBlocks& out) const {
    thread_local std::vector<SourcePoint> scratch;
    const LocalBasis& lt = set_.local(t);
    const LocalBasis& ls = set_.local(s);
    const double radius = opts_.polar_radius * ls.tri.diameter();
    detail::WeakAcc wr;
    detail::CurlAcc cr;
    for (const detail::PointData& o : detail::tabulate(lt, touching_rule(t, s))) {
      if (point_triangle_distance(ls.tri, o.r) > radius) {
        detail::inner_regular(o.r, near_[s], k, weak, curl, wr, cr);
        detail::contract(o, o.w, weak ? &wr : nullptr, curl ? &cr : nullptr, out);
      } else {
        const auto inner = singular_inner(ls.tri, o.r, k, opts_.singular, ls, scratch, curl, weak);
        detail::contract(o, o.w, weak ? &inner.weak : nullptr, curl ? &inner.curl : nullptr, out);
      }
    }
  }

  /// Graded outer rule on observation triangle t for its touching partner s.
  const QuadratureRule& touching_rule(int t, int s) const {
    const auto& a = set_.mesh().triangles()[t];
    const auto& b = set_.mesh().triangles()[s];
    int shared = 0, last_shared = 0, last_free = 0;
    for (int i = 0; i < 3; ++i) {
      const bool in = a[i] == b[0] || a[i] == b[1] || a[i] == b[2];
      if (in) {
        ++shared;
        last_shared = i;
      } else {
        last_free = i;
      }
    }
    if (shared == 3) return touch_rules_[6];
    if (shared == 2) return touch_rules_[3 + last_free];
    return touch_rules_[last_shared];
  }

  static void scatter(const LocalBasis& lt, const LocalBasis& ls, const detail::LocalBlocks& blk, bool want_t,
                      bool want_k, Complex cv, Complex cd, ComplexDenseMatrix* K, ComplexDenseMatrix* T) {
    for (int a = 0; a < lt.count; ++a) {
      const int m = lt.global[a];
      for (int b = 0; b < ls.count; ++b) {
        const int n = ls.global[b];
        if (want_t) (*T)(m, n) += cv * blk.vec(a, b) + cd * blk.div(a, b);
        if (want_k) (*K)(m, n) += blk.k(a, b);
      }
    }
  }

  const BasisSet& set_;
  AssemblyOptions opts_;
  std::vector<std::vector<detail::PointData>> smooth_, near_;
  std::array<QuadratureRule, 7> touch_rules_;
  std::vector<std::vector<int>> colours_;
  std::vector<std::array<int, 2>> pairs_;                   // touching, first <= second
  std::vector<std::vector<std::pair<int, int>>> touch_;    // per triangle: (neighbour, pair index)
};

/// [G_bb]_mn = <beta_m, beta_n>; real symmetric, zero for disjoint supports.
inline ComplexDenseMatrix assemble_gram_bb(const BasisSet& set, const AssemblyOptions& opts = {}) {
  const int N = set.size();
  ComplexDenseMatrix G = ComplexDenseMatrix::Zero(N, N);
  const QuadratureRule rule = gauss_triangle_rule(opts.gram_degree);
  for (std::size_t t = 0; t < set.mesh().num_triangles(); ++t) {
    const LocalBasis& lb = set.local(static_cast<int>(t));
    for (const detail::PointData& p : detail::tabulate(lb, rule)) {
      for (int a = 0; a < lb.count; ++a) {
        for (int b = 0; b < lb.count; ++b) {
          G(lb.global[a], lb.global[b]) += p.w * p.v.block<3, 1>(0, a).dot(p.v.block<3, 1>(0, b));
        }
      }
    }
  }
  return G;
}

/// [G_ab]_mn = <beta_m x n, beta_n> = <n, beta_n x beta_m>; antisymmetric with
/// zero diagonal by construction.
inline ComplexDenseMatrix assemble_gram_ab(const BasisSet& set, const AssemblyOptions& opts = {}) {
  const int N = set.size();
  ComplexDenseMatrix G = ComplexDenseMatrix::Zero(N, N);
  const QuadratureRule rule = gauss_triangle_rule(opts.gram_degree);
  for (std::size_t t = 0; t < set.mesh().num_triangles(); ++t) {
    const LocalBasis& lb = set.local(static_cast<int>(t));
    for (const detail::PointData& p : detail::tabulate(lb, rule)) {
      for (int a = 0; a < lb.count; ++a) {
        for (int b = 0; b < lb.count; ++b) {
          const int m = lb.global[a], n = lb.global[b];
          if (m >= n) continue;
          const double v = p.w * lb.tri.n.dot(p.v.block<3, 1>(0, b).cross(p.v.block<3, 1>(0, a)));
          G(m, n) += v;
          G(n, m) -= v;
        }
      }
    }
  }
  return G;
}

inline ComplexDenseMatrix assemble_k_matrix(const BasisSet& set, double k, const AssemblyOptions& opts = {}) {
  ComplexDenseMatrix K;
  OperatorAssembler(set, opts).assemble(k, kEta0, &K, nullptr);
  return K;
}

inline ComplexDenseMatrix assemble_t_matrix(const BasisSet& set, double k, double eta = kEta0,
                                            const AssemblyOptions& opts = {}) {
  ComplexDenseMatrix T;
  OperatorAssembler(set, opts).assemble(k, eta, nullptr, &T);
  return T;
}

namespace detail {
template <class Field>
ComplexVector tested_field(const BasisSet& set, const AssemblyOptions& opts, Field&& field) {
  ComplexVector b = ComplexVector::Zero(set.size());
  const QuadratureRule rule = gauss_triangle_rule(opts.rhs_degree);
  for (std::size_t t = 0; t < set.mesh().num_triangles(); ++t) {
    const LocalBasis& lb = set.local(static_cast<int>(t));
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec3 r = lb.tri.point(rule.points[q]);
      const CVec3 f = field(r, lb.tri.n);
      const Values v = lb.values(r, rule.points[q]);
      const double w = rule.weights[q] * lb.tri.area;
      for (int a = 0; a < lb.count; ++a) {
        b[lb.global[a]] += w * (v(0, a) * f[0] + v(1, a) * f[1] + v(2, a) * f[2]);
      }
    }
  }
  return b;
}
}  // namespace detail

/// [h]_m = <beta_m, n x h^inc>, the tested tangential magnetic field of the
/// Love current j = n x h.
inline ComplexVector assemble_rhs_mfie(const BasisSet& set, const PlaneWave& pw, const AssemblyOptions& opts = {}) {
  pw.validate();
  return detail::tested_field(set, opts, [&](const Vec3& r, const Vec3& n) {
    return ccross(n, pw.h_field(r));
  });
}

/// [e]_m = <beta_m, e^inc>.
inline ComplexVector assemble_rhs_efie(const BasisSet& set, const PlaneWave& pw, const AssemblyOptions& opts = {}) {
  pw.validate();
  return detail::tested_field(set, opts, [&](const Vec3& r, const Vec3&) { return pw.e_field(r); });
}

}  // namespace mfie
