#pragma once

#include "mfie/core.hpp"
#include "mfie/quadrature_tables.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mfie {

using Bary = std::array<double, 3>;

/// Flat triangle in 3D with cached unit normal and area (counter-clockwise
/// vertex order defines the normal).
struct Triangle3 {
  std::array<Vec3, 3> v;
  Vec3 n;
  double area;

  Triangle3(const Vec3& a, const Vec3& b, const Vec3& c) : v{a, b, c} {
    const Vec3 cr = (b - a).cross(c - a);
    area = 0.5 * cr.norm();
    n = cr / cr.norm();
  }

  Vec3 point(const Bary& b) const { return b[0] * v[0] + b[1] * v[1] + b[2] * v[2]; }
  Vec3 centroid() const { return (v[0] + v[1] + v[2]) / 3.0; }
  double diameter() const {
    return std::max({(v[0] - v[1]).norm(), (v[1] - v[2]).norm(), (v[2] - v[0]).norm()});
  }

  /// Barycentric coordinates of the in-plane projection of p.
  Bary barycentric(const Vec3& p) const {
    Bary b;
    for (int i = 0; i < 3; ++i) {
      const Vec3& p1 = v[(i + 1) % 3];
      const Vec3& p2 = v[(i + 2) % 3];
      b[i] = (p2 - p1).cross(p - p1).dot(n) / (2.0 * area);
    }
    return b;
  }
};

/// Area-normalised rule: sum(weights) == 1, integral ~= area * sum(w f(x)).
struct QuadratureRule {
  std::vector<Bary> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

/// Symmetric Gauss rule exact for total degree `degree` (1..10). Degrees 3
/// and 7 return the next higher positive-weight rule; `degree` of the result
/// records the actual exactness.
inline QuadratureRule gauss_triangle_rule(int degree) {
  if (degree < 1 || degree > 10) {
    throw DomainError("gauss_triangle_rule: unsupported degree " + std::to_string(degree) + " (1..10)");
  }
  const detail::RuleTable table = detail::rule_for_degree(degree);
  QuadratureRule rule;
  rule.degree = table.degree;
  for (const detail::Orbit& o : table.orbits) {
    if (o.kind == 'c') {
      rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
      rule.weights.push_back(o.values[0]);
    } else if (o.kind == '3') {
      const double a = o.values[0], c = 1.0 - 2.0 * a;
      for (const Bary& p : {Bary{a, a, c}, Bary{a, c, a}, Bary{c, a, a}}) {
        rule.points.push_back(p);
        rule.weights.push_back(o.values[1]);
      }
    } else {
      const double a = o.values[0], b = o.values[1], c = 1.0 - a - b;
      for (const Bary& p : {Bary{a, b, c}, Bary{a, c, b}, Bary{b, a, c}, Bary{b, c, a}, Bary{c, a, b},
                            Bary{c, b, a}}) {
        rule.points.push_back(p);
        rule.weights.push_back(o.values[2]);
      }
    }
  }
  return rule;
}

/// Composite rule on the 1-to-4 midpoint split of the reference triangle.
inline QuadratureRule subdivide(const QuadratureRule& rule) {
  const Bary c0{1, 0, 0}, c1{0, 1, 0}, c2{0, 0, 1};
  const Bary m01{0.5, 0.5, 0}, m12{0, 0.5, 0.5}, m20{0.5, 0, 0.5};
  const std::array<std::array<Bary, 3>, 4> children = {
      {{c0, m01, m20}, {c1, m12, m01}, {c2, m20, m12}, {m01, m12, m20}}};
  QuadratureRule out;
  out.degree = rule.degree;
  for (const auto& corners : children) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Bary p{0, 0, 0};
      for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < 3; ++i) p[i] += rule.points[q][k] * corners[k][i];
      }
      out.points.push_back(p);
      out.weights.push_back(0.25 * rule.weights[q]);
    }
  }
  return out;
}

/// Gauss-Legendre nodes and weights on [0, 1].
struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;
};

inline GaussLegendre make_gauss_legendre(int n) {
  GaussLegendre g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    g.x[n - 1 - i] = 0.5 * (1.0 + z);
    g.w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return g;
}

/// Cached rule for n in 1..64.
inline const GaussLegendre& gauss_legendre(int n) {
  static const std::vector<GaussLegendre> cache = [] {
    std::vector<GaussLegendre> c(65);
    for (int k = 1; k <= 64; ++k) c[k] = make_gauss_legendre(k);
    return c;
  }();
  if (n < 1 || n > 64) throw DomainError("gauss_legendre: order must be in 1..64");
  return cache[n];
}

/// Outer rule for a triangle that touches a singular source: collapsed
/// (fan) coordinates about the shared vertex or edge with polynomial grading
/// x = t^power towards it, `across` Gauss points in t; `along` points
/// tangentially where the integrand is smooth.
struct GradedRule {
  int along = 6;
  int across = 8;
  int power = 3;
};

enum class TouchKind { vertex, edge, self };

/// vertex: singular at local vertex `index`; edge: singular on the edge
/// opposite local vertex `index`, two fans from its end points through its
/// midpoint, graded towards the apex and towards the edge; self: fan of three
/// sub-triangles from the centroid, each graded towards its outer edge.
inline QuadratureRule graded_triangle_rule(TouchKind kind, int index, const GradedRule& g) {
  std::vector<double> x, wx;
  const GaussLegendre& gp = gauss_legendre(g.across);
  for (int i = 0; i < g.across; ++i) {
    x.push_back(std::pow(gp.x[i], g.power));
    wx.push_back(g.power * std::pow(gp.x[i], g.power - 1) * gp.w[i]);
  }
  const GaussLegendre& ga = gauss_legendre(g.along);
  QuadratureRule rule;
  rule.degree = 0;
  // r = (1 - u) apex + u ((1 - v) b0 + v b1), dA / A = 2 u du dv * scale
  auto fan = [&](const Bary& apex, const Bary& b0, const Bary& b1, double scale, const std::vector<double>& us,
                 const std::vector<double>& wu, const std::vector<double>& vs, const std::vector<double>& wv) {
    for (std::size_t i = 0; i < us.size(); ++i) {
      for (std::size_t j = 0; j < vs.size(); ++j) {
        const double u = us[i], v = vs[j];
        Bary b;
        for (int c = 0; c < 3; ++c) b[c] = (1.0 - u) * apex[c] + u * ((1.0 - v) * b0[c] + v * b1[c]);
        rule.points.push_back(b);
        rule.weights.push_back(2.0 * u * wu[i] * wv[j] * scale);
      }
    }
  };
  std::vector<double> flipped(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) flipped[i] = 1.0 - x[i];
  const Bary e[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  if (kind == TouchKind::vertex) {
    fan(e[index], e[(index + 1) % 3], e[(index + 2) % 3], 1.0, x, wx, ga.x, ga.w);
  } else if (kind == TouchKind::edge) {
    // two fans from the shared vertices through the edge midpoint, graded
    // towards the apex and towards the shared edge
    const Bary& a = e[(index + 1) % 3];
    const Bary& b = e[(index + 2) % 3];
    Bary mid;
    for (int c = 0; c < 3; ++c) mid[c] = 0.5 * (a[c] + b[c]);
    fan(a, mid, e[index], 0.5, x, wx, x, wx);
    fan(b, mid, e[index], 0.5, x, wx, x, wx);
  } else {
    const Bary c{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    for (int i = 0; i < 3; ++i) fan(c, e[i], e[(i + 1) % 3], 1.0 / 3.0, flipped, wx, ga.x, ga.w);
  }
  return rule;
}

/// Tensor-product quadrature of kernel(r_obs, r_src) over two triangles.
template <class Kernel>
Complex integrate_pair_smooth(Kernel&& kernel, const Triangle3& src, const Triangle3& obs,
                              const QuadratureRule& src_rule, const QuadratureRule& obs_rule) {
  Complex sum = 0.0;
  for (std::size_t i = 0; i < obs_rule.size(); ++i) {
    const Vec3 r = obs.point(obs_rule.points[i]);
    Complex inner = 0.0;
    for (std::size_t j = 0; j < src_rule.size(); ++j) {
      inner += src_rule.weights[j] * Complex(kernel(r, src.point(src_rule.points[j])));
    }
    sum += obs_rule.weights[i] * inner;
  }
  return sum * obs.area * src.area;
}

template <class Kernel>
Complex integrate_pair_smooth(Kernel&& kernel, const Triangle3& src, const Triangle3& obs,
                              const QuadratureRule& rule) {
  return integrate_pair_smooth(std::forward<Kernel>(kernel), src, obs, rule, rule);
}

// ---------------------------------------------------------------------------
// Kernels, time convention exp(+j w t): g = exp(-jkR) / (4 pi R).

inline Complex green(double k, double R) { return std::exp(Complex(0.0, -k * R)) / (4.0 * kPi * R); }

/// (exp(-jkR) - 1) / (4 pi R), evaluated without cancellation for small kR.
inline Complex green_smooth_part(double k, double R) {
  const double half = 0.5 * k * R;
  const double s = std::sin(half);
  return Complex(-2.0 * s * s, -std::sin(k * R)) / (4.0 * kPi * R);
}

inline void sincos_pair(double x, double& s, double& c) {
  s = std::sin(x);
  c = std::cos(x);
}

/// G1(R) + 1/(4 pi R^3): the gradient factor less its static part, bounded by
/// k^2 / (8 pi R). em1 = exp(-jkR) - 1.
inline Complex green_gradient_dynamic(double k, double R, Complex em1) {
  const double x = k * R;
  Complex num;
  if (x < 0.2) {
    // (1 + jx) e^{-jx} - 1 = sum_{n >= 2} (1 - n) / n! (-jx)^n
    Complex term = Complex(0.0, -x);
    Complex sum = 0.0;
    double fact = 1.0;
    for (int n = 2; n <= 14; ++n) {
      term *= Complex(0.0, -x);
      fact *= n;
      sum += (1.0 - n) / fact * term;
    }
    num = sum;
  } else {
    num = em1 + Complex(0.0, x) * (1.0 + em1);
  }
  return -num / (4.0 * kPi * R * R * R);
}

inline Complex green_gradient_dynamic(double k, double R) {
  const double half = std::sin(0.5 * k * R);
  return green_gradient_dynamic(k, R, Complex(-2.0 * half * half, -std::sin(k * R)));
}

/// Scalar factor G1 with grad_r g(r, r') = (r - r') G1(R).
inline Complex green_gradient_factor(double k, double R) {
  return -Complex(1.0, k * R) * std::exp(Complex(0.0, -k * R)) / (4.0 * kPi * R * R * R);
}

// ---------------------------------------------------------------------------
// Singular and near-singular source integration

/// Observation point relative to the plane of a source triangle.
struct PlaneProjection {
  Vec3 rho;  // foot point in the source plane
  double h;  // signed height along the source normal
};

inline PlaneProjection project(const Triangle3& src, const Vec3& r) {
  const double h = (r - src.v[0]).dot(src.n);
  return {r - h * src.n, h};
}

/// Euclidean distance from r to the closed triangle.
inline double point_triangle_distance(const Triangle3& t, const Vec3& r) {
  const PlaneProjection pp = project(t, r);
  const Bary b = t.barycentric(pp.rho);
  if (b[0] >= 0.0 && b[1] >= 0.0 && b[2] >= 0.0) return std::abs(pp.h);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = t.v[i];
    const Vec3 e = t.v[(i + 1) % 3] - a;
    const double s = std::clamp((r - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (r - a - s * e).norm());
  }
  return best;
}

/// Closed-form static potentials of a flat triangle for observation point r:
/// i0 = int 1/R dA', i1 = int (r' - rho)/R dA' (in-plane vector), and with
/// p = r' - rho the moments of 1/R^3:
///   h_a0 = h int 1/R^3 dA' (signed solid angle), a1 = int p/R^3 dA',
///   a2 = int p p^T/R^3 dA'.
struct StaticPotentials {
  double i0 = 0.0;
  Vec3 i1 = Vec3::Zero();
  Vec3 rho = Vec3::Zero();
  double h = 0.0;
  double h_a0 = 0.0;
  Vec3 a1 = Vec3::Zero();
  Eigen::Matrix3d a2 = Eigen::Matrix3d::Zero();
};

inline StaticPotentials static_potentials(const Triangle3& src, const Vec3& r) {
  const PlaneProjection pp = project(src, r);
  StaticPotentials out;
  out.rho = pp.rho;
  out.h = pp.h;
  const double ah = std::abs(pp.h);
  const double scale = src.diameter();
  const double tiny = 1e-30 * scale * scale;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = src.v[i];
    const Vec3& b = src.v[(i + 1) % 3];
    const Vec3 e = (b - a).normalized();
    const Vec3 u = e.cross(src.n);
    const double t = (a - pp.rho).dot(u);
    const double lp = (b - pp.rho).dot(e);
    const double lm = (a - pp.rho).dot(e);
    const double r0sq = t * t + pp.h * pp.h;
    const double rp = std::sqrt(lp * lp + r0sq);
    const double rm = std::sqrt(lm * lm + r0sq);
    double f = 0.0;  // stays zero on the edge line, where both coefficients vanish
    if (r0sq > tiny) {
      // R + l rewritten as R0^2 / (R - l) for negative l
      const double ap = lp >= 0.0 ? rp + lp : r0sq / (rp - lp);
      const double am = lm >= 0.0 ? rm + lm : r0sq / (rm - lm);
      f = std::log(ap / am);
    }
    out.i0 += t * f;
    if (ah > 0.0) {
      const double omega = std::atan(t * lp / (r0sq + ah * rp)) - std::atan(t * lm / (r0sq + ah * rm));
      out.i0 -= ah * omega;
      out.h_a0 += pp.h > 0.0 ? omega : -omega;
    }
    out.i1 += 0.5 * u * (r0sq * f + lp * rp - lm * rm);
    out.a1 -= u * f;
    out.a2 -= u * (t * f * u + (rp - rm) * e).transpose();
  }
  out.a2 += out.i0 * (Eigen::Matrix3d::Identity() - src.n * src.n.transpose());
  return out;
}

/// Parameters of the polar quadrature about the projected observation point.
///
/// The source triangle is split into three signed sub-triangles with apex at
/// the projection rho. Along each edge the abscissa x is mapped by
/// x = D sinh(v), D the distance from r to the edge line. Radially the ray
/// parameter s uses a sinh map on [0, sinh_span * |h| / L] followed by
/// geometrically graded Gauss-Legendre panels up to s = 1.
struct SingularRule {
  int angular = 12;
  int radial = 8;
  double sinh_span = 4.0;
  double panel_ratio = 4.0;
};

struct SourcePoint {
  Vec3 r;
  double w;  // includes the area element
};

/// Fills `out` with a rule for int f(r') dA' over `src` that resolves 1/R and
/// 1/R^2 behaviour at the observation point r.
inline PlaneProjection polar_source_points(const Triangle3& src, const Vec3& r, const SingularRule& rule,
                                           std::vector<SourcePoint>& out) {
  out.clear();
  const PlaneProjection pp = project(src, r);
  const double scale = src.diameter();
  const double ah = std::abs(pp.h) > 1e-12 * scale ? std::abs(pp.h) : 0.0;
  const GaussLegendre& ga = gauss_legendre(rule.angular);
  const GaussLegendre& gr = gauss_legendre(rule.radial);

  for (int i = 0; i < 3; ++i) {
    const Vec3& a = src.v[i];
    const Vec3& b = src.v[(i + 1) % 3];
    const Vec3 e = (b - a).normalized();
    const Vec3 u = e.cross(src.n);
    const double d = (a - pp.rho).dot(u);
    if (std::abs(d) < 1e-13 * scale) continue;
    const double ad = std::abs(d);
    const double sign = d > 0.0 ? 1.0 : -1.0;
    const Vec3 foot = pp.rho + d * u;
    const double xa = (a - foot).dot(e);
    const double xb = (b - foot).dot(e);
    const double dist = std::sqrt(d * d + ah * ah);
    const double va = std::asinh(xa / dist);
    const double vb = std::asinh(xb / dist);
    for (int ia = 0; ia < rule.angular; ++ia) {
      const double v = va + (vb - va) * ga.x[ia];
      const double x = dist * std::sinh(v);
      const double dxdv = dist * std::cosh(v) * (vb - va) * ga.w[ia];
      const Vec3 q = foot + x * e;
      const Vec3 ray = q - pp.rho;
      const double L = std::sqrt(d * d + x * x);
      const double base = sign * ad * dxdv;  // dA' = sign |d| s ds dx
      auto emit = [&](double s, double sds) { out.push_back({pp.rho + s * ray, base * sds}); };

      double s_lo = 0.0;
      if (ah > 0.0) {
        const double t0 = ah / L;
        const double s_sinh = std::min(1.0, rule.sinh_span * t0);
        const double umax = std::asinh(s_sinh / t0);
        for (int ir = 0; ir < rule.radial; ++ir) {
          const double uu = umax * gr.x[ir];
          const double s = t0 * std::sinh(uu);
          emit(s, s * t0 * std::cosh(uu) * umax * gr.w[ir]);
        }
        s_lo = s_sinh;
      }
      while (s_lo < 1.0) {
        const double s_hi = (s_lo == 0.0) ? 1.0 : std::min(1.0, s_lo * rule.panel_ratio);
        const double len = s_hi - s_lo;
        for (int ir = 0; ir < rule.radial; ++ir) {
          const double s = s_lo + len * gr.x[ir];
          emit(s, s * len * gr.w[ir]);
        }
        s_lo = s_hi;
      }
    }
  }
  return pp;
}

/// Value and gradient of a polynomial source density at a point; the
/// gradient is stored per Cartesian direction, f(rho + d) ~ value + sum_j d_j gradient[j].
template <class Value>
struct DensityJet {
  Value value;
  std::array<Value, 3> gradient;
};

/// Results of one singular inner integration for observation point r.
template <class Value>
struct SingularInner {
  using CValue = Eigen::Matrix<Complex, Value::RowsAtCompileTime, Value::ColsAtCompileTime, 0,
                               Value::MaxRowsAtCompileTime, Value::MaxColsAtCompileTime>;
  CValue weak;                                 // int g(r, r') f(r') dA'
  Eigen::Matrix<Complex, 3, Eigen::Dynamic, 0, 3, Value::MaxColsAtCompileTime> curl;  // int grad g x f_c dA'
  PlaneProjection projection;
};

namespace detail {

// monomials xi^a eta^b up to degree 3 in the order
// 1, xi, eta, xi^2, xi eta, eta^2, xi^3, xi^2 eta, xi eta^2, eta^3
constexpr int kTimesXi[6] = {1, 3, 4, 6, 7, 8};
constexpr int kTimesEta[6] = {2, 4, 5, 7, 8, 9};

inline void monomials(double x, double y, double* m) {
  m[0] = 1.0;
  m[1] = x;
  m[2] = y;
  m[3] = x * x;
  m[4] = x * y;
  m[5] = y * y;
  m[6] = m[3] * x;
  m[7] = m[3] * y;
  m[8] = m[5] * x;
  m[9] = m[5] * y;
}

}  // namespace detail

/// Inner source integrals at observation point r for the self / touching
/// case, by singularity subtraction.
///
/// The density is expanded about the projection rho of r in in-plane
/// coordinates (xi, eta) as sum_a C_a xi^a. Its linear part is integrated in
/// closed form against the static kernels 1/(4 pi R) (weak) and
/// -(r - r')/(4 pi R^3) (curl); the bounded remainders (quadratic part
/// against the static kernels, whole density against the dynamic kernels)
/// use the polar rule, accumulated as scalar monomial moments.
///
/// curl: int grad g(r, r') x f_c(r') dA' for the vector fields held in rows
/// 0..2 of each column of the density. Principal value convention: for r in
/// the source plane the result is parallel to the source normal and is
/// returned as zero; the solid-angle term belongs to the identity block.
///
/// `density.values(r')` returns an Eigen matrix Value that is a polynomial
/// of degree at most 2 in r'.
template <class Density>
auto singular_inner(const Triangle3& src, const Vec3& r, double k, const SingularRule& rule, const Density& density,
                    std::vector<SourcePoint>& scratch, bool with_curl, bool with_weak = true) {
  using Value = decltype(density.values(r));
  SingularInner<Value> out;
  const StaticPotentials sp = static_potentials(src, r);
  out.projection = {sp.rho, sp.h};
  const bool curl_here = with_curl && std::abs(sp.h) > 1e-12 * src.diameter();

  // quadratic expansion from a six-point stencil of spacing a about rho
  const Vec3 e1 = (src.v[1] - src.v[0]).normalized();
  const Vec3 e2 = src.n.cross(e1);
  const double a = 0.5 * src.diameter();
  auto at = [&](double x, double y) { return density.values(Vec3(sp.rho + a * (x * e1 + y * e2))); };
  const Value f0 = at(0, 0), fxp = at(1, 0), fxm = at(-1, 0), fyp = at(0, 1), fym = at(0, -1), fxy = at(1, 1);
  const Eigen::Index rows = f0.rows(), cols = f0.cols();
  std::array<Value, 6> C;
  C[0] = f0;
  C[1] = (fxp - fxm) / (2.0 * a);
  C[2] = (fyp - fym) / (2.0 * a);
  C[3] = (0.5 * (fxp + fxm) - f0) / (a * a);
  C[5] = (0.5 * (fyp + fym) - f0) / (a * a);
  C[4] = (fxy - f0) / (a * a) - (C[1] + C[2]) / a - C[3] - C[5];

  if (with_weak) {
    const Value stat = C[0] * sp.i0 + C[1] * sp.i1.dot(e1) + C[2] * sp.i1.dot(e2);
    out.weak = (stat / (4.0 * kPi)).template cast<Complex>();
  }
  out.curl.setZero(3, cols);
  if (curl_here) {
    const Vec3 a2e1 = sp.a2 * e1, a2e2 = sp.a2 * e2;
    const double a1e1 = sp.a1.dot(e1), a1e2 = sp.a1.dot(e2);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Vec3 c0 = C[0].template block<3, 1>(0, c), cx = C[1].template block<3, 1>(0, c),
                 cy = C[2].template block<3, 1>(0, c);
      const Vec3 normal_part = sp.h_a0 * c0 + sp.h * (a1e1 * cx + a1e2 * cy);
      const Vec3 tangential_part = sp.a1.cross(c0) + a2e1.cross(cx) + a2e2.cross(cy);
      out.curl.col(c) = ((tangential_part - src.n.cross(normal_part)) / (4.0 * kPi)).template cast<Complex>();
    }
  }
  if (!with_weak && !curl_here) return out;

  // scalar moments over the polar rule: static kernel on the quadratic part
  // (weak 3..5, curl 3..9) and dynamic kernels on all monomials
  std::array<double, 10> stat_w{}, stat_c{}, dyn_w_re{}, dyn_w_im{}, dyn_c_re{}, dyn_c_im{};
  polar_source_points(src, r, rule, scratch);
  double m[10];
  for (const SourcePoint& q : scratch) {
    const Vec3 dr = r - q.r;
    const double R = dr.norm();
    const Vec3 p = q.r - sp.rho;
    detail::monomials(p.dot(e1), p.dot(e2), m);
    const double wi = q.w / (4.0 * kPi * R);
    const double x = k * R;
    const double sh = std::sin(0.5 * x), ch = std::cos(0.5 * x);
    // exp(-jkR) - 1 = -2 sin^2(kR/2) - j sin(kR)
    const double em_re = -2.0 * sh * sh, em_im = -2.0 * sh * ch;
    if (with_weak) {
      for (int i = 0; i < 6; ++i) {
        dyn_w_re[i] += wi * em_re * m[i];
        dyn_w_im[i] += wi * em_im * m[i];
      }
      for (int i = 3; i < 6; ++i) stat_w[i] += wi * m[i];
    }
    if (curl_here) {
      // G1 + 1/(4 pi R^3) = -((1 + jx) exp(-jx) - 1) / (4 pi R^3)
      const double r2 = 1.0 / (R * R);
      const double g_re = -(em_re - x * em_im) * wi * r2;
      const double g_im = -(em_im + x * (1.0 + em_re)) * wi * r2;
      const double c2 = -wi * r2;
      for (int i = 0; i < 10; ++i) {
        dyn_c_re[i] += g_re * m[i];
        dyn_c_im[i] += g_im * m[i];
      }
      for (int i = 3; i < 10; ++i) stat_c[i] += c2 * m[i];
    }
  }

  if (with_weak) {
    Value re = Value::Zero(rows, cols), im = Value::Zero(rows, cols);
    for (int i = 0; i < 6; ++i) {
      re += (dyn_w_re[i] + stat_w[i]) * C[i];
      im += dyn_w_im[i] * C[i];
    }
    out.weak.real() += re;
    out.weak.imag() += im;
  }
  if (curl_here) {
    // int G (h n - xi e1 - eta e2) x C_a xi^a
    for (Eigen::Index c = 0; c < cols; ++c) {
      Vec3 n_re = Vec3::Zero(), n_im = Vec3::Zero(), x_re = Vec3::Zero(), x_im = Vec3::Zero(), y_re = Vec3::Zero(),
           y_im = Vec3::Zero();
      for (int i = 0; i < 6; ++i) {
        const Vec3 ca = C[i].template block<3, 1>(0, c);
        const double s0 = i >= 3 ? stat_c[i] : 0.0;
        const double sx = i >= 3 ? stat_c[detail::kTimesXi[i]] : 0.0;
        const double sy = i >= 3 ? stat_c[detail::kTimesEta[i]] : 0.0;
        n_re += (dyn_c_re[i] + s0) * ca;
        n_im += dyn_c_im[i] * ca;
        x_re += (dyn_c_re[detail::kTimesXi[i]] + sx) * ca;
        x_im += dyn_c_im[detail::kTimesXi[i]] * ca;
        y_re += (dyn_c_re[detail::kTimesEta[i]] + sy) * ca;
        y_im += dyn_c_im[detail::kTimesEta[i]] * ca;
      }
      const Vec3 re = sp.h * src.n.cross(n_re) - e1.cross(x_re) - e2.cross(y_re);
      const Vec3 im = sp.h * src.n.cross(n_im) - e1.cross(x_im) - e2.cross(y_im);
      out.curl.col(c) += CVec3(re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>());
    }
  }
  return out;
}

enum class SingularKernel { weak_one_over_r, grad_g_pv };

inline int shared_vertex_count(const Triangle3& a, const Triangle3& b) {
  const double tol = 1e-10 * std::max(a.diameter(), b.diameter());
  int count = 0;
  for (const Vec3& p : a.v) {
    for (const Vec3& q : b.v) {
      if ((p - q).norm() < tol) ++count;
    }
  }
  return count;
}

/// Outer-weighted singular pair integral for coincident or touching triangles:
///   weak_one_over_r: sum_i w_i A_obs <test(r_i), int g(r_i, r') f(r') dA'>
///   grad_g_pv:       sum_i w_i A_obs <test(r_i), int grad g(r_i, r') x f(r') dA'>
/// where <,> contracts all components (for grad_g_pv only rows 0..2 of the
/// density and of test(r) enter, holding vector fields).
template <class Test, class Density>
Complex integrate_self_singular(SingularKernel kernel, const Triangle3& obs, const Triangle3& src,
                                const QuadratureRule& obs_rule, double k, const Test& test, const Density& density,
                                const SingularRule& rule = {}) {
  if (shared_vertex_count(obs, src) == 0) {
    throw DomainError("integrate_self_singular: triangles do not touch; use the smooth or near-field route");
  }
  std::vector<SourcePoint> scratch;
  Complex sum = 0.0;
  for (std::size_t i = 0; i < obs_rule.size(); ++i) {
    const Vec3 r = obs.point(obs_rule.points[i]);
    const auto inner = singular_inner(src, r, k, rule, density, scratch, kernel == SingularKernel::grad_g_pv);
    const auto t = test(r);
    if (kernel == SingularKernel::weak_one_over_r) {
      sum += obs_rule.weights[i] * (t.template cast<Complex>().array() * inner.weak.array()).sum();
    } else {
      sum += obs_rule.weights[i] * (t.template topRows<3>().template cast<Complex>().array() * inner.curl.array()).sum();
    }
  }
  return sum * obs.area;
}

}  // namespace mfie
