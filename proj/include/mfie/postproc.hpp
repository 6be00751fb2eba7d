#pragma once

#include "mfie/basis.hpp"
#include "mfie/operators.hpp"
#include "mfie/quadrature.hpp"
#include "mfie/rcs.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mfie {

/// Current density j = sum_n beta_n i_n at point r of triangle t.
inline CVec3 current_at(const BasisSet& set, const ComplexVector& coeffs, int t, const Vec3& r, const Bary& b) {
  const LocalBasis& lb = set.local(t);
  const LocalBasis::Values v = lb.values(r, b);
  CVec3 j = CVec3::Zero();
  for (int a = 0; a < lb.count; ++a) j += coeffs[lb.global[a]] * v.block<3, 1>(0, a).cast<Complex>();
  return j;
}

/// Weighted current samples w_q j(r_q) of a solution, for radiation integrals.
struct CurrentSamples {
  std::vector<Vec3> r;
  std::vector<CVec3> wj;

  CurrentSamples(const ComplexVector& coeffs, const BasisSet& set, int degree = 8) {
    if (coeffs.size() != set.size()) throw DomainError("coefficient vector does not match basis");
    const QuadratureRule rule = gauss_triangle_rule(degree);
    for (std::size_t t = 0; t < set.mesh().num_triangles(); ++t) {
      const LocalBasis& lb = set.local(static_cast<int>(t));
      for (std::size_t q = 0; q < rule.size(); ++q) {
        r.push_back(lb.tri.point(rule.points[q]));
        wj.push_back(rule.weights[q] * lb.tri.area * current_at(set, coeffs, static_cast<int>(t), r.back(), rule.points[q]));
      }
    }
  }

  /// E_far with E(r) ~ E_far exp(-jkr) / r:
  /// E_far = (jk eta / 4 pi) rhat x rhat x int j exp(+jk rhat . r') dA'.
  CVec3 far_field(double k, const Vec3& direction, double eta = kEta0) const {
    if (std::abs(direction.norm() - 1.0) > 1e-12) throw DomainError("far field: direction must be a unit vector");
    CVec3 N = CVec3::Zero();
    for (std::size_t q = 0; q < r.size(); ++q) N += std::exp(Complex(0.0, k * direction.dot(r[q]))) * wj[q];
    const CVec3 d = direction.cast<Complex>();
    return Complex(0.0, k * eta / (4.0 * kPi)) * ccross(d, ccross(d, N));
  }
};

inline CVec3 far_field(const ComplexVector& coeffs, const BasisSet& set, double k, const Vec3& direction,
                       double eta = kEta0, int degree = 8) {
  return CurrentSamples(coeffs, set, degree).far_field(k, direction, eta);
}

/// sigma = 4 pi |E_far|^2 / |E0|^2 over the grid.
inline RcsCurve bistatic_rcs(const ComplexVector& coeffs, const BasisSet& set, double k, const PlaneWave& pw,
                             const AngularGrid& grid) {
  pw.validate();
  if (std::abs(pw.amplitude) == 0.0) throw DomainError("bistatic rcs: incident amplitude is zero");
  const CurrentSamples samples(coeffs, set);
  RcsCurve c;
  c.grid = grid;
  c.sigma.resize(grid.size());
  const double e0 = std::norm(pw.amplitude);
  const int n = static_cast<int>(grid.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    c.sigma[i] = 4.0 * kPi * samples.far_field(k, grid.direction(i), pw.eta).squaredNorm() / e0;
  }
  return c;
}

namespace detail {
/// Solid angle of triangle (a, b, c) seen from the origin (signed).
inline double solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = a.norm(), lb = b.norm(), lc = c.norm();
  const double num = a.dot(b.cross(c));
  const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
  return 2.0 * std::atan2(num, den);
}

/// int grad g x j over triangle t at p, by Gauss rules on a subdivision graded towards p.
template <class Current>
void scattered_h(const Triangle3& tri, const Vec3& p, double k, const QuadratureRule& rule, int depth,
                 const Current& current, CVec3& acc) {
  if (depth > 0 && point_triangle_distance(tri, p) < 2.0 * tri.diameter()) {
    const Vec3 ab = 0.5 * (tri.v[0] + tri.v[1]), bc = 0.5 * (tri.v[1] + tri.v[2]), ca = 0.5 * (tri.v[2] + tri.v[0]);
    for (const Triangle3& s : {Triangle3(tri.v[0], ab, ca), Triangle3(ab, tri.v[1], bc), Triangle3(ca, bc, tri.v[2]),
                               Triangle3(ab, bc, ca)}) {
      scattered_h(s, p, k, rule, depth - 1, current, acc);
    }
    return;
  }
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec3 r = tri.point(rule.points[q]);
    const Vec3 d = p - r;
    const double R = d.norm();
    const Complex g1 = -Complex(1.0, k * R) * std::exp(Complex(0.0, -k * R)) / (4.0 * kPi * R * R * R);
    acc += (rule.weights[q] * tri.area * g1) * ccross(d, current(r));
  }
}
}  // namespace detail

/// Scattered magnetic field H_s(p) = int grad_p g x j dA' of the solved currents.
inline CVec3 scattered_magnetic_field(const ComplexVector& coeffs, const BasisSet& set, double k, const Vec3& p) {
  const QuadratureRule rule = gauss_triangle_rule(8);
  CVec3 acc = CVec3::Zero();
  for (std::size_t t = 0; t < set.mesh().num_triangles(); ++t) {
    const int ti = static_cast<int>(t);
    const LocalBasis& lb = set.local(ti);
    auto current = [&](const Vec3& r) { return current_at(set, coeffs, ti, r, lb.tri.barycentric(r)); };
    detail::scattered_h(lb.tri, p, k, rule, 6, current, acc);
  }
  return acc;
}

/// max over probes of |H_s(p) + h_inc(p)| / |h_inc(p)|. Love currents null the
/// total field inside, so small values certify the solution chain.
inline double interior_field_check(const ComplexVector& coeffs, const BasisSet& set, double k, const PlaneWave& pw,
                                   const std::vector<Vec3>& probes) {
  pw.validate();
  const TriangleMesh& m = set.mesh();
  double worst = 0.0;
  for (const Vec3& p : probes) {
    double omega = 0.0, dist = std::numeric_limits<double>::infinity(), local = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const int ti = static_cast<int>(t);
      omega += detail::solid_angle(m.vertex(ti, 0) - p, m.vertex(ti, 1) - p, m.vertex(ti, 2) - p);
      const double d = point_triangle_distance(set.local(ti).tri, p);
      if (d < dist) {
        dist = d;
        local = m.diameter(ti);
      }
    }
    if (std::abs(omega / (4.0 * kPi) - 1.0) > 1e-6) throw DomainError("interior field check: probe is outside the body");
    if (dist <= 0.1 * local) throw DomainError("interior field check: probe is too close to the surface");
    const CVec3 hi = pw.h_field(p);
    const double hn = hi.norm();
    if (!(hn > 0.0)) throw DomainError("interior field check: incident field vanishes at the probe");
    worst = std::max(worst, (scattered_magnetic_field(coeffs, set, k, p) + hi).norm() / hn);
  }
  return worst;
}

}  // namespace mfie
