#pragma once

// Mie series for plane-wave scattering by a PEC sphere centred at the origin.
// No mesh, basis or quadrature code is used here.

#include "mfie/core.hpp"
#include "mfie/rcs.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace mfie {

struct MieSolution {
  double ka = 0.0;
  int order = 0;               // truncation L
  std::vector<Complex> a, b;   // index n = 1..L, entry 0 unused
};

/// Default truncation L = max(ka + 4 ka^(1/3) + 2, ka + 10).
inline int mie_default_order(double ka) {
  return static_cast<int>(std::ceil(std::max(ka + 4.0 * std::cbrt(ka) + 2.0, ka + 10.0)));
}

namespace detail {
/// j_n(x), n = 0..L, by downward recurrence normalised with whichever of
/// j_0, j_1 is larger in magnitude.
inline std::vector<double> spherical_j(int L, double x) {
  const int start = L + 16 + static_cast<int>(std::sqrt(40.0 * (L + 1)));
  std::vector<double> j(static_cast<std::size_t>(start + 2), 0.0);
  j[start + 1] = 0.0;
  j[start] = 1e-300;
  for (int n = start; n >= 1; --n) {
    j[n - 1] = (2.0 * n + 1.0) / x * j[n] - j[n + 1];
    if (std::abs(j[n - 1]) > 1e250) {
      for (int m = n - 1; m <= start; ++m) j[m] *= 1e-250;
    }
  }
  const double j0 = std::sin(x) / x, j1 = std::sin(x) / (x * x) - std::cos(x) / x;
  const double scale = std::abs(j0) >= std::abs(j1) ? j0 / j[0] : j1 / j[1];
  j.resize(static_cast<std::size_t>(L + 1));
  for (double& v : j) v *= scale;
  return j;
}

/// y_n(x), n = 0..L, by upward recurrence (stable for the growing solution).
inline std::vector<double> spherical_y(int L, double x) {
  std::vector<double> y(static_cast<std::size_t>(L + 1));
  y[0] = -std::cos(x) / x;
  if (L >= 1) y[1] = -std::cos(x) / (x * x) - std::sin(x) / x;
  for (int n = 1; n < L; ++n) y[n + 1] = (2.0 * n + 1.0) / x * y[n] - y[n - 1];
  return y;
}
}  // namespace detail

/// a_n = psi_n'(x) / xi_n'(x), b_n = psi_n(x) / xi_n(x) with psi_n = x j_n,
/// xi_n = x h_n^(1) (the conventional exp(-iwt) form; outputs are conjugated
/// to exp(+jwt) where a phase matters).
inline MieSolution mie_pec_coefficients(double ka, int L = 0) {
  if (!(ka > 0.0)) throw DomainError("mie: ka must be positive");
  if (L <= 0) L = mie_default_order(ka);
  const std::vector<double> j = detail::spherical_j(L, ka), y = detail::spherical_y(L, ka);
  MieSolution s;
  s.ka = ka;
  s.order = L;
  s.a.assign(static_cast<std::size_t>(L + 1), 0.0);
  s.b.assign(static_cast<std::size_t>(L + 1), 0.0);
  for (int n = 1; n <= L; ++n) {
    const Complex h(j[n], y[n]), hm(j[n - 1], y[n - 1]);
    const double psi = ka * j[n], dpsi = ka * j[n - 1] - n * j[n];
    const Complex xi = ka * h, dxi = ka * hm - static_cast<double>(n) * h;
    s.a[n] = dpsi / dxi;
    s.b[n] = psi / xi;
  }
  return s;
}

/// Scattering amplitudes S1, S2 at scattering angle theta.
inline std::pair<Complex, Complex> mie_amplitudes(const MieSolution& s, double theta) {
  const double mu = std::cos(theta);
  double pi0 = 0.0, pi1 = 1.0;
  Complex S1 = 0.0, S2 = 0.0;
  for (int n = 1; n <= s.order; ++n) {
    const double tau = n * mu * pi1 - (n + 1) * pi0;
    const double f = (2.0 * n + 1.0) / (n * (n + 1.0));
    S1 += f * (s.a[n] * pi1 + s.b[n] * tau);
    S2 += f * (s.a[n] * tau + s.b[n] * pi1);
    const double next = ((2.0 * n + 1.0) * mu * pi1 - (n + 1.0) * pi0) / n;
    pi0 = pi1;
    pi1 = next;
  }
  return {S1, S2};
}

/// Far-field amplitude E_far (E ~ E_far exp(-jkr) / r, time convention
/// exp(+jwt)) for incidence along khat with polarization e and amplitude E0.
inline CVec3 mie_far_field(const MieSolution& s, double k, const Vec3& khat, const CVec3& e, Complex E0,
                           const Vec3& direction) {
  // frame with z' = khat, x' any real unit vector normal to it
  const Vec3 z = khat.normalized();
  const Vec3 x = (std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).cross(z).normalized().cross(z) * -1.0;
  const Vec3 y = z.cross(x);
  const Vec3 d = direction.normalized();
  const double ct = std::clamp(d.dot(z), -1.0, 1.0);
  const double theta = std::acos(ct);
  // on the axis take the phi = 0 plane
  const bool axis = std::sin(theta) <= 1e-14;
  const double phi = axis ? 0.0 : std::atan2(d.dot(y), d.dot(x));
  const auto [S1, S2] = mie_amplitudes(s, theta);
  const Vec3 th = std::cos(theta) * (std::cos(phi) * x + std::sin(phi) * y) - std::sin(theta) * z;
  const Vec3 ph = -std::sin(phi) * x + std::cos(phi) * y;
  // patterns for x' and y' polarizations in the exp(-iwt) convention
  const CVec3 Fx = (std::cos(phi) * S2) * th.cast<Complex>() - (std::sin(phi) * S1) * ph.cast<Complex>();
  const CVec3 Fy = (std::sin(phi) * S2) * th.cast<Complex>() + (std::cos(phi) * S1) * ph.cast<Complex>();
  const Complex ax = e.dot(x.cast<Complex>()), ay = e.dot(y.cast<Complex>());  // e.dot conjugates e
  // exp(-iwt) field (i / k) F conj(E0); conjugate to exp(+jwt)
  const CVec3 bh = Complex(0.0, 1.0 / k) * std::conj(E0) * (ax * Fx + ay * Fy);
  return bh.conjugate();
}

/// sigma = 4 pi |E_far|^2 / |E0|^2 in direction d.
inline double mie_rcs(const MieSolution& s, double k, const Vec3& khat, const CVec3& e, const Vec3& direction) {
  return 4.0 * kPi * mie_far_field(s, k, khat, e, 1.0, direction).squaredNorm();
}

/// (2 pi / k^2) sum (2n+1)(|a_n|^2 + |b_n|^2).
inline double mie_scattering_cross_section(const MieSolution& s, double k) {
  double sum = 0.0;
  for (int n = 1; n <= s.order; ++n) sum += (2.0 * n + 1.0) * (std::norm(s.a[n]) + std::norm(s.b[n]));
  return 2.0 * kPi / (k * k) * sum;
}

/// Bistatic RCS on the grid for incidence khat, polarization e.
inline RcsCurve mie_bistatic_rcs(const MieSolution& s, double k, const AngularGrid& grid, const Vec3& khat,
                                 const CVec3& e) {
  grid.validate();
  if (std::abs(khat.norm() - 1.0) > 1e-12 || std::abs(e.norm() - 1.0) > 1e-12) {
    throw DomainError("mie: incidence direction and polarization must be unit vectors");
  }
  RcsCurve c;
  c.grid = grid;
  c.sigma.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) c.sigma[i] = mie_rcs(s, k, khat, e, grid.direction(i));
  return c;
}

}  // namespace mfie
