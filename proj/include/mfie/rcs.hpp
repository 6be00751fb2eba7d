#pragma once

#include "mfie/core.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

namespace mfie {

/// Equiangular sampling of the full sphere: theta at cell midpoints, phi from
/// zero, with solid-angle weights sin(theta) dtheta dphi (sum close to 4 pi).
struct AngularGrid {
  double step_deg = 5.0;
  std::vector<double> theta;  // radians, one per sample
  std::vector<double> phi;
  std::vector<double> weight;

  std::size_t size() const { return theta.size(); }
  Vec3 direction(std::size_t i) const {
    return {std::sin(theta[i]) * std::cos(phi[i]), std::sin(theta[i]) * std::sin(phi[i]), std::cos(theta[i])};
  }
  bool same_as(const AngularGrid& o) const { return theta == o.theta && phi == o.phi; }
  void validate() const {
    if (theta.empty() || theta.size() != phi.size() || theta.size() != weight.size()) {
      throw DomainError("angular grid: inconsistent or empty sampling");
    }
  }
};

inline AngularGrid make_angular_grid(double step_deg = 5.0) {
  if (!(step_deg > 0.0) || step_deg > 90.0) throw DomainError("angular step must be in (0, 90] degrees");
  const int nt = static_cast<int>(std::lround(180.0 / step_deg));
  const int np = static_cast<int>(std::lround(360.0 / step_deg));
  if (std::abs(nt * step_deg - 180.0) > 1e-9) throw DomainError("angular step must divide 180 degrees");
  AngularGrid g;
  g.step_deg = step_deg;
  const double d = step_deg * kPi / 180.0;
  for (int i = 0; i < nt; ++i) {
    const double th = (i + 0.5) * d;
    for (int j = 0; j < np; ++j) {
      g.theta.push_back(th);
      g.phi.push_back(j * d);
      // exact integral of sin over the theta cell
      g.weight.push_back((std::cos(i * d) - std::cos((i + 1) * d)) * d);
    }
  }
  return g;
}

struct RcsCurve {
  AngularGrid grid;
  std::vector<double> sigma;  // m^2
  std::string polarization = "total";

  double dbsm(std::size_t i) const { return sigma[i] > 0.0 ? 10.0 * std::log10(sigma[i]) : -400.0; }
};

/// sqrt(sum w |s - s_ref|^2) / sqrt(sum w |s_ref|^2) over the sphere.
inline double averaged_rcs_error(const RcsCurve& candidate, const RcsCurve& reference) {
  if (!candidate.grid.same_as(reference.grid) || candidate.sigma.size() != reference.sigma.size()) {
    throw DomainError("averaged rcs error: curves are sampled on different grids");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.sigma.size(); ++i) {
    const double w = reference.grid.weight[i];
    num += w * std::pow(candidate.sigma[i] - reference.sigma[i], 2);
    den += w * std::pow(reference.sigma[i], 2);
  }
  if (!(den > 0.0)) throw DomainError("averaged rcs error: reference curve is identically zero");
  return std::sqrt(num / den);
}

/// Total scattering cross section (1 / 4 pi) int sigma dOmega.
inline double total_cross_section(const RcsCurve& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.sigma.size(); ++i) s += c.grid.weight[i] * c.sigma[i];
  return s / (4.0 * kPi);
}

/// theta_deg, phi_deg, sigma_dbsm.
inline void write_rcs_csv(std::ostream& out, const RcsCurve& c) {
  out << "theta_deg,phi_deg,sigma_dbsm\n";
  out << std::setprecision(10);
  for (std::size_t i = 0; i < c.sigma.size(); ++i) {
    out << c.grid.theta[i] * 180.0 / kPi << ',' << c.grid.phi[i] * 180.0 / kPi << ',' << c.dbsm(i) << '\n';
  }
}

}  // namespace mfie
