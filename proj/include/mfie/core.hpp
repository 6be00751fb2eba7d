#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mfie {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Complex = std::complex<double>;
using CVec3 = Eigen::Vector3cd;

/// Dense complex operator block (rows = testing functions, columns = expansion functions).
using ComplexDenseMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Plain (bilinear) cross product of complex vectors. Eigen's cross()
/// conjugates the result for complex scalars, which is not what field
/// algebra needs.
template <class A, class B>
CVec3 ccross(const A& a, const B& b) {
  const CVec3 x = a.template cast<std::complex<double>>();
  const CVec3 y = b.template cast<std::complex<double>>();
  return CVec3(x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]);
}

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kJ{0.0, 1.0};

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kMu0 = 1.25663706212e-6;
inline constexpr double kEps0 = 1.0 / (kMu0 * kSpeedOfLight * kSpeedOfLight);
/// Free-space wave impedance sqrt(mu0 / eps0).
inline constexpr double kEta0 = kMu0 * kSpeedOfLight;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed mesh or config file.
struct ParseError : Error {
  using Error::Error;
};

/// Open surface, non-manifold edge or inconsistent orientation.
struct TopologyError : Error {
  using Error::Error;
};

struct DegenerateTriangleError : Error {
  using Error::Error;
};

/// Argument outside the domain of an operation (wrong support, bad degree, ...).
struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct SingularMatrixError : Error {
  using Error::Error;
};

}  // namespace mfie
