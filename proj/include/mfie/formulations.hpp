#pragma once

#include "mfie/core.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace mfie {

enum class Formulation { efie, mfie, wf_mfie };

/// Where the weak-form identity replaces the classical one: the whole
/// identity (lo) or only its RWG-RWG block (full_first).
enum class WfMode { lo, full_first };

inline std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::efie: return "efie";
    case Formulation::mfie: return "mfie";
    case Formulation::wf_mfie: return "wf-mfie";
  }
  return "?";
}

inline Formulation parse_formulation(const std::string& s) {
  if (s == "efie") return Formulation::efie;
  if (s == "mfie") return Formulation::mfie;
  if (s == "wf-mfie") return Formulation::wf_mfie;
  throw DomainError("unknown formulation '" + s + "' (expected efie, mfie or wf-mfie)");
}

struct SolveReport {
  ComplexVector coefficients;
  Formulation formulation = Formulation::mfie;
  double weight = 0.0;  // weak-form share of the identity, zero unless wf-mfie
  double condition = 0.0;
  double residual = 0.0;  // |Z i - b| / |b|
  double assembly_s = 0.0;
  double solve_s = 0.0;
  std::string warning;
};

namespace detail {
inline void require_square(const ComplexDenseMatrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DomainError(std::string(what) + " must be square");
}

inline void require_same(const ComplexDenseMatrix& a, const ComplexDenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError(std::string("dimension mismatch: ") + what);
}

/// -A G^-1 A for real G (SPD) and A, computed by Cholesky.
inline Eigen::MatrixXd weak_identity(const Eigen::MatrixXd& G, const Eigen::MatrixXd& A) {
  const Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("Gram matrix is not positive definite");
  return -A * llt.solve(A);
}
}  // namespace detail

/// Z = 1/2 G_bb + K.
inline ComplexDenseMatrix mfie_classical_matrix(const ComplexDenseMatrix& G_bb, const ComplexDenseMatrix& K) {
  detail::require_square(K, "K");
  detail::require_same(G_bb, K, "G_bb vs K");
  return 0.5 * G_bb + K;
}

/// Z = (1-w) 1/2 G_bb + w 1/2 (-G_ab G_bb^-1 G_ab) + K, with the replacement
/// restricted to the leading N/2 x N/2 (RWG) block in full_first mode. w = 0.5
/// gives 1/4 G - 1/4 G_ab G^-1 G_ab + K.
inline ComplexDenseMatrix mfie_wf_matrix(const ComplexDenseMatrix& G_bb, const ComplexDenseMatrix& G_ab,
                                         const ComplexDenseMatrix& K, double w, WfMode mode) {
  if (!(w >= 0.0 && w <= 1.0)) throw DomainError("wf weight must be in [0, 1], got " + std::to_string(w));
  detail::require_square(K, "K");
  detail::require_same(G_bb, K, "G_bb vs K");
  detail::require_same(G_ab, K, "G_ab vs K");
  const Eigen::Index N = K.rows();
  if (mode == WfMode::full_first && N % 2 != 0) throw DomainError("full_first system must have even size");
  const Eigen::Index n = mode == WfMode::lo ? N : N / 2;
  ComplexDenseMatrix Z = mfie_classical_matrix(G_bb, K);
  if (w == 0.0) return Z;
  const Eigen::MatrixXd W = detail::weak_identity(G_bb.topLeftCorner(n, n).real(), G_ab.topLeftCorner(n, n).real());
  Z.topLeftCorner(n, n) += (0.5 * w) * (W - G_bb.topLeftCorner(n, n).real()).cast<Complex>();
  return Z;
}

/// 1-norm condition number from the LU factors (Higham-Hager estimate);
/// +infinity for a singular matrix.
inline double condition_estimate(const ComplexDenseMatrix& Z) {
  detail::require_square(Z, "condition estimate input");
  if (Z.size() == 0) return 1.0;
  const Eigen::PartialPivLU<ComplexDenseMatrix> lu(Z);
  const double rc = lu.rcond();
  if (!(rc > 0.0) || !std::isfinite(rc)) return std::numeric_limits<double>::infinity();
  // the estimate is a lower bound; it is exact for diagonal and small matrices
  return 1.0 / rc;
}

/// Dense LU solve of Z i = b with report; cond is estimated from the same factors.
inline SolveReport solve_dense(const ComplexDenseMatrix& Z, const ComplexVector& b, Formulation f, double w = 0.0) {
  detail::require_square(Z, "system matrix");
  if (b.size() != Z.rows()) throw DomainError("dimension mismatch: right-hand side");
  SolveReport rep;
  rep.formulation = f;
  rep.weight = w;
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::PartialPivLU<ComplexDenseMatrix> lu(Z);
  const double rc = lu.rcond();
  if (!(rc > std::numeric_limits<double>::epsilon()) || !std::isfinite(rc)) {
    throw SingularMatrixError(to_string(f) + " system matrix is singular to working precision");
  }
  rep.coefficients = lu.solve(b);
  rep.solve_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.condition = 1.0 / rc;
  const double bn = b.norm();
  rep.residual = bn > 0.0 ? (Z * rep.coefficients - b).norm() / bn : (Z * rep.coefficients).norm();
  if (rep.condition > 1e12) rep.warning = "ill-conditioned system (possible interior resonance)";
  return rep;
}

inline SolveReport solve_mfie_classical(const ComplexDenseMatrix& G_bb, const ComplexDenseMatrix& K,
                                        const ComplexVector& rhs) {
  return solve_dense(mfie_classical_matrix(G_bb, K), rhs, Formulation::mfie);
}

inline SolveReport solve_mfie_wf(const ComplexDenseMatrix& G_bb, const ComplexDenseMatrix& G_ab,
                                 const ComplexDenseMatrix& K, const ComplexVector& rhs, double w, WfMode mode) {
  return solve_dense(mfie_wf_matrix(G_bb, G_ab, K, w, mode), rhs, Formulation::wf_mfie, w);
}

inline SolveReport solve_efie(const ComplexDenseMatrix& T, const ComplexVector& rhs) {
  return solve_dense(T, rhs, Formulation::efie);
}

}  // namespace mfie
