#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kiv {

// Failure of a factorization or a residual check; distinct from argument
// validation errors so callers can map it to a numeric-failure exit path.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense symmetric matrix. Construction rejects asymmetry above
// 1e-12 * max|entry| and stores the symmetrized (M + M^T)/2.
class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd m) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw std::invalid_argument("SymMatrix: square nonempty matrix required");
    if (!m.allFinite())
      throw std::invalid_argument("SymMatrix: non-finite entries");
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
      throw std::invalid_argument("SymMatrix: input is not symmetric");
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    mat_ = std::move(sym);
  }

  const Eigen::MatrixXd& mat() const { return mat_; }
  Eigen::Index order() const { return mat_.rows(); }

 private:
  Eigen::MatrixXd mat_;
};

// (M + rho I)^{-1} RHS through a Cholesky factorization. If the
// factorization fails, the shift is re-tried with escalating jitter
// (base 1e-12 * trace/n, three escalations) before giving up. The returned
// solution satisfies ||(M + rho I) S - RHS||_F <= 1e-8 ||RHS||_F.
inline Eigen::MatrixXd ridge_solve(const SymMatrix& m, double rho,
                                   const Eigen::MatrixXd& rhs) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw std::invalid_argument("ridge_solve: rho must be positive and finite");
  const Eigen::Index n = m.order();
  if (rhs.rows() != n)
    throw std::invalid_argument("ridge_solve: RHS not conformable");

  const Eigen::MatrixXd& a = m.mat();
  double jitter = 1e-12 * a.trace() / static_cast<double>(n);
  if (!(jitter > 0.0)) jitter = 1e-12 * rho;
  const double rhs_norm = rhs.norm();

  Eigen::MatrixXd system = a;
  system.diagonal().array() += rho;

  for (int attempt = 0; attempt <= 3; ++attempt) {
    const double shift =
        rho + (attempt == 0 ? 0.0 : jitter * std::pow(10.0, attempt - 1));
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd sol = llt.solve(rhs);
    // up to two steps of iterative refinement against the unshifted system
    for (int refine = 0; refine <= 2; ++refine) {
      const Eigen::MatrixXd residual = system * sol - rhs;
      if (residual.norm() <= 1e-8 * rhs_norm) return sol;
      sol -= llt.solve(residual);
    }
  }
  throw NumericError("ridge_solve: factorization failed; input numerically indefinite");
}

// Eigenvalues of a symmetric matrix in descending order.
inline Eigen::VectorXd sym_eigvals(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.mat(),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericError("sym_eigvals: eigendecomposition failed");
  return solver.eigenvalues().reverse();
}

// Symmetric square root with negative eigenvalues clamped to zero.
inline Eigen::MatrixXd sym_sqrt(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.mat());
  if (solver.info() != Eigen::Success)
    throw NumericError("sym_sqrt: eigendecomposition failed");
  const Eigen::VectorXd evals = solver.eigenvalues();
  const double top = std::max(evals.maxCoeff(), 0.0);
  if (evals.minCoeff() < -1e-10 * std::max(top, 1e-300))
    throw std::invalid_argument("sym_sqrt: matrix is not positive semidefinite");
  const Eigen::VectorXd roots = evals.cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() *
         solver.eigenvectors().transpose();
}

// Spectrum of the product K G for PSD K and G, computed symmetrically as the
// eigenvalues of K^{1/2} G K^{1/2}. Descending, with eigenvalue noise below
// -1e-10 * max treated as an error and small negatives clamped to zero.
inline Eigen::VectorXd product_spectrum(const SymMatrix& k, const SymMatrix& g) {
  if (k.order() != g.order())
    throw std::invalid_argument("product_spectrum: order mismatch");
  const Eigen::MatrixXd half = sym_sqrt(k);
  Eigen::MatrixXd inner = half * g.mat() * half;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::VectorXd eigs = sym_eigvals(SymMatrix(std::move(inner)));
  const double top = std::max(eigs.maxCoeff(), 0.0);
  if (eigs.minCoeff() < -1e-10 * std::max(top, 1e-300))
    throw std::invalid_argument("product_spectrum: indefinite input");
  return eigs.cwiseMax(0.0);
}

// Explicit inverse via LU with partial pivoting, verified by the residual
// ||M M^{-1} - I||_F <= tol * sqrt(n).
inline Eigen::MatrixXd lu_inverse(const Eigen::MatrixXd& m, double tol = 1e-8) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument("lu_inverse: square nonempty matrix required");
  if (!m.allFinite())
    throw std::invalid_argument("lu_inverse: non-finite entries");
  const Eigen::Index n = m.rows();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  Eigen::MatrixXd inv = lu.inverse();
  if (!inv.allFinite())
    throw NumericError("lu_inverse: singular matrix");
  const double resid =
      (m * inv - Eigen::MatrixXd::Identity(n, n)).norm();
  if (resid > tol * std::sqrt(static_cast<double>(n)))
    throw NumericError("lu_inverse: residual check failed");
  return inv;
}

}  // namespace kiv
