#pragma once

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "kiv/kernels.hpp"
#include "kiv/linalg.hpp"

namespace kiv {

// n observations of (instrument, covariate, outcome).
struct Dataset {
  PointSet Z;
  PointSet X;
  Eigen::VectorXd y;

  Dataset(PointSet z, PointSet x, Eigen::VectorXd outcomes)
      : Z(std::move(z)), X(std::move(x)), y(std::move(outcomes)) {
    if (Z.size() != X.size() || X.size() != y.size())
      throw std::invalid_argument("Dataset: Z, X, Y must have equal length");
    if (y.size() < 2)
      throw std::invalid_argument("Dataset: need at least two observations");
    if (!y.allFinite())
      throw std::invalid_argument("Dataset: outcomes must be finite");
  }

  Eigen::Index n() const { return y.size(); }
};

// Regularization pair (lambda for the second stage, mu for the first).
// mu <= lambda <= 1 is the theory regime; it is recorded, not enforced.
struct RegPair {
  double lambda;
  double mu;

  RegPair(double lam, double m) : lambda(lam), mu(m) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("RegPair: lambda must be positive and finite");
    if (!(mu > 0.0) || !std::isfinite(mu))
      throw std::invalid_argument("RegPair: mu must be positive and finite");
  }

  bool within_policy() const { return mu <= lambda && lambda <= 1.0; }

  // Exponent iota implied by lambda = mu^iota; NaN when undefined.
  double implied_iota() const {
    const double lm = std::log(mu);
    if (lm == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::log(lambda) / lm;
  }
};

// Everything produced by a single run of the closed-form estimator and
// reused verbatim by the bootstrap:
//   K     = K_ZZ (K_ZZ + n mu I)^{-1}
//   A     = (K K_XX + n lambda I)^{-1}
//   alpha = A K y,        resid = y - K_XX alpha.
struct FitState {
  Dataset data;
  KernelSpec kx;
  KernelSpec kz;
  RegPair reg;
  Eigen::MatrixXd Kxx;
  Eigen::MatrixXd Kzz;
  Eigen::MatrixXd K;
  Eigen::MatrixXd A;
  Eigen::VectorXd alpha;
  Eigen::VectorXd resid;

  Eigen::Index n() const { return data.n(); }
};

inline FitState fit_kiv(Dataset data, const KernelSpec& kx, const KernelSpec& kz,
                        const RegPair& reg) {
  kx.validate();
  kz.validate();
  if (!reg.within_policy())
    std::cerr << "fit_kiv: warning: regularization outside the mu <= lambda <= 1 regime\n";
  const Eigen::Index n = data.n();
  const double dn = static_cast<double>(n);

  Eigen::MatrixXd kxx = gram_matrix(kx, data.X);
  Eigen::MatrixXd kzz = gram_matrix(kz, data.Z);

  // First-stage projector; symmetrized since (K_ZZ + n mu I)^{-1} K_ZZ is
  // symmetric analytically but not bit-exactly.
  Eigen::MatrixXd k = ridge_solve(SymMatrix(kzz), dn * reg.mu, kzz);
  k = (0.5 * (k + k.transpose())).eval();

  Eigen::MatrixXd system = k * kxx;
  system.diagonal().array() += dn * reg.lambda;
  Eigen::MatrixXd a = lu_inverse(system);

  Eigen::VectorXd alpha = a * (k * data.y);
  Eigen::VectorXd resid = data.y - kxx * alpha;

  return FitState{std::move(data), kx,           kz,
                  reg,             std::move(kxx), std::move(kzz),
                  std::move(k),    std::move(a),   std::move(alpha),
                  std::move(resid)};
}

inline Eigen::VectorXd predict(const FitState& fit, const PointSet& points) {
  return gram_matrix(fit.kx, points, fit.data.X) * fit.alpha;
}

inline double predict(const FitState& fit, const Eigen::VectorXd& x_star) {
  if (fit.data.X.is_ranking())
    throw std::invalid_argument("predict: fit expects ranking inputs");
  return predict(fit, PointSet::euclidean(x_star.transpose()))(0);
}

inline double predict(const FitState& fit, const Ranking& x_star) {
  if (!fit.data.X.is_ranking())
    throw std::invalid_argument("predict: fit expects euclidean inputs");
  return predict(fit, PointSet::rankings({x_star}))(0);
}

// Kernel ridge regression duals (K_XX + n lambda I)^{-1} y; the mu -> 0,
// X = Z limit of the instrumental estimator.
inline Eigen::VectorXd fit_krr(const PointSet& x, const Eigen::VectorXd& y,
                               const KernelSpec& kx, double lambda) {
  if (x.size() != y.size())
    throw std::invalid_argument("fit_krr: length mismatch");
  if (y.size() < 2)
    throw std::invalid_argument("fit_krr: need at least two observations");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("fit_krr: lambda must be positive");
  const double dn = static_cast<double>(y.size());
  return ridge_solve(SymMatrix(gram_matrix(kx, x)), dn * lambda, y);
}

// Regularized two-stage least squares in primal form:
//   gamma = [X'Z (Z'Z + n mu I)^{-1} Z'X + n lambda I]^{-1}
//           X'Z (Z'Z + n mu I)^{-1} Z'y.
inline Eigen::VectorXd regularized_2sls(const Eigen::MatrixXd& z,
                                        const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& y, double lambda,
                                        double mu) {
  const Eigen::Index n = z.rows();
  if (x.rows() != n || y.size() != n)
    throw std::invalid_argument("regularized_2sls: row mismatch");
  if (n < 2 || z.cols() < 1 || x.cols() < 1)
    throw std::invalid_argument("regularized_2sls: need n >= 2 and p, q >= 1");
  RegPair reg(lambda, mu);
  const double dn = static_cast<double>(n);
  const Eigen::Index p = x.cols();

  Eigen::MatrixXd rhs(z.cols(), p + 1);
  rhs.leftCols(p) = z.transpose() * x;
  rhs.col(p) = z.transpose() * y;
  const Eigen::MatrixXd solved = ridge_solve(SymMatrix(z.transpose() * z), dn * reg.mu, rhs);

  const Eigen::MatrixXd xtz = x.transpose() * z;
  Eigen::MatrixXd gram = xtz * solved.leftCols(p);
  gram = (0.5 * (gram + gram.transpose())).eval();
  const Eigen::VectorXd target = xtz * solved.col(p);
  return ridge_solve(SymMatrix(std::move(gram)), dn * reg.lambda, target);
}

// Structural coefficient vector X' alpha implied by a linear-kernel fit.
inline Eigen::VectorXd linear_coef(const FitState& fit) {
  if (fit.kx.family != KernelFamily::linear || fit.data.X.is_ranking())
    throw std::invalid_argument("linear_coef: requires a linear kernel on euclidean covariates");
  return fit.data.X.rows().transpose() * fit.alpha;
}

}  // namespace kiv
