#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kiv/estimator.hpp"
#include "kiv/features.hpp"
#include "kiv/linalg.hpp"

namespace kiv {

// Tail sum of a descending eigenvalue sequence beyond rank m.
inline double local_width(const std::vector<double>& eigs, std::size_t m) {
  for (std::size_t i = 0; i + 1 < eigs.size(); ++i)
    if (eigs[i] < eigs[i + 1])
      throw std::invalid_argument("local_width: eigenvalues must be descending");
  double sum = 0.0;
  for (std::size_t i = m; i < eigs.size(); ++i) sum += eigs[i];
  return sum;
}

// Regularization-weighted trace sum s / (s + mu)^2 over a spectrum.
inline double effective_dim_from_eigs(const std::vector<double>& eigs, double reg) {
  if (!(reg > 0.0) || !std::isfinite(reg))
    throw std::invalid_argument("effective dimension: regularizer must be positive");
  double sum = 0.0;
  for (double s : eigs) {
    const double v = std::max(s, 0.0);
    sum += v / ((v + reg) * (v + reg));
  }
  return sum;
}

// n_z(mu) over the empirical instrument spectrum (eigenvalues of K_ZZ / n).
inline double effective_dim_z(const std::vector<double>& eigs_z, double mu) {
  return effective_dim_from_eigs(eigs_z, mu);
}

// Eigenvalues of the Gram-side operator K K_XX / n; these carry the nonzero
// spectrum of the empirical T_mu.
inline std::vector<double> t_operator_spectrum(const FitState& fit) {
  const double dn = static_cast<double>(fit.n());
  const Eigen::VectorXd eigs =
      product_spectrum(SymMatrix(fit.K), SymMatrix(fit.Kxx / dn));
  return std::vector<double>(eigs.data(), eigs.data() + eigs.size());
}

// m(lambda, mu) = tr{(T_mu + lambda)^{-2} T_mu} via the Gram-side spectrum.
inline double effective_dim_T(const FitState& fit, double lambda) {
  return effective_dim_from_eigs(t_operator_spectrum(fit), lambda);
}

// Nonparametric effective dimension
//   m~(lambda, mu) = tr T_ml^{-1} S* (S_z+mu)^{-1} S_z (S_z+mu)^{-1} S T_ml^{-1},
// assembled in explicit feature space; linear/polynomial kernels only.
inline double effective_dim_tilde(const PointSet& x, const PointSet& z,
                                  const KernelSpec& kx, const KernelSpec& kz,
                                  double lambda, double mu) {
  if (!has_explicit_features(kx) || !has_explicit_features(kz))
    throw std::invalid_argument(
        "effective_dim_tilde: requires kernels with explicit feature maps");
  if (!(lambda > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("effective_dim_tilde: lambda, mu must be positive");
  if (x.size() != z.size() || x.size() == 0)
    throw std::invalid_argument("effective_dim_tilde: point sets must match");

  const double dn = static_cast<double>(x.size());
  const Eigen::MatrixXd psi = feature_map(kx, x.rows());
  const Eigen::MatrixXd phi = feature_map(kz, z.rows());

  const Eigen::MatrixXd s_hat = phi.transpose() * psi / dn;  // Hx -> Hz
  Eigen::MatrixXd sz_hat = phi.transpose() * phi / dn;
  sz_hat = (0.5 * (sz_hat + sz_hat.transpose())).eval();

  const Eigen::MatrixXd g = ridge_solve(SymMatrix(sz_hat), mu, s_hat);  // (Sz+mu)^{-1} S
  Eigen::MatrixXd t_mu = s_hat.transpose() * g;
  t_mu = (0.5 * (t_mu + t_mu.transpose())).eval();

  const Eigen::MatrixXd mid = g.transpose() * sz_hat * g;  // S*(Sz+mu)^{-1}Sz(Sz+mu)^{-1}S

  const Eigen::MatrixXd left = ridge_solve(SymMatrix(t_mu), lambda, mid);
  const Eigen::MatrixXd both =
      ridge_solve(SymMatrix(t_mu), lambda, left.transpose());
  return both.trace();
}

struct DecayFit {
  double rho = std::numeric_limits<double>::quiet_NaN();
  double omega = std::numeric_limits<double>::quiet_NaN();
  double slope = std::numeric_limits<double>::quiet_NaN();
  int points_used = 0;

  // Polynomial-decay regimes require rho in (1, 2].
  bool in_polynomial_range() const {
    return std::isfinite(rho) && rho > 1.0 && rho <= 2.0;
  }
};

// Least-squares fit of log nu_s on log s over the leading eigenvalues,
// assuming nu_s ~ omega s^{-1/(rho-1)}. Uses the top min(n/2, #eigs above
// 1e-12 * max) values; needs at least five positive eigenvalues.
inline DecayFit fit_decay(const std::vector<double>& eigs) {
  const double top = eigs.empty() ? 0.0 : *std::max_element(eigs.begin(), eigs.end());
  std::size_t positive = 0;
  for (double e : eigs)
    if (e > 1e-12 * top && e > 0.0) ++positive;
  if (positive < 5)
    throw std::invalid_argument("fit_decay: need at least five positive eigenvalues");

  const std::size_t use = std::min(positive, std::max<std::size_t>(eigs.size() / 2, 2));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < eigs.size() && count < use; ++s) {
    if (!(eigs[s] > 1e-12 * top)) break;  // descending input; tail is noise
    const double lx = std::log(static_cast<double>(s + 1));
    const double ly = std::log(eigs[s]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++count;
  }
  const double dc = static_cast<double>(count);
  const double denom = dc * sxx - sx * sx;
  DecayFit fit;
  fit.points_used = static_cast<int>(count);
  if (denom <= 0.0) {
    fit.slope = 0.0;
    fit.rho = std::numeric_limits<double>::infinity();
    fit.omega = std::exp(sy / dc);
    return fit;
  }
  fit.slope = (dc * sxy - sx * sy) / denom;
  fit.omega = std::exp((sy - fit.slope * sx) / dc);
  const double mag = std::abs(fit.slope);
  // slopes at rounding-noise level mean a flat spectrum
  fit.rho = mag > 1e-12 ? 1.0 + 1.0 / mag : std::numeric_limits<double>::infinity();
  return fit;
}

struct SpectralReport {
  std::vector<double> eigs_x;  // eigenvalues of K_XX / n, descending
  std::vector<double> eigs_z;  // eigenvalues of K_ZZ / n, descending
  std::vector<double> eigs_T;  // eigenvalues of K K_XX / n, descending
  double n_z_mu = 0.0;
  double m_lam_mu = 0.0;
  double m_tilde = std::numeric_limits<double>::quiet_NaN();  // explicit features only
  DecayFit decay_x;
  DecayFit decay_z;
  double lambda = 0.0;
  double mu = 0.0;
  int n = 0;
};

inline std::vector<double> clamped_eigs(const SymMatrix& m) {
  const Eigen::VectorXd e = sym_eigvals(m).cwiseMax(0.0);
  return std::vector<double>(e.data(), e.data() + e.size());
}

inline SpectralReport spectral_report(const FitState& fit) {
  const double dn = static_cast<double>(fit.n());
  SpectralReport report;
  report.n = static_cast<int>(fit.n());
  report.lambda = fit.reg.lambda;
  report.mu = fit.reg.mu;
  report.eigs_x = clamped_eigs(SymMatrix(fit.Kxx / dn));
  report.eigs_z = clamped_eigs(SymMatrix(fit.Kzz / dn));
  report.eigs_T = t_operator_spectrum(fit);
  report.n_z_mu = effective_dim_z(report.eigs_z, fit.reg.mu);
  report.m_lam_mu = effective_dim_from_eigs(report.eigs_T, fit.reg.lambda);
  if (has_explicit_features(fit.kx) && has_explicit_features(fit.kz) &&
      !fit.data.X.is_ranking() && !fit.data.Z.is_ranking())
    report.m_tilde = effective_dim_tilde(fit.data.X, fit.data.Z, fit.kx, fit.kz,
                                         fit.reg.lambda, fit.reg.mu);
  try {
    report.decay_x = fit_decay(report.eigs_x);
  } catch (const std::invalid_argument&) {
  }
  try {
    report.decay_z = fit_decay(report.eigs_z);
  } catch (const std::invalid_argument&) {
  }
  return report;
}

// Smoothness/decay/regularization exponents for the restriction tables.
struct RegimeParams {
  double alpha = 1.0;   // source smoothness, [0,1]
  double beta = 0.5;    // link smoothness, [1/2,1]
  double rho_x = 1.5;   // covariate spectral decay, (1,2]
  double rho_z = 1.5;   // instrument spectral decay, (1,2]
  double iota = 1.0;    // lambda = mu^iota, (0,1]

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("RegimeParams: alpha must lie in [0,1]");
    if (!(beta >= 0.5 && beta <= 1.0))
      throw std::invalid_argument("RegimeParams: beta must lie in [1/2,1]");
    if (!(rho_x > 1.0 && rho_x <= 2.0))
      throw std::invalid_argument("RegimeParams: rho_x must lie in (1,2]");
    if (!(rho_z > 1.0 && rho_z <= 2.0))
      throw std::invalid_argument("RegimeParams: rho_z must lie in (1,2]");
    if (!(iota > 0.0 && iota <= 1.0))
      throw std::invalid_argument("RegimeParams: iota must lie in (0,1]");
  }
};

struct RegimeRow {
  std::string row;
  double lhs = 0.0;
  double rhs = 0.0;
  bool strict_less = true;  // pass condition: lhs < rhs (else lhs > rhs)
  bool pass = false;
};

inline bool all_pass(const std::vector<RegimeRow>& rows) {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

// The ten strict parameter restrictions that make the coupling errors and
// bias vanish faster than the variance under lambda = mu^iota. Comparisons
// are exact floating comparisons; boundary cases fail.
inline std::vector<RegimeRow> check_regime(const RegimeParams& params) {
  params.validate();
  const double a = params.alpha;
  const double rx = params.rho_x;
  const double rz = params.rho_z;
  const double i = params.iota;

  auto lt = [](std::string name, double lhs, double rhs) {
    return RegimeRow{std::move(name), lhs, rhs, true, lhs < rhs};
  };
  auto gt = [](std::string name, double lhs, double rhs) {
    return RegimeRow{std::move(name), lhs, rhs, false, lhs > rhs};
  };

  std::vector<RegimeRow> rows;
  rows.push_back(lt("Q_bullet", 2.0 * rx, 3.0 + 2.0 * a - 1.0 / i));
  rows.push_back(gt("R_bullet", rx + 2.0 * a, 1.0 / i));
  rows.push_back(lt("Q_res1", rz + 1.0, i * (3.0 * a + 1.5 * rx - 1.0)));
  rows.push_back(lt("Q_res2", rz + 1.0 / 3.0, i * (2.0 * a + 4.0 / 3.0 * rx - 1.0)));
  rows.push_back(lt("Q_res3", rz + 2.0, i * (4.0 * a + 3.0 * rx - 2.0)));
  rows.push_back(gt("R_res1", i * (4.0 * a + 2.0 * rx - 2.0), 4.0));
  rows.push_back(gt("R_res2", i * (2.0 * a + 2.0 * rx - 2.0), 3.0));
  rows.push_back(lt("R_res3", 2.0 * rz + 4.0, i * (6.0 * a + 3.0 * rx - 3.0)));
  rows.push_back(lt("R_res4", 3.0 * rz + 3.0, i * (6.0 * a + 4.0 * rx - 4.0)));
  rows.push_back(lt("R_res5", rz + 4.0, i * (4.0 * a + 3.0 * rx - 3.0)));
  return rows;
}

// Sample-size counterparts: n against the lambda/mu rate bounds, one row per
// component (the bias row is an upper bound on n, the rest are lower bounds).
inline std::vector<RegimeRow> check_sample_size(const RegimeParams& params, double n,
                                                double lambda, double mu) {
  params.validate();
  if (!(n >= 2.0) || !(lambda > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("check_sample_size: need n >= 2 and lambda, mu > 0");
  const double a = params.alpha;
  const double rx = params.rho_x;
  const double rz = params.rho_z;

  auto bound = [&](std::string name, bool upper, double value) {
    return RegimeRow{std::move(name), n, value, upper, upper ? n < value : n > value};
  };

  std::vector<RegimeRow> rows;
  rows.push_back(bound("B", true, std::pow(lambda, -(rx + 2.0 * a))));
  rows.push_back(bound("Q_bullet", false,
                       std::pow(mu, -1.0) * std::pow(lambda, -(3.0 * rx - 3.0))));
  rows.push_back(bound("R_bullet", false, std::pow(mu, -1.0)));
  rows.push_back(bound("Q_res1", false,
                       std::pow(lambda, a - 1.0 + rx / 2.0) * std::pow(mu, -(1.0 + rz))));
  rows.push_back(bound("Q_res2", false,
                       std::pow(lambda, -1.0 + rx / 3.0) * std::pow(mu, -1.0 / 3.0 - rz)));
  rows.push_back(bound("Q_res3", false,
                       std::pow(lambda, -1.0 + rx / 2.0) * std::pow(mu, -(1.0 + rz / 2.0))));
  rows.push_back(bound("R_res1", false,
                       std::pow(mu, -4.0) * std::pow(lambda, 2.0 * a - 2.0 + rx)));
  rows.push_back(bound("R_res2", false,
                       std::pow(mu, -3.0) * std::pow(lambda, -2.0 + rx)));
  rows.push_back(bound("R_res3", false,
                       std::pow(mu, -(2.0 + rz)) * std::pow(lambda, a - 1.5 + rx / 2.0)));
  rows.push_back(bound("R_res4", false,
                       std::pow(mu, -(1.0 + rz)) * std::pow(lambda, -4.0 / 3.0 + rx / 3.0)));
  rows.push_back(bound("R_res5", false,
                       std::pow(mu, -(2.0 + rz / 2.0)) * std::pow(lambda, -1.5 + rx / 2.0)));
  return rows;
}

}  // namespace kiv
