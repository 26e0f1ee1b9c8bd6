#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "kiv/estimator.hpp"
#include "kiv/rng.hpp"

namespace kiv {

enum class DgpKind { linear, nonlinear };

inline const char* dgp_name(DgpKind k) {
  return k == DgpKind::linear ? "linear" : "nonlinear";
}

// Synthetic instrumental-variable design with known structural function.
// Instruments are valid by construction: the error depends only on the
// confounder u and independent noise w, both independent of Z, and is
// bounded by sigma_bar through the tanh transform.
struct DgpSpec {
  DgpKind kind = DgpKind::linear;
  int n = 0;
  int p = 1;
  int q = 1;
  double rho_e = 0.0;      // endogeneity in [0,1)
  double sigma_bar = 1.0;  // |eps| <= sigma_bar
  Eigen::MatrixXd first_stage;    // q x p; empty selects the default
  Eigen::VectorXd gamma_star;     // p;     empty selects the default
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 2) throw std::invalid_argument("DgpSpec: n must be >= 2");
    if (p < 1 || q < 1) throw std::invalid_argument("DgpSpec: p, q must be >= 1");
    if (!(rho_e >= 0.0) || !(rho_e < 1.0))
      throw std::invalid_argument("DgpSpec: rho_e must lie in [0,1)");
    if (!(sigma_bar > 0.0) || !std::isfinite(sigma_bar))
      throw std::invalid_argument("DgpSpec: sigma_bar must be positive");
    if (first_stage.size() != 0 &&
        (first_stage.rows() != q || first_stage.cols() != p))
      throw std::invalid_argument("DgpSpec: first-stage matrix must be q x p");
    if (gamma_star.size() != 0 && gamma_star.size() != p)
      throw std::invalid_argument("DgpSpec: gamma_star must have length p");
  }
};

// Well-conditioned first stage: random orientation with singular values
// spaced evenly in [0.8, 1.2].
inline Eigen::MatrixXd default_first_stage(int q, int p, std::uint64_t seed) {
  Rng rng(seed, 0xF1257u);
  const Eigen::MatrixXd raw = rng.normal_matrix(q, p);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(raw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const int m = static_cast<int>(svd.singularValues().size());
  Eigen::VectorXd s(m);
  for (int i = 0; i < m; ++i)
    s[i] = m == 1 ? 1.0 : 1.2 - 0.4 * static_cast<double>(i) / (m - 1);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// Default structural coefficients with norm 1/2. Keeps the ridge shrinkage
// bias of the pseudo-true target small next to the bootstrap radius at
// moderately regularized sample sizes, which is the regime the band is
// designed for.
inline Eigen::VectorXd default_gamma_star(int p) {
  Eigen::VectorXd g(p);
  for (int i = 0; i < p; ++i) g[i] = 0.5 / std::sqrt(static_cast<double>(p));
  return g;
}

// Structural function at a covariate point.
inline double structural_value(DgpKind kind, const Eigen::VectorXd& gamma,
                               const Eigen::VectorXd& x) {
  const double s = gamma.dot(x);
  if (kind == DgpKind::linear) return s;
  return std::sin(s) + 0.5 * std::tanh(x[0]);
}

inline Eigen::VectorXd structural_values(DgpKind kind, const Eigen::VectorXd& gamma,
                                         const Eigen::MatrixXd& rows) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out[i] = structural_value(kind, gamma, rows.row(i).transpose());
  return out;
}

struct Simulation {
  Dataset data;
  DgpKind kind;
  Eigen::VectorXd gamma_star;

  double h0(const Eigen::VectorXd& x) const {
    return structural_value(kind, gamma_star, x);
  }

  Eigen::VectorXd h0_rows(const Eigen::MatrixXd& rows) const {
    return structural_values(kind, gamma_star, rows);
  }
};

// Z ~ iid N(0, I_q); X = Z Pi + sqrt(1-rho) v + sqrt(rho) u 1';
// eps = sigma_bar tanh(rho u + sqrt(1-rho^2) w); Y = h0(X) + eps.
// All streams are keyed off the seed, so output is bit-reproducible.
inline Simulation simulate_iv(const DgpSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd pi =
      spec.first_stage.size() ? spec.first_stage
                              : default_first_stage(spec.q, spec.p, spec.seed);
  const Eigen::VectorXd gamma =
      spec.gamma_star.size() ? spec.gamma_star : default_gamma_star(spec.p);

  Rng rz(spec.seed, 1), ru(spec.seed, 2), rv(spec.seed, 3), rw(spec.seed, 4);
  const Eigen::MatrixXd z = rz.normal_matrix(spec.n, spec.q);
  const Eigen::VectorXd u = ru.normal_vector(spec.n);
  const Eigen::MatrixXd v = rv.normal_matrix(spec.n, spec.p);
  const Eigen::VectorXd w = rw.normal_vector(spec.n);

  const Eigen::MatrixXd x = z * pi + std::sqrt(1.0 - spec.rho_e) * v +
                            std::sqrt(spec.rho_e) * u *
                                Eigen::RowVectorXd::Ones(spec.p);

  const double a = spec.rho_e;
  const double b = std::sqrt(1.0 - spec.rho_e * spec.rho_e);
  const Eigen::VectorXd eps =
      spec.sigma_bar * (a * u + b * w).array().tanh();

  const Eigen::VectorXd y = structural_values(spec.kind, gamma, x) + eps;
  return Simulation{Dataset(PointSet::euclidean(z), PointSet::euclidean(x), y),
                    spec.kind, gamma};
}

}  // namespace kiv
