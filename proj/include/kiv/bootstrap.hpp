#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kiv/estimator.hpp"
#include "kiv/rng.hpp"

namespace kiv {

// Norm used for the bootstrap statistic M. `rkhs_x` is the RKHS norm of the
// bootstrap function, M^2 = gamma' K_XX gamma. `projector` is the literal
// gamma' K gamma variant, kept for comparison.
enum class BootstrapNorm { rkhs_x, projector };

struct BootstrapDraws {
  std::vector<double> values;  // one statistic per draw, indexed by stream
  std::uint64_t seed = 0;
  int count = 0;
};

struct BandPoint {
  double h_hat;
  double lower;
  double upper;
};

struct ConfidenceBand {
  double chi = 0.0;
  double t_hat = 0.0;
  double kappa_x = 1.0;
  double inflation = 0.0;    // 1 + 1/log(n), natural log
  double radius_sup = 0.0;   // t_hat n^{-1/2} kappa_x inflation
  double radius_rkhs = 0.0;  // t_hat n^{-1/2} inflation
  std::vector<BandPoint> points;
};

// Multipliers q ~ N(0, I - 11'/n), sampled exactly by mean-centering
// i.i.d. standard normals.
inline Eigen::VectorXd draw_multipliers(Eigen::Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("draw_multipliers: n must be >= 1");
  Eigen::VectorXd g = rng.normal_vector(n);
  return g.array() - g.mean();
}

// Per-fit matrices reused across draws:
//   weight = sqrt(n) A (2K - K^2), so a draw is gamma = weight (resid o q).
struct BootstrapContext {
  Eigen::MatrixXd weight;
  Eigen::MatrixXd norm_matrix;  // K_XX or K, depending on the statistic
  Eigen::VectorXd resid;
};

inline BootstrapContext make_bootstrap_context(const FitState& fit,
                                               BootstrapNorm norm = BootstrapNorm::rkhs_x) {
  const double root_n = std::sqrt(static_cast<double>(fit.n()));
  Eigen::MatrixXd c = 2.0 * fit.K - fit.K * fit.K;
  BootstrapContext ctx;
  ctx.weight = root_n * (fit.A * c);
  ctx.norm_matrix = (norm == BootstrapNorm::rkhs_x) ? fit.Kxx : fit.K;
  ctx.resid = fit.resid;
  return ctx;
}

inline double bootstrap_draw(const BootstrapContext& ctx, const Eigen::VectorXd& q) {
  if (q.size() != ctx.resid.size())
    throw std::invalid_argument("bootstrap_draw: multiplier length mismatch");
  const Eigen::VectorXd gamma = ctx.weight * ctx.resid.cwiseProduct(q);
  const double sq = gamma.dot(ctx.norm_matrix * gamma);
  return std::sqrt(std::max(sq, 0.0));
}

inline double bootstrap_draw(const FitState& fit, const Eigen::VectorXd& q,
                             BootstrapNorm norm = BootstrapNorm::rkhs_x) {
  return bootstrap_draw(make_bootstrap_context(fit, norm), q);
}

// Finite-sample bootstrap function evaluated pointwise,
//   B(x) = K_xX (K K_XX + n lambda I)^{-1} (2K - K^2) beta,
//   beta = diag(resid) (h - h') 1 / sqrt(2),
// for a fixed n x n matrix h of standard normals. Reference/oracle path; the
// production statistic goes through bootstrap_draw.
inline Eigen::VectorXd bootstrap_reference(const FitState& fit, const Eigen::MatrixXd& h,
                                           const PointSet& eval_points) {
  const Eigen::Index n = fit.n();
  if (h.rows() != n || h.cols() != n)
    throw std::invalid_argument("bootstrap_reference: multiplier matrix must be n x n");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd w = (h - h.transpose()) * ones / std::sqrt(2.0);
  const Eigen::VectorXd beta = fit.resid.cwiseProduct(w);
  const Eigen::MatrixXd c = 2.0 * fit.K - fit.K * fit.K;
  const Eigen::VectorXd coef = fit.A * (c * beta);
  return gram_matrix(fit.kx, eval_points, fit.data.X) * coef;
}

// Upper-tail order statistic without interpolation: the ceil(B(1-chi))-th
// smallest draw, so the empirical fraction of draws strictly above t_hat is
// at most chi.
inline double bootstrap_quantile(const BootstrapDraws& draws, double chi) {
  if (draws.values.empty())
    throw std::invalid_argument("bootstrap_quantile: empty draws");
  if (!(chi > 0.0) || !(chi < 1.0))
    throw std::invalid_argument("bootstrap_quantile: chi must lie in (0,1)");
  const int b = static_cast<int>(draws.values.size());
  // ceil(B(1-chi)) computed as B - floor(B chi) to avoid a float ceil
  // landing on the wrong side of an integer.
  int k = b - static_cast<int>(std::floor(static_cast<double>(b) * chi));
  k = std::min(std::max(k, 1), b);
  std::vector<double> sorted = draws.values;
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  return sorted[static_cast<std::size_t>(k - 1)];
}

struct BootstrapResult {
  BootstrapDraws draws;
  double t_hat = 0.0;
};

// B draws of the statistic, one counter-based stream per draw index, so the
// draw set is identical for any execution order or thread count.
inline BootstrapResult run_bootstrap(const FitState& fit, int b, double chi,
                                     std::uint64_t seed, int threads = 1,
                                     BootstrapNorm norm = BootstrapNorm::rkhs_x) {
  if (b < 1) throw std::invalid_argument("run_bootstrap: B must be >= 1");
  if (!(chi > 0.0) || !(chi < 1.0))
    throw std::invalid_argument("run_bootstrap: chi must lie in (0,1)");
  if (b < 100)
    std::cerr << "run_bootstrap: warning: B = " << b
              << " is below the recommended minimum of 100\n";

  const BootstrapContext ctx = make_bootstrap_context(fit, norm);
  const Eigen::Index n = fit.n();

  BootstrapDraws draws;
  draws.seed = seed;
  draws.count = b;
  draws.values.assign(static_cast<std::size_t>(b), 0.0);

  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng(seed, static_cast<std::uint64_t>(i));
      const Eigen::VectorXd q = draw_multipliers(n, rng);
      draws.values[static_cast<std::size_t>(i)] = bootstrap_draw(ctx, q);
    }
  };

  threads = std::max(threads, 1);
  if (threads == 1 || b < 2 * threads) {
    worker(0, b);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (b + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(b, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  BootstrapResult out;
  out.t_hat = bootstrap_quantile(draws, chi);
  out.draws = std::move(draws);
  return out;
}

// Band of half-width t_hat n^{-1/2} kappa_x (1 + 1/log n) around the fitted
// function, plus the underlying RKHS-ball radius t_hat n^{-1/2} (1 + 1/log n).
inline ConfidenceBand confidence_band(const FitState& fit, double t_hat, double chi,
                                      double kappa_x, const PointSet& eval_points) {
  const Eigen::Index n = fit.n();
  if (n < 3)
    throw std::invalid_argument("confidence_band: need n >= 3");
  if (!(t_hat >= 0.0) || !std::isfinite(t_hat))
    throw std::invalid_argument("confidence_band: t_hat must be nonnegative");
  if (!(kappa_x > 0.0) || !std::isfinite(kappa_x))
    throw std::invalid_argument("confidence_band: kappa_x must be positive");

  ConfidenceBand band;
  band.chi = chi;
  band.t_hat = t_hat;
  band.kappa_x = kappa_x;
  band.inflation = 1.0 + 1.0 / std::log(static_cast<double>(n));
  band.radius_rkhs = t_hat / std::sqrt(static_cast<double>(n)) * band.inflation;
  band.radius_sup = band.radius_rkhs * kappa_x;

  const Eigen::VectorXd centers = predict(fit, eval_points);
  band.points.reserve(static_cast<std::size_t>(centers.size()));
  for (Eigen::Index i = 0; i < centers.size(); ++i)
    band.points.push_back({centers[i], centers[i] - band.radius_sup,
                           centers[i] + band.radius_sup});
  return band;
}

}  // namespace kiv
