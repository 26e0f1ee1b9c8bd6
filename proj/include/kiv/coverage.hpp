#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "kiv/bootstrap.hpp"
#include "kiv/dgp.hpp"
#include "kiv/estimator.hpp"

namespace kiv {

struct CoverageConfig {
  DgpSpec dgp;  // per-replication seeds are derived from `seed`, not dgp.seed
  KernelSpec kx = KernelSpec::linear();
  KernelSpec kz = KernelSpec::linear();
  double lambda = 0.1;
  double mu = 0.1;
  int reps = 100;
  int bootstrap_b = 400;
  double chi = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct CoverageSummary {
  int reps = 0;
  int sup_covered = 0;
  int rkhs_covered = 0;
  bool rkhs_available = false;
  double sup_rate = 0.0;
  double sup_se = 0.0;
  double rkhs_rate = std::numeric_limits<double>::quiet_NaN();
  double rkhs_se = std::numeric_limits<double>::quiet_NaN();
};

inline double binomial_se(double rate, int reps) {
  return std::sqrt(rate * (1.0 - rate) / static_cast<double>(reps));
}

// Monte Carlo acceptance check of the band: simulate, fit, bootstrap, and
// record per replication whether (a) the true structural function lies inside
// the sup band at every training point and (b) for linear kernels, whether
// the true coefficient vector lies inside the RKHS ball.
inline CoverageSummary run_coverage(const CoverageConfig& config) {
  if (config.reps < 1)
    throw std::invalid_argument("run_coverage: reps must be >= 1");
  config.dgp.validate();
  const RegPair reg(config.lambda, config.mu);
  const bool rkhs_side = config.kx.family == KernelFamily::linear &&
                         config.dgp.kind == DgpKind::linear;

  std::vector<char> sup_hit(static_cast<std::size_t>(config.reps), 0);
  std::vector<char> rkhs_hit(static_cast<std::size_t>(config.reps), 0);

  auto one_rep = [&](int rep) {
    Rng master(config.seed, static_cast<std::uint64_t>(rep));
    DgpSpec spec = config.dgp;
    spec.seed = master.next_u64();
    const std::uint64_t boot_seed = master.next_u64();

    const Simulation sim = simulate_iv(spec);
    const FitState fit = fit_kiv(sim.data, config.kx, config.kz, reg);
    const BootstrapResult boot =
        run_bootstrap(fit, config.bootstrap_b, config.chi, boot_seed);

    const double kappa = kernel_bound(config.kx, fit.data.X);
    const ConfidenceBand band =
        confidence_band(fit, boot.t_hat, config.chi, kappa, fit.data.X);

    const Eigen::VectorXd truth = sim.h0_rows(fit.data.X.rows());
    bool inside = true;
    for (std::size_t i = 0; i < band.points.size(); ++i) {
      const double v = truth[static_cast<Eigen::Index>(i)];
      if (v < band.points[i].lower || v > band.points[i].upper) {
        inside = false;
        break;
      }
    }
    sup_hit[static_cast<std::size_t>(rep)] = inside ? 1 : 0;

    if (rkhs_side) {
      const Eigen::VectorXd coef = linear_coef(fit);
      const double dist = (coef - sim.gamma_star).norm();
      rkhs_hit[static_cast<std::size_t>(rep)] = dist <= band.radius_rkhs ? 1 : 0;
    }
  };

  const int threads = std::max(config.threads, 1);
  if (threads == 1) {
    for (int rep = 0; rep < config.reps; ++rep) one_rep(rep);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (config.reps + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(config.reps, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        for (int rep = begin; rep < end; ++rep) one_rep(rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  CoverageSummary summary;
  summary.reps = config.reps;
  summary.rkhs_available = rkhs_side;
  for (char c : sup_hit) summary.sup_covered += c;
  summary.sup_rate = static_cast<double>(summary.sup_covered) / config.reps;
  summary.sup_se = binomial_se(summary.sup_rate, config.reps);
  if (rkhs_side) {
    for (char c : rkhs_hit) summary.rkhs_covered += c;
    summary.rkhs_rate = static_cast<double>(summary.rkhs_covered) / config.reps;
    summary.rkhs_se = binomial_se(summary.rkhs_rate, config.reps);
  }
  return summary;
}

}  // namespace kiv
