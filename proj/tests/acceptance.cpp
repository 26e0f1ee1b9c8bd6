// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kiv/kiv.hpp"

using namespace kiv;
namespace fs = std::filesystem;

namespace {

double rel_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

Dataset make_data(Rng& rng, Eigen::Index n, int p, int q) {
  return Dataset(PointSet::euclidean(rng.normal_matrix(n, q)),
                 PointSet::euclidean(rng.normal_matrix(n, p)),
                 rng.normal_vector(n));
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1. linear-kernel fits reduce to regularized two-stage least squares
Outcome criterion_2sls() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1001, 0);
  double worst = 0.0;
  for (int rep = 0; rep < 25; ++rep) {
    const Dataset data = make_data(rng, 50, 3, 4);
    const FitState fit =
        fit_kiv(data, KernelSpec::linear(), KernelSpec::linear(), RegPair(0.1, 0.1));
    const Eigen::VectorXd gamma =
        regularized_2sls(data.Z.rows(), data.X.rows(), data.y, 0.1, 0.1);
    worst = std::max(worst, rel_gap(predict(fit, fit.data.X), data.X.rows() * gamma));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max relative gap %.3g over 25 instances in %.2fs",
                worst, secs);
  return {worst <= 1e-8 && secs < 5.0, buf};
}

// 2. polynomial dual fits agree with the explicit-feature primal formula
Outcome criterion_primal_dual() {
  Rng rng(1002, 0);
  const int n = 30, p = 2, d = 2;
  const Eigen::MatrixXd zr = rng.normal_matrix(n, p);
  const Eigen::MatrixXd xr = rng.normal_matrix(n, p);
  const Eigen::VectorXd y = rng.normal_vector(n);
  const KernelSpec kx = KernelSpec::polynomial(d, 1.0);
  const KernelSpec kz = KernelSpec::polynomial(d, 1.0);
  const double lambda = 0.05, mu = 0.02, dn = n;

  const FitState fit = fit_kiv(Dataset(PointSet::euclidean(zr), PointSet::euclidean(xr), y),
                               kx, kz, RegPair(lambda, mu));

  const Eigen::MatrixXd psi = feature_map(kx, xr);
  const Eigen::MatrixXd phi = feature_map(kz, zr);
  const Eigen::MatrixXd ztz =
      phi.transpose() * phi + dn * mu * Eigen::MatrixXd::Identity(phi.cols(), phi.cols());
  const Eigen::MatrixXd inner = ztz.ldlt().solve(phi.transpose() * psi);
  const Eigen::VectorXd rhs = ztz.ldlt().solve(phi.transpose() * y);
  const Eigen::MatrixXd reg_mat =
      psi.transpose() * phi * inner +
      dn * lambda * Eigen::MatrixXd::Identity(psi.cols(), psi.cols());
  const Eigen::VectorXd w_hat = reg_mat.partialPivLu().solve(psi.transpose() * phi * rhs);

  const Eigen::MatrixXd grid = rng.normal_matrix(12, p);
  const double gap = rel_gap(predict(fit, PointSet::euclidean(grid)),
                             feature_map(kx, grid) * w_hat);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "relative gap %.3g", gap);
  return {gap <= 1e-8, buf};
}

// 3. full-rank instruments with vanishing mu recover kernel ridge regression
Outcome criterion_krr() {
  Rng rng(1003, 0);
  const Eigen::MatrixXd x = rng.normal_matrix(5, 5);
  const Eigen::VectorXd y = rng.normal_vector(5);
  const double lambda = 0.3;
  const Dataset data(PointSet::euclidean(x), PointSet::euclidean(x), y);
  const FitState fit =
      fit_kiv(data, KernelSpec::linear(), KernelSpec::linear(), RegPair(lambda, 1e-10));
  const Eigen::VectorXd krr = fit_krr(data.X, y, KernelSpec::linear(), lambda);
  const double gap = rel_gap(predict(fit, fit.data.X), fit.Kxx * krr);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "relative gap %.3g", gap);
  return {gap <= 1e-6, buf};
}

// 4. the gram-form bootstrap function equals its explicit-feature
//    reconstruction assembled from the three closed-form terms: two copies of
//    the projected-multiplier term and one squared-projection correction
Outcome criterion_bootstrap_closed_form() {
  Rng rng(1004, 0);
  const int n = 20, p = 2, d = 2;
  const Dataset data = make_data(rng, n, p, p);
  const KernelSpec kx = KernelSpec::polynomial(d, 1.0);
  const KernelSpec kz = KernelSpec::polynomial(d, 0.5);
  const double lambda = 0.05, mu = 0.02, dn = n;
  const FitState fit = fit_kiv(data, kx, kz, RegPair(lambda, mu));

  const Eigen::MatrixXd psi = feature_map(kx, data.X.rows());
  const Eigen::MatrixXd phi = feature_map(kz, data.Z.rows());
  const Eigen::MatrixXd s_star = psi.transpose() * phi / dn;  // Hz -> Hx
  const Eigen::MatrixXd sz = phi.transpose() * phi / dn;
  const Eigen::MatrixXd sz_mu =
      sz + mu * Eigen::MatrixXd::Identity(sz.rows(), sz.cols());
  const auto sz_solver = sz_mu.ldlt();
  Eigen::MatrixXd t_ml = s_star * sz_solver.solve(s_star.transpose());
  t_ml += lambda * Eigen::MatrixXd::Identity(t_ml.rows(), t_ml.cols());
  const auto t_solver = t_ml.partialPivLu();

  const Eigen::MatrixXd h = rng.normal_matrix(n, n);
  const Eigen::VectorXd w =
      (h - h.transpose()) * Eigen::VectorXd::Ones(n) / std::sqrt(2.0);
  const Eigen::VectorXd beta = fit.resid.cwiseProduct(w);

  // closed-form terms in feature space; the first two coincide analytically
  const Eigen::VectorXd term_a =
      t_solver.solve((s_star * sz_solver.solve(phi.transpose() * beta / dn)).eval());
  const Eigen::VectorXd term_b = term_a;
  const Eigen::VectorXd term_c = t_solver.solve(
      (s_star * sz_solver.solve(sz * sz_solver.solve(phi.transpose() * beta / dn)))
          .eval());
  const Eigen::VectorXd coef = term_a + term_b - term_c;

  const Eigen::MatrixXd pts = rng.normal_matrix(10, p);
  const Eigen::VectorXd reference =
      bootstrap_reference(fit, h, PointSet::euclidean(pts));
  const Eigen::VectorXd rebuilt = feature_map(kx, pts) * coef;
  const double gap = rel_gap(reference, rebuilt);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "relative gap %.3g at 10 points", gap);
  return {gap <= 1e-8, buf};
}

// 5. multiplier law: mean-centered gaussians have covariance I - 11'/n
Outcome criterion_multiplier_law() {
  const int n = 5, draws = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  double worst_sum = 0.0;
  for (int b = 0; b < draws; ++b) {
    Rng rng(1005, static_cast<std::uint64_t>(b));
    const Eigen::VectorXd q = draw_multipliers(n, rng);
    worst_sum = std::max(worst_sum, std::abs(q.sum()) / q.norm());
    sum += q * q.transpose();
  }
  const Eigen::MatrixXd cov = sum / draws;
  const Eigen::MatrixXd target =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 0.2);
  const double gap = (cov - target).cwiseAbs().maxCoeff();
  char buf[140];
  std::snprintf(buf, sizeof(buf),
                "max covariance entry gap %.4f, max |sum|/norm %.2g", gap, worst_sum);
  return {gap < 0.02 && worst_sum <= 1e-12, buf};
}

// 6. the statistic is the explicit-feature RKHS norm of the bootstrap function
Outcome criterion_rkhs_norm() {
  Rng rng(1006, 0);
  const Dataset data = make_data(rng, 20, 2, 2);
  const FitState fit = fit_kiv(data, KernelSpec::polynomial(2, 1.0),
                               KernelSpec::polynomial(2, 1.0), RegPair(0.05, 0.02));
  const Eigen::MatrixXd psi = feature_map(fit.kx, data.X.rows());
  const BootstrapContext ctx = make_bootstrap_context(fit);
  double worst = 0.0;
  Rng qrng(1007, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd q = draw_multipliers(fit.n(), qrng);
    const Eigen::VectorXd gamma = ctx.weight * fit.resid.cwiseProduct(q);
    const double m = bootstrap_draw(ctx, q);
    const double feat = (psi.transpose() * gamma).norm();
    worst = std::max(worst, std::abs(m - feat) / std::max(feat, 1e-300));
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max relative gap %.3g over 50 draws", worst);
  return {worst <= 1e-8, buf};
}

// 7. Monte Carlo validity of the RKHS ball and the sup band at desk scale
Outcome criterion_validity() {
  const auto start = std::chrono::steady_clock::now();
  CoverageConfig config;
  config.dgp.kind = DgpKind::linear;
  config.dgp.n = 200;
  config.dgp.p = 2;
  config.dgp.q = 3;
  config.dgp.rho_e = 0.5;
  config.dgp.sigma_bar = 1.0;
  config.lambda = 1.0 / std::sqrt(200.0);
  config.mu = config.lambda;
  config.reps = 300;
  config.bootstrap_b = 400;
  config.chi = 0.05;
  config.seed = 1234;
  config.threads = 1;
  const CoverageSummary summary = run_coverage(config);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "rkhs %.3f (se %.3f), sup %.3f (se %.3f), %d reps in %.0fs",
                summary.rkhs_rate, summary.rkhs_se, summary.sup_rate, summary.sup_se,
                summary.reps, secs);
  return {summary.rkhs_rate >= 0.91 && summary.sup_rate >= 0.91 && secs <= 600.0, buf};
}

// 8. nonzero spectrum of K K_XX / n equals the explicit-feature T operator
Outcome criterion_spectrum_identity() {
  Rng rng(1008, 0);
  const int n = 25, p = 2;
  const Dataset data = make_data(rng, n, p, p);
  const KernelSpec kx = KernelSpec::polynomial(2, 1.0);
  const KernelSpec kz = KernelSpec::polynomial(2, 1.0);
  const FitState fit = fit_kiv(data, kx, kz, RegPair(0.05, 0.02));

  const std::vector<double> gram_side = t_operator_spectrum(fit);

  const double dn = n;
  const Eigen::MatrixXd psi = feature_map(kx, data.X.rows());
  const Eigen::MatrixXd phi = feature_map(kz, data.Z.rows());
  const Eigen::MatrixXd s = phi.transpose() * psi / dn;
  Eigen::MatrixXd sz = phi.transpose() * phi / dn;
  sz.diagonal().array() += fit.reg.mu;
  Eigen::MatrixXd t_mu = s.transpose() * sz.ldlt().solve(s);
  t_mu = (0.5 * (t_mu + t_mu.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t_mu, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd feature_side = es.eigenvalues().reverse();

  const double top = gram_side[0];
  double worst = 0.0;
  const std::size_t shared =
      std::min(gram_side.size(), static_cast<std::size_t>(feature_side.size()));
  for (std::size_t i = 0; i < shared; ++i)
    worst = std::max(worst, std::abs(gram_side[i] - feature_side[static_cast<Eigen::Index>(i)]) / top);
  for (std::size_t i = shared; i < gram_side.size(); ++i)
    worst = std::max(worst, std::abs(gram_side[i]) / top);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max relative eigenvalue gap %.3g", worst);
  return {worst <= 1e-8, buf};
}

// 9. nonparametric effective dimension never exceeds the T effective
//    dimension, and the instrument dimension is strictly decreasing in mu
Outcome criterion_effective_dims() {
  Rng rng(1009, 0);
  bool ordered = true;
  double worst_excess = 0.0;
  for (int rep = 0; rep < 25; ++rep) {
    const int p = 1 + static_cast<int>(rng.next_u64() % 3);
    const int q = 1 + static_cast<int>(rng.next_u64() % 3);
    const Dataset data = make_data(rng, 16, p, q);
    const KernelSpec kx =
        rep % 2 ? KernelSpec::polynomial(2, 0.5) : KernelSpec::linear();
    const KernelSpec kz = rep % 3 ? KernelSpec::linear() : KernelSpec::polynomial(2, 1.0);
    const double lambda = 0.02 + 0.2 * rng.uniform();
    const double mu = 0.01 + 0.1 * rng.uniform();
    const FitState fit = fit_kiv(data, kx, kz, RegPair(lambda, mu));
    const double m_tilde = effective_dim_tilde(data.X, data.Z, kx, kz, lambda, mu);
    const double m = effective_dim_T(fit, lambda);
    worst_excess = std::max(worst_excess, m_tilde - m);
    ordered = ordered && m_tilde <= m * (1.0 + 1e-10);
  }

  Rng zr(1010, 0);
  const Dataset data = make_data(zr, 20, 2, 3);
  const FitState fit =
      fit_kiv(data, KernelSpec::linear(), KernelSpec::linear(), RegPair(0.1, 0.1));
  const SpectralReport report = spectral_report(fit);
  const double d1 = effective_dim_z(report.eigs_z, 0.01);
  const double d2 = effective_dim_z(report.eigs_z, 0.1);
  const double d3 = effective_dim_z(report.eigs_z, 1.0);
  const bool decreasing = d1 > d2 && d2 > d3;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "m_tilde <= m on 25/25 instances (worst excess %.2g); n_z %.3f > %.3f > %.3f",
                worst_excess, d1, d2, d3);
  return {ordered && decreasing, buf};
}

// 10. regime checker reproduces the worked parameter examples row by row
Outcome criterion_regime() {
  struct Example {
    const char* label;
    RegimeParams params;
  };
  const std::vector<Example> examples = {
      {"all-pass", {1.0, 0.5, 1.6, 1.1, 1.0}},
      {"R_res2-fail", {0.0, 0.5, 2.0, 1.1, 1.0}},
      {"Q_bullet-fail", {1.0, 0.5, 2.0, 1.1, 1.0}},
  };
  bool ok = true;
  for (const auto& example : examples) {
    const auto rows = check_regime(example.params);
    std::printf("    %s (alpha=%g rho_x=%g rho_z=%g iota=%g):\n", example.label,
                example.params.alpha, example.params.rho_x, example.params.rho_z,
                example.params.iota);
    for (const auto& row : rows)
      std::printf("      %-9s %12.6f %s %-12.6f %s\n", row.row.c_str(), row.lhs,
                  row.strict_less ? "<" : ">", row.rhs, row.pass ? "pass" : "FAIL");
  }
  const auto ex1 = check_regime(examples[0].params);
  ok = ok && all_pass(ex1);

  const auto ex2 = check_regime(examples[1].params);
  bool rres2_checked = false;
  for (const auto& row : ex2)
    if (row.row == "R_res2") {
      rres2_checked = row.lhs == 2.0 && row.rhs == 3.0 && !row.pass;
    }
  ok = ok && rres2_checked && !all_pass(ex2);

  const auto ex3 = check_regime(examples[2].params);
  for (const auto& row : ex3) {
    if (row.row == "Q_bullet")
      ok = ok && row.lhs == 4.0 && row.rhs == 4.0 && !row.pass;
    else
      ok = ok && row.pass;
  }
  return {ok, "three worked examples reproduced"};
}

// 11. the band command is byte-deterministic in reference mode
Outcome criterion_determinism() {
  const std::string cli = KIV_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "kiv_acceptance";
  fs::create_directories(dir);
  const std::string data = (dir / "data").string();
  const std::string quiet = " >/dev/null 2>&1";

  auto run = [&](const std::string& args) {
    return WEXITSTATUS(std::system((cli + " " + args + quiet).c_str()));
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };

  if (run("simulate --n 80 --p 2 --q 3 --rho-e 0.5 --seed 77 --out " + data) != 0)
    return {false, "simulate failed"};
  const std::string band_args = "band --input " + data +
                                ".data.csv --lambda 0.1 --mu 0.05 --bootstrap 300 "
                                "--chi 0.05 --seed 9 --threads 1 --out ";
  if (run(band_args + (dir / "run1").string()) != 0) return {false, "band run 1 failed"};
  if (run(band_args + (dir / "run2").string()) != 0) return {false, "band run 2 failed"};

  const bool csv_equal =
      slurp(dir / "run1.band.csv") == slurp(dir / "run2.band.csv");
  const bool json_equal =
      slurp(dir / "run1.summary.json") == slurp(dir / "run2.summary.json");
  char buf[120];
  std::snprintf(buf, sizeof(buf), "band csv identical: %s, summary json identical: %s",
                csv_equal ? "yes" : "no", json_equal ? "yes" : "no");
  return {csv_equal && json_equal, buf};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "linear fits reduce to regularized 2SLS (1e-8, <5s)", criterion_2sls},
      {2, "polynomial primal-dual agreement (1e-8)", criterion_primal_dual},
      {3, "full-rank/vanishing-mu fit matches kernel ridge (1e-6)", criterion_krr},
      {4, "bootstrap function: gram form vs feature-space closed form (1e-8)",
       criterion_bootstrap_closed_form},
      {5, "multiplier law covariance I - 11'/n (0.02)", criterion_multiplier_law},
      {6, "statistic equals explicit-feature RKHS norm (1e-8)", criterion_rkhs_norm},
      {7, "Monte Carlo validity of the 95% band (>= 0.91)", criterion_validity},
      {8, "gram/feature spectrum identity (1e-8)", criterion_spectrum_identity},
      {9, "effective dimension ordering and monotonicity", criterion_effective_dims},
      {10, "regime checker reproduces worked examples", criterion_regime},
      {11, "band command is byte-deterministic", criterion_determinism},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %2d: %s — %s\n", outcome.pass ? "PASS" : "FAIL",
                criterion.id, criterion.title, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures == 0)
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  else
    std::printf("%d acceptance criteria FAILED\n", failures);
  return failures;
}
