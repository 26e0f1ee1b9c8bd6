// Command-line entry points: fit and band on CSV data, synthetic simulation,
// Monte Carlo coverage experiments, and spectral/regime diagnostics.
//
// Exit codes: 0 success, 2 input error, 3 numeric failure, 4 config error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kiv/kiv.hpp"

namespace {

using nlohmann::json;

struct RunConfig {
  std::string command;
  std::string input;
  std::string grid;
  std::string spectrum;
  std::string out = "kiv_run";
  std::string kernel_x = "linear";
  std::string kernel_z = "linear";
  double lambda = 0.1;
  double mu = 0.1;
  int bootstrap_b = 1000;
  double chi = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  double kappa = 0.0;  // <= 0 means: derive from the data

  // synthetic designs (simulate / coverage)
  std::string dgp_kind = "linear";
  int n = 200;
  int p = 2;
  int q = 3;
  double rho_e = 0.0;
  double sigma_bar = 1.0;
  std::vector<double> gamma;  // empty means: default
  int reps = 100;

  // regime parameters (diagnose); null unless requested
  bool regime_set = false;
  double alpha = 1.0;
  double beta = 0.5;
  double rho_x = 1.5;
  double rho_z = 1.5;
  double iota = 1.0;
};

json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["grid"] = c.grid;
  j["spectrum"] = c.spectrum;
  j["out"] = c.out;
  j["kernel_x"] = c.kernel_x;
  j["kernel_z"] = c.kernel_z;
  j["lambda"] = c.lambda;
  j["mu"] = c.mu;
  j["bootstrap"] = c.bootstrap_b;
  j["chi"] = c.chi;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["kappa"] = c.kappa;
  j["dgp"] = {{"kind", c.dgp_kind}, {"n", c.n},     {"p", c.p},
              {"q", c.q},           {"rho_e", c.rho_e}, {"sigma_bar", c.sigma_bar}};
  j["gamma"] = c.gamma;
  j["reps"] = c.reps;
  if (c.regime_set)
    j["regime"] = {{"alpha", c.alpha}, {"beta", c.beta},   {"rho_x", c.rho_x},
                   {"rho_z", c.rho_z}, {"iota", c.iota}};
  else
    j["regime"] = nullptr;
  return j;
}

void from_json(const json& j, RunConfig& c) {
  c.command = j.value("command", c.command);
  c.input = j.value("input", c.input);
  c.grid = j.value("grid", c.grid);
  c.spectrum = j.value("spectrum", c.spectrum);
  c.out = j.value("out", c.out);
  c.kernel_x = j.value("kernel_x", c.kernel_x);
  c.kernel_z = j.value("kernel_z", c.kernel_z);
  c.lambda = j.value("lambda", c.lambda);
  c.mu = j.value("mu", c.mu);
  c.bootstrap_b = j.value("bootstrap", c.bootstrap_b);
  c.chi = j.value("chi", c.chi);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.kappa = j.value("kappa", c.kappa);
  if (j.contains("dgp") && j["dgp"].is_object()) {
    const json& d = j["dgp"];
    c.dgp_kind = d.value("kind", c.dgp_kind);
    c.n = d.value("n", c.n);
    c.p = d.value("p", c.p);
    c.q = d.value("q", c.q);
    c.rho_e = d.value("rho_e", c.rho_e);
    c.sigma_bar = d.value("sigma_bar", c.sigma_bar);
  }
  if (j.contains("gamma") && j["gamma"].is_array())
    c.gamma = j["gamma"].get<std::vector<double>>();
  c.reps = j.value("reps", c.reps);
  if (j.contains("regime") && j["regime"].is_object()) {
    const json& r = j["regime"];
    c.regime_set = true;
    c.alpha = r.value("alpha", c.alpha);
    c.beta = r.value("beta", c.beta);
    c.rho_x = r.value("rho_x", c.rho_x);
    c.rho_z = r.value("rho_z", c.rho_z);
    c.iota = r.value("iota", c.iota);
  }
}

void echo_config(const RunConfig& c) {
  kiv::write_json(c.out + ".config.json", to_json(c));
}

kiv::DgpSpec dgp_from_config(const RunConfig& c) {
  kiv::DgpSpec spec;
  if (c.dgp_kind == "linear")
    spec.kind = kiv::DgpKind::linear;
  else if (c.dgp_kind == "nonlinear")
    spec.kind = kiv::DgpKind::nonlinear;
  else
    throw kiv::ConfigError("unknown dgp kind '" + c.dgp_kind + "'");
  spec.n = c.n;
  spec.p = c.p;
  spec.q = c.q;
  spec.rho_e = c.rho_e;
  spec.sigma_bar = c.sigma_bar;
  spec.seed = c.seed;
  if (!c.gamma.empty()) {
    spec.gamma_star = Eigen::Map<const Eigen::VectorXd>(
        c.gamma.data(), static_cast<Eigen::Index>(c.gamma.size()));
  }
  return spec;
}

struct FitBundle {
  kiv::FitState fit;
  kiv::PointSet eval_points;
};

FitBundle load_and_fit(const RunConfig& c) {
  if (c.input.empty()) throw kiv::ConfigError("--input is required");
  kiv::Dataset data = kiv::read_dataset_csv(c.input);
  const kiv::KernelSpec kx = kiv::parse_kernel_spec(c.kernel_x);
  const kiv::KernelSpec kz = kiv::parse_kernel_spec(c.kernel_z);
  const kiv::RegPair reg(c.lambda, c.mu);
  kiv::FitState fit = kiv::fit_kiv(std::move(data), kx, kz, reg);
  // evaluation points: the training covariates, extended by any user grid
  kiv::PointSet eval_points =
      c.grid.empty() ? fit.data.X
                     : kiv::concat(fit.data.X, kiv::read_grid_csv(c.grid));
  return FitBundle{std::move(fit), std::move(eval_points)};
}

json fit_metadata(const kiv::FitState& fit) {
  json j;
  j["n"] = static_cast<int>(fit.n());
  j["lambda"] = fit.reg.lambda;
  j["mu"] = fit.reg.mu;
  const double iota = fit.reg.implied_iota();
  if (std::isfinite(iota))
    j["iota_hat"] = iota;
  else
    j["iota_hat"] = nullptr;
  j["kernel_x"] = kiv::to_string(fit.kx);
  j["kernel_z"] = kiv::to_string(fit.kz);
  j["residual_l2"] = fit.resid.norm();
  j["residual_linf"] = fit.resid.lpNorm<Eigen::Infinity>();
  j["policy_mu_le_lambda_le_1"] = fit.reg.within_policy();
  return j;
}

int cmd_fit(const RunConfig& c) {
  FitBundle bundle = load_and_fit(c);
  const Eigen::VectorXd preds = kiv::predict(bundle.fit, bundle.eval_points);
  kiv::write_predictions_csv(c.out + ".predictions.csv", preds);
  kiv::write_json(c.out + ".fit.json", fit_metadata(bundle.fit));
  echo_config(c);
  return 0;
}

int cmd_band(const RunConfig& c) {
  FitBundle bundle = load_and_fit(c);
  const kiv::BootstrapResult boot = kiv::run_bootstrap(
      bundle.fit, c.bootstrap_b, c.chi, c.seed, c.threads);
  const double kappa =
      c.kappa > 0.0 ? c.kappa
                    : kiv::kernel_bound(bundle.fit.kx, bundle.fit.data.X,
                                        bundle.eval_points);
  const kiv::ConfidenceBand band =
      kiv::confidence_band(bundle.fit, boot.t_hat, c.chi, kappa, bundle.eval_points);
  kiv::write_band_csv(c.out + ".band.csv", band);
  json summary = kiv::band_summary_json(bundle.fit, band, c.bootstrap_b, c.seed);
  summary["fit"] = fit_metadata(bundle.fit);
  kiv::write_json(c.out + ".summary.json", summary);
  echo_config(c);
  return 0;
}

int cmd_simulate(const RunConfig& c) {
  const kiv::Simulation sim = kiv::simulate_iv(dgp_from_config(c));
  kiv::write_dataset_csv(c.out + ".data.csv", sim.data);
  echo_config(c);
  return 0;
}

int cmd_coverage(const RunConfig& c) {
  kiv::CoverageConfig cov;
  cov.dgp = dgp_from_config(c);
  cov.kx = kiv::parse_kernel_spec(c.kernel_x);
  cov.kz = kiv::parse_kernel_spec(c.kernel_z);
  cov.lambda = c.lambda;
  cov.mu = c.mu;
  cov.reps = c.reps;
  cov.bootstrap_b = c.bootstrap_b;
  cov.chi = c.chi;
  cov.seed = c.seed;
  cov.threads = c.threads;
  const kiv::CoverageSummary summary = kiv::run_coverage(cov);

  json j;
  j["reps"] = summary.reps;
  j["n"] = c.n;
  j["B"] = c.bootstrap_b;
  j["chi"] = c.chi;
  j["lambda"] = c.lambda;
  j["mu"] = c.mu;
  j["seed"] = c.seed;
  j["sup_coverage"] = summary.sup_rate;
  j["sup_se"] = summary.sup_se;
  j["sup_covered"] = summary.sup_covered;
  j["rkhs_available"] = summary.rkhs_available;
  if (summary.rkhs_available) {
    j["rkhs_coverage"] = summary.rkhs_rate;
    j["rkhs_se"] = summary.rkhs_se;
    j["rkhs_covered"] = summary.rkhs_covered;
  } else {
    j["rkhs_coverage"] = nullptr;
    j["rkhs_se"] = nullptr;
    j["rkhs_covered"] = nullptr;
  }
  kiv::write_json(c.out + ".coverage.json", j);
  echo_config(c);
  return 0;
}

// Single-column eigenvalue file with header "eig"; sorted descending here.
std::vector<double> read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kiv::InputError("cannot open spectrum file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.find("eig") != 0)
    throw kiv::InputError("spectrum CSV must start with an 'eig' header");
  std::vector<double> eigs;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    try {
      eigs.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw kiv::InputError("spectrum CSV: bad value at row " + std::to_string(row));
    }
  }
  if (eigs.empty()) throw kiv::InputError("spectrum CSV: no eigenvalues");
  std::sort(eigs.begin(), eigs.end(), std::greater<double>());
  return eigs;
}

int cmd_diagnose(const RunConfig& c) {
  json spectral;
  std::optional<double> data_n;

  if (!c.spectrum.empty()) {
    const std::vector<double> eigs = read_spectrum_csv(c.spectrum);
    spectral["eigs"] = eigs;
    spectral["trace"] = kiv::local_width(eigs, 0);
    spectral["n_z_mu"] = kiv::effective_dim_z(eigs, c.mu);
    spectral["m_lam"] = kiv::effective_dim_from_eigs(eigs, c.lambda);
    spectral["decay"] = kiv::decay_json(kiv::fit_decay(eigs));
  } else {
    FitBundle bundle = load_and_fit(c);
    const kiv::SpectralReport report = kiv::spectral_report(bundle.fit);
    spectral = kiv::spectral_report_json(report);
    data_n = static_cast<double>(bundle.fit.n());
  }
  kiv::write_json(c.out + ".spectral.json", spectral);

  if (c.regime_set) {
    kiv::RegimeParams params{c.alpha, c.beta, c.rho_x, c.rho_z, c.iota};
    const auto rows = kiv::check_regime(params);
    json verdicts;
    verdicts["rows"] = kiv::regime_rows_json(rows);
    verdicts["overall_pass"] = kiv::all_pass(rows);
    if (data_n) {
      const auto size_rows =
          kiv::check_sample_size(params, *data_n, c.lambda, c.mu);
      verdicts["sample_size_rows"] = kiv::regime_rows_json(size_rows);
    }
    kiv::write_json(c.out + ".regime.json", verdicts);
  }
  echo_config(c);
  return 0;
}

// --config supplies defaults; explicitly passed flags override them.
std::optional<std::string> prescan_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  std::string config_path;

  try {
    if (auto path = prescan_config_path(argc, argv)) {
      std::ifstream in(*path);
      if (!in) {
        std::cerr << "error: cannot open config file '" << *path << "'\n";
        return 2;
      }
      json j;
      try {
        j = json::parse(in);
      } catch (const std::exception& e) {
        std::cerr << "error: bad config JSON: " << e.what() << "\n";
        return 4;
      }
      from_json(j, cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }

  CLI::App app{"Kernel instrumental variable regression with uniform confidence bands"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config supplying defaults");
    sub->add_option("--out", cfg.out, "output path prefix");
    sub->add_option("--lambda", cfg.lambda, "second-stage regularization");
    sub->add_option("--mu", cfg.mu, "first-stage regularization");
    sub->add_option("--kernel-x", cfg.kernel_x, "covariate kernel spec");
    sub->add_option("--kernel-z", cfg.kernel_z, "instrument kernel spec");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--threads", cfg.threads, "worker threads (1 = reference mode)");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit on CSV data, write predictions");
  add_common(fit);
  fit->add_option("--input", cfg.input, "dataset CSV");
  fit->add_option("--grid", cfg.grid, "evaluation grid CSV (default: training X)");

  CLI::App* band = app.add_subcommand("band", "fit plus bootstrap uniform band");
  add_common(band);
  band->add_option("--input", cfg.input, "dataset CSV");
  band->add_option("--grid", cfg.grid, "evaluation grid CSV (default: training X)");
  band->add_option("--bootstrap", cfg.bootstrap_b, "bootstrap iterations B");
  band->add_option("--chi", cfg.chi, "miscoverage level in (0,1)");
  band->add_option("--kappa", cfg.kappa, "override the kernel bound kappa_x");

  CLI::App* simulate = app.add_subcommand("simulate", "write a synthetic IV dataset");
  add_common(simulate);
  simulate->add_option("--dgp", cfg.dgp_kind, "linear or nonlinear");
  simulate->add_option("--n", cfg.n, "sample size");
  simulate->add_option("--p", cfg.p, "covariate dimension");
  simulate->add_option("--q", cfg.q, "instrument dimension");
  simulate->add_option("--rho-e", cfg.rho_e, "endogeneity in [0,1)");
  simulate->add_option("--sigma-bar", cfg.sigma_bar, "noise bound");
  simulate->add_option("--gamma", cfg.gamma, "structural coefficients")->delimiter(',');

  CLI::App* coverage = app.add_subcommand("coverage", "Monte Carlo coverage experiment");
  add_common(coverage);
  coverage->add_option("--dgp", cfg.dgp_kind, "linear or nonlinear");
  coverage->add_option("--n", cfg.n, "sample size per replication");
  coverage->add_option("--p", cfg.p, "covariate dimension");
  coverage->add_option("--q", cfg.q, "instrument dimension");
  coverage->add_option("--rho-e", cfg.rho_e, "endogeneity in [0,1)");
  coverage->add_option("--sigma-bar", cfg.sigma_bar, "noise bound");
  coverage->add_option("--gamma", cfg.gamma, "structural coefficients")->delimiter(',');
  coverage->add_option("--reps", cfg.reps, "number of replications");
  coverage->add_option("--bootstrap", cfg.bootstrap_b, "bootstrap iterations B");
  coverage->add_option("--chi", cfg.chi, "miscoverage level in (0,1)");

  CLI::App* diagnose = app.add_subcommand("diagnose", "spectral report and regime checks");
  add_common(diagnose);
  diagnose->add_option("--input", cfg.input, "dataset CSV");
  diagnose->add_option("--grid", cfg.grid, "evaluation grid CSV");
  diagnose->add_option("--spectrum", cfg.spectrum, "eigenvalue CSV instead of data");
  auto* alpha_opt = diagnose->add_option("--alpha", cfg.alpha, "source smoothness [0,1]");
  auto* beta_opt = diagnose->add_option("--beta", cfg.beta, "link smoothness [1/2,1]");
  auto* rhox_opt = diagnose->add_option("--rho-x", cfg.rho_x, "covariate decay (1,2]");
  auto* rhoz_opt = diagnose->add_option("--rho-z", cfg.rho_z, "instrument decay (1,2]");
  auto* iota_opt = diagnose->add_option("--iota", cfg.iota, "lambda = mu^iota exponent (0,1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  if (alpha_opt->count() || beta_opt->count() || rhox_opt->count() ||
      rhoz_opt->count() || iota_opt->count())
    cfg.regime_set = true;

  try {
    if (fit->parsed()) {
      cfg.command = "fit";
      return cmd_fit(cfg);
    }
    if (band->parsed()) {
      cfg.command = "band";
      return cmd_band(cfg);
    }
    if (simulate->parsed()) {
      cfg.command = "simulate";
      return cmd_simulate(cfg);
    }
    if (coverage->parsed()) {
      cfg.command = "coverage";
      return cmd_coverage(cfg);
    }
    if (diagnose->parsed()) {
      cfg.command = "diagnose";
      return cmd_diagnose(cfg);
    }
  } catch (const kiv::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const kiv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 4;
  } catch (const kiv::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 4;
}
