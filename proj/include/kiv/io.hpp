#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kiv/bootstrap.hpp"
#include "kiv/diagnostics.hpp"
#include "kiv/estimator.hpp"

namespace kiv {

// Problem reading or parsing an input file; maps to the input-error exit code.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid run configuration; maps to the config-error exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Round-trip decimal formatting, used for all CSV output so reruns are
// byte-identical.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

inline double parse_number(const std::string& token, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw InputError("CSV: non-numeric value '" + token + "' in " + where);
  }
  if (used != token.size())
    throw InputError("CSV: non-numeric value '" + token + "' in " + where);
  return v;
}

struct ColumnLayout {
  bool x_rank = false;
  bool z_rank = false;
  int p = 0;  // euclidean covariate columns
  int q = 0;  // euclidean instrument columns
};

// Header is y, then x1..xp or x_rank, then z1..zq or z_rank.
inline ColumnLayout parse_header(const std::vector<std::string>& names) {
  if (names.empty() || strip(names[0]) != "y")
    throw InputError("CSV: first column must be 'y'");
  ColumnLayout layout;
  std::size_t i = 1;
  if (i < names.size() && strip(names[i]) == "x_rank") {
    layout.x_rank = true;
    ++i;
  } else {
    while (i < names.size() &&
           strip(names[i]) == "x" + std::to_string(layout.p + 1)) {
      ++layout.p;
      ++i;
    }
    if (layout.p == 0) throw InputError("CSV: expected x1.. or x_rank after y");
  }
  if (i < names.size() && strip(names[i]) == "z_rank") {
    layout.z_rank = true;
    ++i;
  } else {
    while (i < names.size() &&
           strip(names[i]) == "z" + std::to_string(layout.q + 1)) {
      ++layout.q;
      ++i;
    }
    if (layout.q == 0) throw InputError("CSV: expected z1.. or z_rank columns");
  }
  if (i != names.size())
    throw InputError("CSV: unexpected column '" + strip(names[i]) + "'");
  return layout;
}

}  // namespace detail

// Flat dataset file: header row y, x..., z...; rankings are single
// pipe-delimited columns x_rank / z_rank.
inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw InputError("CSV: empty file '" + path + "'");
  const auto layout = detail::parse_header(detail::split(line, ','));
  const std::size_t expected =
      1 + (layout.x_rank ? 1 : layout.p) + (layout.z_rank ? 1 : layout.q);

  std::vector<double> y;
  std::vector<double> xflat, zflat;
  std::vector<Ranking> xranks, zranks;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::strip(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    const std::string where = "row " + std::to_string(row);
    if (cells.size() != expected)
      throw InputError("CSV: wrong number of columns in " + where);
    std::size_t c = 0;
    y.push_back(detail::parse_number(detail::strip(cells[c++]), where));
    try {
      if (layout.x_rank) {
        xranks.push_back(parse_ranking(detail::strip(cells[c++])));
      } else {
        for (int j = 0; j < layout.p; ++j)
          xflat.push_back(detail::parse_number(detail::strip(cells[c++]), where));
      }
      if (layout.z_rank) {
        zranks.push_back(parse_ranking(detail::strip(cells[c++])));
      } else {
        for (int j = 0; j < layout.q; ++j)
          zflat.push_back(detail::parse_number(detail::strip(cells[c++]), where));
      }
    } catch (const std::invalid_argument& e) {
      throw InputError("CSV: " + std::string(e.what()) + " in " + where);
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(y.size());
  if (n < 2) throw InputError("CSV: need at least two data rows");

  auto to_matrix = [n](const std::vector<double>& flat, int cols) {
    Eigen::MatrixXd m(n, cols);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < cols; ++j)
        m(i, j) = flat[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j)];
    return m;
  };

  try {
    PointSet xs = layout.x_rank ? PointSet::rankings(std::move(xranks))
                                : PointSet::euclidean(to_matrix(xflat, layout.p));
    PointSet zs = layout.z_rank ? PointSet::rankings(std::move(zranks))
                                : PointSet::euclidean(to_matrix(zflat, layout.q));
    Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(y.data(), n);
    return Dataset(std::move(zs), std::move(xs), std::move(yv));
  } catch (const std::invalid_argument& e) {
    throw InputError("CSV: " + std::string(e.what()));
  }
}

inline void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file '" + path + "'");
  out << "y";
  if (data.X.is_ranking()) {
    out << ",x_rank";
  } else {
    for (Eigen::Index j = 0; j < data.X.dim(); ++j) out << ",x" << (j + 1);
  }
  if (data.Z.is_ranking()) {
    out << ",z_rank";
  } else {
    for (Eigen::Index j = 0; j < data.Z.dim(); ++j) out << ",z" << (j + 1);
  }
  out << "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]);
    if (data.X.is_ranking()) {
      out << ',' << format_ranking(data.X.ranks()[static_cast<std::size_t>(i)]);
    } else {
      for (Eigen::Index j = 0; j < data.X.dim(); ++j)
        out << ',' << format_double(data.X.rows()(i, j));
    }
    if (data.Z.is_ranking()) {
      out << ',' << format_ranking(data.Z.ranks()[static_cast<std::size_t>(i)]);
    } else {
      for (Eigen::Index j = 0; j < data.Z.dim(); ++j)
        out << ',' << format_double(data.Z.rows()(i, j));
    }
    out << "\n";
  }
}

// Covariate-only grid: header x1..xp or x_rank.
inline PointSet read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grid file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("CSV: empty grid file");
  const auto names = detail::split(line, ',');

  bool rank = !names.empty() && detail::strip(names[0]) == "x_rank";
  int p = 0;
  if (!rank) {
    while (p < static_cast<int>(names.size()) &&
           detail::strip(names[static_cast<std::size_t>(p)]) ==
               "x" + std::to_string(p + 1))
      ++p;
    if (p == 0 || p != static_cast<int>(names.size()))
      throw InputError("CSV: grid header must be x1..xp or x_rank");
  } else if (names.size() != 1) {
    throw InputError("CSV: grid header must be x1..xp or x_rank");
  }

  std::vector<double> flat;
  std::vector<Ranking> ranks;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::strip(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    const std::string where = "grid row " + std::to_string(row);
    try {
      if (rank) {
        if (cells.size() != 1) throw InputError("CSV: wrong number of columns in " + where);
        ranks.push_back(parse_ranking(detail::strip(cells[0])));
      } else {
        if (static_cast<int>(cells.size()) != p)
          throw InputError("CSV: wrong number of columns in " + where);
        for (int j = 0; j < p; ++j)
          flat.push_back(detail::parse_number(detail::strip(cells[static_cast<std::size_t>(j)]), where));
      }
    } catch (const std::invalid_argument& e) {
      throw InputError("CSV: " + std::string(e.what()) + " in " + where);
    }
  }
  if (rank) {
    if (ranks.empty()) throw InputError("CSV: empty grid");
    return PointSet::rankings(std::move(ranks));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(flat.size()) / p;
  if (n == 0) throw InputError("CSV: empty grid");
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      m(i, j) = flat[static_cast<std::size_t>(i) * p + static_cast<std::size_t>(j)];
  return PointSet::euclidean(std::move(m));
}

inline void write_predictions_csv(const std::string& path, const Eigen::VectorXd& h) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file '" + path + "'");
  out << "x-id,h_hat\n";
  for (Eigen::Index i = 0; i < h.size(); ++i)
    out << i << ',' << format_double(h[i]) << "\n";
}

inline void write_band_csv(const std::string& path, const ConfidenceBand& band) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file '" + path + "'");
  out << "x-id,h_hat,lower,upper\n";
  for (std::size_t i = 0; i < band.points.size(); ++i)
    out << i << ',' << format_double(band.points[i].h_hat) << ','
        << format_double(band.points[i].lower) << ','
        << format_double(band.points[i].upper) << "\n";
}

inline nlohmann::json band_summary_json(const FitState& fit, const ConfidenceBand& band,
                                        int b, std::uint64_t seed) {
  return nlohmann::json{{"n", static_cast<int>(fit.n())},
                        {"B", b},
                        {"chi", band.chi},
                        {"t_hat", band.t_hat},
                        {"kappa_x", band.kappa_x},
                        {"kappa_data_dependent", kernel_bound_is_data_dependent(fit.kx)},
                        {"inflation", band.inflation},
                        {"radius_sup", band.radius_sup},
                        {"radius_rkhs", band.radius_rkhs},
                        {"seed", seed}};
}

inline nlohmann::json decay_json(const DecayFit& decay) {
  nlohmann::json j;
  j["points_used"] = decay.points_used;
  j["slope"] = decay.slope;
  j["omega"] = decay.omega;
  if (std::isfinite(decay.rho))
    j["rho"] = decay.rho;
  else
    j["rho"] = nullptr;
  j["in_polynomial_range"] = decay.in_polynomial_range();
  return j;
}

inline nlohmann::json spectral_report_json(const SpectralReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  j["lambda"] = report.lambda;
  j["mu"] = report.mu;
  j["eigs_x"] = report.eigs_x;
  j["eigs_z"] = report.eigs_z;
  j["eigs_T"] = report.eigs_T;
  j["n_z_mu"] = report.n_z_mu;
  j["m_lam_mu"] = report.m_lam_mu;
  if (std::isfinite(report.m_tilde))
    j["m_tilde"] = report.m_tilde;
  else
    j["m_tilde"] = nullptr;
  // descriptive strong-instrument statistic m_tilde * lambda^rho_x
  if (std::isfinite(report.m_tilde) && std::isfinite(report.decay_x.rho))
    j["strong_instrument_stat"] =
        report.m_tilde * std::pow(report.lambda, report.decay_x.rho);
  else
    j["strong_instrument_stat"] = nullptr;
  j["decay_x"] = decay_json(report.decay_x);
  j["decay_z"] = decay_json(report.decay_z);
  return j;
}

inline nlohmann::json regime_rows_json(const std::vector<RegimeRow>& rows) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& row : rows)
    list.push_back({{"row", row.row},
                    {"lhs", row.lhs},
                    {"rhs", row.rhs},
                    {"relation", row.strict_less ? "<" : ">"},
                    {"pass", row.pass}});
  return list;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace kiv
