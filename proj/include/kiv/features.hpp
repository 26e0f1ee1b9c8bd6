#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "kiv/kernels.hpp"

namespace kiv {

// Explicit finite-dimensional feature maps for the linear and polynomial
// families. (x'y + c)^d = <psi(x), psi(y)> with monomial features scaled by
// square roots of multinomial coefficients; dimension is C(p+d, d).

inline bool has_explicit_features(const KernelSpec& spec) {
  return spec.family == KernelFamily::linear || spec.family == KernelFamily::polynomial;
}

namespace detail {

inline double binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

// All (p+1)-part compositions of d: exponents (k0, k1, ..., kp) with sum d.
// k0 belongs to the constant offset.
inline void compositions(int total, int parts, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    current.push_back(total);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int k = 0; k <= total; ++k) {
    current.push_back(k);
    compositions(total - k, parts - 1, current, out);
    current.pop_back();
  }
}

inline double multinomial(int d, const std::vector<int>& k) {
  double out = 1.0;
  int rem = d;
  for (int ki : k) {
    out *= binomial(rem, ki);
    rem -= ki;
  }
  return out;
}

}  // namespace detail

inline Eigen::Index feature_dim(const KernelSpec& spec, Eigen::Index input_dim) {
  if (spec.family == KernelFamily::linear) return input_dim;
  if (spec.family == KernelFamily::polynomial)
    return static_cast<Eigen::Index>(
        detail::binomial(static_cast<int>(input_dim) + spec.degree, spec.degree) + 0.5);
  throw std::invalid_argument("feature_map: kernel family has no explicit features");
}

// Rows of the design matrix mapped to feature space, one feature row per
// input row.
inline Eigen::MatrixXd feature_map(const KernelSpec& spec, const Eigen::MatrixXd& rows) {
  spec.validate();
  if (spec.family == KernelFamily::linear) return rows;
  if (spec.family != KernelFamily::polynomial)
    throw std::invalid_argument("feature_map: kernel family has no explicit features");

  const int p = static_cast<int>(rows.cols());
  const int d = spec.degree;
  std::vector<std::vector<int>> exps;
  std::vector<int> current;
  detail::compositions(d, p + 1, current, exps);

  Eigen::MatrixXd features(rows.rows(), static_cast<Eigen::Index>(exps.size()));
  for (std::size_t f = 0; f < exps.size(); ++f) {
    const auto& k = exps[f];
    const double coef =
        std::sqrt(detail::multinomial(d, k) * detail::ipow(spec.offset, k[0]));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      double mono = 1.0;
      for (int j = 0; j < p; ++j)
        mono *= detail::ipow(rows(i, j), k[static_cast<std::size_t>(j + 1)]);
      features(i, static_cast<Eigen::Index>(f)) = coef * mono;
    }
  }
  return features;
}

}  // namespace kiv
