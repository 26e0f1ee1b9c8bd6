#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace kiv {

enum class KernelFamily { linear, polynomial, gaussian, kendall };

inline const char* family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::linear: return "linear";
    case KernelFamily::polynomial: return "polynomial";
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::kendall: return "kendall";
  }
  return "unknown";
}

// A positive-definite kernel family with its parameters. `degree` and
// `offset` apply to polynomial kernels, `lengthscale` to the gaussian.
struct KernelSpec {
  KernelFamily family = KernelFamily::linear;
  int degree = 1;
  double offset = 0.0;
  double lengthscale = 1.0;

  static KernelSpec linear() { return {}; }

  static KernelSpec polynomial(int d, double c) {
    KernelSpec s;
    s.family = KernelFamily::polynomial;
    s.degree = d;
    s.offset = c;
    s.validate();
    return s;
  }

  static KernelSpec gaussian(double ell) {
    KernelSpec s;
    s.family = KernelFamily::gaussian;
    s.lengthscale = ell;
    s.validate();
    return s;
  }

  static KernelSpec kendall() {
    KernelSpec s;
    s.family = KernelFamily::kendall;
    return s;
  }

  void validate() const {
    if (family == KernelFamily::polynomial) {
      if (degree < 1)
        throw std::invalid_argument("KernelSpec: polynomial degree must be >= 1");
      if (!(offset >= 0.0) || !std::isfinite(offset))
        throw std::invalid_argument("KernelSpec: polynomial offset must be >= 0");
    } else if (family == KernelFamily::gaussian) {
      if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw std::invalid_argument("KernelSpec: gaussian lengthscale must be > 0");
    }
  }

  bool ranking_input() const { return family == KernelFamily::kendall; }
};

// Ranking over m >= 2 items; position i holds the rank of item i.
// Entries must be a bijection onto {1,...,m}.
class Ranking {
 public:
  explicit Ranking(std::vector<int> ranks) : ranks_(std::move(ranks)) {
    const int m = static_cast<int>(ranks_.size());
    if (m < 2) throw std::invalid_argument("Ranking: need at least two items");
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    for (int r : ranks_) {
      if (r < 1 || r > m || seen[static_cast<std::size_t>(r - 1)])
        throw std::invalid_argument("Ranking: entries must be a permutation of 1..m");
      seen[static_cast<std::size_t>(r - 1)] = true;
    }
  }

  const std::vector<int>& ranks() const { return ranks_; }
  int size() const { return static_cast<int>(ranks_.size()); }
  bool operator==(const Ranking& other) const { return ranks_ == other.ranks_; }

 private:
  std::vector<int> ranks_;
};

// Pipe-delimited rank string, e.g. "3|1|2".
inline Ranking parse_ranking(const std::string& text) {
  std::vector<int> ranks;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t bar = text.find('|', start);
    const std::string tok =
        text.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("Ranking: cannot parse rank entry '" + tok + "'");
    }
    if (used != tok.size())
      throw std::invalid_argument("Ranking: cannot parse rank entry '" + tok + "'");
    ranks.push_back(value);
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return Ranking(std::move(ranks));
}

inline std::string format_ranking(const Ranking& r) {
  std::string out;
  for (int i = 0; i < r.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(r.ranks()[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Number of item pairs {i,j} ordered oppositely by the two rankings.
inline int kendall_disagreements(const Ranking& a, const Ranking& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("kendall_disagreements: rankings of unequal length");
  const auto& ra = a.ranks();
  const auto& rb = b.ranks();
  const int m = a.size();
  int count = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if ((ra[static_cast<std::size_t>(i)] - ra[static_cast<std::size_t>(j)]) *
              (rb[static_cast<std::size_t>(i)] - rb[static_cast<std::size_t>(j)]) < 0)
        ++count;
  return count;
}

namespace detail {

// Integer power by repeated multiplication; exact passthrough for exp == 1.
inline double ipow(double base, int exp) {
  double out = 1.0;
  for (int k = 0; k < exp; ++k) out *= base;
  return out;
}

}  // namespace detail

template <typename DerivedA, typename DerivedB>
double eval_kernel(const KernelSpec& spec, const Eigen::MatrixBase<DerivedA>& a,
                   const Eigen::MatrixBase<DerivedB>& b) {
  EIGEN_STATIC_ASSERT_VECTOR_ONLY(DerivedA)
  EIGEN_STATIC_ASSERT_VECTOR_ONLY(DerivedB)
  spec.validate();
  if (spec.family == KernelFamily::kendall)
    throw std::invalid_argument("eval_kernel: kendall kernel requires ranking inputs");
  if (a.size() != b.size())
    throw std::invalid_argument("eval_kernel: dimension mismatch");
  switch (spec.family) {
    case KernelFamily::linear:
      return a.dot(b);
    case KernelFamily::polynomial:
      return detail::ipow(a.dot(b) + spec.offset, spec.degree);
    case KernelFamily::gaussian: {
      // indexed loop so row- and column-vector arguments can mix
      double d2 = 0.0;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double diff = a(i) - b(i);
        d2 += diff * diff;
      }
      return std::exp(-d2 / (2.0 * spec.lengthscale * spec.lengthscale));
    }
    default:
      break;
  }
  throw std::invalid_argument("eval_kernel: unknown kernel family");
}

inline double eval_kernel(const KernelSpec& spec, const Ranking& a, const Ranking& b) {
  spec.validate();
  if (spec.family != KernelFamily::kendall)
    throw std::invalid_argument("eval_kernel: ranking inputs require the kendall kernel");
  return std::exp(-static_cast<double>(kendall_disagreements(a, b)));
}

// Homogeneous collection of kernel inputs: Euclidean rows or rankings.
class PointSet {
 public:
  static PointSet euclidean(Eigen::MatrixXd rows) {
    if (!rows.allFinite())
      throw std::invalid_argument("PointSet: non-finite coordinates");
    PointSet p;
    p.rows_ = std::move(rows);
    return p;
  }

  static PointSet rankings(std::vector<Ranking> ranks) {
    for (std::size_t i = 1; i < ranks.size(); ++i)
      if (ranks[i].size() != ranks[0].size())
        throw std::invalid_argument("PointSet: rankings of mixed length");
    PointSet p;
    p.is_ranking_ = true;
    p.ranks_ = std::move(ranks);
    return p;
  }

  bool is_ranking() const { return is_ranking_; }

  Eigen::Index size() const {
    return is_ranking_ ? static_cast<Eigen::Index>(ranks_.size()) : rows_.rows();
  }

  // Vector dimension for Euclidean points, number of ranked items otherwise.
  Eigen::Index dim() const {
    if (!is_ranking_) return rows_.cols();
    return ranks_.empty() ? 0 : static_cast<Eigen::Index>(ranks_[0].size());
  }

  const Eigen::MatrixXd& rows() const {
    if (is_ranking_) throw std::invalid_argument("PointSet: ranking set has no coordinate rows");
    return rows_;
  }

  const std::vector<Ranking>& ranks() const {
    if (!is_ranking_) throw std::invalid_argument("PointSet: euclidean set has no rankings");
    return ranks_;
  }

 private:
  PointSet() = default;
  bool is_ranking_ = false;
  Eigen::MatrixXd rows_;
  std::vector<Ranking> ranks_;
};

// Concatenation of two homogeneous point sets.
inline PointSet concat(const PointSet& a, const PointSet& b) {
  if (a.is_ranking() != b.is_ranking() || a.dim() != b.dim())
    throw std::invalid_argument("concat: heterogeneous point sets");
  if (a.is_ranking()) {
    std::vector<Ranking> all = a.ranks();
    all.insert(all.end(), b.ranks().begin(), b.ranks().end());
    return PointSet::rankings(std::move(all));
  }
  Eigen::MatrixXd rows(a.size() + b.size(), a.dim());
  rows.topRows(a.size()) = a.rows();
  rows.bottomRows(b.size()) = b.rows();
  return PointSet::euclidean(std::move(rows));
}

// Entry (i,j) = k(a_i, b_j). When both arguments are the same object the
// upper triangle is mirrored, so the result is symmetric bit-exactly.
inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const PointSet& a,
                                   const PointSet& b) {
  spec.validate();
  if (a.size() == 0 || b.size() == 0)
    throw std::invalid_argument("gram_matrix: empty input");
  if (a.is_ranking() != b.is_ranking() || a.dim() != b.dim())
    throw std::invalid_argument("gram_matrix: heterogeneous inputs");
  if (spec.ranking_input() != a.is_ranking())
    throw std::invalid_argument("gram_matrix: kernel family does not match input space");

  const bool same = (&a == &b);
  Eigen::MatrixXd g(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Eigen::Index j0 = same ? i : 0;
    for (Eigen::Index j = j0; j < b.size(); ++j) {
      const double v =
          a.is_ranking()
              ? eval_kernel(spec, a.ranks()[static_cast<std::size_t>(i)],
                            b.ranks()[static_cast<std::size_t>(j)])
              : eval_kernel(spec, a.rows().row(i), b.rows().row(j));
      g(i, j) = v;
      if (same) g(j, i) = v;
    }
  }
  return g;
}

inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const PointSet& a) {
  return gram_matrix(spec, a, a);
}

// kappa-hat = max over the supplied points of sqrt(k(x,x)). Exactly 1 for
// the gaussian and kendall families; data-dependent for linear/polynomial.
inline double kernel_bound(const KernelSpec& spec, const PointSet& pts) {
  spec.validate();
  if (pts.size() == 0)
    throw std::invalid_argument("kernel_bound: empty point list");
  if (spec.family == KernelFamily::gaussian || spec.family == KernelFamily::kendall)
    return 1.0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    const double kxx = eval_kernel(spec, pts.rows().row(i), pts.rows().row(i));
    best = std::max(best, kxx);
  }
  return std::sqrt(best);
}

inline double kernel_bound(const KernelSpec& spec, const PointSet& a, const PointSet& b) {
  return std::max(kernel_bound(spec, a), kernel_bound(spec, b));
}

// True when kernel_bound depends on the evaluation points rather than being
// a global constant of the kernel family.
inline bool kernel_bound_is_data_dependent(const KernelSpec& spec) {
  return spec.family == KernelFamily::linear || spec.family == KernelFamily::polynomial;
}

inline std::string to_string(const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::linear: return "linear";
    case KernelFamily::kendall: return "kendall";
    case KernelFamily::polynomial:
      return "polynomial:d=" + std::to_string(spec.degree) +
             ",c=" + std::to_string(spec.offset);
    case KernelFamily::gaussian:
      return "gaussian:ell=" + std::to_string(spec.lengthscale);
  }
  return "unknown";
}

// Accepts "linear", "kendall", "polynomial:d=2,c=1", "gaussian:ell=0.5".
inline KernelSpec parse_kernel_spec(const std::string& text) {
  const std::size_t colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);

  auto parse_args = [&args]() {
    std::vector<std::pair<std::string, double>> kv;
    std::size_t start = 0;
    while (start < args.size()) {
      std::size_t comma = args.find(',', start);
      if (comma == std::string::npos) comma = args.size();
      const std::string item = args.substr(start, comma - start);
      const std::size_t eq = item.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("KernelSpec: expected key=value in '" + item + "'");
      std::size_t used = 0;
      double value = 0;
      const std::string vtext = item.substr(eq + 1);
      try {
        value = std::stod(vtext, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("KernelSpec: bad numeric value '" + vtext + "'");
      }
      if (used != vtext.size())
        throw std::invalid_argument("KernelSpec: bad numeric value '" + vtext + "'");
      kv.emplace_back(item.substr(0, eq), value);
      start = comma + 1;
    }
    return kv;
  };

  if (name == "linear") {
    if (!args.empty()) throw std::invalid_argument("KernelSpec: linear takes no parameters");
    return KernelSpec::linear();
  }
  if (name == "kendall") {
    if (!args.empty()) throw std::invalid_argument("KernelSpec: kendall takes no parameters");
    return KernelSpec::kendall();
  }
  if (name == "polynomial") {
    int d = 2;
    double c = 1.0;
    for (const auto& [key, value] : parse_args()) {
      if (key == "d") d = static_cast<int>(value);
      else if (key == "c") c = value;
      else throw std::invalid_argument("KernelSpec: unknown polynomial parameter '" + key + "'");
    }
    return KernelSpec::polynomial(d, c);
  }
  if (name == "gaussian") {
    double ell = 1.0;
    for (const auto& [key, value] : parse_args()) {
      if (key == "ell") ell = value;
      else throw std::invalid_argument("KernelSpec: unknown gaussian parameter '" + key + "'");
    }
    return KernelSpec::gaussian(ell);
  }
  throw std::invalid_argument("KernelSpec: unknown kernel family '" + name + "'");
}

}  // namespace kiv
