#include "setfn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "errors.hpp"

namespace summax {

namespace {

constexpr double kSlack = 1e-12;  // absorbs float associativity in boolean checkers

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    require(std::isfinite(x), ErrorKind::invalid_argument, std::string(what) + " must be finite");
}

}  // namespace

SumMaxFunction SumMaxFunction::make(int num_rows, int num_arms, std::vector<double> values,
                                    double empty_value) {
  require(num_rows >= 1, ErrorKind::invalid_argument, "sum-max: need at least one row");
  require(num_arms >= 1 && num_arms <= 64, ErrorKind::invalid_argument,
          "sum-max: num_arms must be in [1, 64]");
  require(values.size() == static_cast<size_t>(num_rows) * num_arms, ErrorKind::invalid_argument,
          "sum-max: matrix size does not match num_rows x num_arms");
  require_finite(values, "sum-max matrix entries");
  require(std::isfinite(empty_value), ErrorKind::invalid_argument, "sum-max: empty value must be finite");

  double sum_min = 0.0;
  for (int k = 0; k < num_rows; ++k) {
    double mn = values[static_cast<size_t>(k) * num_arms];
    for (int i = 1; i < num_arms; ++i) mn = std::min(mn, values[static_cast<size_t>(k) * num_arms + i]);
    sum_min += mn;
  }
  require(empty_value <= sum_min + kSlack * std::max(1.0, std::abs(sum_min)),
          ErrorKind::invalid_argument, "sum-max: empty value exceeds sum of row minima");

  SumMaxFunction f;
  f.num_rows = num_rows;
  f.num_arms = num_arms;
  f.values = std::move(values);
  f.empty_value = empty_value;
  return f;
}

double SumMaxFunction::eval(Mask subset) const {
  require((subset & ~full_mask(num_arms)) == 0, ErrorKind::invalid_argument,
          "eval: subset bitmask out of range");
  if (subset == 0) return empty_value;
  double total = 0.0;
  for (int k = 0; k < num_rows; ++k) {
    const double* row = values.data() + static_cast<size_t>(k) * num_arms;
    double mx = -std::numeric_limits<double>::infinity();
    Mask rest = subset;
    while (rest) {
      int i = __builtin_ctzll(rest);
      rest &= rest - 1;
      mx = std::max(mx, row[i]);
    }
    total += mx;
  }
  return total;
}

double SumMaxFunction::range_lo() const {
  // empty_value <= sum of row minima <= r(S) for nonempty S
  return empty_value;
}

double SumMaxFunction::range_hi() const {
  double total = 0.0;
  for (int k = 0; k < num_rows; ++k) {
    const double* row = values.data() + static_cast<size_t>(k) * num_arms;
    total += *std::max_element(row, row + num_arms);
  }
  return std::max(total, empty_value);
}

SumMaxFunction build_hitting_set(int num_arms, const std::vector<Mask>& sets) {
  require(!sets.empty(), ErrorKind::invalid_argument, "hitting set: no sets given");
  std::vector<double> v(sets.size() * num_arms, 0.0);
  for (size_t k = 0; k < sets.size(); ++k) {
    require((sets[k] & ~full_mask(num_arms)) == 0, ErrorKind::invalid_argument,
            "hitting set: set mask out of range");
    for (int i = 0; i < num_arms; ++i)
      if ((sets[k] >> i) & 1) v[k * num_arms + i] = 1.0;
  }
  return SumMaxFunction::make(static_cast<int>(sets.size()), num_arms, std::move(v), 0.0);
}

SumMaxFunction build_best_of_k(int num_arms, Mask arms) {
  require(arms != 0, ErrorKind::invalid_argument, "best-of-k: empty arm set");
  return build_hitting_set(num_arms, {arms});
}

SumMaxFunction build_combinatorial(const std::vector<double>& weights) {
  require(!weights.empty(), ErrorKind::invalid_argument, "combinatorial: empty weights");
  const int n = static_cast<int>(weights.size());
  require_finite(weights, "combinatorial weights");
  for (double w : weights)
    require(w >= 0.0, ErrorKind::invalid_argument, "combinatorial: weights must be nonnegative");
  std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = weights[i];
  return SumMaxFunction::make(n, n, std::move(v), 0.0);
}

SumMaxFunction build_k_medians(const std::vector<std::vector<double>>& points, Metric metric) {
  require(!points.empty(), ErrorKind::invalid_argument, "k-medians: no points given");
  const int n = static_cast<int>(points.size());
  const size_t dim = points[0].size();
  require(dim >= 1, ErrorKind::invalid_argument, "k-medians: zero-dimensional points");
  for (const auto& p : points) {
    require(p.size() == dim, ErrorKind::invalid_argument, "k-medians: inconsistent point dimensions");
    require_finite(p, "k-medians point coordinates");
  }
  std::vector<double> dist(static_cast<size_t>(n) * n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      if (metric == Metric::euclidean) {
        for (size_t c = 0; c < dim; ++c) {
          double diff = points[k][c] - points[i][c];
          d += diff * diff;
        }
        d = std::sqrt(d);
      } else {
        for (size_t c = 0; c < dim; ++c) d += std::abs(points[k][c] - points[i][c]);
      }
      dist[static_cast<size_t>(k) * n + i] = d;
    }
  return build_k_medians_from_distances(dist, n);
}

SumMaxFunction build_k_medians_from_distances(const std::vector<double>& dist, int n) {
  require(n >= 1, ErrorKind::invalid_argument, "k-medians: need at least one point");
  require(dist.size() == static_cast<size_t>(n) * n, ErrorKind::invalid_argument,
          "k-medians: distance matrix size mismatch");
  require_finite(dist, "k-medians distances");
  double dmax = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      const double d = dist[static_cast<size_t>(k) * n + i];
      require(d >= 0.0, ErrorKind::invalid_argument, "k-medians: negative distance");
      require(std::abs(d - dist[static_cast<size_t>(i) * n + k]) <= 1e-12,
              ErrorKind::invalid_argument, "k-medians: asymmetric distance matrix");
      dmax = std::max(dmax, d);
    }
  // V = D - d keeps the matrix nonnegative; the per-row shift D leaves all
  // marginals and maximizers unchanged and is recorded for reporting.
  std::vector<double> v(static_cast<size_t>(n) * n);
  for (size_t j = 0; j < v.size(); ++j) v[j] = dmax - dist[j];
  auto f = SumMaxFunction::make(n, n, std::move(v), 0.0);
  f.shift = dmax;
  return f;
}

TabulatedSetFunction TabulatedSetFunction::make(int num_arms, std::vector<double> table) {
  require(num_arms >= 1 && num_arms <= 20, ErrorKind::invalid_argument,
          "table: num_arms must be in [1, 20]");
  require(table.size() == (size_t{1} << num_arms), ErrorKind::invalid_argument,
          "table: length must be exactly 2^num_arms");
  require_finite(table, "table entries");
  TabulatedSetFunction g;
  g.num_arms = num_arms;
  g.table = std::move(table);
  return g;
}

double TabulatedSetFunction::max_abs() const {
  double m = 0.0;
  for (double v : table) m = std::max(m, std::abs(v));
  return m;
}

int table_limit() {
  int limit = 12;
  if (const char* env = std::getenv("SUMMAX_TABLE_LIMIT")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 20) limit = static_cast<int>(v);
  }
  return limit;
}

TabulatedSetFunction tabulate(const SumMaxFunction& f, int limit) {
  const int lim = limit > 0 ? std::min(limit, 20) : table_limit();
  require(f.num_arms <= lim, ErrorKind::limit_exceeded,
          "tabulate: " + std::to_string(f.num_arms) + " arms exceeds table limit " +
              std::to_string(lim));
  std::vector<double> table(size_t{1} << f.num_arms);
  for (Mask s = 0; s < table.size(); ++s) table[s] = f.eval(s);
  return TabulatedSetFunction::make(f.num_arms, std::move(table));
}

SubsetDecomposition subset_decomposition(const TabulatedSetFunction& g) {
  // Superset Moebius inverse of r(Q) = sum_{S >= Q} d(S). Equivalent to the
  // reverse induction over cardinality but O(L 2^L).
  const int L = g.num_arms;
  std::vector<double> d = g.table;
  const size_t n = d.size();
  for (int i = 0; i < L; ++i)
    for (size_t mask = 0; mask < n; ++mask)
      if (!((mask >> i) & 1)) d[mask] -= d[mask | (size_t{1} << i)];
  return SubsetDecomposition{L, std::move(d)};
}

double quadratic_form(const TabulatedSetFunction& g, Mask s, std::span<const double> x) {
  const int L = g.num_arms;
  require((s & ~full_mask(L)) == 0, ErrorKind::invalid_argument, "quadratic form: subset out of range");
  require(static_cast<int>(x.size()) == L, ErrorKind::invalid_argument,
          "quadratic form: vector length mismatch");
  double total = 0.0;
  for (int i = 0; i < L; ++i) {
    if (x[i] == 0.0) continue;
    for (int j = 0; j < L; ++j) {
      if (x[j] == 0.0) continue;
      total += x[i] * x[j] * g.at(s | (Mask{1} << i) | (Mask{1} << j));
    }
  }
  return total;
}

PropertyReport check_pseudo_concave(const TabulatedSetFunction& g, double tol) {
  const int L = g.num_arms;
  if (tol <= 0.0) tol = 1e-9 * std::max(1e-300, g.max_abs());

  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(L, L);
  proj.array() -= 1.0 / L;  // P = I - (1/L) 11^T, orthogonal projector onto {x : x.1 = 0}

  PropertyReport report;
  Eigen::MatrixXd u(L, L);
  for (Mask s = 0; s < g.table.size(); ++s) {
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) u(i, j) = g.at(s | (Mask{1} << i) | (Mask{1} << j));
    // symmetrize before the eigenvalue test; the quadratic form only sees the
    // symmetric part
    Eigen::MatrixXd sym = 0.5 * (u + u.transpose());
    Eigen::MatrixXd projected = proj * sym * proj;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(projected);
    const int top = L - 1;
    const double lambda = eig.eigenvalues()(top);
    report.worst = std::max(report.worst, lambda);
    if (lambda > tol) {
      PropertyWitness w;
      w.subset = s;
      Eigen::VectorXd v = proj * eig.eigenvectors().col(top);  // exactly zero-sum up to float
      v /= v.norm();
      w.x.assign(v.data(), v.data() + L);
      w.violation = quadratic_form(g, s, w.x);
      w.detail = "max projected eigenvalue " + std::to_string(lambda);
      report.holds = false;
      report.witness = std::move(w);
      return report;
    }
  }
  return report;
}

PropertyReport check_pseudo_submodular(const TabulatedSetFunction& g) {
  const int L = g.num_arms;
  PropertyReport report;
  for (Mask s = 1; s < g.table.size(); ++s) {
    bool admissible_found = false;
    std::vector<double> shortfalls(L, 0.0);
    for (int i = 0; i < L && !admissible_found; ++i) {
      if (!((s >> i) & 1)) continue;
      const Mask bit = Mask{1} << i;
      const Mask rest = s & ~bit;
      const double base = g.at(s) - g.at(rest);
      double worst = 0.0;
      Mask q = rest;
      while (true) {  // all Q subseteq S \ {i}
        worst = std::max(worst, base - (g.at(q | bit) - g.at(q)));
        if (q == 0) break;
        q = (q - 1) & rest;
      }
      shortfalls[i] = worst;
      if (worst <= kSlack) admissible_found = true;
    }
    if (!admissible_found) {
      PropertyWitness w;
      w.subset = s;
      w.x = shortfalls;
      double mn = std::numeric_limits<double>::infinity();
      for (int i = 0; i < L; ++i)
        if ((s >> i) & 1) mn = std::min(mn, shortfalls[i]);
      w.violation = mn;
      w.detail = "no element of S dominates its own marginal at all subsets";
      report.holds = false;
      report.witness = std::move(w);
      report.worst = mn;
      return report;
    }
  }
  return report;
}

PropertyReport check_monotone_submodular(const TabulatedSetFunction& g) {
  const int L = g.num_arms;
  PropertyReport report;
  // monotonicity
  for (Mask s = 0; s < g.table.size(); ++s)
    for (int i = 0; i < L; ++i) {
      if ((s >> i) & 1) continue;
      const Mask grown = s | (Mask{1} << i);
      if (g.at(grown) < g.at(s) - kSlack) {
        PropertyWitness w;
        w.subset = grown;
        w.aux_subset = s;
        w.element = i + 1;
        w.violation = g.at(s) - g.at(grown);
        w.detail = "monotonicity fails adding the element to the aux subset";
        report.holds = false;
        report.witness = std::move(w);
        report.worst = w.violation;
        return report;
      }
    }
  // diminishing returns, literal form: S subseteq T, i notin T
  for (Mask t = 0; t < g.table.size(); ++t)
    for (int i = 0; i < L; ++i) {
      if ((t >> i) & 1) continue;
      const Mask bit = Mask{1} << i;
      const double marg_t = g.at(t | bit) - g.at(t);
      Mask s = t;
      while (true) {
        const double marg_s = g.at(s | bit) - g.at(s);
        if (marg_s < marg_t - kSlack) {
          PropertyWitness w;
          w.subset = t;
          w.aux_subset = s;
          w.element = i + 1;
          w.violation = marg_t - marg_s;
          w.detail = "marginal at the larger set exceeds marginal at the subset";
          report.holds = false;
          report.witness = std::move(w);
          report.worst = w.violation;
          return report;
        }
        if (s == 0) break;
        s = (s - 1) & t;
      }
    }
  return report;
}

TabulatedSetFunction build_counterexample(double alpha) {
  require(alpha > 0.0 && alpha < 17.0 / 24.0, ErrorKind::invalid_argument,
          "counterexample: alpha must lie in (0, 17/24)");
  const int L = 8;
  const Mask arm8 = Mask{1} << 7;
  std::vector<double> table(size_t{1} << L);
  for (Mask s = 0; s < table.size(); ++s) {
    const int size = popcount_mask(s);
    double v;
    switch (size) {
      case 0: v = -1.0; break;
      case 1: v = 0.0; break;
      case 2: v = 1.0; break;
      case 3:
        if (s & arm8) {
          // triple {i, j, 8}: 2 when i, j fall in the same block of
          // {1..4} / {5..7}, else 1 + alpha (the displayed matrix)
          const Mask rest = s & ~arm8;
          const int i = __builtin_ctzll(rest);
          const int j = 63 - __builtin_clzll(rest);
          const bool same_block = (i < 4) == (j < 4);
          v = same_block ? 2.0 : 1.0 + alpha;
        } else {
          v = 1.0 + alpha;  // fill value; equals 5/3 at alpha = 2/3
        }
        break;
      default:
        // cardinalities 4..8 use the fixed ladder 2 + (|S|-3)/6; only the
        // quadratic-form value 17 - 24 alpha is parametric in alpha
        v = 2.0 + (size - 3) / 6.0;
        break;
    }
    table[s] = v;
  }
  return TabulatedSetFunction::make(L, std::move(table));
}

}  // namespace summax
