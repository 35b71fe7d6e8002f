#pragma once
// Set functions over [L]: the sum-max family, dense tabulations, the unique
// subset decomposition, and property checkers (pseudo-concavity,
// pseudo-submodularity, monotone submodularity).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace summax {

using Mask = std::uint64_t;

inline int popcount_mask(Mask m) { return __builtin_popcountll(m); }
inline Mask full_mask(int num_arms) { return (num_arms >= 64) ? ~Mask{0} : ((Mask{1} << num_arms) - 1); }

// r(S) = sum_k max_{i in S} V_{k,i}, with a separate value for S = {} bounded
// above by sum_k min_i V_{k,i}.
struct SumMaxFunction {
  int num_rows = 0;
  int num_arms = 0;
  std::vector<double> values;  // row-major, num_rows x num_arms
  double empty_value = 0.0;
  double shift = 0.0;  // per-row additive shift applied at construction (k-medians), 0 otherwise

  static SumMaxFunction make(int num_rows, int num_arms, std::vector<double> values,
                             double empty_value);

  double value_at(int row, int arm) const { return values[static_cast<size_t>(row) * num_arms + arm]; }
  double eval(Mask subset) const;
  // lower/upper bounds on r over all subsets, cheap (no enumeration)
  double range_lo() const;
  double range_hi() const;
};

SumMaxFunction build_hitting_set(int num_arms, const std::vector<Mask>& sets);
SumMaxFunction build_best_of_k(int num_arms, Mask arms);
SumMaxFunction build_combinatorial(const std::vector<double>& weights);

enum class Metric { euclidean, manhattan };
// Points in R^dim; V_{k,i} = D - d(a_k, a_i) with D the max pairwise distance.
SumMaxFunction build_k_medians(const std::vector<std::vector<double>>& points, Metric metric);
// Same construction from an explicit distance matrix (checked for symmetry).
SumMaxFunction build_k_medians_from_distances(const std::vector<double>& dist, int n);

// Dense table of all 2^L values, indexed by bitmask (bit i-1 <=> arm i in S).
struct TabulatedSetFunction {
  int num_arms = 0;
  std::vector<double> table;

  static TabulatedSetFunction make(int num_arms, std::vector<double> table);
  double at(Mask s) const { return table[s]; }
  double max_abs() const;
};

// Default 12, overridable by the SUMMAX_TABLE_LIMIT environment variable,
// hard cap 20 (2^20 doubles).
int table_limit();

TabulatedSetFunction tabulate(const SumMaxFunction& f, int limit = 0);

// Unique d with r(Q) = sum_{S >= Q} d(S) for every Q (superset zeta inverse).
struct SubsetDecomposition {
  int num_arms = 0;
  std::vector<double> coeffs;
};

SubsetDecomposition subset_decomposition(const TabulatedSetFunction& g);

struct PropertyWitness {
  Mask subset = 0;            // the S at which the property fails
  std::vector<double> x;      // checker-specific vector evidence (may be empty)
  double violation = 0.0;     // positive magnitude, reproducible from (subset, x)
  Mask aux_subset = 0;        // secondary set (Q or T) when applicable
  int element = 0;            // 1-based arm when applicable
  std::string detail;
};

struct PropertyReport {
  bool holds = true;
  std::optional<PropertyWitness> witness;
  double worst = 0.0;  // worst metric seen (pseudo-concavity: max projected eigenvalue)
};

// x^T U^{r,S} x with U_{ij} = r(S u {i,j}); x need not be zero-sum here.
double quadratic_form(const TabulatedSetFunction& g, Mask s, std::span<const double> x);

// tol <= 0 selects the default 1e-9 * max|table|.
PropertyReport check_pseudo_concave(const TabulatedSetFunction& g, double tol = -1.0);
PropertyReport check_pseudo_submodular(const TabulatedSetFunction& g);
PropertyReport check_monotone_submodular(const TabulatedSetFunction& g);

// The 8-arm monotone submodular, non-pseudo-concave table; alpha in (0, 17/24).
TabulatedSetFunction build_counterexample(double alpha = 2.0 / 3.0);

}  // namespace summax
