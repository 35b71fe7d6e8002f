#pragma once
// The surrogate objective Psi(q) = sum_S d(S) (sum_{i in S} q_i)^M — the
// expected value of r over M i.i.d. draws from q — with its exact gradient,
// Hessian quadratic form, and the cost-adjusted variant.

#include <span>
#include <vector>

#include "setfn.hpp"

namespace summax {

// Probability vector over L arms; normalization checked to 1e-9.
struct SimplexVector {
  std::vector<double> probs;

  static SimplexVector checked(std::vector<double> probs);
  int size() const { return static_cast<int>(probs.size()); }
  double min_entry() const;
};

constexpr double kInteriorFloor = 1e-12;

struct CostVector {
  std::vector<double> costs;
  double cap = 0.0;

  static CostVector checked(std::vector<double> costs, double cap);
};

double phi_value(const SubsetDecomposition& d, const SimplexVector& q, int m_draws);

// Exact expectation by enumerating all L^M ordered draw sequences; the
// independent brute-force side of the Psi identity. Budget L^M <= 1e7.
double expectation_oracle(const TabulatedSetFunction& g, const SimplexVector& q, int m_draws);

std::vector<double> phi_gradient(const SubsetDecomposition& d, const SimplexVector& q, int m_draws);

// x^T (grad^2 Psi)(q) x for zero-sum x; requires M >= 2.
double phi_quadratic_form(const SubsetDecomposition& d, const SimplexVector& q, int m_draws,
                          std::span<const double> x);

struct ValueGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

// Psi(q) - M q.c and its gradient.
ValueGradient objective_with_costs(const SubsetDecomposition& d, const SimplexVector& q,
                                   const CostVector& c, int m_draws);

// p*_i = 1{i in S}/|S|
SimplexVector comparator_vector(Mask subset, int num_arms);

// Integer power; repeated multiplication up to exponent 64, exp/log beyond.
double pow_int(double base, long long e);

}  // namespace summax
