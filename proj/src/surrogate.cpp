#include "surrogate.hpp"

#include <cmath>

#include "errors.hpp"

namespace summax {

namespace {

// subset sums sigma_S = sum_{i in S} q_i for every mask, O(2^L)
std::vector<double> subset_sums(const SimplexVector& q) {
  const int L = q.size();
  std::vector<double> sums(size_t{1} << L, 0.0);
  for (Mask s = 1; s < sums.size(); ++s) {
    const int low = __builtin_ctzll(s);
    sums[s] = sums[s & (s - 1)] + q.probs[low];
  }
  return sums;
}

void require_dims(const SubsetDecomposition& d, const SimplexVector& q) {
  require(d.num_arms == q.size(), ErrorKind::invalid_argument,
          "surrogate: decomposition and simplex vector dimensions differ");
}

}  // namespace

double pow_int(double base, long long e) {
  if (e <= 64) {
    double result = 1.0;
    for (long long i = 0; i < e; ++i) result *= base;
    return result;
  }
  if (base == 0.0) return 0.0;
  return std::exp(static_cast<double>(e) * std::log(base));
}

SimplexVector SimplexVector::checked(std::vector<double> probs) {
  require(!probs.empty(), ErrorKind::invalid_argument, "simplex vector: empty");
  double total = 0.0;
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0.0, ErrorKind::invalid_argument,
            "simplex vector: entries must be nonnegative");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::invalid_argument,
          "simplex vector: entries must sum to 1 within 1e-9");
  SimplexVector q;
  q.probs = std::move(probs);
  return q;
}

double SimplexVector::min_entry() const {
  double mn = probs[0];
  for (double p : probs) mn = std::min(mn, p);
  return mn;
}

CostVector CostVector::checked(std::vector<double> costs, double cap) {
  require(cap >= 0.0 && std::isfinite(cap), ErrorKind::invalid_argument,
          "cost vector: cap must be a nonnegative real");
  for (double c : costs)
    require(std::isfinite(c) && c >= 0.0 && c <= cap + 1e-12, ErrorKind::invalid_argument,
            "cost vector: entries must lie in [0, cap]");
  CostVector v;
  v.costs = std::move(costs);
  v.cap = cap;
  return v;
}

double phi_value(const SubsetDecomposition& d, const SimplexVector& q, int m_draws) {
  require_dims(d, q);
  require(m_draws >= 1, ErrorKind::invalid_argument, "phi: number of draws must be positive");
  const auto sums = subset_sums(q);
  double total = 0.0;
  for (Mask s = 0; s < d.coeffs.size(); ++s) {
    if (d.coeffs[s] == 0.0) continue;
    total += d.coeffs[s] * pow_int(sums[s], m_draws);
  }
  return total;
}

double expectation_oracle(const TabulatedSetFunction& g, const SimplexVector& q, int m_draws) {
  require(g.num_arms == q.size(), ErrorKind::invalid_argument,
          "oracle: table and simplex vector dimensions differ");
  require(m_draws >= 1, ErrorKind::invalid_argument, "oracle: number of draws must be positive");
  const int L = g.num_arms;
  double count = std::pow(static_cast<double>(L), m_draws);
  require(count <= 1e7, ErrorKind::limit_exceeded, "oracle: L^M exceeds the enumeration budget");

  double total = 0.0;
  std::vector<int> seq(m_draws, 0);
  while (true) {
    double prob = 1.0;
    Mask drawn = 0;
    for (int j = 0; j < m_draws; ++j) {
      prob *= q.probs[seq[j]];
      drawn |= Mask{1} << seq[j];
    }
    if (prob != 0.0) total += prob * g.at(drawn);
    // odometer
    int j = m_draws - 1;
    while (j >= 0 && seq[j] == L - 1) seq[j--] = 0;
    if (j < 0) break;
    ++seq[j];
  }
  return total;
}

std::vector<double> phi_gradient(const SubsetDecomposition& d, const SimplexVector& q, int m_draws) {
  require_dims(d, q);
  require(m_draws >= 1, ErrorKind::invalid_argument, "phi gradient: number of draws must be positive");
  const int L = d.num_arms;
  const auto sums = subset_sums(q);
  std::vector<double> grad(L, 0.0);
  for (Mask s = 0; s < d.coeffs.size(); ++s) {
    if (d.coeffs[s] == 0.0) continue;
    const double term = m_draws * d.coeffs[s] * pow_int(sums[s], m_draws - 1);
    Mask rest = s;
    while (rest) {
      int i = __builtin_ctzll(rest);
      rest &= rest - 1;
      grad[i] += term;
    }
  }
  return grad;
}

double phi_quadratic_form(const SubsetDecomposition& d, const SimplexVector& q, int m_draws,
                          std::span<const double> x) {
  require_dims(d, q);
  require(m_draws >= 2, ErrorKind::invalid_argument, "phi quadratic form: needs at least two draws");
  require(static_cast<int>(x.size()) == d.num_arms, ErrorKind::invalid_argument,
          "phi quadratic form: vector length mismatch");
  double norm = 0.0, dot1 = 0.0;
  for (double v : x) {
    norm += v * v;
    dot1 += v;
  }
  norm = std::sqrt(norm);
  require(std::abs(dot1) <= 1e-9 * std::max(norm, 1e-300), ErrorKind::invalid_argument,
          "phi quadratic form: vector is not zero-sum");
  const auto sums = subset_sums(q);
  const double factor = static_cast<double>(m_draws) * (m_draws - 1);
  double total = 0.0;
  for (Mask s = 0; s < d.coeffs.size(); ++s) {
    if (d.coeffs[s] == 0.0) continue;
    double xs = 0.0;
    Mask rest = s;
    while (rest) {
      int i = __builtin_ctzll(rest);
      rest &= rest - 1;
      xs += x[i];
    }
    if (xs == 0.0) continue;
    total += factor * d.coeffs[s] * pow_int(sums[s], m_draws - 2) * xs * xs;
  }
  return total;
}

ValueGradient objective_with_costs(const SubsetDecomposition& d, const SimplexVector& q,
                                   const CostVector& c, int m_draws) {
  require(static_cast<int>(c.costs.size()) == d.num_arms, ErrorKind::invalid_argument,
          "objective: cost vector dimension mismatch");
  ValueGradient out;
  out.value = phi_value(d, q, m_draws);
  out.gradient = phi_gradient(d, q, m_draws);
  for (int i = 0; i < d.num_arms; ++i) {
    out.value -= m_draws * q.probs[i] * c.costs[i];
    out.gradient[i] -= m_draws * c.costs[i];
  }
  return out;
}

SimplexVector comparator_vector(Mask subset, int num_arms) {
  require(subset != 0, ErrorKind::invalid_argument, "comparator: empty subset");
  require((subset & ~full_mask(num_arms)) == 0, ErrorKind::invalid_argument,
          "comparator: subset out of range");
  const double inv = 1.0 / popcount_mask(subset);
  std::vector<double> p(num_arms, 0.0);
  for (int i = 0; i < num_arms; ++i)
    if ((subset >> i) & 1) p[i] = inv;
  return SimplexVector::checked(std::move(p));
}

}  // namespace summax
