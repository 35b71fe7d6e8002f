#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "errors.hpp"
#include "fileio.hpp"
#include "json.hpp"
#include "policies.hpp"

namespace summax {

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

// regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a)
double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    // series for P(a, x)
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    return 1.0 - p;
  }
  // continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

SimplexVector random_interior_simplex(Rng& rng, int n, double floor_value) {
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) {
    v = rng.uniform() + 1e-3;
    total += v;
  }
  const double slack = 1.0 - n * floor_value;
  for (double& v : p) v = floor_value + slack * (v / total);
  return SimplexVector::checked(std::move(p));
}

// exact E[sum_i p_i g_i^2] over all L^M ordered draw sequences
double exact_second_moment(const TabulatedSetFunction& g, const SimplexVector& p,
                           const CostVector& c, int m_draws) {
  const int arms = g.num_arms;
  double total = 0.0;
  std::vector<int> seq(m_draws, 0);
  std::vector<int> count(arms, 0);
  while (true) {
    double prob = 1.0;
    Mask drawn = 0;
    std::fill(count.begin(), count.end(), 0);
    for (int j = 0; j < m_draws; ++j) {
      prob *= p.probs[seq[j]];
      drawn |= Mask{1} << seq[j];
      ++count[seq[j]];
    }
    if (prob > 0.0) {
      const double r = g.at(drawn);
      double inner = 0.0;
      for (int i = 0; i < arms; ++i) {
        if (count[i] == 0) continue;
        const double diff = r - c.costs[i];
        inner += diff * diff * count[i] * count[i] / p.probs[i];
      }
      total += prob * inner;
    }
    int j = m_draws - 1;
    while (j >= 0 && seq[j] == arms - 1) seq[j--] = 0;
    if (j < 0) break;
    ++seq[j];
  }
  return total;
}

// exact E[r(Z)] where Z is the set of m_draws uniform draws from `subset`
double exact_uniform_draw_expectation(const TabulatedSetFunction& g, Mask subset, int m_draws) {
  std::vector<int> arms;
  for (int i = 0; i < g.num_arms; ++i)
    if ((subset >> i) & 1) arms.push_back(i);
  const int k = static_cast<int>(arms.size());
  const double prob = 1.0 / pow_int(static_cast<double>(k), m_draws);
  double total = 0.0;
  std::vector<int> seq(m_draws, 0);
  while (true) {
    Mask drawn = 0;
    for (int j = 0; j < m_draws; ++j) drawn |= Mask{1} << arms[seq[j]];
    total += prob * g.at(drawn);
    int j = m_draws - 1;
    while (j >= 0 && seq[j] == k - 1) seq[j--] = 0;
    if (j < 0) break;
    ++seq[j];
  }
  return total;
}

}  // namespace

CheckConfig CheckConfig::from_json(const std::string& text) {
  using nlohmann::json;
  json j = json::parse(text, nullptr, false);
  require(!j.is_discarded() && j.is_object(), ErrorKind::parse, "check config: invalid JSON");
  CheckConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "trials")
      cfg.trials = it.value().get<int>();
    else if (key == "gradient_samples")
      cfg.gradient_samples = it.value().get<long long>();
    else if (key == "concavity_functions")
      cfg.concavity_functions = it.value().get<int>();
    else if (key == "concavity_directions")
      cfg.concavity_directions = it.value().get<int>();
    else if (key == "sampler_weight_vectors")
      cfg.sampler_weight_vectors = it.value().get<int>();
    else if (key == "sampler_chi_samples")
      cfg.sampler_chi_samples = it.value().get<long long>();
    else if (key == "counterexample_alpha")
      cfg.counterexample_alpha = it.value().get<double>();
    else if (key == "perturb_counterexample")
      cfg.perturb_counterexample = it.value().get<double>();
    else
      fail(ErrorKind::parse, "check config: unknown key '" + key + "'");
  }
  return cfg;
}

SumMaxFunction random_summax(Rng& rng, int num_arms, int num_rows) {
  std::vector<double> v(static_cast<size_t>(num_rows) * num_arms);
  for (double& x : v) x = rng.uniform();
  double sum_min = 0.0;
  for (int k = 0; k < num_rows; ++k) {
    double mn = v[static_cast<size_t>(k) * num_arms];
    for (int i = 1; i < num_arms; ++i) mn = std::min(mn, v[static_cast<size_t>(k) * num_arms + i]);
    sum_min += mn;
  }
  return SumMaxFunction::make(num_rows, num_arms, std::move(v), sum_min);
}

McGradient mc_gradient_estimate(const TabulatedSetFunction& g, const SimplexVector& p,
                                const CostVector& c, int m_draws, long long samples, Rng& rng) {
  require(p.min_entry() >= kInteriorFloor, ErrorKind::invalid_argument,
          "mc gradient: simplex vector below the interior floor");
  require(samples >= 2, ErrorKind::invalid_argument, "mc gradient: need at least two samples");
  const int arms = g.num_arms;
  std::vector<double> cum(p.probs.size());
  std::partial_sum(p.probs.begin(), p.probs.end(), cum.begin());
  std::vector<double> sum(arms, 0.0), sumsq(arms, 0.0);
  std::vector<int> count(arms, 0);
  for (long long s = 0; s < samples; ++s) {
    std::fill(count.begin(), count.end(), 0);
    Mask drawn = 0;
    for (int j = 0; j < m_draws; ++j) {
      const int arm = sample_from_cumulative(cum, rng.uniform());
      ++count[arm];
      drawn |= Mask{1} << arm;
    }
    const double r = g.at(drawn);
    for (int i = 0; i < arms; ++i) {
      if (count[i] == 0) continue;
      const double gi = (r - c.costs[i]) / p.probs[i] * count[i];
      sum[i] += gi;
      sumsq[i] += gi * gi;
    }
  }
  McGradient out;
  out.mean.resize(arms);
  out.stderr_.resize(arms);
  const double n = static_cast<double>(samples);
  for (int i = 0; i < arms; ++i) {
    const double mean = sum[i] / n;
    const double var = std::max(0.0, (sumsq[i] - n * mean * mean) / (n - 1.0));
    out.mean[i] = mean;
    out.stderr_[i] = std::sqrt(var / n);
  }
  return out;
}

double chi_square_p_value(double statistic, int dof) {
  require(dof >= 1, ErrorKind::invalid_argument, "chi-square: dof must be positive");
  return gamma_q(0.5 * dof, 0.5 * statistic);
}

CheckResult verify_phi_expectation(Rng& rng, const CheckConfig& cfg) {
  double worst = 0.0;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const int arms = 2 + static_cast<int>(rng.below(4));  // 2..5
    const int rows = 1 + static_cast<int>(rng.below(3));
    const int m = 1 + static_cast<int>(rng.below(4));  // 1..4
    const auto f = random_summax(rng, arms, rows);
    const auto table = tabulate(f);
    const auto d = subset_decomposition(table);
    SimplexVector q = trial % 10 == 0
                          ? comparator_vector(Mask{1} << rng.below(arms), arms)  // point mass
                          : random_interior_simplex(rng, arms, 1e-6);
    const double lhs = phi_value(d, q, m);
    const double rhs = expectation_oracle(table, q, m);
    worst = std::max(worst, std::abs(lhs - rhs));
    if (m >= 1 && trial % 7 == 0) {
      // M=1 closed form: sum_i q_i r({i})
      double linear = 0.0;
      for (int i = 0; i < arms; ++i) linear += q.probs[i] * table.at(Mask{1} << i);
      worst = std::max(worst, std::abs(phi_value(d, q, 1) - linear));
    }
  }
  CheckResult res;
  res.name = "phi_expectation";
  res.measured = worst;
  res.bound_or_target = 0.0;
  res.tolerance = 1e-10;
  res.passed = worst <= res.tolerance;
  res.details = "max |Psi(q) - enumeration oracle| over " + std::to_string(cfg.trials) + " cases";
  return res;
}

CheckResult verify_unbiased_gradient(Rng& rng, const CheckConfig& cfg) {
  const int arms = 5, m = 3;
  const double cap = 0.5;
  const auto f = random_summax(rng, arms, 3);
  const auto table = tabulate(f);
  const auto d = subset_decomposition(table);
  std::vector<double> costs(arms);
  for (double& c : costs) c = cap * rng.uniform();
  const auto cost = CostVector::checked(costs, cap);
  // interior p with min entry 0.05
  std::vector<double> raw(arms);
  double total = 0.0;
  for (double& v : raw) {
    v = rng.uniform() + 0.1;
    total += v;
  }
  for (double& v : raw) v = 0.05 + (1.0 - arms * 0.05) * (v / total);
  const auto p = SimplexVector::checked(raw);

  const auto mc = mc_gradient_estimate(table, p, cost, m, cfg.gradient_samples, rng);
  const auto grad = phi_gradient(d, p, m);

  double worst_sigmas = 0.0;
  for (int i = 0; i < arms; ++i) {
    const double target = grad[i] - m * cost.costs[i];
    worst_sigmas = std::max(worst_sigmas, std::abs(mc.mean[i] - target) / mc.stderr_[i]);
  }
  CheckResult res;
  res.name = "unbiased_gradient";
  res.measured = worst_sigmas;
  res.bound_or_target = 4.0;
  res.tolerance = 0.0;
  res.passed = worst_sigmas <= 4.0;
  res.details = "max per-coordinate |MC mean - grad Psi_t| in standard errors over " +
                std::to_string(cfg.gradient_samples) +
                " draws (4 sigma per coordinate, 5 coordinates, Bonferroni flake < 1e-3)";
  return res;
}

CheckResult verify_second_moment(Rng& rng, const CheckConfig& cfg) {
  const double cap = 0.5;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const int arms = 2 + static_cast<int>(rng.below(4));
    const int m = 1 + static_cast<int>(rng.below(4));
    const auto f = random_summax(rng, arms, 1 + static_cast<int>(rng.below(3)));
    auto table = tabulate(f);
    // affine map of the table onto [-1, 0]
    const double hi = *std::max_element(table.table.begin(), table.table.end());
    const double lo = *std::min_element(table.table.begin(), table.table.end());
    const double span = std::max(hi - lo, 1e-12);
    for (double& v : table.table) v = (v - hi) / span;
    std::vector<double> costs(arms);
    for (double& c : costs) c = cap * rng.uniform();
    const auto cost = CostVector::checked(costs, cap);
    const auto p = random_interior_simplex(rng, arms, 1e-3);
    const double moment = exact_second_moment(table, p, cost, m);
    const double bound = (1.0 + cap) * (1.0 + cap) * m * (arms + m - 1);
    worst_excess = std::max(worst_excess, moment - bound);
  }
  // equality witness: M=1, C=0, r == -1
  const int arms = 4;
  auto flat = TabulatedSetFunction::make(arms, std::vector<double>(16, -1.0));
  const auto p = random_interior_simplex(rng, arms, 1e-3);
  const double eq_moment = exact_second_moment(flat, p, CostVector::checked({0, 0, 0, 0}, 0.0), 1);
  const double eq_gap = std::abs(eq_moment - arms);

  CheckResult res;
  res.name = "second_moment";
  res.measured = std::max(worst_excess, eq_gap - 1e-9);
  res.bound_or_target = 0.0;
  res.tolerance = 1e-9;
  res.passed = worst_excess <= 1e-9 && eq_gap <= 1e-9;
  res.details = "max E[sum p_i g_i^2] - (1+C)^2 M (L+M-1) over " + std::to_string(cfg.trials) +
                " cases; equality gap at M=1, C=0, r=-1: " + fmt(eq_gap);
  return res;
}

CheckResult verify_sampling_bound(Rng& rng, const CheckConfig& cfg) {
  double worst_slack = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const int arms = 2 + static_cast<int>(rng.below(4));
    const int m = 1 + static_cast<int>(rng.below(5));  // 1..5
    const auto f = random_summax(rng, arms, 1 + static_cast<int>(rng.below(3)));
    const auto table = tabulate(f);
    const auto d = subset_decomposition(table);
    Mask subset = 1 + rng.below(full_mask(arms));  // nonempty
    const int size = popcount_mask(subset);
    const double alpha = static_cast<double>(size - 1) / size;
    const double bound =
        (1.0 - pow_int(alpha, m)) * (table.at(subset) - table.at(0));
    // exact enumeration of |S|^M uniform draw sequences
    const double lhs5 = exact_uniform_draw_expectation(table, subset, m) - table.at(0);
    // the same bound through Psi at the comparator vector
    const double lhs6 = phi_value(d, comparator_vector(subset, arms), m) - table.at(0);
    worst_slack = std::min({worst_slack, lhs5 - bound, lhs6 - bound});
    if (lhs5 < bound - 1e-12 || lhs6 < bound - 1e-12) ok = false;
  }
  CheckResult res;
  res.name = "sampling_bound";
  res.measured = worst_slack;
  res.bound_or_target = 0.0;
  res.tolerance = 1e-12;
  res.passed = ok;
  res.details = "min slack of E[r(Z)]-r(0) and Psi(p*_S)-r(0) over the (1-alpha^M) bound, " +
                std::to_string(cfg.trials) + " cases";
  return res;
}

CheckResult verify_concavity(Rng& rng, const CheckConfig& cfg) {
  double worst = -std::numeric_limits<double>::infinity();
  bool ok = true;
  for (int fn = 0; fn < cfg.concavity_functions; ++fn) {
    const int arms = 2 + static_cast<int>(rng.below(5));  // 2..6
    const auto f = random_summax(rng, arms, 1 + static_cast<int>(rng.below(4)));
    const auto table = tabulate(f);
    const auto d = subset_decomposition(table);
    const int m = 2 + static_cast<int>(rng.below(3));
    const auto q = random_interior_simplex(rng, arms, 1e-6);
    const double scale = std::max(1.0, table.max_abs()) * m * (m - 1);
    for (int dir = 0; dir < cfg.concavity_directions; ++dir) {
      std::vector<double> x(arms);
      double mean = 0.0;
      for (double& v : x) {
        v = rng.gaussian();
        mean += v;
      }
      mean /= arms;
      double norm2 = 0.0;
      for (double& v : x) {
        v -= mean;
        norm2 += v * v;
      }
      if (norm2 == 0.0) continue;
      const double form = phi_quadratic_form(d, q, m, x);
      const double tol = 1e-10 * norm2 * scale;
      worst = std::max(worst, form - tol);
      if (form > tol) ok = false;
    }
    if (fn % 10 == 0 && !check_pseudo_concave(table).holds) ok = false;
  }
  // the counterexample must be caught: Hessian form at q = e_8, M = 3 is
  // 6 (17 - 24 alpha) > 0
  const auto ce = build_counterexample(2.0 / 3.0);
  const auto dce = subset_decomposition(ce);
  std::vector<double> probs(8, 0.0);
  probs[7] = 1.0;
  const std::vector<double> x{1, 1, 1, 1, -1, -1, -1, -1};
  const double ce_form =
      phi_quadratic_form(dce, SimplexVector::checked(probs), 3, x);
  const bool ce_detected = ce_form > 1.0 && !check_pseudo_concave(ce).holds;

  CheckResult res;
  res.name = "concavity";
  res.measured = worst;
  res.bound_or_target = 0.0;
  res.tolerance = 0.0;
  res.passed = ok && ce_detected;
  res.details = "max x^T H x - tol over random sum-max batteries (" +
                std::to_string(cfg.concavity_functions) + " fns x " +
                std::to_string(cfg.concavity_directions) +
                " zero-sum directions); counterexample Hessian form at q=e_8, M=3: " + fmt(ce_form);
  return res;
}

CheckResult verify_counterexample(Rng&, const CheckConfig& cfg) {
  const double alpha = cfg.counterexample_alpha;
  auto g = build_counterexample(alpha);
  if (cfg.perturb_counterexample != 0.0) g.table[37] += cfg.perturb_counterexample;

  const std::vector<double> x{1, 1, 1, 1, -1, -1, -1, -1};
  const double form = quadratic_form(g, Mask{1} << 7, x);
  const double target = 17.0 - 24.0 * alpha;
  bool ok = std::abs(form - target) <= 1e-12;
  std::string details = "x^T U^{r,{8}} x = " + fmt(form) + " (target " + fmt(target) + ")";

  const auto conc = check_pseudo_concave(g);
  ok = ok && !conc.holds;
  details += conc.holds ? "; pseudo-concave (unexpected)" : "; non-pseudo-concave";

  // full monotone-submodular + gain-ladder guarantees hold at the reference
  // alpha = 2/3 only; other alphas promise just the quadratic-form identity
  if (alpha == 2.0 / 3.0) {
    const auto mono = check_monotone_submodular(g);
    ok = ok && mono.holds;
    details += mono.holds ? "; monotone submodular" : "; NOT monotone submodular";
    if (conc.witness) ok = ok && conc.witness->subset == (Mask{1} << 7);
    // gain ladder across cardinalities: delta_i >= Delta_{i+1}
    std::vector<double> delta(9, std::numeric_limits<double>::infinity());
    std::vector<double> big_delta(9, -std::numeric_limits<double>::infinity());
    for (Mask s = 1; s < g.table.size(); ++s) {
      const int size = popcount_mask(s);
      for (int i = 0; i < 8; ++i)
        if ((s >> i) & 1) {
          const double gain = g.at(s) - g.at(s & ~(Mask{1} << i));
          delta[size] = std::min(delta[size], gain);
          big_delta[size] = std::max(big_delta[size], gain);
        }
    }
    ok = ok && std::abs(delta[3] - 2.0 / 3.0) <= 1e-12 && std::abs(big_delta[4] - 0.5) <= 1e-12;
    for (int i = 1; i < 8; ++i) ok = ok && delta[i] >= big_delta[i + 1] - 1e-12;
    // monotone across the |S|=3 -> 4 boundary: 2 + 1/6 > 2
    ok = ok && 2.0 + 1.0 / 6.0 > 2.0;
    details += "; delta_3 = " + fmt(delta[3]) + ", Delta_4 = " + fmt(big_delta[4]);
  }

  CheckResult res;
  res.name = "counterexample";
  res.measured = form;
  res.bound_or_target = target;
  res.tolerance = 1e-12;
  res.passed = ok;
  res.details = details;
  return res;
}

CheckResult verify_comband_sampler(Rng& rng, const CheckConfig& cfg) {
  double worst_tv = 0.0;
  for (int rep = 0; rep < cfg.sampler_weight_vectors; ++rep) {
    const int d = 2 + static_cast<int>(rng.below(9));       // 2..10
    const int m = 1 + static_cast<int>(rng.below(std::min(d, 4)));  // 1..min(4,d)
    std::vector<double> w(d);
    for (double& v : w) v = 0.05 + 3.0 * rng.uniform();
    // brute-force product law
    std::vector<std::pair<Mask, double>> brute;
    double total = 0.0;
    for (Mask s = 0; s < (Mask{1} << d); ++s) {
      if (popcount_mask(s) != m) continue;
      double prod = 1.0;
      for (int i = 0; i < d; ++i)
        if ((s >> i) & 1) prod *= w[i];
      brute.emplace_back(s, prod);
      total += prod;
    }
    for (auto& [s, p] : brute) p /= total;
    const auto dp_law = comband_subset_law(w, m);
    double tv = 0.0;
    for (size_t i = 0; i < brute.size(); ++i) tv += std::abs(brute[i].second - dp_law[i].second);
    worst_tv = std::max(worst_tv, 0.5 * tv);
  }

  // chi-square goodness of fit of the empirical sampler at d=6, m=3
  const int m = 3;
  std::vector<double> w{1.0, 2.0, 0.5, 1.5, 3.0, 0.8};
  const auto law = comband_subset_law(w, m);
  std::vector<long long> hits(law.size(), 0);
  for (long long s = 0; s < cfg.sampler_chi_samples; ++s) {
    const auto pick = comband_sample_subset(w, m, rng);
    Mask mask = 0;
    for (int arm : pick) mask |= Mask{1} << arm;
    for (size_t i = 0; i < law.size(); ++i)
      if (law[i].first == mask) {
        ++hits[i];
        break;
      }
  }
  double stat = 0.0;
  for (size_t i = 0; i < law.size(); ++i) {
    const double expected = law[i].second * static_cast<double>(cfg.sampler_chi_samples);
    const double diff = hits[i] - expected;
    stat += diff * diff / expected;
  }
  const double p_value = chi_square_p_value(stat, static_cast<int>(law.size()) - 1);

  CheckResult res;
  res.name = "comband_sampler";
  res.measured = worst_tv;
  res.bound_or_target = 0.0;
  res.tolerance = 1e-12;
  res.passed = worst_tv <= 1e-12 && p_value > 0.001;
  res.details = "max TV(DP law, product law) over " + std::to_string(cfg.sampler_weight_vectors) +
                " weight vectors; chi-square p = " + fmt(p_value) + " at " +
                std::to_string(cfg.sampler_chi_samples) + " samples";
  return res;
}

std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed,
                                    const CheckConfig& cfg) {
  using CheckFn = CheckResult (*)(Rng&, const CheckConfig&);
  static constexpr std::pair<const char*, CheckFn> kChecks[] = {
      {"phi_expectation", verify_phi_expectation},
      {"unbiased_gradient", verify_unbiased_gradient},
      {"second_moment", verify_second_moment},
      {"sampling_bound", verify_sampling_bound},
      {"concavity", verify_concavity},
      {"counterexample", verify_counterexample},
      {"comband_sampler", verify_comband_sampler},
  };
  std::vector<CheckResult> results;
  bool matched = false;
  for (size_t i = 0; i < std::size(kChecks); ++i) {
    if (suite != "all" && suite != kChecks[i].first) continue;
    matched = true;
    Rng rng(derive_stream(seed, i + 1));
    results.push_back(kChecks[i].second(rng, cfg));
  }
  require(matched, ErrorKind::invalid_argument, "verify: unknown suite '" + suite + "'");
  return results;
}

std::string checks_to_json(const std::vector<CheckResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j;
    j["name"] = r.name;
    j["passed"] = r.passed;
    j["measured"] = r.measured;
    j["bound_or_target"] = r.bound_or_target;
    j["tolerance"] = r.tolerance;
    j["details"] = r.details;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

void write_check_report(const std::vector<CheckResult>& results, const std::string& path) {
  write_text_file(path, checks_to_json(results));
}

}  // namespace summax
