#pragma once
// Executable certificates for the structural identities behind the policies,
// checked on desk-scale instances.
// Every check pits a closed form against an independent brute-force oracle
// (enumeration, Monte Carlo, or finite differences) and reports a
// machine-readable result.

#include <string>
#include <vector>

#include "rng.hpp"
#include "setfn.hpp"
#include "surrogate.hpp"

namespace summax {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound_or_target = 0.0;
  double tolerance = 0.0;
  std::string details;
};

struct CheckConfig {
  int trials = 50;                  // random instances per enumeration check
  long long gradient_samples = 1000000;
  int concavity_functions = 100;
  int concavity_directions = 100;
  int sampler_weight_vectors = 20;
  long long sampler_chi_samples = 100000;
  double counterexample_alpha = 2.0 / 3.0;
  double perturb_counterexample = 0.0;  // test hook: adds this to one table entry

  static CheckConfig from_json(const std::string& text);
};

// Random sum-max instance: entries uniform [0,1], empty value = sum of row
// minima (the tight Definition 1 boundary).
SumMaxFunction random_summax(Rng& rng, int num_arms, int num_rows);

// Monte Carlo mean/standard-error of the reward estimate g at fixed
// (r, c, p); the sampling side of the unbiasedness identity. Requires p
// interior (min entry >= the simplex floor).
struct McGradient {
  std::vector<double> mean;
  std::vector<double> stderr_;
};
McGradient mc_gradient_estimate(const TabulatedSetFunction& g, const SimplexVector& p,
                                const CostVector& c, int m_draws, long long samples, Rng& rng);

// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_p_value(double statistic, int dof);

CheckResult verify_phi_expectation(Rng& rng, const CheckConfig& cfg);
CheckResult verify_unbiased_gradient(Rng& rng, const CheckConfig& cfg);
CheckResult verify_second_moment(Rng& rng, const CheckConfig& cfg);
CheckResult verify_sampling_bound(Rng& rng, const CheckConfig& cfg);
CheckResult verify_concavity(Rng& rng, const CheckConfig& cfg);
CheckResult verify_counterexample(Rng& rng, const CheckConfig& cfg);
CheckResult verify_comband_sampler(Rng& rng, const CheckConfig& cfg);

// suite: "all" or one of phi_expectation, unbiased_gradient, second_moment,
// sampling_bound, concavity, counterexample, comband_sampler.
std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed,
                                    const CheckConfig& cfg = {});

std::string checks_to_json(const std::vector<CheckResult>& results);
void write_check_report(const std::vector<CheckResult>& results, const std::string& path);

}  // namespace summax
