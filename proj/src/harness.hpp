#pragma once
// Seeded simulation loop, profit/regret bookkeeping, multi-seed aggregation
// with 95% confidence intervals, and CSV export.

#include <memory>
#include <string>
#include <vector>

#include "envs.hpp"
#include "policies.hpp"

namespace summax {

// Type-erased policy as the episode loop sees it. Concrete drivers own the
// learner state; randomness comes in through the loop's Rng.
class PolicyDriver {
 public:
  virtual ~PolicyDriver() = default;
  virtual std::string name() const = 0;
  virtual std::vector<int> choose(Rng& rng) = 0;
  virtual void learn(const std::vector<int>& action, const RoundOutcome& outcome) = 0;
  virtual bool needs_clicks() const { return false; }
  virtual bool needs_all_costs() const { return false; }
};

std::unique_ptr<PolicyDriver> make_msexp3_driver(int num_arms, int num_draws, long long horizon,
                                                 double cost_cap, double reward_lo,
                                                 double reward_hi);
std::unique_ptr<PolicyDriver> make_exp3_driver(int num_arms, long long horizon, double reward_lo,
                                               double reward_hi, double eta = 0.0);
std::unique_ptr<PolicyDriver> make_flexp3_driver(int num_real_arms, long long horizon,
                                                 double cost_cap, double reward_lo,
                                                 double reward_hi);
std::unique_ptr<PolicyDriver> make_cascade_driver(int num_arms, int list_len,
                                                  CascadeVariant variant);
std::unique_ptr<PolicyDriver> make_comband_driver(int num_arms, int subset_size, long long horizon,
                                                  double mix_gamma = 0.0, double learn_eta = 0.0);

struct TraceRow {
  long long t = 0;
  Mask action = 0;
  double reward = 0.0;
  double paid_cost = 0.0;
  double cum_reward = 0.0;
  double cum_profit = 0.0;
};

struct RunTrace {
  std::string policy;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<TraceRow> rows;
};

// Drives `rounds` rounds (0 = the environment's horizon). Deterministic given
// (policy spec, env state, seed).
RunTrace run_episode(PolicyDriver& policy, Environment& env, long long rounds, std::uint64_t seed,
                     const std::string& config_hash = "");

struct ComparatorSpec {
  enum class Kind { explicit_set, best_fixed };
  Kind kind = Kind::best_fixed;
  Mask set = 0;        // explicit_set
  int max_size = 0;    // best_fixed: 0 means "use the policy's M"
  bool constrained = true;  // false: any nonempty subset (greedy search)
};

// Best fixed comparator under the guarantee's own scoring
// gamma_{|S|} sum_t rhat_t(S) - (M/|S|) sum_t sum_{i in S} c_{t,i}.
// Exhaustive over subsets of size <= max_size; greedy when unconstrained or
// the arm count makes enumeration unreasonable.
Mask resolve_comparator(const Environment& env, const ComparatorSpec& spec, int num_draws);

double default_gamma(int comparator_size, int num_draws);

// Per-round series gamma * cum rhat(S) - (M/|S|) * cum comparator costs -
// cum measured profit; gamma <= 0 selects the default 1 - ((|S|-1)/|S|)^M.
std::vector<double> gamma_regret(const RunTrace& trace, const Environment& env, Mask comparator,
                                 int num_draws, double gamma = 0.0);

struct Aggregate {
  int num_traces = 0;
  std::vector<double> mean_cum_reward;
  std::vector<double> ci_halfwidth;  // 1.96 * sample std / sqrt(n), over cum reward
  std::vector<double> mean_cum_profit;
};

// Streaming accumulator so full-scale runs never hold all traces in memory.
class AggregateAccumulator {
 public:
  explicit AggregateAccumulator(long long length);
  void add(const RunTrace& trace);
  void add_series(std::span<const double> cum_reward, std::span<const double> cum_profit);
  Aggregate finalize() const;  // requires at least 2 traces
  int count() const { return count_; }
  long long length() const { return length_; }

 private:
  long long length_;
  int count_ = 0;
  std::vector<double> sum_r_, sumsq_r_, sum_p_;
};

Aggregate aggregate(std::span<const RunTrace> traces);

// mean and 1.96 * std / sqrt(n) of n equal-length series
void series_stats(const std::vector<std::vector<double>>& series, std::vector<double>& mean,
                  std::vector<double>& ci);

void export_trace_csv(const RunTrace& trace, const std::string& path);
void export_aggregate_csv(const Aggregate& agg, const std::string& policy, const std::string& path);

std::string fnv1a_hex(const std::string& text);

}  // namespace summax
