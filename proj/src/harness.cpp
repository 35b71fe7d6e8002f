#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "errors.hpp"
#include "surrogate.hpp"

namespace summax {

namespace {

class MsExp3Driver : public PolicyDriver {
 public:
  MsExp3Driver(int num_arms, int num_draws, long long horizon, double cost_cap, double reward_lo,
               double reward_hi)
      : policy_(num_arms, num_draws, horizon, cost_cap, reward_lo, reward_hi) {}

  std::string name() const override { return "msexp3"; }

  std::vector<int> choose(Rng& rng) override {
    last_ = policy_.select(rng);
    std::vector<int> action;
    Mask rest = last_.action_set;
    while (rest) {
      action.push_back(__builtin_ctzll(rest));
      rest &= rest - 1;
    }
    return action;
  }

  void learn(const std::vector<int>& action, const RoundOutcome& outcome) override {
    std::vector<std::pair<int, double>> costs;
    if (!outcome.chosen_costs.empty()) {
      costs = outcome.chosen_costs;
    } else if (!outcome.all_costs.empty()) {
      for (int arm : action) costs.emplace_back(arm, outcome.all_costs[arm]);
    } else {
      for (int arm : action) costs.emplace_back(arm, 0.0);
    }
    policy_.update(last_, outcome.reward, costs);
  }

 private:
  MsExp3 policy_;
  DrawRecord last_;
};

class Exp3Driver : public PolicyDriver {
 public:
  Exp3Driver(int num_arms, long long horizon, double reward_lo, double reward_hi, double eta)
      : policy_(num_arms, horizon, reward_lo, reward_hi, eta) {}

  std::string name() const override { return "exp3"; }

  std::vector<int> choose(Rng& rng) override {
    last_arm_ = policy_.select(rng);
    return {last_arm_};
  }

  void learn(const std::vector<int>&, const RoundOutcome& outcome) override {
    policy_.update(last_arm_, outcome.reward);
  }

 private:
  Exp3 policy_;
  int last_arm_ = 0;
};

class FlExp3Driver : public PolicyDriver {
 public:
  FlExp3Driver(int num_real_arms, long long horizon, double cost_cap, double reward_lo,
               double reward_hi)
      : policy_(num_real_arms, horizon, cost_cap, reward_lo, reward_hi) {}

  std::string name() const override { return "flexp3"; }
  bool needs_all_costs() const override { return true; }

  std::vector<int> choose(Rng& rng) override {
    last_ = policy_.select(rng);
    return last_.outer;
  }

  void learn(const std::vector<int>&, const RoundOutcome& outcome) override {
    policy_.update(last_, outcome.reward, outcome.all_costs);
  }

 private:
  FlExp3 policy_;
  FlExp3::Selection last_;
};

class CascadeDriver : public PolicyDriver {
 public:
  CascadeDriver(int num_arms, int list_len, CascadeVariant variant)
      : policy_(num_arms, list_len, variant), variant_(variant) {}

  std::string name() const override {
    return variant_ == CascadeVariant::ucb1 ? "cascade_ucb" : "cascade_kl";
  }
  bool needs_clicks() const override { return true; }

  std::vector<int> choose(Rng&) override {
    last_ = policy_.select();
    return last_;
  }

  void learn(const std::vector<int>&, const RoundOutcome& outcome) override {
    policy_.update(last_, outcome.click_position);
  }

 private:
  Cascade policy_;
  CascadeVariant variant_;
  std::vector<int> last_;
};

class ComBandDriver : public PolicyDriver {
 public:
  ComBandDriver(int num_arms, int subset_size, long long horizon, double mix_gamma,
                double learn_eta)
      : policy_(num_arms, subset_size, horizon, mix_gamma, learn_eta) {}

  std::string name() const override { return "comband"; }

  std::vector<int> choose(Rng& rng) override {
    last_ = policy_.select(rng);
    return last_;
  }

  void learn(const std::vector<int>&, const RoundOutcome& outcome) override {
    policy_.update(last_, outcome.reward);
  }

 private:
  ComBand policy_;
  std::vector<int> last_;
};

constexpr std::uint64_t kPolicyStream = 0x706f6c;

}  // namespace

std::unique_ptr<PolicyDriver> make_msexp3_driver(int num_arms, int num_draws, long long horizon,
                                                 double cost_cap, double reward_lo,
                                                 double reward_hi) {
  return std::make_unique<MsExp3Driver>(num_arms, num_draws, horizon, cost_cap, reward_lo,
                                        reward_hi);
}
std::unique_ptr<PolicyDriver> make_exp3_driver(int num_arms, long long horizon, double reward_lo,
                                               double reward_hi, double eta) {
  return std::make_unique<Exp3Driver>(num_arms, horizon, reward_lo, reward_hi, eta);
}
std::unique_ptr<PolicyDriver> make_flexp3_driver(int num_real_arms, long long horizon,
                                                 double cost_cap, double reward_lo,
                                                 double reward_hi) {
  return std::make_unique<FlExp3Driver>(num_real_arms, horizon, cost_cap, reward_lo, reward_hi);
}
std::unique_ptr<PolicyDriver> make_cascade_driver(int num_arms, int list_len,
                                                  CascadeVariant variant) {
  return std::make_unique<CascadeDriver>(num_arms, list_len, variant);
}
std::unique_ptr<PolicyDriver> make_comband_driver(int num_arms, int subset_size, long long horizon,
                                                  double mix_gamma, double learn_eta) {
  return std::make_unique<ComBandDriver>(num_arms, subset_size, horizon, mix_gamma, learn_eta);
}

RunTrace run_episode(PolicyDriver& policy, Environment& env, long long rounds, std::uint64_t seed,
                     const std::string& config_hash) {
  if (rounds == 0) rounds = env.horizon();
  require(rounds >= 0 && rounds <= env.horizon() - env.rounds_played(), ErrorKind::invalid_argument,
          "run episode: rounds exceed the environment horizon");
  require(!policy.needs_clicks() || env.provides_clicks(), ErrorKind::invalid_argument,
          "run episode: policy needs click feedback the environment does not provide");
  require(!policy.needs_all_costs() || env.reveals_all_costs(), ErrorKind::invalid_argument,
          "run episode: policy needs the full cost vector the environment does not reveal");

  Rng rng(derive_stream(seed, kPolicyStream));
  RunTrace trace;
  trace.policy = policy.name();
  trace.seed = seed;
  trace.config_hash = config_hash;
  trace.rows.reserve(static_cast<size_t>(rounds));

  double cum_reward = 0.0, cum_profit = 0.0;
  for (long long t = 1; t <= rounds; ++t) {
    const std::vector<int> action = policy.choose(rng);
    const RoundOutcome outcome = env.step(action);

    double paid = 0.0;
    Mask mask = 0;
    for (int arm : action) {
      const Mask bit = Mask{1} << arm;
      if (mask & bit) continue;
      mask |= bit;
      if (!outcome.all_costs.empty()) paid += outcome.all_costs[arm];
    }
    for (const auto& [arm, c] : outcome.chosen_costs) paid += c;

    cum_reward += outcome.reward;
    cum_profit += outcome.reward - paid;
    trace.rows.push_back({t, mask, outcome.reward, paid, cum_reward, cum_profit});

    policy.learn(action, outcome);
  }
  return trace;
}

double default_gamma(int comparator_size, int num_draws) {
  require(comparator_size >= 1, ErrorKind::invalid_argument, "gamma: empty comparator");
  const double a = static_cast<double>(comparator_size - 1) / comparator_size;
  return 1.0 - pow_int(a, num_draws);
}

namespace {

// gamma_{|S|} sum_t rhat_t(S) - (M/|S|) sum_t costs(S)
double comparator_score(const Environment& env, Mask s, int num_draws) {
  const long long rounds = env.rounds_played();
  const int size = popcount_mask(s);
  double reward = 0.0, cost = 0.0;
  for (long long t = 1; t <= rounds; ++t) {
    reward += env.latent_reward(t, s) - env.latent_empty(t);
    Mask rest = s;
    while (rest) {
      cost += env.latent_cost(t, __builtin_ctzll(rest));
      rest &= rest - 1;
    }
  }
  return default_gamma(size, num_draws) * reward -
         static_cast<double>(num_draws) / size * cost;
}

Mask greedy_comparator(const Environment& env, int max_size, int num_draws) {
  const int arms = env.num_arms();
  Mask best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  Mask current = 0;
  for (int step = 0; step < max_size; ++step) {
    Mask pick = 0;
    double pick_score = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < arms; ++i) {
      const Mask bit = Mask{1} << i;
      if (current & bit) continue;
      const double sc = comparator_score(env, current | bit, num_draws);
      if (sc > pick_score) {
        pick_score = sc;
        pick = bit;
      }
    }
    if (pick == 0) break;
    current |= pick;
    if (pick_score > best_score) {
      best_score = pick_score;
      best = current;
    }
  }
  return best;
}

}  // namespace

Mask resolve_comparator(const Environment& env, const ComparatorSpec& spec, int num_draws) {
  require(env.rounds_played() > 0, ErrorKind::state, "comparator: no rounds played");
  if (spec.kind == ComparatorSpec::Kind::explicit_set) {
    require(spec.set != 0, ErrorKind::invalid_argument, "comparator: explicit set is empty");
    require((spec.set & ~full_mask(env.num_arms())) == 0, ErrorKind::invalid_argument,
            "comparator: explicit set out of range");
    return spec.set;
  }
  const int arms = env.num_arms();
  const int max_size = spec.constrained
                           ? (spec.max_size > 0 ? std::min(spec.max_size, arms) : std::min(num_draws, arms))
                           : arms;
  if (!spec.constrained || arms > 20) return greedy_comparator(env, max_size, num_draws);

  // exhaustive over nonempty subsets of size <= max_size
  Mask best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Mask s = 1; s < (Mask{1} << arms); ++s) {
    if (popcount_mask(s) > max_size) continue;
    const double sc = comparator_score(env, s, num_draws);
    if (sc > best_score) {
      best_score = sc;
      best = s;
    }
  }
  return best;
}

std::vector<double> gamma_regret(const RunTrace& trace, const Environment& env, Mask comparator,
                                 int num_draws, double gamma) {
  require(comparator != 0, ErrorKind::invalid_argument, "gamma regret: empty comparator");
  const long long rounds = static_cast<long long>(trace.rows.size());
  require(rounds <= env.rounds_played(), ErrorKind::invalid_argument,
          "gamma regret: trace longer than the environment history");
  const int size = popcount_mask(comparator);
  if (gamma <= 0.0) gamma = default_gamma(size, num_draws);

  std::vector<double> series(static_cast<size_t>(rounds));
  double cum_comp_reward = 0.0, cum_comp_cost = 0.0, cum_profit = 0.0;
  for (long long t = 1; t <= rounds; ++t) {
    const TraceRow& row = trace.rows[static_cast<size_t>(t - 1)];
    const double empty = env.latent_empty(t);
    cum_comp_reward += env.latent_reward(t, comparator) - empty;
    Mask rest = comparator;
    while (rest) {
      cum_comp_cost += env.latent_cost(t, __builtin_ctzll(rest));
      rest &= rest - 1;
    }
    cum_profit += (row.reward - empty) - row.paid_cost;
    series[static_cast<size_t>(t - 1)] =
        gamma * cum_comp_reward - static_cast<double>(num_draws) / size * cum_comp_cost -
        cum_profit;
  }
  return series;
}

AggregateAccumulator::AggregateAccumulator(long long length) : length_(length) {
  require(length >= 0, ErrorKind::invalid_argument, "aggregate: negative length");
  sum_r_.assign(static_cast<size_t>(length), 0.0);
  sumsq_r_.assign(static_cast<size_t>(length), 0.0);
  sum_p_.assign(static_cast<size_t>(length), 0.0);
}

void AggregateAccumulator::add(const RunTrace& trace) {
  require(static_cast<long long>(trace.rows.size()) == length_, ErrorKind::invalid_argument,
          "aggregate: trace length mismatch");
  for (size_t i = 0; i < trace.rows.size(); ++i) {
    sum_r_[i] += trace.rows[i].cum_reward;
    sumsq_r_[i] += trace.rows[i].cum_reward * trace.rows[i].cum_reward;
    sum_p_[i] += trace.rows[i].cum_profit;
  }
  ++count_;
}

void AggregateAccumulator::add_series(std::span<const double> cum_reward,
                                      std::span<const double> cum_profit) {
  require(static_cast<long long>(cum_reward.size()) == length_ &&
              static_cast<long long>(cum_profit.size()) == length_,
          ErrorKind::invalid_argument, "aggregate: series length mismatch");
  for (size_t i = 0; i < cum_reward.size(); ++i) {
    sum_r_[i] += cum_reward[i];
    sumsq_r_[i] += cum_reward[i] * cum_reward[i];
    sum_p_[i] += cum_profit[i];
  }
  ++count_;
}

Aggregate AggregateAccumulator::finalize() const {
  require(count_ >= 2, ErrorKind::invalid_argument, "aggregate: need at least two traces");
  Aggregate agg;
  agg.num_traces = count_;
  const double n = static_cast<double>(count_);
  agg.mean_cum_reward.resize(static_cast<size_t>(length_));
  agg.ci_halfwidth.resize(static_cast<size_t>(length_));
  agg.mean_cum_profit.resize(static_cast<size_t>(length_));
  for (size_t i = 0; i < static_cast<size_t>(length_); ++i) {
    const double mean = sum_r_[i] / n;
    // unbiased sample variance
    const double var = std::max(0.0, (sumsq_r_[i] - n * mean * mean) / (n - 1.0));
    agg.mean_cum_reward[i] = mean;
    agg.ci_halfwidth[i] = 1.96 * std::sqrt(var / n);
    agg.mean_cum_profit[i] = sum_p_[i] / n;
  }
  return agg;
}

Aggregate aggregate(std::span<const RunTrace> traces) {
  require(traces.size() >= 2, ErrorKind::invalid_argument, "aggregate: need at least two traces");
  AggregateAccumulator acc(static_cast<long long>(traces.front().rows.size()));
  for (const auto& t : traces) acc.add(t);
  return acc.finalize();
}

void series_stats(const std::vector<std::vector<double>>& series, std::vector<double>& mean,
                  std::vector<double>& ci) {
  require(series.size() >= 2, ErrorKind::invalid_argument, "series stats: need at least two series");
  const size_t len = series.front().size();
  for (const auto& s : series)
    require(s.size() == len, ErrorKind::invalid_argument, "series stats: length mismatch");
  const double n = static_cast<double>(series.size());
  mean.assign(len, 0.0);
  ci.assign(len, 0.0);
  for (size_t i = 0; i < len; ++i) {
    double sum = 0.0, sumsq = 0.0;
    for (const auto& s : series) {
      sum += s[i];
      sumsq += s[i] * s[i];
    }
    const double m = sum / n;
    const double var = std::max(0.0, (sumsq - n * m * m) / (n - 1.0));
    mean[i] = m;
    ci[i] = 1.96 * std::sqrt(var / n);
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void export_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot open '" + path + "' for writing");
  out << "t,action,reward,paid_cost,cum_reward,cum_profit\n";
  for (const auto& row : trace.rows)
    out << row.t << ',' << row.action << ',' << fmt_double(row.reward) << ','
        << fmt_double(row.paid_cost) << ',' << fmt_double(row.cum_reward) << ','
        << fmt_double(row.cum_profit) << '\n';
  require(out.good(), ErrorKind::io, "write to '" + path + "' failed");
}

void export_aggregate_csv(const Aggregate& agg, const std::string& policy,
                          const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot open '" + path + "' for writing");
  out << "t,policy,mean_cum_reward,ci_halfwidth,mean_cum_profit\n";
  for (size_t i = 0; i < agg.mean_cum_reward.size(); ++i)
    out << (i + 1) << ',' << policy << ',' << fmt_double(agg.mean_cum_reward[i]) << ','
        << fmt_double(agg.ci_halfwidth[i]) << ',' << fmt_double(agg.mean_cum_profit[i]) << '\n';
  require(out.good(), ErrorKind::io, "write to '" + path + "' failed");
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace summax
