#include "envs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace summax {

namespace {

Mask action_mask(const std::vector<int>& action, int num_arms) {
  Mask m = 0;
  for (int arm : action) {
    require(arm >= 0 && arm < num_arms, ErrorKind::invalid_argument, "env: action arm out of range");
    m |= Mask{1} << arm;
  }
  return m;
}

// Stochastic / corrupted / worst-case share the attraction model: per round
// an independent subset of arms "attracts", the reward of an action is
// 1{action intersects it} — the best-of-K sum-max value of the latent set.
class AttractionEnv : public Environment {
 public:
  enum class Kind { stochastic, corrupted, worst_case };

  AttractionEnv(Kind kind, int num_arms, int num_good, long long horizon, double p_good,
                double p_bad, std::uint64_t seed, bool log10_sigma)
      : num_arms_(num_arms), horizon_(horizon) {
    require(num_arms >= 1 && num_arms <= 64, ErrorKind::invalid_argument,
            "env: number of arms must be in [1, 64]");
    require(num_good >= 1 && num_good <= num_arms, ErrorKind::invalid_argument,
            "env: number of good arms must be in [1, num_arms]");
    require(horizon >= 0, ErrorKind::invalid_argument, "env: horizon must be nonnegative");
    Rng rng(derive_stream(seed, 0x656e76));  // latent stream

    // good set drawn uniformly at seed time
    std::vector<int> idx(num_arms);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < num_good; ++i) {
      const int j = i + static_cast<int>(rng.below(num_arms - i));
      std::swap(idx[i], idx[j]);
    }
    for (int i = 0; i < num_good; ++i) good_ |= Mask{1} << idx[i];

    theta_.assign(num_arms, 0.0);
    if (kind == Kind::worst_case) {
      require(static_cast<double>(num_arms) * num_good <= 8.0 * horizon,
              ErrorKind::invalid_argument, "worst-case env: requires K*M <= 8T");
      const double log_t = log10_sigma ? std::log10(static_cast<double>(horizon))
                                       : std::log(static_cast<double>(horizon));
      const double sigma2 = 1.0 / (192.0 + 96.0 * log_t);
      const double sigma = std::sqrt(sigma2);
      const double eps = sigma * std::sqrt(static_cast<double>(num_arms) * num_good /
                                           (8.0 * static_cast<double>(horizon)));
      for (int k = 0; k < num_arms; ++k) {
        double th = 0.5 + sigma * rng.gaussian();
        if ((good_ >> k) & 1) th += eps;
        theta_[k] = std::clamp(th, 0.0, 1.0);
      }
    } else {
      require(p_bad >= 0.0 && p_bad <= p_good && p_good <= 1.0, ErrorKind::invalid_argument,
              "env: need 0 <= p_bad <= p_good <= 1");
      for (int k = 0; k < num_arms; ++k) theta_[k] = ((good_ >> k) & 1) ? p_good : p_bad;
    }
    corruption_window_ =
        kind == Kind::corrupted ? static_cast<long long>(std::floor(std::sqrt(static_cast<double>(horizon)))) : 0;
    rng_ = rng;
    latent_.reserve(static_cast<size_t>(horizon));
  }

  int num_arms() const override { return num_arms_; }
  long long horizon() const override { return horizon_; }
  double cost_cap() const override { return 0.0; }
  bool reveals_all_costs() const override { return false; }
  bool provides_clicks() const override { return true; }
  long long rounds_played() const override { return static_cast<long long>(latent_.size()); }

  RoundOutcome step(const std::vector<int>& ordered_action) override {
    require(rounds_played() < horizon_, ErrorKind::state, "env: horizon exhausted");
    // always draws all K attractions, so the latent sequence is oblivious
    Mask attracted = 0;
    for (int k = 0; k < num_arms_; ++k)
      if (rng_.uniform() < theta_[k]) attracted |= Mask{1} << k;
    if (rounds_played() + 1 <= corruption_window_) attracted &= ~good_;  // good arms forced silent
    latent_.push_back(attracted);

    RoundOutcome out;
    out.reward = (action_mask(ordered_action, num_arms_) & attracted) ? 1.0 : 0.0;
    for (size_t pos = 0; pos < ordered_action.size(); ++pos)
      if ((attracted >> ordered_action[pos]) & 1) {
        out.click_position = static_cast<int>(pos) + 1;
        break;
      }
    return out;
  }

  double latent_reward(long long t, Mask subset) const override {
    require(t >= 1 && t <= rounds_played(), ErrorKind::invalid_argument, "env: round not played yet");
    return (subset & latent_[static_cast<size_t>(t - 1)]) ? 1.0 : 0.0;
  }
  double latent_cost(long long, int) const override { return 0.0; }
  double latent_empty(long long) const override { return 0.0; }

  Mask latent_mask(long long t) const { return latent_[static_cast<size_t>(t - 1)]; }
  Mask good_mask() const { return good_; }
  const std::vector<double>& thetas() const { return theta_; }

 private:
  int num_arms_;
  long long horizon_;
  Mask good_ = 0;
  std::vector<double> theta_;
  long long corruption_window_ = 0;
  Rng rng_{0};
  std::vector<Mask> latent_;
};

class ScriptedEnv : public Environment {
 public:
  explicit ScriptedEnv(Script script) : script_(std::move(script)) {
    require(script_.num_arms >= 1 && script_.num_arms <= 64, ErrorKind::invalid_argument,
            "scripted env: number of arms must be in [1, 64]");
    require(!script_.rounds.empty(), ErrorKind::invalid_argument, "scripted env: no rounds");
    require(script_.cost_cap >= 0.0, ErrorKind::invalid_argument,
            "scripted env: cost cap must be nonnegative");
    for (const auto& fn : script_.functions) {
      const int arms = std::visit([](const auto& f) { return f.num_arms; }, fn);
      require(arms == script_.num_arms, ErrorKind::invalid_argument,
              "scripted env: function dimension mismatch");
    }
    for (const auto& round : script_.rounds) {
      require(round.fn_index >= 0 && round.fn_index < static_cast<int>(script_.functions.size()),
              ErrorKind::invalid_argument, "scripted env: round references an unknown function");
      require(static_cast<int>(round.costs.size()) == script_.num_arms,
              ErrorKind::invalid_argument, "scripted env: cost vector dimension mismatch");
      for (double c : round.costs)
        require(c >= 0.0 && c <= script_.cost_cap + 1e-12, ErrorKind::invalid_argument,
                "scripted env: cost outside [0, cap]");
    }
  }

  int num_arms() const override { return script_.num_arms; }
  long long horizon() const override { return static_cast<long long>(script_.rounds.size()); }
  double cost_cap() const override { return script_.cost_cap; }
  bool reveals_all_costs() const override { return false; }
  bool provides_clicks() const override { return false; }
  long long rounds_played() const override { return played_; }

  RoundOutcome step(const std::vector<int>& ordered_action) override {
    require(played_ < horizon(), ErrorKind::state, "scripted env: script exhausted");
    const auto& round = script_.rounds[static_cast<size_t>(played_)];
    RoundOutcome out;
    out.reward = eval_fn(round.fn_index, action_mask(ordered_action, num_arms()));
    Mask seen = 0;
    for (int arm : ordered_action) {
      if ((seen >> arm) & 1) continue;
      seen |= Mask{1} << arm;
      out.chosen_costs.emplace_back(arm, round.costs[arm]);
    }
    ++played_;
    return out;
  }

  double latent_reward(long long t, Mask subset) const override {
    require(t >= 1 && t <= horizon(), ErrorKind::invalid_argument, "scripted env: round out of range");
    return eval_fn(script_.rounds[static_cast<size_t>(t - 1)].fn_index, subset);
  }
  double latent_cost(long long t, int arm) const override {
    return script_.rounds[static_cast<size_t>(t - 1)].costs[arm];
  }
  double latent_empty(long long t) const override { return latent_reward(t, 0); }

 private:
  double eval_fn(int index, Mask subset) const {
    const auto& fn = script_.functions[static_cast<size_t>(index)];
    if (const auto* f = std::get_if<SumMaxFunction>(&fn)) return f->eval(subset);
    return std::get<TabulatedSetFunction>(fn).at(subset);
  }

  Script script_;
  long long played_ = 0;
};

class FacilityEnv : public Environment {
 public:
  FacilityEnv(SumMaxFunction fn, long long horizon, CostModel model, double cap, double value,
              std::uint64_t seed)
      : fn_(std::move(fn)), horizon_(horizon), model_(model), cap_(cap), value_(value),
        rng_(derive_stream(seed, 0x666163)) {
    require(horizon >= 0, ErrorKind::invalid_argument, "facility env: horizon must be nonnegative");
    require(cap >= 0.0, ErrorKind::invalid_argument, "facility env: cost cap must be nonnegative");
    if (model == CostModel::constant)
      require(value >= 0.0 && value <= cap + 1e-12, ErrorKind::invalid_argument,
              "facility env: constant cost outside [0, cap]");
  }

  int num_arms() const override { return fn_.num_arms; }
  long long horizon() const override { return horizon_; }
  double cost_cap() const override { return cap_; }
  bool reveals_all_costs() const override { return true; }
  bool provides_clicks() const override { return false; }
  long long rounds_played() const override { return static_cast<long long>(costs_.size()); }

  RoundOutcome step(const std::vector<int>& ordered_action) override {
    require(rounds_played() < horizon_, ErrorKind::state, "facility env: horizon exhausted");
    std::vector<double> costs(fn_.num_arms);
    for (double& c : costs) c = model_ == CostModel::uniform ? cap_ * rng_.uniform() : value_;
    costs_.push_back(costs);

    RoundOutcome out;
    out.reward = fn_.eval(action_mask(ordered_action, fn_.num_arms));
    out.all_costs = std::move(costs);
    return out;
  }

  double latent_reward(long long t, Mask subset) const override {
    require(t >= 1 && t <= rounds_played(), ErrorKind::invalid_argument,
            "facility env: round not played yet");
    return fn_.eval(subset);
  }
  double latent_cost(long long t, int arm) const override {
    return costs_[static_cast<size_t>(t - 1)][static_cast<size_t>(arm)];
  }
  double latent_empty(long long) const override { return fn_.empty_value; }

 private:
  SumMaxFunction fn_;
  long long horizon_;
  CostModel model_;
  double cap_, value_;
  Rng rng_;
  std::vector<std::vector<double>> costs_;
};

}  // namespace

std::unique_ptr<Environment> make_stochastic_env(int num_arms, int num_good, long long horizon,
                                                 double p_good, double p_bad, std::uint64_t seed) {
  return std::make_unique<AttractionEnv>(AttractionEnv::Kind::stochastic, num_arms, num_good,
                                         horizon, p_good, p_bad, seed, false);
}

std::unique_ptr<Environment> make_corrupted_env(int num_arms, int num_good, long long horizon,
                                                double p_good, double p_bad, std::uint64_t seed) {
  return std::make_unique<AttractionEnv>(AttractionEnv::Kind::corrupted, num_arms, num_good,
                                         horizon, p_good, p_bad, seed, false);
}

std::unique_ptr<Environment> make_worst_case_env(int num_arms, int num_good, long long horizon,
                                                 std::uint64_t seed, bool log10_sigma) {
  return std::make_unique<AttractionEnv>(AttractionEnv::Kind::worst_case, num_arms, num_good,
                                         horizon, 0.0, 0.0, seed, log10_sigma);
}

std::unique_ptr<Environment> make_scripted_env(Script script) {
  return std::make_unique<ScriptedEnv>(std::move(script));
}

std::unique_ptr<Environment> make_facility_env(SumMaxFunction fn, long long horizon,
                                               CostModel cost_model, double cost_cap,
                                               double cost_value, std::uint64_t seed) {
  return std::make_unique<FacilityEnv>(std::move(fn), horizon, cost_model, cost_cap, cost_value,
                                       seed);
}

Mask attraction_latent_mask(const Environment& env, long long t) {
  const auto* attraction = dynamic_cast<const AttractionEnv*>(&env);
  require(attraction != nullptr, ErrorKind::invalid_argument,
          "latent mask probe: not an attraction environment");
  require(t >= 1 && t <= env.rounds_played(), ErrorKind::invalid_argument,
          "latent mask probe: round not played yet");
  return attraction->latent_mask(t);
}

}  // namespace summax
