#pragma once
// Reward/cost generators. The latent sequence of every environment is a
// deterministic function of (spec, seed) alone — per-round draws never depend
// on the policy's actions, so replays with a different policy see the same
// adversary.

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rng.hpp"
#include "setfn.hpp"

namespace summax {

// What a policy is allowed to see after a round. Latent state (attraction
// draws, theta, the good-arm set) stays inside the environment and is only
// reachable through the latent_* accessors used by the harness and the
// certification suite.
struct RoundOutcome {
  double reward = 0.0;
  std::vector<std::pair<int, double>> chosen_costs;  // arms of the action, reveal-chosen envs
  std::vector<double> all_costs;                     // K entries, reveal-all envs
  int click_position = 0;                            // 1-based first click, 0 = none/not provided
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual int num_arms() const = 0;
  virtual long long horizon() const = 0;
  virtual double cost_cap() const = 0;
  virtual bool reveals_all_costs() const = 0;
  virtual bool provides_clicks() const = 0;

  // Plays round rounds_played()+1. `ordered_action` may be empty; order only
  // matters for the click position.
  virtual RoundOutcome step(const std::vector<int>& ordered_action) = 0;

  virtual long long rounds_played() const = 0;

  // Counterfactual access for rounds already played (1-based t).
  virtual double latent_reward(long long t, Mask subset) const = 0;
  virtual double latent_cost(long long t, int arm) const = 0;
  virtual double latent_empty(long long t) const = 0;
};

// Best-of-K attraction environments (stochastic / corrupted / worst-case).
std::unique_ptr<Environment> make_stochastic_env(int num_arms, int num_good, long long horizon,
                                                 double p_good, double p_bad, std::uint64_t seed);
std::unique_ptr<Environment> make_corrupted_env(int num_arms, int num_good, long long horizon,
                                                double p_good, double p_bad, std::uint64_t seed);
// log10_sigma switches the sigma^2 = 1/(192 + 96 log T) formula from natural
// log (default) to base 10.
std::unique_ptr<Environment> make_worst_case_env(int num_arms, int num_good, long long horizon,
                                                 std::uint64_t seed, bool log10_sigma = false);

// Scripted oblivious adversary: a fixed sequence of sum-max functions and
// cost vectors replayed in order.
struct ScriptRound {
  int fn_index = 0;
  std::vector<double> costs;
};

struct Script {
  int num_arms = 0;
  double cost_cap = 0.0;
  std::vector<std::variant<SumMaxFunction, TabulatedSetFunction>> functions;
  std::vector<ScriptRound> rounds;
};

std::unique_ptr<Environment> make_scripted_env(Script script);

// Facility location: a fixed sum-max reward plus a per-round cost stream;
// reveals the full cost vector each round.
enum class CostModel { uniform, constant };
std::unique_ptr<Environment> make_facility_env(SumMaxFunction fn, long long horizon,
                                               CostModel cost_model, double cost_cap,
                                               double cost_value, std::uint64_t seed);

// Probe into attraction environments (test/verification use).
Mask attraction_latent_mask(const Environment& env, long long t);

}  // namespace summax
