#pragma once
// Online decision policies: MSExp3 (multiple-sample Exp3 over M i.i.d. draws),
// the plain Exp3 reference, FLExp3 (dummy-arm wrapper for facility location),
// cascade click baselines, and ComBand with the product-weighted m-subset
// sampler.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "setfn.hpp"

namespace summax {

struct DrawRecord {
  std::vector<int> sequence;       // the M arms drawn i.i.d. with replacement (0-based)
  Mask action_set = 0;             // deduplicated set of the sequence
  std::vector<double> probs_used;  // snapshot of p_t at draw time
};

// Exponentiated-gradient learner over the simplex. Rewards live in
// [reward_lo, reward_hi] and are affinely mapped onto [-1, 0]; costs in
// [0, cost_cap]. Estimates are then nonpositive, so log-weights only shrink
// and max-subtraction keeps them representable over long horizons.
class MsExp3 {
 public:
  MsExp3(int num_arms, int num_draws, long long horizon, double cost_cap, double reward_lo,
         double reward_hi);

  DrawRecord select(Rng& rng);
  // revealed_costs must cover exactly the arms of draw.action_set.
  void update(const DrawRecord& draw, double reward,
              const std::vector<std::pair<int, double>>& revealed_costs);

  std::vector<double> probs() const;
  double eta() const { return eta_; }
  double map_reward(double reward) const;
  int num_arms() const { return num_arms_; }
  int num_draws() const { return num_draws_; }
  long long round() const { return round_; }
  double cost_cap() const { return cost_cap_; }

 private:
  int num_arms_, num_draws_;
  long long horizon_;
  double cost_cap_, reward_lo_, reward_hi_, eta_;
  std::vector<double> log_weights_;
  long long round_ = 0;
};

// Textbook Exp3 with the same estimate and learning-rate formula at M=1, C=0;
// kept separate as the reference implementation for the reduction check.
class Exp3 {
 public:
  Exp3(int num_arms, long long horizon, double reward_lo, double reward_hi, double eta = 0.0);

  int select(Rng& rng);  // one categorical draw
  void update(int arm, double reward);

  std::vector<double> probs() const;
  double eta() const { return eta_; }

 private:
  int num_arms_;
  double reward_lo_, reward_hi_, eta_;
  std::vector<double> log_weights_;
};

// Runs MSExp3 over 2K arms (K real + K zero-cost dummies) with
// M = ceil((K/2) ln(T/K^2)); the output set is the real-arm part of the
// inner draw.
class FlExp3 {
 public:
  FlExp3(int num_real_arms, long long horizon, double cost_cap, double reward_lo, double reward_hi);

  struct Selection {
    std::vector<int> outer;  // chosen real arms, ascending (possibly empty)
    DrawRecord inner;
  };

  Selection select(Rng& rng);
  // reward = r_t(outer); real_costs has one entry per real arm (all K revealed)
  void update(const Selection& sel, double reward, std::span<const double> real_costs);

  int num_real_arms() const { return num_real_arms_; }
  int inner_arms() const { return inner_.num_arms(); }
  int num_draws() const { return inner_.num_draws(); }
  const MsExp3& inner() const { return inner_; }
  const std::vector<std::pair<int, double>>& last_inner_costs() const { return last_inner_costs_; }

 private:
  int num_real_arms_;
  MsExp3 inner_;
  std::vector<std::pair<int, double>> last_inner_costs_;
};

int flexp3_num_draws(int num_real_arms, long long horizon);

// Binary KL divergence and its upper-confidence inversion
// (largest q in [p_hat, 1] with kl(p_hat, q) <= radius, by bisection).
double binary_kl(double p, double q);
double kl_upper_confidence(double p_hat, double radius);

enum class CascadeVariant { ucb1, kl };

// Cascading-bandits baseline: rank all arms by an optimism index, show the
// top M, learn from the first-click position.
class Cascade {
 public:
  Cascade(int num_arms, int list_len, CascadeVariant variant);

  std::vector<int> select() const;  // ordered list, highest index first
  // click_pos: 1-based position of the click in `shown`, 0 if no click
  void update(std::span<const int> shown, int click_pos);

  double index(int arm) const;
  long long round() const { return round_; }

 private:
  int num_arms_, list_len_;
  CascadeVariant variant_;
  std::vector<long long> pulls_;
  std::vector<double> clicks_;
  long long round_ = 1;
};

// Dynamic-programming sampler: m distinct indices from [d] with
// probability proportional to the product of their weights, Theta(m d) per
// sample. Returns ascending indices (0-based).
std::vector<int> comband_sample_subset(std::span<const double> weights, int subset_size, Rng& rng);

// The law implied by the sampler's conditional tables, one probability per
// m-subset in ascending-mask enumeration order (exact, no sampling). Exposed
// for the certification suite.
std::vector<std::pair<Mask, double>> comband_subset_law(std::span<const double> weights,
                                                        int subset_size);

// Exponential-weights combinatorial bandit over m-subsets with uniform
// mixing and a pseudo-inverse co-occurrence loss estimate. gamma/eta <= 0
// select the documented defaults gamma = min(1, sqrt(d ln C(d,m) / T)) and
// eta = gamma / (2d).
class ComBand {
 public:
  ComBand(int num_arms, int subset_size, long long horizon, double mix_gamma = 0.0,
          double learn_eta = 0.0);

  std::vector<int> select(Rng& rng);  // ascending m distinct arms
  void update(std::span<const int> subset, double reward);

  double mix_gamma() const { return gamma_; }
  double learn_eta() const { return eta_; }
  std::vector<double> arm_weights() const;  // normalized, max = 1
  // Exact per-arm and pairwise inclusion probabilities of the current
  // sampling mixture: out(i,i) = P(i in S), out(i,j) = P({i,j} in S).
  std::vector<double> cooccurrence() const;  // d x d row-major

 private:
  int num_arms_, subset_size_;
  double gamma_, eta_;
  std::vector<double> log_weights_;
};

}  // namespace summax
