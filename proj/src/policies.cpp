#include "policies.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errors.hpp"

namespace summax {

namespace {

std::vector<double> softmax(const std::vector<double>& log_weights) {
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> p(log_weights.size());
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_weights[i] - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

int draw_categorical(const std::vector<double>& probs, Rng& rng) {
  std::vector<double> cum(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cum.begin());
  return sample_from_cumulative(cum, rng.uniform());
}

constexpr double kWeightClip = 1e-80;  // keeps the product-law DP strictly positive

}  // namespace

MsExp3::MsExp3(int num_arms, int num_draws, long long horizon, double cost_cap, double reward_lo,
               double reward_hi)
    : num_arms_(num_arms),
      num_draws_(num_draws),
      horizon_(horizon),
      cost_cap_(cost_cap),
      reward_lo_(reward_lo),
      reward_hi_(reward_hi) {
  require(num_arms >= 2, ErrorKind::invalid_argument,
          "msexp3: need at least two arms (ln 1 = 0 leaves the learning rate undefined)");
  require(num_draws >= 1, ErrorKind::invalid_argument, "msexp3: number of draws must be positive");
  require(horizon >= 1, ErrorKind::invalid_argument, "msexp3: horizon must be positive");
  require(cost_cap >= 0.0 && std::isfinite(cost_cap), ErrorKind::invalid_argument,
          "msexp3: cost cap must be a nonnegative real");
  require(reward_lo < reward_hi && std::isfinite(reward_lo) && std::isfinite(reward_hi),
          ErrorKind::invalid_argument, "msexp3: reward range must satisfy lo < hi");
  const double ln_l = std::log(static_cast<double>(num_arms));
  const double r_hat =
      (1.0 + cost_cap) *
      std::sqrt(2.0 * ln_l * num_draws * (num_arms + num_draws - 1) * static_cast<double>(horizon));
  eta_ = ln_l / r_hat;
  log_weights_.assign(num_arms, 0.0);
}

double MsExp3::map_reward(double reward) const {
  const double range = reward_hi_ - reward_lo_;
  require(reward >= reward_lo_ - 1e-9 * range && reward <= reward_hi_ + 1e-9 * range,
          ErrorKind::invalid_argument, "msexp3: reward outside the configured range");
  return (reward - reward_hi_) / range;  // maps [lo, hi] onto [-1, 0]
}

std::vector<double> MsExp3::probs() const { return softmax(log_weights_); }

DrawRecord MsExp3::select(Rng& rng) {
  require(round_ < horizon_, ErrorKind::state, "msexp3: horizon exhausted");
  DrawRecord rec;
  rec.probs_used = probs();
  std::vector<double> cum(rec.probs_used.size());
  std::partial_sum(rec.probs_used.begin(), rec.probs_used.end(), cum.begin());
  rec.sequence.reserve(num_draws_);
  for (int j = 0; j < num_draws_; ++j) {
    const int arm = sample_from_cumulative(cum, rng.uniform());
    rec.sequence.push_back(arm);
    rec.action_set |= Mask{1} << arm;
  }
  return rec;
}

void MsExp3::update(const DrawRecord& draw, double reward,
                    const std::vector<std::pair<int, double>>& revealed_costs) {
  const double mapped = map_reward(reward);

  std::vector<double> cost(num_arms_, 0.0);
  Mask covered = 0;
  for (const auto& [arm, c] : revealed_costs) {
    require(arm >= 0 && arm < num_arms_, ErrorKind::invalid_argument, "msexp3: cost arm out of range");
    const Mask bit = Mask{1} << arm;
    require((draw.action_set & bit) != 0, ErrorKind::invalid_argument,
            "msexp3: cost revealed for an arm that was not drawn");
    require((covered & bit) == 0, ErrorKind::invalid_argument, "msexp3: duplicate cost entry");
    require(c >= -1e-12 && c <= cost_cap_ + 1e-12, ErrorKind::invalid_argument,
            "msexp3: cost outside [0, cap]");
    covered |= bit;
    cost[arm] = c;
  }
  require(covered == draw.action_set, ErrorKind::invalid_argument,
          "msexp3: missing cost for a drawn arm");

  std::vector<int> count(num_arms_, 0);
  for (int arm : draw.sequence) ++count[arm];

  Mask rest = draw.action_set;
  while (rest) {
    const int i = __builtin_ctzll(rest);
    rest &= rest - 1;
    const double g = (mapped - cost[i]) / draw.probs_used[i] * count[i];
    log_weights_[i] += eta_ * g;
  }
  const double mx = *std::max_element(log_weights_.begin(), log_weights_.end());
  for (double& w : log_weights_) w -= mx;
  ++round_;
}

Exp3::Exp3(int num_arms, long long horizon, double reward_lo, double reward_hi, double eta)
    : num_arms_(num_arms), reward_lo_(reward_lo), reward_hi_(reward_hi) {
  require(num_arms >= 2, ErrorKind::invalid_argument, "exp3: need at least two arms");
  require(horizon >= 1, ErrorKind::invalid_argument, "exp3: horizon must be positive");
  require(reward_lo < reward_hi, ErrorKind::invalid_argument, "exp3: reward range must satisfy lo < hi");
  if (eta > 0.0) {
    eta_ = eta;
  } else {
    const double ln_l = std::log(static_cast<double>(num_arms));
    eta_ = ln_l / std::sqrt(2.0 * ln_l * num_arms * static_cast<double>(horizon));
  }
  log_weights_.assign(num_arms, 0.0);
}

std::vector<double> Exp3::probs() const { return softmax(log_weights_); }

int Exp3::select(Rng& rng) { return draw_categorical(probs(), rng); }

void Exp3::update(int arm, double reward) {
  require(arm >= 0 && arm < num_arms_, ErrorKind::invalid_argument, "exp3: arm out of range");
  const double range = reward_hi_ - reward_lo_;
  require(reward >= reward_lo_ - 1e-9 * range && reward <= reward_hi_ + 1e-9 * range,
          ErrorKind::invalid_argument, "exp3: reward outside the configured range");
  const double mapped = (reward - reward_hi_) / range;
  const double p = probs()[arm];
  log_weights_[arm] += eta_ * mapped / p;
  const double mx = *std::max_element(log_weights_.begin(), log_weights_.end());
  for (double& w : log_weights_) w -= mx;
}

int flexp3_num_draws(int num_real_arms, long long horizon) {
  require(num_real_arms >= 1, ErrorKind::invalid_argument, "flexp3: need at least one real arm");
  require(horizon >= 1, ErrorKind::invalid_argument, "flexp3: horizon must be positive");
  const double k = static_cast<double>(num_real_arms);
  const double raw = 0.5 * k * std::log(static_cast<double>(horizon) / (k * k));
  require(raw >= 1.0, ErrorKind::invalid_argument,
          "flexp3: horizon too small for a positive number of draws ((K/2) ln(T/K^2) < 1)");
  return static_cast<int>(std::ceil(raw));
}

FlExp3::FlExp3(int num_real_arms, long long horizon, double cost_cap, double reward_lo,
               double reward_hi)
    : num_real_arms_(num_real_arms),
      inner_(2 * num_real_arms, flexp3_num_draws(num_real_arms, horizon), horizon, cost_cap,
             reward_lo, reward_hi) {}

FlExp3::Selection FlExp3::select(Rng& rng) {
  Selection sel;
  sel.inner = inner_.select(rng);
  for (int arm = 0; arm < num_real_arms_; ++arm)
    if ((sel.inner.action_set >> arm) & 1) sel.outer.push_back(arm);
  return sel;
}

void FlExp3::update(const Selection& sel, double reward, std::span<const double> real_costs) {
  require(static_cast<int>(real_costs.size()) == num_real_arms_, ErrorKind::invalid_argument,
          "flexp3: expected one revealed cost per real arm");
  last_inner_costs_.clear();
  Mask rest = sel.inner.action_set;
  while (rest) {
    const int arm = __builtin_ctzll(rest);
    rest &= rest - 1;
    // dummy arms always carry zero cost
    last_inner_costs_.emplace_back(arm, arm < num_real_arms_ ? real_costs[arm] : 0.0);
  }
  inner_.update(sel.inner, reward, last_inner_costs_);
}

double binary_kl(double p, double q) {
  auto term = [](double a, double b) {
    if (a <= 0.0) return 0.0;
    if (b <= 0.0) return std::numeric_limits<double>::infinity();
    return a * std::log(a / b);
  };
  return term(p, q) + term(1.0 - p, 1.0 - q);
}

double kl_upper_confidence(double p_hat, double radius) {
  if (p_hat >= 1.0) return 1.0;
  double lo = p_hat, hi = 1.0;
  for (int iter = 0; iter < 64 && hi - lo >= 1e-9; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (binary_kl(p_hat, mid) > radius)
      hi = mid;
    else
      lo = mid;
  }
  return lo;
}

Cascade::Cascade(int num_arms, int list_len, CascadeVariant variant)
    : num_arms_(num_arms), list_len_(list_len), variant_(variant) {
  require(num_arms >= 1, ErrorKind::invalid_argument, "cascade: need at least one arm");
  require(list_len >= 1 && list_len <= num_arms, ErrorKind::invalid_argument,
          "cascade: list length must be in [1, num_arms]");
  pulls_.assign(num_arms, 0);
  clicks_.assign(num_arms, 0.0);
}

double Cascade::index(int arm) const {
  if (pulls_[arm] == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(pulls_[arm]);
  const double p_hat = clicks_[arm] / n;
  const double log_t = std::log(static_cast<double>(round_));
  if (variant_ == CascadeVariant::ucb1) return p_hat + std::sqrt(1.5 * log_t / n);
  return kl_upper_confidence(p_hat, log_t / n);
}

std::vector<int> Cascade::select() const {
  std::vector<int> order(num_arms_);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> idx(num_arms_);
  for (int a = 0; a < num_arms_; ++a) idx[a] = index(a);
  // ties broken toward the lowest arm index (stable sort over ascending ids)
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return idx[a] > idx[b]; });
  order.resize(list_len_);
  return order;
}

void Cascade::update(std::span<const int> shown, int click_pos) {
  require(!shown.empty() && static_cast<int>(shown.size()) <= num_arms_,
          ErrorKind::invalid_argument, "cascade: bad list length");
  require(click_pos >= 0 && click_pos <= static_cast<int>(shown.size()),
          ErrorKind::invalid_argument, "cascade: click position out of range");
  const int observed = click_pos > 0 ? click_pos : static_cast<int>(shown.size());
  for (int k = 1; k <= observed; ++k) {
    const int arm = shown[k - 1];
    require(arm >= 0 && arm < num_arms_, ErrorKind::invalid_argument, "cascade: arm out of range");
    ++pulls_[arm];
    if (k == click_pos) clicks_[arm] += 1.0;
  }
  ++round_;
}

namespace {

// DP tables. z[mp][j] is the total product weight of mp-subsets
// of [j] whose largest index is j; Z[mp][j] accumulates z[mp][mp..j].
// Everything is 1-based to mirror the recurrences.
struct SubsetDp {
  int d, m;
  std::vector<std::vector<double>> z, zsum;
};

SubsetDp build_subset_dp(std::span<const double> q, int m) {
  const int d = static_cast<int>(q.size());
  require(m >= 1 && m <= d, ErrorKind::invalid_argument,
          "subset sampler: subset size must be in [1, d]");
  for (double w : q)
    require(std::isfinite(w) && w > 0.0, ErrorKind::invalid_argument,
            "subset sampler: weights must be positive");
  SubsetDp dp{d, m,
              std::vector<std::vector<double>>(m + 1, std::vector<double>(d + 1, 0.0)),
              std::vector<std::vector<double>>(m + 1, std::vector<double>(d + 1, 0.0))};
  for (int mp = 1; mp <= m; ++mp) {
    double run = 0.0;
    for (int j = mp; j <= d - m + mp; ++j) {
      dp.z[mp][j] = (mp == 1) ? q[j - 1] : dp.zsum[mp - 1][j - 1] * q[j - 1];
      run += dp.z[mp][j];
      dp.zsum[mp][j] = run;
    }
    // past the valid range the prefix stays flat so lookups at j'-1 work
    for (int j = d - m + mp + 1; j <= d; ++j) dp.zsum[mp][j] = run;
  }
  return dp;
}

// draw j in [mp, hi] with probability z[mp][j] / Z[mp][hi]
int draw_from_dp_row(const SubsetDp& dp, int mp, int hi, Rng& rng) {
  const double total = dp.zsum[mp][hi];
  const double target = rng.uniform() * total;
  int lo = mp, up = hi;
  while (lo < up) {
    const int mid = (lo + up) / 2;
    if (dp.zsum[mp][mid] > target)
      up = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace

std::vector<int> comband_sample_subset(std::span<const double> weights, int subset_size, Rng& rng) {
  const SubsetDp dp = build_subset_dp(weights, subset_size);
  std::vector<int> picked(subset_size);
  int next = draw_from_dp_row(dp, subset_size, dp.d, rng);
  picked[subset_size - 1] = next - 1;
  for (int mp = subset_size - 1; mp >= 1; --mp) {
    next = draw_from_dp_row(dp, mp, next - 1, rng);
    picked[mp - 1] = next - 1;
  }
  return picked;  // ascending by construction
}

std::vector<std::pair<Mask, double>> comband_subset_law(std::span<const double> weights,
                                                        int subset_size) {
  const SubsetDp dp = build_subset_dp(weights, subset_size);
  const int d = dp.d, m = dp.m;
  require(d <= 25, ErrorKind::limit_exceeded, "subset law: enumeration limited to d <= 25");
  std::vector<std::pair<Mask, double>> law;
  for (Mask s = 0; s < (Mask{1} << d); ++s) {
    if (popcount_mask(s) != m) continue;
    std::vector<int> u;
    for (int i = 0; i < d; ++i)
      if ((s >> i) & 1) u.push_back(i + 1);
    double p = dp.z[m][u[m - 1]] / dp.zsum[m][d];
    for (int mp = m - 1; mp >= 1; --mp) p *= dp.z[mp][u[mp - 1]] / dp.zsum[mp][u[mp] - 1];
    law.emplace_back(s, p);
  }
  return law;
}

ComBand::ComBand(int num_arms, int subset_size, long long horizon, double mix_gamma,
                 double learn_eta)
    : num_arms_(num_arms), subset_size_(subset_size) {
  require(num_arms >= 1, ErrorKind::invalid_argument, "comband: need at least one arm");
  require(subset_size >= 1 && subset_size <= num_arms, ErrorKind::invalid_argument,
          "comband: subset size must be in [1, num_arms]");
  require(horizon >= 1, ErrorKind::invalid_argument, "comband: horizon must be positive");
  if (mix_gamma > 0.0) {
    require(mix_gamma <= 1.0, ErrorKind::invalid_argument, "comband: gamma must lie in (0, 1]");
    gamma_ = mix_gamma;
  } else {
    const double ln_actions = std::lgamma(num_arms + 1.0) - std::lgamma(subset_size + 1.0) -
                              std::lgamma(num_arms - subset_size + 1.0);
    gamma_ = std::min(1.0, std::sqrt(num_arms * std::max(ln_actions, 1e-12) /
                                     static_cast<double>(horizon)));
    gamma_ = std::max(gamma_, 1e-6);
  }
  eta_ = learn_eta > 0.0 ? learn_eta : gamma_ / (2.0 * num_arms);
  log_weights_.assign(num_arms, 0.0);
}

std::vector<double> ComBand::arm_weights() const {
  const double mx = *std::max_element(log_weights_.begin(), log_weights_.end());
  std::vector<double> w(log_weights_.size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = std::max(std::exp(log_weights_[i] - mx), kWeightClip);
  return w;
}

std::vector<int> ComBand::select(Rng& rng) {
  if (rng.uniform() < gamma_) {
    // uniform m-subset via partial Fisher-Yates
    std::vector<int> idx(num_arms_);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < subset_size_; ++i) {
      const int j = i + static_cast<int>(rng.below(num_arms_ - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(subset_size_);
    std::sort(idx.begin(), idx.end());
    return idx;
  }
  const auto w = arm_weights();
  return comband_sample_subset(w, subset_size_, rng);
}

std::vector<double> ComBand::cooccurrence() const {
  const int d = num_arms_, m = subset_size_;
  const auto w = arm_weights();

  // elementary symmetric polynomials of prefixes and suffixes, degree <= m
  auto poly_table = [&](bool forward) {
    std::vector<std::vector<double>> e(d + 1, std::vector<double>(m + 1, 0.0));
    e[0][0] = 1.0;
    for (int n = 1; n <= d; ++n) {
      const double wn = forward ? w[n - 1] : w[d - n];
      e[n] = e[n - 1];
      for (int k = std::min(n, m); k >= 1; --k) e[n][k] += wn * e[n - 1][k - 1];
    }
    return e;
  };
  const auto pre = poly_table(true);   // pre[j] covers arms [0, j)
  const auto suf = poly_table(false);  // suf[j] covers the last j arms

  const double e_total = pre[d][m];
  std::vector<double> prod(static_cast<size_t>(d) * d, 0.0);
  const bool degenerate = !(e_total > 0.0) || !std::isfinite(e_total);
  if (!degenerate) {
    for (int i = 0; i < d; ++i) {
      double single = 0.0;
      for (int a = 0; a <= m - 1; ++a) single += pre[i][a] * suf[d - i - 1][m - 1 - a];
      prod[static_cast<size_t>(i) * d + i] = w[i] * single / e_total;
      if (m >= 2) {
        std::vector<double> mid(m + 1, 0.0);  // symmetric polys of arms (i, j) exclusive
        mid[0] = 1.0;
        for (int j = i + 1; j < d; ++j) {
          double pair = 0.0;
          for (int a = 0; a <= m - 2; ++a)
            for (int b = 0; a + b <= m - 2; ++b)
              pair += pre[i][a] * mid[b] * suf[d - j - 1][m - 2 - a - b];
          pair *= w[i] * w[j] / e_total;
          prod[static_cast<size_t>(i) * d + j] = prod[static_cast<size_t>(j) * d + i] = pair;
          for (int k = std::min(m, j - i); k >= 1; --k) mid[k] += w[j] * mid[k - 1];
        }
      }
    }
  }

  const double unif_single = static_cast<double>(m) / d;
  const double unif_pair = d >= 2 ? static_cast<double>(m) * (m - 1) / (static_cast<double>(d) * (d - 1)) : unif_single;
  const double mix = degenerate ? 1.0 : gamma_;
  std::vector<double> out(static_cast<size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double u = (i == j) ? unif_single : unif_pair;
      out[static_cast<size_t>(i) * d + j] = (1.0 - mix) * prod[static_cast<size_t>(i) * d + j] + mix * u;
    }
  return out;
}

void ComBand::update(std::span<const int> subset, double reward) {
  require(static_cast<int>(subset.size()) == subset_size_, ErrorKind::invalid_argument,
          "comband: subset size mismatch");
  const int d = num_arms_;
  Eigen::MatrixXd cooc(d, d);
  const auto c = cooccurrence();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) cooc(i, j) = c[static_cast<size_t>(i) * d + j];
  cooc.diagonal().array() += 1e-10;  // regularized pseudo-inverse solve

  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  for (int arm : subset) {
    require(arm >= 0 && arm < d, ErrorKind::invalid_argument, "comband: arm out of range");
    v(arm) = 1.0;
  }
  const Eigen::VectorXd estimate = reward * cooc.ldlt().solve(v);
  for (int i = 0; i < d; ++i) log_weights_[i] += eta_ * estimate(i);
  const double mx = *std::max_element(log_weights_.begin(), log_weights_.end());
  for (double& lw : log_weights_) lw -= mx;
}

}  // namespace summax
