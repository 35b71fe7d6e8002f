#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "envs.hpp"
#include "errors.hpp"
#include "fileio.hpp"
#include "harness.hpp"
#include "setfn.hpp"

using namespace summax;

namespace {

bool rows_equal(const RunTrace& a, const RunTrace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    const auto& x = a.rows[i];
    const auto& y = b.rows[i];
    if (x.t != y.t || x.action != y.action || x.reward != y.reward ||
        x.paid_cost != y.paid_cost || x.cum_reward != y.cum_reward ||
        x.cum_profit != y.cum_profit)
      return false;
  }
  return true;
}

Script shifted_constant_script(double shift, long long rounds) {
  // one fixed sum-max function, all rewards offset by `shift`
  Script script;
  script.num_arms = 3;
  script.cost_cap = 0.0;
  auto table = tabulate(build_best_of_k(3, 0b011));
  for (double& v : table.table) v += shift;
  script.functions.emplace_back(std::move(table));
  for (long long t = 0; t < rounds; ++t) script.rounds.push_back({0, {0.0, 0.0, 0.0}});
  return script;
}

}  // namespace

TEST_CASE("run_episode determinism and bookkeeping") {
  SUBCASE("same (policy, env, seed) twice gives identical traces") {
    auto run_once = [] {
      auto env = make_stochastic_env(8, 2, 500, 0.4, 0.1, 42);
      auto policy = make_msexp3_driver(8, 2, 500, 0.0, 0.0, 1.0);
      return run_episode(*policy, *env, 500, 7);
    };
    CHECK(rows_equal(run_once(), run_once()));
  }
  SUBCASE("zero rounds gives an empty trace") {
    auto env = make_stochastic_env(4, 1, 0, 0.3, 0.1, 1);
    auto policy = make_msexp3_driver(4, 1, 10, 0.0, 0.0, 1.0);
    const auto trace = run_episode(*policy, *env, 0, 1);
    CHECK(trace.rows.empty());
  }
  SUBCASE("cumulative columns are prefix sums") {
    auto fn = build_combinatorial({1.0, 2.0});
    auto env = make_facility_env(fn, 200, CostModel::uniform, 0.5, 0.0, 9);
    auto policy = make_flexp3_driver(2, 200, 0.5, fn.range_lo(), fn.range_hi());
    const auto trace = run_episode(*policy, *env, 200, 3);
    double cr = 0.0, cp = 0.0;
    for (const auto& row : trace.rows) {
      cr += row.reward;
      cp += row.reward - row.paid_cost;
      CHECK(row.cum_reward == doctest::Approx(cr).epsilon(1e-15));
      CHECK(row.cum_profit == doctest::Approx(cp).epsilon(1e-15));
    }
  }
  SUBCASE("msexp3 on a reveal-all environment pays and learns from its own arms' costs") {
    auto fn = build_combinatorial({1.0, 0.1, 0.1});
    auto env = make_facility_env(fn, 300, CostModel::constant, 0.4, 0.4, 17);
    auto policy = make_msexp3_driver(3, 2, 300, 0.4, fn.range_lo(), fn.range_hi());
    const auto trace = run_episode(*policy, *env, 300, 8);
    for (const auto& row : trace.rows)
      CHECK(row.paid_cost == doctest::Approx(0.4 * popcount_mask(row.action)).epsilon(1e-12));
  }
  SUBCASE("policy/environment contract mismatches are rejected") {
    auto env = make_stochastic_env(5, 2, 100, 0.3, 0.1, 2);
    auto flexp3 = make_flexp3_driver(5, 10000, 1.0, 0.0, 1.0);
    CHECK_THROWS_AS(run_episode(*flexp3, *env, 100, 1), Error);  // needs all costs
    auto fn = build_combinatorial({1.0, 2.0, 0.5, 0.25, 1.5});
    auto facility = make_facility_env(fn, 100, CostModel::uniform, 1.0, 0.0, 3);
    auto cascade = make_cascade_driver(5, 2, CascadeVariant::ucb1);
    CHECK_THROWS_AS(run_episode(*cascade, *facility, 100, 1), Error);  // needs clicks
  }
  SUBCASE("exp3 and msexp3 traces coincide at M = 1, C = 0 on a shared seed") {
    auto env_a = make_stochastic_env(10, 1, 1000, 0.3, 0.1, 5);
    auto env_b = make_stochastic_env(10, 1, 1000, 0.3, 0.1, 5);
    auto ms = make_msexp3_driver(10, 1, 1000, 0.0, 0.0, 1.0);
    auto ref = make_exp3_driver(10, 1000, 0.0, 1.0);
    const auto trace_ms = run_episode(*ms, *env_a, 1000, 77);
    const auto trace_ref = run_episode(*ref, *env_b, 1000, 77);
    for (size_t i = 0; i < trace_ms.rows.size(); ++i)
      CHECK(trace_ms.rows[i].action == trace_ref.rows[i].action);
  }
}

TEST_CASE("default gamma arithmetic") {
  CHECK(default_gamma(3, 3) == doctest::Approx(19.0 / 27));
  CHECK(default_gamma(1, 1) == doctest::Approx(1.0));
  CHECK(default_gamma(1, 5) == doctest::Approx(1.0));
  // |S| = M grows: gamma tends to 1 - 1/e from above
  CHECK(default_gamma(50, 50) == doctest::Approx(1.0 - std::pow(49.0 / 50, 50)));
  CHECK(default_gamma(50, 50) > 1.0 - 1.0 / std::exp(1.0));
}

TEST_CASE("comparator resolution") {
  SUBCASE("explicit sets pass through") {
    auto env = make_stochastic_env(6, 2, 50, 0.4, 0.1, 11);
    for (int t = 0; t < 50; ++t) env->step({});
    ComparatorSpec spec;
    spec.kind = ComparatorSpec::Kind::explicit_set;
    spec.set = 0b101;
    CHECK(resolve_comparator(*env, spec, 2) == 0b101);
  }
  SUBCASE("best fixed subset maximizes hit counts in a zero-cost environment") {
    auto env = make_stochastic_env(6, 2, 4000, 0.45, 0.05, 12);
    for (int t = 0; t < 4000; ++t) env->step({});
    ComparatorSpec spec;  // best_fixed, max_size defaults to M
    const Mask best = resolve_comparator(*env, spec, 2);
    CHECK(popcount_mask(best) <= 2);
    // exhaustive check against all subsets of size <= 2
    double best_score = -1e300;
    Mask best_mask = 0;
    for (Mask s = 1; s < 64; ++s) {
      if (popcount_mask(s) > 2) continue;
      double score = 0.0;
      for (long long t = 1; t <= 4000; ++t) score += env->latent_reward(t, s);
      score *= default_gamma(popcount_mask(s), 2);
      if (score > best_score) {
        best_score = score;
        best_mask = s;
      }
    }
    CHECK(best == best_mask);
  }
  SUBCASE("greedy fallback for the unconstrained search") {
    auto env = make_stochastic_env(5, 2, 2000, 0.5, 0.1, 13);
    for (int t = 0; t < 2000; ++t) env->step({});
    ComparatorSpec spec;
    spec.constrained = false;
    const Mask greedy = resolve_comparator(*env, spec, 2);
    CHECK(greedy != 0);
  }
}

TEST_CASE("gamma regret series") {
  SUBCASE("worked arithmetic on a scripted constant environment") {
    // r = best-of-{1,2} indicator over 3 arms, zero costs; a policy that
    // always plays {3} earns nothing, the comparator {1} earns 1 per round
    auto policy = make_exp3_driver(3, 100, 0.0, 1.0);
    auto fresh = make_scripted_env(shifted_constant_script(0.0, 100));
    const auto trace = run_episode(*policy, *fresh, 100, 5);
    const auto series = gamma_regret(trace, *fresh, 0b001, 1);
    // gamma = 1 for |S| = 1: regret_t = t - cum_reward_t
    for (size_t i = 0; i < series.size(); ++i)
      CHECK(series[i] ==
            doctest::Approx(static_cast<double>(i + 1) - trace.rows[i].cum_reward).epsilon(1e-12));
  }
  SUBCASE("shift invariance: constant reward offsets cancel") {
    auto env_a = make_scripted_env(shifted_constant_script(0.0, 200));
    auto env_b = make_scripted_env(shifted_constant_script(5.0, 200));
    auto pol_a = make_msexp3_driver(3, 2, 200, 0.0, 0.0, 1.0);
    auto pol_b = make_msexp3_driver(3, 2, 200, 0.0, 5.0, 6.0);  // range shifted alike
    const auto trace_a = run_episode(*pol_a, *env_a, 200, 9);
    const auto trace_b = run_episode(*pol_b, *env_b, 200, 9);
    // identical action streams (the policy sees identical mapped rewards)
    for (size_t i = 0; i < trace_a.rows.size(); ++i)
      CHECK(trace_a.rows[i].action == trace_b.rows[i].action);
    const auto reg_a = gamma_regret(trace_a, *env_a, 0b011, 2);
    const auto reg_b = gamma_regret(trace_b, *env_b, 0b011, 2);
    for (size_t i = 0; i < reg_a.size(); ++i)
      CHECK(reg_a[i] == doctest::Approx(reg_b[i]).epsilon(1e-9));
  }
  SUBCASE("facility costs enter both sides") {
    auto fn = build_combinatorial({1.0, 0.2});
    auto env = make_facility_env(fn, 50, CostModel::constant, 0.5, 0.5, 21);
    auto policy = make_flexp3_driver(2, 50, 0.5, fn.range_lo(), fn.range_hi());
    const auto trace = run_episode(*policy, *env, 50, 2);
    const auto series = gamma_regret(trace, *env, 0b01, flexp3_num_draws(2, 50));
    CHECK(series.size() == 50);
  }
}

TEST_CASE("aggregation") {
  SUBCASE("identical traces have zero halfwidth") {
    RunTrace t1;
    t1.rows = {{1, 0, 1.0, 0.0, 1.0, 1.0}, {2, 0, 0.0, 0.0, 1.0, 1.0}};
    const auto agg = aggregate(std::vector<RunTrace>{t1, t1});
    CHECK(agg.ci_halfwidth[0] == 0.0);
    CHECK(agg.ci_halfwidth[1] == 0.0);
    CHECK(agg.mean_cum_reward[1] == doctest::Approx(1.0));
  }
  SUBCASE("hand-computed example: series 0 and 2") {
    RunTrace a, b;
    a.rows = {{1, 0, 0.0, 0.0, 0.0, 0.0}};
    b.rows = {{1, 0, 2.0, 0.0, 2.0, 2.0}};
    const auto agg = aggregate(std::vector<RunTrace>{a, b});
    CHECK(agg.mean_cum_reward[0] == doctest::Approx(1.0));
    // unbiased std = sqrt(2); halfwidth = 1.96 sqrt(2)/sqrt(2) = 1.96
    CHECK(agg.ci_halfwidth[0] == doctest::Approx(1.96));
  }
  SUBCASE("n = 35 divides by sqrt(35)") {
    std::vector<RunTrace> traces(35);
    Rng rng(3);
    std::vector<double> values;
    for (auto& t : traces) {
      const double v = rng.uniform();
      values.push_back(v);
      t.rows = {{1, 0, v, 0.0, v, v}};
    }
    const auto agg = aggregate(traces);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= 35.0;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= 34.0;
    CHECK(agg.ci_halfwidth[0] == doctest::Approx(1.96 * std::sqrt(var / 35.0)).epsilon(1e-12));
  }
  SUBCASE("fewer than two traces is an error") {
    RunTrace t1;
    t1.rows = {{1, 0, 1.0, 0.0, 1.0, 1.0}};
    CHECK_THROWS_AS(aggregate(std::vector<RunTrace>{t1}), Error);
  }
}

TEST_CASE("csv export") {
  SUBCASE("trace round trip to 1e-12") {
    auto env = make_stochastic_env(5, 2, 50, 0.4, 0.1, 8);
    auto policy = make_msexp3_driver(5, 2, 50, 0.0, 0.0, 1.0);
    const auto trace = run_episode(*policy, *env, 50, 4);
    const std::string path = "/tmp/summax_trace_test.csv";
    export_trace_csv(trace, path);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,action,reward,paid_cost,cum_reward,cum_profit");
    for (const auto& row : trace.rows) {
      std::string line;
      REQUIRE(std::getline(in, line));
      std::istringstream ss(line);
      std::string field;
      std::getline(ss, field, ',');
      CHECK(std::stoll(field) == row.t);
      std::getline(ss, field, ',');
      CHECK(std::stoull(field) == row.action);
      std::getline(ss, field, ',');
      CHECK(std::stod(field) == doctest::Approx(row.reward).epsilon(1e-12));
      std::getline(ss, field, ',');
      CHECK(std::stod(field) == doctest::Approx(row.paid_cost).epsilon(1e-12));
      std::getline(ss, field, ',');
      CHECK(std::stod(field) == doctest::Approx(row.cum_reward).epsilon(1e-12));
      std::getline(ss, field, ',');
      CHECK(std::stod(field) == doctest::Approx(row.cum_profit).epsilon(1e-12));
    }
    std::remove(path.c_str());
  }
  SUBCASE("empty trace writes a header-only file") {
    RunTrace empty;
    const std::string path = "/tmp/summax_empty_trace.csv";
    export_trace_csv(empty, path);
    std::ifstream in(path);
    std::string line;
    CHECK(std::getline(in, line));
    CHECK_FALSE(std::getline(in, line));
    std::remove(path.c_str());
  }
  SUBCASE("aggregate schema has exactly five columns") {
    RunTrace a, b;
    a.rows = {{1, 0, 0.5, 0.0, 0.5, 0.5}};
    b.rows = {{1, 0, 1.5, 0.0, 1.5, 1.5}};
    const auto agg = aggregate(std::vector<RunTrace>{a, b});
    const std::string path = "/tmp/summax_agg_test.csv";
    export_aggregate_csv(agg, "testpol", path);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "t,policy,mean_cum_reward,ci_halfwidth,mean_cum_profit");
    std::getline(in, row);
    CHECK(std::count(row.begin(), row.end(), ',') == 4);
    std::remove(path.c_str());
  }
}

TEST_CASE("seed isolation under concurrency") {
  auto run_seed = [](std::uint64_t seed) {
    auto env = make_stochastic_env(6, 2, 300, 0.4, 0.1, seed);
    auto policy = make_msexp3_driver(6, 2, 300, 0.0, 0.0, 1.0);
    return run_episode(*policy, *env, 300, seed);
  };
  std::vector<RunTrace> sequential;
  for (std::uint64_t s = 1; s <= 4; ++s) sequential.push_back(run_seed(s));

  std::vector<RunTrace> concurrent(4);
  std::vector<std::thread> pool;
  for (std::uint64_t s = 1; s <= 4; ++s)
    pool.emplace_back([&, s] { concurrent[s - 1] = run_seed(s); });
  for (auto& t : pool) t.join();

  for (int i = 0; i < 4; ++i) CHECK(rows_equal(sequential[i], concurrent[i]));
}

TEST_CASE("config hash helper") {
  CHECK(fnv1a_hex("abc") == fnv1a_hex("abc"));
  CHECK(fnv1a_hex("abc") != fnv1a_hex("abd"));
  CHECK(fnv1a_hex("").size() == 16);
}
