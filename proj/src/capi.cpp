// C boundary: opaque handles over the C++ core, exceptions mapped to status
// codes with a thread-local message.

#include "summax/summax.h"

#include <cstring>
#include <memory>
#include <string>

#include "envs.hpp"
#include "errors.hpp"
#include "fileio.hpp"
#include "harness.hpp"
#include "policies.hpp"
#include "setfn.hpp"
#include "surrogate.hpp"
#include "verify.hpp"

using namespace summax;

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_report;

smx_status to_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return SMX_ERR_INVALID_ARGUMENT;
    case ErrorKind::limit_exceeded: return SMX_ERR_LIMIT_EXCEEDED;
    case ErrorKind::io: return SMX_ERR_IO;
    case ErrorKind::parse: return SMX_ERR_PARSE;
    case ErrorKind::state: return SMX_ERR_STATE;
  }
  return SMX_ERR_INTERNAL;
}

template <typename Fn>
smx_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SMX_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SMX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SMX_ERR_INTERNAL;
  }
}

void check_ptr(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::invalid_argument, std::string(what) + " must not be null");
}

}  // namespace

struct smx_setfn {
  LoadedFunction fn;
};

struct smx_policy {
  std::unique_ptr<PolicyDriver> driver;
};

struct smx_env {
  std::unique_ptr<Environment> env;
};

struct smx_trace {
  RunTrace trace;
};

struct smx_agg {
  AggregateAccumulator acc;
};

extern "C" {

const char* smx_last_error(void) { return g_last_error.c_str(); }

/* ---- set functions ---- */

smx_status smx_setfn_summax_new(int num_rows, int num_arms, const double* values,
                                double empty_value, smx_setfn** out) {
  return guarded([&] {
    check_ptr(values, "values");
    check_ptr(out, "out");
    std::vector<double> v(values, values + static_cast<size_t>(num_rows) * num_arms);
    *out = new smx_setfn{SumMaxFunction::make(num_rows, num_arms, std::move(v), empty_value)};
  });
}

smx_status smx_setfn_table_new(int num_arms, const double* table, smx_setfn** out) {
  return guarded([&] {
    check_ptr(table, "table");
    check_ptr(out, "out");
    require(num_arms >= 1 && num_arms <= 20, ErrorKind::invalid_argument,
            "table: num_arms must be in [1, 20]");
    std::vector<double> t(table, table + (size_t{1} << num_arms));
    *out = new smx_setfn{TabulatedSetFunction::make(num_arms, std::move(t))};
  });
}

smx_status smx_setfn_hitting_set_new(int num_arms, int num_sets, const uint64_t* set_masks,
                                     smx_setfn** out) {
  return guarded([&] {
    check_ptr(out, "out");
    require(num_sets >= 1 && set_masks != nullptr, ErrorKind::invalid_argument,
            "hitting set: no sets given");
    std::vector<Mask> sets(set_masks, set_masks + num_sets);
    *out = new smx_setfn{build_hitting_set(num_arms, sets)};
  });
}

smx_status smx_setfn_best_of_k_new(int num_arms, uint64_t arm_mask, smx_setfn** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_setfn{build_best_of_k(num_arms, arm_mask)};
  });
}

smx_status smx_setfn_combinatorial_new(int num_arms, const double* weights, smx_setfn** out) {
  return guarded([&] {
    check_ptr(weights, "weights");
    check_ptr(out, "out");
    require(num_arms >= 1, ErrorKind::invalid_argument, "combinatorial: empty weights");
    *out = new smx_setfn{build_combinatorial(std::vector<double>(weights, weights + num_arms))};
  });
}

smx_status smx_setfn_k_medians_new(int num_points, int dim, const double* points, int metric,
                                   smx_setfn** out) {
  return guarded([&] {
    check_ptr(points, "points");
    check_ptr(out, "out");
    require(num_points >= 1 && dim >= 1, ErrorKind::invalid_argument,
            "k-medians: need at least one point with positive dimension");
    require(metric == 0 || metric == 1, ErrorKind::invalid_argument, "k-medians: unknown metric");
    std::vector<std::vector<double>> pts(num_points, std::vector<double>(dim));
    for (int k = 0; k < num_points; ++k)
      for (int c = 0; c < dim; ++c) pts[k][c] = points[static_cast<size_t>(k) * dim + c];
    *out = new smx_setfn{
        build_k_medians(pts, metric == 0 ? Metric::euclidean : Metric::manhattan)};
  });
}

smx_status smx_setfn_counterexample_new(double alpha, smx_setfn** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_setfn{build_counterexample(alpha)};
  });
}

smx_status smx_setfn_load(const char* path, smx_setfn** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new smx_setfn{load_set_function(path)};
  });
}

smx_status smx_setfn_from_json(const char* json_text, smx_setfn** out) {
  return guarded([&] {
    check_ptr(json_text, "json_text");
    check_ptr(out, "out");
    *out = new smx_setfn{parse_set_function(json_text)};
  });
}

smx_status smx_setfn_save(const smx_setfn* fn, const char* path) {
  return guarded([&] {
    check_ptr(fn, "fn");
    check_ptr(path, "path");
    save_set_function(fn->fn, path);
  });
}

void smx_setfn_free(smx_setfn* fn) { delete fn; }

int smx_setfn_num_arms(const smx_setfn* fn) { return fn ? loaded_num_arms(fn->fn) : 0; }

int smx_setfn_is_table(const smx_setfn* fn) {
  return fn && std::holds_alternative<TabulatedSetFunction>(fn->fn) ? 1 : 0;
}

double smx_setfn_shift(const smx_setfn* fn) {
  if (const auto* f = fn ? std::get_if<SumMaxFunction>(&fn->fn) : nullptr) return f->shift;
  return 0.0;
}

smx_status smx_setfn_eval(const smx_setfn* fn, uint64_t subset_mask, double* out_value) {
  return guarded([&] {
    check_ptr(fn, "fn");
    check_ptr(out_value, "out_value");
    if (const auto* f = std::get_if<SumMaxFunction>(&fn->fn)) {
      *out_value = f->eval(subset_mask);
    } else {
      const auto& g = std::get<TabulatedSetFunction>(fn->fn);
      require((subset_mask & ~full_mask(g.num_arms)) == 0, ErrorKind::invalid_argument,
              "eval: subset bitmask out of range");
      *out_value = g.at(subset_mask);
    }
  });
}

smx_status smx_setfn_tabulate(const smx_setfn* fn, int limit, smx_setfn** out) {
  return guarded([&] {
    check_ptr(fn, "fn");
    check_ptr(out, "out");
    *out = new smx_setfn{as_table(fn->fn, limit)};
  });
}

smx_status smx_setfn_decompose(const smx_setfn* fn, double* out_coeffs) {
  return guarded([&] {
    check_ptr(fn, "fn");
    check_ptr(out_coeffs, "out_coeffs");
    const auto d = subset_decomposition(as_table(fn->fn));
    std::memcpy(out_coeffs, d.coeffs.data(), d.coeffs.size() * sizeof(double));
  });
}

smx_status smx_setfn_quadratic_form(const smx_setfn* fn, uint64_t subset_mask, const double* x,
                                    double* out_value) {
  return guarded([&] {
    check_ptr(fn, "fn");
    check_ptr(x, "x");
    check_ptr(out_value, "out_value");
    const auto table = as_table(fn->fn);
    *out_value = quadratic_form(table, subset_mask,
                                std::span<const double>(x, static_cast<size_t>(table.num_arms)));
  });
}

smx_status smx_setfn_check(const smx_setfn* fn, smx_property property, double tol,
                           smx_property_report* out, double* witness_x) {
  return guarded([&] {
    check_ptr(fn, "fn");
    check_ptr(out, "out");
    const auto table = as_table(fn->fn);
    PropertyReport report;
    switch (property) {
      case SMX_PROP_PSEUDO_CONCAVE: report = check_pseudo_concave(table, tol); break;
      case SMX_PROP_PSEUDO_SUBMODULAR: report = check_pseudo_submodular(table); break;
      case SMX_PROP_MONOTONE_SUBMODULAR: report = check_monotone_submodular(table); break;
      default: fail(ErrorKind::invalid_argument, "check: unknown property");
    }
    *out = smx_property_report{};
    out->holds = report.holds ? 1 : 0;
    out->worst_value = report.worst;
    if (report.witness) {
      out->witness_subset = report.witness->subset;
      out->witness_aux_subset = report.witness->aux_subset;
      out->witness_element = report.witness->element;
      out->violation = report.witness->violation;
      if (witness_x) {
        for (int i = 0; i < table.num_arms; ++i)
          witness_x[i] = i < static_cast<int>(report.witness->x.size()) ? report.witness->x[i] : 0.0;
      }
    }
  });
}

int smx_table_limit(void) { return table_limit(); }

/* ---- surrogate ---- */

namespace {

SimplexVector simplex_arg(const smx_setfn* fn, const double* q) {
  check_ptr(fn, "fn");
  check_ptr(q, "q");
  const int arms = loaded_num_arms(fn->fn);
  return SimplexVector::checked(std::vector<double>(q, q + arms));
}

}  // namespace

smx_status smx_phi_value(const smx_setfn* fn, const double* q, int num_draws, double* out) {
  return guarded([&] {
    check_ptr(out, "out");
    auto qq = simplex_arg(fn, q);
    *out = phi_value(subset_decomposition(as_table(fn->fn)), qq, num_draws);
  });
}

smx_status smx_phi_gradient(const smx_setfn* fn, const double* q, int num_draws,
                            double* out_grad) {
  return guarded([&] {
    check_ptr(out_grad, "out_grad");
    auto qq = simplex_arg(fn, q);
    const auto grad = phi_gradient(subset_decomposition(as_table(fn->fn)), qq, num_draws);
    std::memcpy(out_grad, grad.data(), grad.size() * sizeof(double));
  });
}

smx_status smx_phi_expectation_oracle(const smx_setfn* fn, const double* q, int num_draws,
                                      double* out) {
  return guarded([&] {
    check_ptr(out, "out");
    auto qq = simplex_arg(fn, q);
    *out = expectation_oracle(as_table(fn->fn), qq, num_draws);
  });
}

/* ---- policies ---- */

smx_status smx_policy_msexp3_new(int num_arms, int num_draws, long long horizon, double cost_cap,
                                 double reward_lo, double reward_hi, smx_policy** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_policy{
        make_msexp3_driver(num_arms, num_draws, horizon, cost_cap, reward_lo, reward_hi)};
  });
}

smx_status smx_policy_exp3_new(int num_arms, long long horizon, double reward_lo, double reward_hi,
                               smx_policy** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_policy{make_exp3_driver(num_arms, horizon, reward_lo, reward_hi)};
  });
}

smx_status smx_policy_flexp3_new(int num_real_arms, long long horizon, double cost_cap,
                                 double reward_lo, double reward_hi, smx_policy** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_policy{
        make_flexp3_driver(num_real_arms, horizon, cost_cap, reward_lo, reward_hi)};
  });
}

smx_status smx_policy_cascade_new(int num_arms, int list_len, int kl_variant, smx_policy** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_policy{make_cascade_driver(
        num_arms, list_len, kl_variant ? CascadeVariant::kl : CascadeVariant::ucb1)};
  });
}

smx_status smx_policy_comband_new(int num_arms, int subset_size, long long horizon,
                                  double mix_gamma, double learn_eta, smx_policy** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_policy{
        make_comband_driver(num_arms, subset_size, horizon, mix_gamma, learn_eta)};
  });
}

void smx_policy_free(smx_policy* policy) { delete policy; }

const char* smx_policy_name(const smx_policy* policy) {
  static thread_local std::string name;
  name = policy ? policy->driver->name() : "";
  return name.c_str();
}

/* ---- environments ---- */

smx_status smx_env_stochastic_new(int num_arms, int num_good, long long horizon, double p_good,
                                  double p_bad, uint64_t seed, smx_env** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_env{make_stochastic_env(num_arms, num_good, horizon, p_good, p_bad, seed)};
  });
}

smx_status smx_env_corrupted_new(int num_arms, int num_good, long long horizon, double p_good,
                                 double p_bad, uint64_t seed, smx_env** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_env{make_corrupted_env(num_arms, num_good, horizon, p_good, p_bad, seed)};
  });
}

smx_status smx_env_worst_case_new(int num_arms, int num_good, long long horizon, int log10_sigma,
                                  uint64_t seed, smx_env** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_env{make_worst_case_env(num_arms, num_good, horizon, seed, log10_sigma != 0)};
  });
}

smx_status smx_env_scripted_new(const char* path, smx_env** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new smx_env{make_scripted_env(load_script(path))};
  });
}

smx_status smx_env_facility_new(const smx_setfn* fn, long long horizon, int cost_model,
                                double cost_cap, double cost_value, uint64_t seed, smx_env** out) {
  return guarded([&] {
    check_ptr(fn, "fn");
    check_ptr(out, "out");
    const auto* f = std::get_if<SumMaxFunction>(&fn->fn);
    require(f != nullptr, ErrorKind::invalid_argument,
            "facility env: reward must be a sum-max function");
    require(cost_model == 0 || cost_model == 1, ErrorKind::invalid_argument,
            "facility env: unknown cost model");
    *out = new smx_env{make_facility_env(*f, horizon,
                                         cost_model == 0 ? CostModel::uniform : CostModel::constant,
                                         cost_cap, cost_value, seed)};
  });
}

void smx_env_free(smx_env* env) { delete env; }
int smx_env_num_arms(const smx_env* env) { return env ? env->env->num_arms() : 0; }
long long smx_env_horizon(const smx_env* env) { return env ? env->env->horizon() : 0; }
double smx_env_cost_cap(const smx_env* env) { return env ? env->env->cost_cap() : 0.0; }

/* ---- episodes, regret, aggregation ---- */

smx_status smx_episode_run(smx_policy* policy, smx_env* env, long long rounds, uint64_t seed,
                           const char* config_hash, smx_trace** out) {
  return guarded([&] {
    check_ptr(policy, "policy");
    check_ptr(env, "env");
    check_ptr(out, "out");
    *out = new smx_trace{run_episode(*policy->driver, *env->env, rounds, seed,
                                     config_hash ? config_hash : "")};
  });
}

void smx_trace_free(smx_trace* trace) { delete trace; }

long long smx_trace_length(const smx_trace* trace) {
  return trace ? static_cast<long long>(trace->trace.rows.size()) : 0;
}

smx_status smx_trace_cumulative(const smx_trace* trace, double* cum_reward, double* cum_profit) {
  return guarded([&] {
    check_ptr(trace, "trace");
    for (size_t i = 0; i < trace->trace.rows.size(); ++i) {
      if (cum_reward) cum_reward[i] = trace->trace.rows[i].cum_reward;
      if (cum_profit) cum_profit[i] = trace->trace.rows[i].cum_profit;
    }
  });
}

smx_status smx_trace_write_csv(const smx_trace* trace, const char* path) {
  return guarded([&] {
    check_ptr(trace, "trace");
    check_ptr(path, "path");
    export_trace_csv(trace->trace, path);
  });
}

smx_status smx_comparator_resolve(const smx_env* env, int max_size, int num_draws,
                                  uint64_t* out_mask) {
  return guarded([&] {
    check_ptr(env, "env");
    check_ptr(out_mask, "out_mask");
    ComparatorSpec spec;
    spec.kind = ComparatorSpec::Kind::best_fixed;
    spec.max_size = max_size;
    *out_mask = resolve_comparator(*env->env, spec, num_draws);
  });
}

smx_status smx_gamma_regret(const smx_trace* trace, const smx_env* env, uint64_t comparator_mask,
                            int num_draws, double gamma, double* out_series) {
  return guarded([&] {
    check_ptr(trace, "trace");
    check_ptr(env, "env");
    check_ptr(out_series, "out_series");
    const auto series = gamma_regret(trace->trace, *env->env, comparator_mask, num_draws, gamma);
    std::memcpy(out_series, series.data(), series.size() * sizeof(double));
  });
}

smx_status smx_agg_new(long long length, smx_agg** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new smx_agg{AggregateAccumulator(length)};
  });
}

smx_status smx_agg_add(smx_agg* agg, const smx_trace* trace) {
  return guarded([&] {
    check_ptr(agg, "agg");
    check_ptr(trace, "trace");
    agg->acc.add(trace->trace);
  });
}

smx_status smx_agg_add_series(smx_agg* agg, const double* cum_reward, const double* cum_profit) {
  return guarded([&] {
    check_ptr(agg, "agg");
    check_ptr(cum_reward, "cum_reward");
    check_ptr(cum_profit, "cum_profit");
    const size_t len = static_cast<size_t>(agg->acc.length());
    agg->acc.add_series(std::span<const double>(cum_reward, len),
                        std::span<const double>(cum_profit, len));
  });
}

long long smx_agg_count(const smx_agg* agg) { return agg ? agg->acc.count() : 0; }

smx_status smx_agg_get(const smx_agg* agg, long long t, double* mean_cum_reward,
                       double* ci_halfwidth, double* mean_cum_profit) {
  return guarded([&] {
    check_ptr(agg, "agg");
    const Aggregate result = agg->acc.finalize();
    require(t >= 1 && t <= static_cast<long long>(result.mean_cum_reward.size()),
            ErrorKind::invalid_argument, "agg: round out of range");
    if (mean_cum_reward) *mean_cum_reward = result.mean_cum_reward[static_cast<size_t>(t - 1)];
    if (ci_halfwidth) *ci_halfwidth = result.ci_halfwidth[static_cast<size_t>(t - 1)];
    if (mean_cum_profit) *mean_cum_profit = result.mean_cum_profit[static_cast<size_t>(t - 1)];
  });
}

smx_status smx_agg_write_csv(const smx_agg* agg, const char* policy_name, const char* path) {
  return guarded([&] {
    check_ptr(agg, "agg");
    check_ptr(policy_name, "policy_name");
    check_ptr(path, "path");
    export_aggregate_csv(agg->acc.finalize(), policy_name, path);
  });
}

void smx_agg_free(smx_agg* agg) { delete agg; }

/* ---- verification ---- */

smx_status smx_verify_run(const char* suite, uint64_t seed, const char* config_json,
                          const char* report_path, int* out_total, int* out_failed) {
  return guarded([&] {
    check_ptr(suite, "suite");
    const CheckConfig cfg = config_json ? CheckConfig::from_json(config_json) : CheckConfig{};
    const auto results = run_checks(suite, seed, cfg);
    g_last_report = checks_to_json(results);
    if (report_path) write_check_report(results, report_path);
    int failed = 0;
    for (const auto& r : results)
      if (!r.passed) ++failed;
    if (out_total) *out_total = static_cast<int>(results.size());
    if (out_failed) *out_failed = failed;
  });
}

long long smx_verify_last_report(char* buffer, long long buffer_len) {
  const long long full = static_cast<long long>(g_last_report.size());
  if (buffer && buffer_len > 0) {
    const long long n = std::min(buffer_len - 1, full);
    std::memcpy(buffer, g_last_report.data(), static_cast<size_t>(n));
    buffer[n] = '\0';
  }
  return full;
}

}  // extern "C"
