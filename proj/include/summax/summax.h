/* summax — nonstochastic sum-max bandit simulation library.
 *
 * C interface to the core: set-function construction and property checking,
 * the Psi surrogate, the bandit policies and synthetic environments, the
 * episode harness with aggregation, and the numerical certification suite.
 *
 * Conventions: every fallible call returns smx_status; on failure the
 * thread-local message from smx_last_error() describes the problem. Handles
 * are opaque and freed with their matching *_free. Subsets are bitmasks with
 * bit i-1 set iff arm i is in the set. Arms are 0-based in every array
 * argument.
 */
#ifndef SUMMAX_H
#define SUMMAX_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smx_status {
  SMX_OK = 0,
  SMX_ERR_INVALID_ARGUMENT = 1,
  SMX_ERR_LIMIT_EXCEEDED = 2,
  SMX_ERR_IO = 3,
  SMX_ERR_PARSE = 4,
  SMX_ERR_STATE = 5,
  SMX_ERR_INTERNAL = 6
} smx_status;

/* Message for the most recent failure on this thread; empty string if none. */
const char* smx_last_error(void);

typedef struct smx_setfn smx_setfn;
typedef struct smx_policy smx_policy;
typedef struct smx_env smx_env;
typedef struct smx_trace smx_trace;
typedef struct smx_agg smx_agg;

/* ---- set functions ---- */

smx_status smx_setfn_summax_new(int num_rows, int num_arms, const double* values,
                                double empty_value, smx_setfn** out);
smx_status smx_setfn_table_new(int num_arms, const double* table /* 2^num_arms */,
                               smx_setfn** out);
smx_status smx_setfn_hitting_set_new(int num_arms, int num_sets, const uint64_t* set_masks,
                                     smx_setfn** out);
smx_status smx_setfn_best_of_k_new(int num_arms, uint64_t arm_mask, smx_setfn** out);
smx_status smx_setfn_combinatorial_new(int num_arms, const double* weights, smx_setfn** out);
/* metric: 0 = euclidean, 1 = manhattan; the nonnegativity shift D is
 * retrievable with smx_setfn_shift. */
smx_status smx_setfn_k_medians_new(int num_points, int dim, const double* points, int metric,
                                   smx_setfn** out);
smx_status smx_setfn_counterexample_new(double alpha, smx_setfn** out);
smx_status smx_setfn_load(const char* path, smx_setfn** out);
smx_status smx_setfn_from_json(const char* json_text, smx_setfn** out);
smx_status smx_setfn_save(const smx_setfn* fn, const char* path);
void smx_setfn_free(smx_setfn* fn);

int smx_setfn_num_arms(const smx_setfn* fn);
int smx_setfn_is_table(const smx_setfn* fn);
double smx_setfn_shift(const smx_setfn* fn);
smx_status smx_setfn_eval(const smx_setfn* fn, uint64_t subset_mask, double* out_value);
smx_status smx_setfn_tabulate(const smx_setfn* fn, int limit /* 0 = default */, smx_setfn** out);
smx_status smx_setfn_decompose(const smx_setfn* fn, double* out_coeffs /* 2^num_arms */);
smx_status smx_setfn_quadratic_form(const smx_setfn* fn, uint64_t subset_mask, const double* x,
                                    double* out_value);

typedef enum smx_property {
  SMX_PROP_PSEUDO_CONCAVE = 0,
  SMX_PROP_PSEUDO_SUBMODULAR = 1,
  SMX_PROP_MONOTONE_SUBMODULAR = 2
} smx_property;

typedef struct smx_property_report {
  int holds;
  uint64_t witness_subset;
  uint64_t witness_aux_subset;
  int witness_element; /* 1-based arm, 0 when not applicable */
  double violation;
  double worst_value;
} smx_property_report;

/* tol <= 0 selects the property's default tolerance. witness_x may be NULL;
 * otherwise it receives num_arms doubles of checker-specific evidence. */
smx_status smx_setfn_check(const smx_setfn* fn, smx_property property, double tol,
                           smx_property_report* out, double* witness_x);

/* Tabulation bound currently in effect (SUMMAX_TABLE_LIMIT overrides the
 * default of 12). */
int smx_table_limit(void);

/* ---- surrogate ---- */

smx_status smx_phi_value(const smx_setfn* fn, const double* q, int num_draws, double* out);
smx_status smx_phi_gradient(const smx_setfn* fn, const double* q, int num_draws, double* out_grad);
smx_status smx_phi_expectation_oracle(const smx_setfn* fn, const double* q, int num_draws,
                                      double* out);

/* ---- policies ---- */

smx_status smx_policy_msexp3_new(int num_arms, int num_draws, long long horizon, double cost_cap,
                                 double reward_lo, double reward_hi, smx_policy** out);
smx_status smx_policy_exp3_new(int num_arms, long long horizon, double reward_lo, double reward_hi,
                               smx_policy** out);
smx_status smx_policy_flexp3_new(int num_real_arms, long long horizon, double cost_cap,
                                 double reward_lo, double reward_hi, smx_policy** out);
smx_status smx_policy_cascade_new(int num_arms, int list_len, int kl_variant, smx_policy** out);
/* mix_gamma/learn_eta <= 0 select the documented defaults. */
smx_status smx_policy_comband_new(int num_arms, int subset_size, long long horizon,
                                  double mix_gamma, double learn_eta, smx_policy** out);
void smx_policy_free(smx_policy* policy);
const char* smx_policy_name(const smx_policy* policy);

/* ---- environments ---- */

smx_status smx_env_stochastic_new(int num_arms, int num_good, long long horizon, double p_good,
                                  double p_bad, uint64_t seed, smx_env** out);
smx_status smx_env_corrupted_new(int num_arms, int num_good, long long horizon, double p_good,
                                 double p_bad, uint64_t seed, smx_env** out);
smx_status smx_env_worst_case_new(int num_arms, int num_good, long long horizon, int log10_sigma,
                                  uint64_t seed, smx_env** out);
smx_status smx_env_scripted_new(const char* path, smx_env** out);
/* cost_model: 0 = i.i.d. uniform on [0, cost_cap], 1 = constant cost_value. */
smx_status smx_env_facility_new(const smx_setfn* fn, long long horizon, int cost_model,
                                double cost_cap, double cost_value, uint64_t seed, smx_env** out);
void smx_env_free(smx_env* env);
int smx_env_num_arms(const smx_env* env);
long long smx_env_horizon(const smx_env* env);
double smx_env_cost_cap(const smx_env* env);

/* ---- episodes, regret, aggregation ---- */

/* Drives `rounds` rounds (0 = the environment's remaining horizon). The
 * policy handle is consumed statefully; use a fresh policy per episode. */
smx_status smx_episode_run(smx_policy* policy, smx_env* env, long long rounds, uint64_t seed,
                           const char* config_hash, smx_trace** out);
void smx_trace_free(smx_trace* trace);
long long smx_trace_length(const smx_trace* trace);
smx_status smx_trace_cumulative(const smx_trace* trace, double* cum_reward, double* cum_profit);
smx_status smx_trace_write_csv(const smx_trace* trace, const char* path);

/* Best fixed comparator for the episode's environment: subsets of size up to
 * max_size (0 = num_draws). Requires the episode to have been run. */
smx_status smx_comparator_resolve(const smx_env* env, int max_size, int num_draws,
                                  uint64_t* out_mask);
/* gamma <= 0 selects 1 - ((|S|-1)/|S|)^M. out_series has trace length. */
smx_status smx_gamma_regret(const smx_trace* trace, const smx_env* env, uint64_t comparator_mask,
                            int num_draws, double gamma, double* out_series);

smx_status smx_agg_new(long long length, smx_agg** out);
smx_status smx_agg_add(smx_agg* agg, const smx_trace* trace);
smx_status smx_agg_add_series(smx_agg* agg, const double* cum_reward, const double* cum_profit);
long long smx_agg_count(const smx_agg* agg);
smx_status smx_agg_get(const smx_agg* agg, long long t /* 1-based */, double* mean_cum_reward,
                       double* ci_halfwidth, double* mean_cum_profit);
smx_status smx_agg_write_csv(const smx_agg* agg, const char* policy_name, const char* path);
void smx_agg_free(smx_agg* agg);

/* ---- verification ---- */

/* suite: "all" or a single check name. config_json may be NULL (defaults) or
 * a JSON object overriding check budgets. Writes the report when report_path
 * is non-NULL. */
smx_status smx_verify_run(const char* suite, uint64_t seed, const char* config_json,
                          const char* report_path, int* out_total, int* out_failed);
/* Copies up to buffer_len bytes of the JSON report of the last
 * smx_verify_run on this thread; returns the full length. */
long long smx_verify_last_report(char* buffer, long long buffer_len);

#ifdef __cplusplus
}
#endif

#endif /* SUMMAX_H */
