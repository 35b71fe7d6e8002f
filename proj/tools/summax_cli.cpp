// Command-line front end: simulation runs, figure reproduction, the numerical
// certification suite, and set-function property checking. Talks to the core
// exclusively through the public C API.
//
// Exit codes: 0 ok, 1 check failure, 2 usage/config error, 3 runtime error.

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "summax/summax.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct CliError {
  int exit_code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& message) { throw CliError{code, message}; }

int status_exit_code(smx_status s) {
  switch (s) {
    case SMX_OK: return kExitOk;
    case SMX_ERR_INVALID_ARGUMENT:
    case SMX_ERR_PARSE:
    case SMX_ERR_LIMIT_EXCEEDED: return kExitUsage;
    default: return kExitRuntime;
  }
}

void must(smx_status s, const std::string& what) {
  if (s != SMX_OK) die(status_exit_code(s), what + ": " + smx_last_error());
}

std::string fnv1a_hex(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string mask_to_set(uint64_t mask) {
  std::ostringstream ss;
  ss << '{';
  bool first = true;
  for (int i = 0; i < 64; ++i)
    if ((mask >> i) & 1) {
      if (!first) ss << ',';
      ss << (i + 1);
      first = false;
    }
  ss << '}';
  return ss.str();
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) die(kExitUsage, "cannot open config '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) die(kExitUsage, "config '" + path + "' is not valid JSON");
  return j;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& what) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) ok = true;
    if (!ok) die(kExitUsage, what + ": unknown key '" + it.key() + "'");
  }
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) die(kExitUsage, std::string("config: '") + key + "' must be a number");
  return j[key].get<double>();
}

long long get_int(const json& j, const char* key, long long fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) die(kExitUsage, std::string("config: missing '") + key + "'");
    return fallback;
  }
  if (!j[key].is_number_integer())
    die(kExitUsage, std::string("config: '") + key + "' must be an integer");
  return j[key].get<long long>();
}

// ---- resolved run configuration ----

struct EnvSpecCli {
  std::string kind;
  int num_arms = 0;
  int num_good = 0;
  double p_good = 0.3, p_bad = 0.1;
  bool log10_sigma = false;
  std::string script_path;
  std::string fn_json;  // facility reward
  int cost_model = 0;
  double cost_cap = 0.0, cost_value = 0.0;
};

struct PolicySpecCli {
  std::string name;
  int num_draws = 0;
  double cost_cap = 0.0;
  double reward_lo = 0.0, reward_hi = 1.0;
  double gamma = 0.0, eta = 0.0;  // comband
};

struct RunConfigCli {
  long long horizon = 0;
  int seed_count = 0;
  uint64_t seed_base = 0;
  EnvSpecCli env;
  std::vector<PolicySpecCli> policies;
  bool has_comparator = false;
  uint64_t comparator_mask = 0;  // 0 => best fixed search
  int comparator_max_size = 0;
  double gamma_override = 0.0;
  bool write_traces = true;
  std::string out_dir = "out";
  int workers = 0;
  std::string hash;
};

struct SetfnDeleter {
  void operator()(smx_setfn* p) const { smx_setfn_free(p); }
};
using SetfnPtr = std::unique_ptr<smx_setfn, SetfnDeleter>;

smx_env* make_env(const EnvSpecCli& spec, long long horizon, uint64_t seed) {
  smx_env* env = nullptr;
  if (spec.kind == "stochastic") {
    must(smx_env_stochastic_new(spec.num_arms, spec.num_good, horizon, spec.p_good, spec.p_bad,
                                seed, &env),
         "stochastic env");
  } else if (spec.kind == "corrupted") {
    must(smx_env_corrupted_new(spec.num_arms, spec.num_good, horizon, spec.p_good, spec.p_bad,
                               seed, &env),
         "corrupted env");
  } else if (spec.kind == "worst_case") {
    must(smx_env_worst_case_new(spec.num_arms, spec.num_good, horizon, spec.log10_sigma ? 1 : 0,
                                seed, &env),
         "worst-case env");
  } else if (spec.kind == "scripted") {
    must(smx_env_scripted_new(spec.script_path.c_str(), &env), "scripted env");
  } else if (spec.kind == "facility") {
    smx_setfn* fn = nullptr;
    must(smx_setfn_from_json(spec.fn_json.c_str(), &fn), "facility reward");
    SetfnPtr guard(fn);
    must(smx_env_facility_new(fn, horizon, spec.cost_model, spec.cost_cap, spec.cost_value, seed,
                              &env),
         "facility env");
  } else {
    die(kExitUsage, "config: unknown environment kind '" + spec.kind + "'");
  }
  return env;
}

smx_policy* make_policy(const PolicySpecCli& spec, int num_arms, long long horizon) {
  smx_policy* p = nullptr;
  if (spec.name == "msexp3") {
    must(smx_policy_msexp3_new(num_arms, spec.num_draws, horizon, spec.cost_cap, spec.reward_lo,
                               spec.reward_hi, &p),
         "msexp3");
  } else if (spec.name == "exp3") {
    must(smx_policy_exp3_new(num_arms, horizon, spec.reward_lo, spec.reward_hi, &p), "exp3");
  } else if (spec.name == "flexp3") {
    must(smx_policy_flexp3_new(num_arms, horizon, spec.cost_cap, spec.reward_lo, spec.reward_hi,
                               &p),
         "flexp3");
  } else if (spec.name == "cascade_ucb") {
    must(smx_policy_cascade_new(num_arms, spec.num_draws, 0, &p), "cascade_ucb");
  } else if (spec.name == "cascade_kl") {
    must(smx_policy_cascade_new(num_arms, spec.num_draws, 1, &p), "cascade_kl");
  } else if (spec.name == "comband") {
    must(smx_policy_comband_new(num_arms, spec.num_draws, horizon, spec.gamma, spec.eta, &p),
         "comband");
  } else {
    die(kExitUsage, "config: unknown policy name '" + spec.name + "'");
  }
  return p;
}

RunConfigCli parse_run_config(const json& j) {
  if (!j.is_object()) die(kExitUsage, "config: expected a JSON object");
  reject_unknown(j,
                 {"T", "seeds", "env", "policies", "comparator", "gamma", "out_dir",
                  "write_traces", "workers"},
                 "config");
  RunConfigCli cfg;
  cfg.hash = fnv1a_hex(j.dump());

  if (!j.contains("env") || !j["env"].is_object()) die(kExitUsage, "config: missing 'env' object");
  const json& env = j["env"];
  reject_unknown(env,
                 {"kind", "K", "M", "p_good", "p_bad", "log_base", "path", "fn", "cost"},
                 "config env");
  if (!env.contains("kind") || !env["kind"].is_string())
    die(kExitUsage, "config env: missing 'kind'");
  cfg.env.kind = env["kind"].get<std::string>();
  const bool needs_k =
      cfg.env.kind != "scripted" && cfg.env.kind != "facility";  // those carry their own dimension
  cfg.env.num_arms = static_cast<int>(get_int(env, "K", 0, needs_k));
  cfg.env.num_good = static_cast<int>(get_int(env, "M", 1));
  cfg.env.p_good = get_num(env, "p_good", 0.3);
  cfg.env.p_bad = get_num(env, "p_bad", 0.1);
  if (env.contains("log_base")) {
    const std::string base = env["log_base"].get<std::string>();
    if (base != "e" && base != "10") die(kExitUsage, "config env: log_base must be 'e' or '10'");
    cfg.env.log10_sigma = base == "10";
  }
  if (cfg.env.kind == "scripted") {
    if (!env.contains("path")) die(kExitUsage, "config env: scripted needs 'path'");
    cfg.env.script_path = env["path"].get<std::string>();
  }
  double env_reward_lo = 0.0, env_reward_hi = 1.0;
  if (cfg.env.kind == "facility") {
    if (!env.contains("fn")) die(kExitUsage, "config env: facility needs 'fn'");
    cfg.env.fn_json = env["fn"].is_string()
                          ? load_json_file(env["fn"].get<std::string>()).dump()
                          : env["fn"].dump();
    if (env.contains("cost")) {
      const json& cost = env["cost"];
      reject_unknown(cost, {"kind", "cap", "value"}, "config env cost");
      const std::string kind = cost.value("kind", "uniform");
      if (kind != "uniform" && kind != "constant")
        die(kExitUsage, "config env cost: kind must be 'uniform' or 'constant'");
      cfg.env.cost_model = kind == "uniform" ? 0 : 1;
      cfg.env.cost_cap = get_num(cost, "cap", 1.0);
      cfg.env.cost_value = get_num(cost, "value", cfg.env.cost_cap);
    }
    smx_setfn* fn = nullptr;
    must(smx_setfn_from_json(cfg.env.fn_json.c_str(), &fn), "facility reward");
    SetfnPtr guard(fn);
    if (cfg.env.num_arms != 0 && cfg.env.num_arms != smx_setfn_num_arms(fn))
      die(kExitUsage, "config env: K disagrees with the facility reward dimension");
    cfg.env.num_arms = smx_setfn_num_arms(fn);
    double empty = 0.0;
    must(smx_setfn_eval(fn, 0, &empty), "facility reward");
    double full = 0.0;
    must(smx_setfn_eval(fn, (uint64_t{1} << cfg.env.num_arms) - 1, &full), "facility reward");
    env_reward_lo = empty;
    env_reward_hi = full;
    if (env_reward_hi <= env_reward_lo) env_reward_hi = env_reward_lo + 1.0;
  }

  cfg.horizon = get_int(j, "T", 0, cfg.env.kind != "scripted");
  if (cfg.env.kind == "scripted") {
    smx_env* probe = make_env(cfg.env, 0, 0);
    const long long script_len = smx_env_horizon(probe);
    cfg.env.cost_cap = smx_env_cost_cap(probe);
    if (cfg.env.num_arms == 0) cfg.env.num_arms = smx_env_num_arms(probe);
    smx_env_free(probe);
    if (cfg.horizon == 0) cfg.horizon = script_len;
    if (cfg.horizon > script_len) die(kExitUsage, "config: T exceeds the script length");
  }
  if (cfg.horizon <= 0) die(kExitUsage, "config: T must be positive");

  if (!j.contains("seeds") || !j["seeds"].is_object())
    die(kExitUsage, "config: missing 'seeds' object");
  reject_unknown(j["seeds"], {"count", "base"}, "config seeds");
  cfg.seed_count = static_cast<int>(get_int(j["seeds"], "count", 0, true));
  cfg.seed_base = static_cast<uint64_t>(get_int(j["seeds"], "base", 1));
  if (cfg.seed_count < 1) die(kExitUsage, "config: seeds.count must be >= 1");

  if (!j.contains("policies") || !j["policies"].is_array() || j["policies"].empty())
    die(kExitUsage, "config: missing nonempty 'policies' array");
  for (const json& p : j["policies"]) {
    reject_unknown(p, {"name", "params"}, "config policy");
    if (!p.contains("name") || !p["name"].is_string())
      die(kExitUsage, "config policy: missing 'name'");
    PolicySpecCli spec;
    spec.name = p["name"].get<std::string>();
    const bool known = spec.name == "msexp3" || spec.name == "exp3" || spec.name == "flexp3" ||
                       spec.name == "cascade_ucb" || spec.name == "cascade_kl" ||
                       spec.name == "comband";
    if (!known) die(kExitUsage, "config: unknown policy name '" + spec.name + "'");
    const json params = p.value("params", json::object());
    reject_unknown(params, {"M", "C", "reward_lo", "reward_hi", "m", "gamma", "eta"},
                   "config policy params");
    spec.num_draws = static_cast<int>(
        get_int(params, "M", get_int(params, "m", std::max(cfg.env.num_good, 1))));
    spec.cost_cap = get_num(params, "C", spec.name == "flexp3" ? 1.0 : cfg.env.cost_cap);
    spec.reward_lo = get_num(params, "reward_lo", env_reward_lo);
    spec.reward_hi = get_num(params, "reward_hi", env_reward_hi);
    spec.gamma = get_num(params, "gamma", 0.0);
    spec.eta = get_num(params, "eta", 0.0);
    cfg.policies.push_back(spec);
  }

  if (j.contains("comparator")) {
    const json& comp = j["comparator"];
    reject_unknown(comp, {"kind", "max_size", "arms"}, "config comparator");
    const std::string kind = comp.value("kind", "best_fixed");
    cfg.has_comparator = true;
    if (kind == "subset") {
      if (!comp.contains("arms") || !comp["arms"].is_array() || comp["arms"].empty())
        die(kExitUsage, "config comparator: subset needs a nonempty 'arms' array");
      for (const json& a : comp["arms"]) {
        const long long arm = a.get<long long>();
        if (arm < 1 || arm > cfg.env.num_arms)
          die(kExitUsage, "config comparator: arm out of range");
        cfg.comparator_mask |= uint64_t{1} << (arm - 1);
      }
    } else if (kind == "best_fixed") {
      cfg.comparator_max_size = static_cast<int>(get_int(comp, "max_size", 0));
    } else {
      die(kExitUsage, "config comparator: unknown kind '" + kind + "'");
    }
  }
  cfg.gamma_override = get_num(j, "gamma", 0.0);
  if (j.contains("write_traces")) cfg.write_traces = j["write_traces"].get<bool>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  cfg.workers = static_cast<int>(get_int(j, "workers", 0));
  return cfg;
}

// ---- run execution ----

struct ReplicaResult {
  std::vector<double> cum_reward, cum_profit, regret;
};

int execute_run(const json& raw_config, const RunConfigCli& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream meta(cfg.out_dir + "/metadata.json");
    if (!meta.good()) die(kExitRuntime, "cannot write metadata.json");
    meta << raw_config.dump(2) << '\n';
  }

  const int workers = cfg.workers > 0
                          ? cfg.workers
                          : std::max(1u, std::thread::hardware_concurrency());

  for (const PolicySpecCli& pol : cfg.policies) {
    std::vector<ReplicaResult> results(static_cast<size_t>(cfg.seed_count));
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    int error_code = kExitRuntime;
    std::mutex error_mutex;

    auto worker = [&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= cfg.seed_count || failed.load()) return;
        try {
          const uint64_t seed = cfg.seed_base + static_cast<uint64_t>(i);
          smx_env* env = make_env(cfg.env, cfg.horizon, seed);
          smx_policy* policy = make_policy(pol, cfg.env.num_arms, cfg.horizon);
          smx_trace* trace = nullptr;
          must(smx_episode_run(policy, env, cfg.horizon, seed, cfg.hash.c_str(), &trace),
               pol.name);
          ReplicaResult& res = results[static_cast<size_t>(i)];
          const long long len = smx_trace_length(trace);
          res.cum_reward.resize(static_cast<size_t>(len));
          res.cum_profit.resize(static_cast<size_t>(len));
          must(smx_trace_cumulative(trace, res.cum_reward.data(), res.cum_profit.data()),
               pol.name);
          if (cfg.write_traces) {
            const std::string path =
                cfg.out_dir + "/trace_" + pol.name + "_seed" + std::to_string(seed) + ".csv";
            must(smx_trace_write_csv(trace, path.c_str()), "trace csv");
          }
          if (cfg.has_comparator) {
            uint64_t comp = cfg.comparator_mask;
            if (comp == 0)
              must(smx_comparator_resolve(env, cfg.comparator_max_size, pol.num_draws, &comp),
                   "comparator");
            res.regret.resize(static_cast<size_t>(len));
            must(smx_gamma_regret(trace, env, comp, pol.num_draws, cfg.gamma_override,
                                  res.regret.data()),
                 "gamma regret");
          }
          smx_trace_free(trace);
          smx_policy_free(policy);
          smx_env_free(env);
        } catch (const CliError& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          error_message = e.message;
          error_code = e.exit_code;
          failed.store(true);
          return;
        }
      }
    };

    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) die(error_code, error_message);

    // aggregation in seed order keeps outputs byte-reproducible
    if (cfg.seed_count >= 2) {
      smx_agg* agg = nullptr;
      must(smx_agg_new(cfg.horizon, &agg), "aggregate");
      for (const auto& res : results)
        must(smx_agg_add_series(agg, res.cum_reward.data(), res.cum_profit.data()), "aggregate");
      const std::string path = cfg.out_dir + "/aggregate_" + pol.name + ".csv";
      must(smx_agg_write_csv(agg, pol.name.c_str(), path.c_str()), "aggregate csv");
      smx_agg_free(agg);
    }
    if (cfg.has_comparator && cfg.seed_count >= 2) {
      // mean and 1.96 se of the regret series across seeds
      const size_t len = results.front().regret.size();
      std::ofstream out(cfg.out_dir + "/regret_" + pol.name + ".csv");
      if (!out.good()) die(kExitRuntime, "cannot write regret csv");
      out << "t,policy,mean_gamma_regret,ci_halfwidth\n";
      const double n = cfg.seed_count;
      for (size_t i = 0; i < len; ++i) {
        double sum = 0.0, sumsq = 0.0;
        for (const auto& res : results) {
          sum += res.regret[i];
          sumsq += res.regret[i] * res.regret[i];
        }
        const double mean = sum / n;
        const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", mean, 1.96 * std::sqrt(var / n));
        out << (i + 1) << ',' << pol.name << ',' << buf << '\n';
      }
    }
    std::cout << "policy " << pol.name << ": " << cfg.seed_count << " seeds x " << cfg.horizon
              << " rounds done\n";
  }
  std::cout << "outputs written to " << cfg.out_dir << '\n';
  return kExitOk;
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) die(kExitUsage, "override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json* node = &config;
  std::istringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) die(kExitUsage, "override: empty key");
  for (size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  json parsed = json::parse(value, nullptr, false);
  (*node)[parts.back()] = parsed.is_discarded() ? json(value) : parsed;
}

// ---- subcommands ----

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& out_dir, int seeds, int workers) {
  json config = load_json_file(config_path);
  for (const auto& o : overrides) apply_override(config, o);
  if (!out_dir.empty()) config["out_dir"] = out_dir;
  if (seeds > 0) config["seeds"]["count"] = seeds;
  if (workers > 0) config["workers"] = workers;
  const RunConfigCli cfg = parse_run_config(config);
  return execute_run(config, cfg);
}

int cmd_reproduce(const std::string& figure, double scale, int seeds, const std::string& out_dir,
                  int workers) {
  if (scale <= 0.0 || scale > 1.0) die(kExitUsage, "--scale must lie in (0, 1]");
  std::string kind;
  if (figure == "stochastic") kind = "stochastic";
  else if (figure == "corrupted") kind = "corrupted";
  else if (figure == "worstcase") kind = "worst_case";
  else die(kExitUsage, "--figure must be stochastic, corrupted, or worstcase");

  json config;
  config["T"] = static_cast<long long>(100000 * scale + 0.5);
  config["seeds"] = {{"count", seeds}, {"base", 1}};
  config["env"] = {{"kind", kind}, {"K", 20}, {"M", 3}};
  if (kind != "worst_case") {
    config["env"]["p_good"] = 0.3;
    config["env"]["p_bad"] = 0.1;
  }
  config["policies"] = json::array({
      json{{"name", "msexp3"}, {"params", {{"M", 3}}}},
      json{{"name", "cascade_ucb"}, {"params", json::object()}},
      json{{"name", "cascade_kl"}, {"params", json::object()}},
      json{{"name", "comband"}, {"params", {{"m", 3}}}},
  });
  config["write_traces"] = false;
  config["out_dir"] = out_dir.empty() ? "reproduce_" + figure : out_dir;
  if (workers > 0) config["workers"] = workers;
  const RunConfigCli cfg = parse_run_config(config);
  return execute_run(config, cfg);
}

int cmd_verify(const std::string& suite, uint64_t seed, const std::string& report_path,
               const std::string& config_path) {
  std::string config_text;
  if (!config_path.empty()) config_text = load_json_file(config_path).dump();
  int total = 0, failed = 0;
  must(smx_verify_run(suite.c_str(), seed, config_text.empty() ? nullptr : config_text.c_str(),
                      report_path.empty() ? nullptr : report_path.c_str(), &total, &failed),
       "verify");
  const long long len = smx_verify_last_report(nullptr, 0);
  std::string report(static_cast<size_t>(len) + 1, '\0');
  smx_verify_last_report(report.data(), len + 1);
  report.resize(static_cast<size_t>(len));
  const json results = json::parse(report);
  for (const json& r : results) {
    std::cout << (r["passed"].get<bool>() ? "[PASS] " : "[FAIL] ") << r["name"].get<std::string>()
              << ": measured=" << r["measured"].get<double>()
              << " target=" << r["bound_or_target"].get<double>()
              << " tol=" << r["tolerance"].get<double>() << "\n       "
              << r["details"].get<std::string>() << '\n';
  }
  std::cout << (total - failed) << "/" << total << " checks passed\n";
  return failed == 0 ? kExitOk : kExitCheckFailure;
}

int cmd_check_function(const std::string& path, bool pseudo_concave, bool pseudo_submodular,
                       bool monotone_submodular, bool all, bool decompose, double tol) {
  smx_setfn* fn = nullptr;
  must(smx_setfn_load(path.c_str(), &fn), "load set function");
  SetfnPtr guard(fn);
  const int arms = smx_setfn_num_arms(fn);
  std::cout << "loaded " << (smx_setfn_is_table(fn) ? "table" : "sum-max") << " function over "
            << arms << " arms\n";

  bool any_requested = false;
  bool any_failed = false;
  auto run_check = [&](smx_property prop, const std::string& label) {
    any_requested = true;
    smx_property_report report;
    std::vector<double> x(static_cast<size_t>(arms), 0.0);
    must(smx_setfn_check(fn, prop, tol, &report, x.data()), label);
    if (report.holds) {
      std::cout << label << ": holds\n";
      return;
    }
    any_failed = true;
    std::cout << label << ": FAILS\n  witness S = " << mask_to_set(report.witness_subset)
              << " (mask " << report.witness_subset << ")";
    if (report.witness_aux_subset || report.witness_element)
      std::cout << ", aux = " << mask_to_set(report.witness_aux_subset) << ", element "
                << report.witness_element;
    std::cout << "\n  violation = " << report.violation << "\n  x = [";
    for (int i = 0; i < arms; ++i) std::cout << (i ? ", " : "") << x[static_cast<size_t>(i)];
    std::cout << "]\n";
  };

  if (pseudo_concave || all) run_check(SMX_PROP_PSEUDO_CONCAVE, "pseudo-concave");
  if (pseudo_submodular || all) run_check(SMX_PROP_PSEUDO_SUBMODULAR, "pseudo-submodular");
  if (monotone_submodular || all) run_check(SMX_PROP_MONOTONE_SUBMODULAR, "monotone-submodular");

  if (decompose) {
    any_requested = true;
    std::vector<double> coeffs(size_t{1} << arms);
    must(smx_setfn_decompose(fn, coeffs.data()), "decompose");
    std::cout << "subset decomposition d(S):\n";
    for (uint64_t mask = 0; mask < coeffs.size(); ++mask)
      std::cout << "  d(" << mask_to_set(mask) << ") = " << coeffs[mask] << '\n';
  }
  if (!any_requested)
    die(kExitUsage,
        "nothing to do: pass --pseudo-concave, --pseudo-submodular, --monotone-submodular, "
        "--all, and/or --decompose");
  return any_failed ? kExitCheckFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sum-max submodular bandit simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  int seeds = 0, workers = 0;
  auto* run = app.add_subcommand("run", "execute a simulation config");
  run->add_option("--config", config_path, "run config JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seeds", seeds, "seed count (overrides config)");
  run->add_option("--workers", workers, "worker threads");
  run->add_option("--set", overrides, "dotted-key config overrides, e.g. env.K=10");

  std::string figure;
  double scale = 0.2;
  int rep_seeds = 35;
  auto* rep = app.add_subcommand("reproduce", "reproduce a figure panel");
  rep->add_option("--figure", figure, "stochastic | corrupted | worstcase")->required();
  rep->add_option("--scale", scale, "horizon scale in (0,1], T = 1e5 * scale (default 0.2)");
  rep->add_option("--seeds", rep_seeds, "number of runs (default 35)");
  rep->add_option("--out", out_dir, "output directory");
  rep->add_option("--workers", workers, "worker threads");

  std::string suite = "all", report_path = "verify_report.json", check_config;
  uint64_t verify_seed = 20240913;
  auto* ver = app.add_subcommand("verify", "run the numerical certification suite");
  ver->add_option("--suite", suite, "all or a single check name");
  ver->add_option("--seed", verify_seed, "suite seed");
  ver->add_option("--report", report_path, "JSON report path");
  ver->add_option("--check-config", check_config, "JSON file overriding check budgets");

  std::string fn_path;
  bool f_pc = false, f_ps = false, f_ms = false, f_all = false, f_dec = false;
  double tol = -1.0;
  auto* chk = app.add_subcommand("check-function", "property-check a set-function file");
  chk->add_option("file", fn_path, "set-function JSON file")->required();
  chk->add_flag("--pseudo-concave", f_pc, "check pseudo-concavity");
  chk->add_flag("--pseudo-submodular", f_ps, "check pseudo-submodularity");
  chk->add_flag("--monotone-submodular", f_ms, "check monotonicity + submodularity");
  chk->add_flag("--all", f_all, "run all three property checks");
  chk->add_flag("--decompose", f_dec, "print the subset decomposition");
  chk->add_option("--tol", tol, "pseudo-concavity tolerance (default 1e-9 * max|table|)");

  try {
    app.parse(argc, argv);
    if (*run) return cmd_run(config_path, overrides, out_dir, seeds, workers);
    if (*rep) return cmd_reproduce(figure, scale, rep_seeds, out_dir, workers);
    if (*ver) return cmd_verify(suite, verify_seed, report_path, check_config);
    if (*chk) return cmd_check_function(fn_path, f_pc, f_ps, f_ms, f_all, f_dec, tol);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
