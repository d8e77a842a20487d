#include "daug/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <map>
#include <ostream>
#include <sstream>

#include "daug/errors.hpp"

namespace daug {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kCatDataStream = 0xCA7D;
constexpr std::uint64_t kPolicyDataStream = 0xDA7A;
constexpr std::uint64_t kRlStream = 0x5A4E;

const std::vector<std::string> kStages = {"cat", "dauggi", "gail", "rl"};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "," : "") << xs[i];
  return out.str();
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

int to_int(const std::string& key, const std::string& value) {
  const long long v = config_int(key, value);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError("config key '" + key + "': out of range");
  return static_cast<int>(v);
}

void emit(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

// Logs roughly ten evenly spaced curve points per run.
ProgressFn progress_logger(const LogFn& log, const std::string& tag, long long total_steps) {
  if (!log) return {};
  auto next = std::make_shared<long long>(0);
  return [log, tag, total_steps, next](const CurvePoint& p) {
    if (p.env_steps < *next) return;
    *next = p.env_steps + std::max(1LL, total_steps / 10);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s steps=%lld success=%.3f disc_loss=%.3f kl=%.4f", tag.c_str(), p.env_steps,
                  p.success_rate, p.disc_loss, p.policy_kl);
    log(buf);
  };
}

std::optional<double> ratio_against(const TrajectoryDataset& generated, const TrajectoryDataset& experts) {
  if (generated.size() < 2) return std::nullopt;
  return diversity_ratio(generated, experts).ratio;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

RunConfig::RunConfig() {
  adv.lr_disc = 1e-3;
  adv.disc_epochs = 3;
  adv.init_log_std = -1.5;
  adv.eval_deterministic = true;
}

int RunConfig::effective_bc_iterations() const {
  if (bc_iterations) return *bc_iterations;
  return env == "latch-door" ? 10000 : 0;
}

bool RunConfig::has_stage(const std::string& name) const {
  return std::find(stages.begin(), stages.end(), name) != stages.end();
}

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (experts < 1) throw ConfigError("experts must be >= 1");
  if (per_expert < 1) throw ConfigError("per_expert must be >= 1");
  if (diversity_count < 2) throw ConfigError("diversity_count must be >= 2");
  if (sigma && !(*sigma >= 0.0 && std::isfinite(*sigma))) throw ConfigError("sigma must be finite and >= 0");
  if (bc_iterations && *bc_iterations < 0) throw ConfigError("bc_iterations must be >= 0");
  if (out_dir.empty()) throw ConfigError("out must not be empty");
  if (stages.empty()) throw ConfigError("stages must not be empty");
  for (const auto& s : stages)
    if (std::find(kStages.begin(), kStages.end(), s) == kStages.end())
      throw ConfigError("unknown stage '" + s + "' (expected cat, dauggi, gail, rl)");
  if (has_stage("dauggi") && !has_stage("cat")) throw ConfigError("stage dauggi needs stage cat");
  if (synthetic.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (synthetic.batch_size < 1) throw ConfigError("synthetic_batch must be >= 1");
  make_env(env, env_overrides);
  agent_config(*this).validate();
  cat_config(*this).validate();
}

std::vector<std::string> run_config_keys() {
  return {"env",           "seeds",          "experts",         "expert_seed",      "sigma",
          "lambda",        "per_expert",     "identity_init",   "bc_iterations",    "diversity_count",
          "stages",        "out",            "hidden",          "total_steps",      "batch_steps",
          "eval_rollouts", "final_eval_rollouts", "lr_policy",  "lr_value",         "lr_disc",
          "clip_eps",      "gamma",          "gae_lambda",      "policy_epochs",    "disc_epochs",
          "minibatch",     "disc_minibatch", "disc_input_noise", "entropy_coef",    "init_log_std",     "eval_deterministic",
          "bc_lr",         "filter",         "max_attempts",    "buffer_capacity",  "synthetic_batch",
          "synthetic_deterministic"};
}

RunConfig apply_run_config(RunConfig c, const ConfigMap& entries) {
  ConfigMap plain;
  for (const auto& [k, v] : entries) {
    if (k.rfind("env.", 0) == 0 && k.size() > 4) {
      c.env_overrides[k.substr(4)] = v;
    } else {
      plain.emplace(k, v);
    }
  }
  reject_unknown_keys(plain, run_config_keys(), "run config");
  for (const auto& [k, v] : plain) {
    if (k == "env") c.env = v;
    else if (k == "seeds") {
      c.seeds.clear();
      for (const auto& s : split_list(v)) c.seeds.push_back(config_u64(k, s));
    } else if (k == "experts") c.experts = to_int(k, v);
    else if (k == "expert_seed") c.expert_seed = config_u64(k, v);
    else if (k == "sigma") {
      if (v == "auto") c.sigma.reset();
      else c.sigma = config_double(k, v);
    } else if (k == "lambda") c.lambda = config_double(k, v);
    else if (k == "per_expert") c.per_expert = to_int(k, v);
    else if (k == "identity_init") c.identity_init = config_bool(k, v);
    else if (k == "bc_iterations") {
      if (v == "auto") c.bc_iterations.reset();
      else c.bc_iterations = to_int(k, v);
    } else if (k == "diversity_count") c.diversity_count = to_int(k, v);
    else if (k == "stages") c.stages = split_list(v);
    else if (k == "out") c.out_dir = v;
    else if (k == "hidden") {
      c.adv.hidden.clear();
      for (long long h : config_int_list(k, v)) c.adv.hidden.push_back(static_cast<int>(h));
    } else if (k == "total_steps") c.adv.total_steps = config_int(k, v);
    else if (k == "batch_steps") c.adv.batch_steps = to_int(k, v);
    else if (k == "eval_rollouts") c.adv.eval_rollouts = to_int(k, v);
    else if (k == "final_eval_rollouts") c.adv.final_eval_rollouts = to_int(k, v);
    else if (k == "lr_policy") c.adv.lr_policy = config_double(k, v);
    else if (k == "lr_value") c.adv.lr_value = config_double(k, v);
    else if (k == "lr_disc") c.adv.lr_disc = config_double(k, v);
    else if (k == "clip_eps") c.adv.clip_eps = config_double(k, v);
    else if (k == "gamma") c.adv.gamma = config_double(k, v);
    else if (k == "gae_lambda") c.adv.gae_lambda = config_double(k, v);
    else if (k == "policy_epochs") c.adv.policy_epochs = to_int(k, v);
    else if (k == "disc_epochs") c.adv.disc_epochs = to_int(k, v);
    else if (k == "minibatch") c.adv.minibatch = to_int(k, v);
    else if (k == "disc_minibatch") c.adv.disc_minibatch = to_int(k, v);
    else if (k == "disc_input_noise") c.adv.disc_input_noise = config_double(k, v);
    else if (k == "entropy_coef") c.adv.entropy_coef = config_double(k, v);
    else if (k == "init_log_std") c.adv.init_log_std = config_double(k, v);
    else if (k == "eval_deterministic") c.adv.eval_deterministic = config_bool(k, v);
    else if (k == "bc_lr") c.adv.bc_lr = config_double(k, v);
    else if (k == "filter") c.synthetic.filter = config_bool(k, v);
    else if (k == "max_attempts") c.synthetic.max_attempts = to_int(k, v);
    else if (k == "buffer_capacity") c.synthetic.buffer_capacity = static_cast<std::size_t>(config_u64(k, v));
    else if (k == "synthetic_batch") c.synthetic.batch_size = static_cast<std::size_t>(config_u64(k, v));
    else if (k == "synthetic_deterministic") c.synthetic.deterministic = config_bool(k, v);
  }
  return c;
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream o;
  o << "env = " << c.env << '\n';
  for (const auto& [k, v] : c.env_overrides) o << "env." << k << " = " << v << '\n';
  o << "seeds = " << join(c.seeds) << '\n';
  o << "experts = " << c.experts << '\n';
  o << "expert_seed = " << c.expert_seed << '\n';
  o << "sigma = " << (c.sigma ? fmt(*c.sigma) : "auto") << '\n';
  o << "lambda = " << fmt(c.lambda) << '\n';
  o << "per_expert = " << c.per_expert << '\n';
  o << "identity_init = " << (c.identity_init ? "true" : "false") << '\n';
  o << "bc_iterations = " << (c.bc_iterations ? std::to_string(*c.bc_iterations) : "auto") << '\n';
  o << "diversity_count = " << c.diversity_count << '\n';
  o << "stages = " << join(c.stages) << '\n';
  o << "out = " << c.out_dir << '\n';
  const AdvConfig& a = c.adv;
  o << "hidden = " << join(a.hidden) << '\n';
  o << "total_steps = " << a.total_steps << '\n';
  o << "batch_steps = " << a.batch_steps << '\n';
  o << "eval_rollouts = " << a.eval_rollouts << '\n';
  o << "final_eval_rollouts = " << a.final_eval_rollouts << '\n';
  o << "lr_policy = " << fmt(a.lr_policy) << '\n';
  o << "lr_value = " << fmt(a.lr_value) << '\n';
  o << "lr_disc = " << fmt(a.lr_disc) << '\n';
  o << "clip_eps = " << fmt(a.clip_eps) << '\n';
  o << "gamma = " << fmt(a.gamma) << '\n';
  o << "gae_lambda = " << fmt(a.gae_lambda) << '\n';
  o << "policy_epochs = " << a.policy_epochs << '\n';
  o << "disc_epochs = " << a.disc_epochs << '\n';
  o << "minibatch = " << a.minibatch << '\n';
  o << "disc_minibatch = " << a.disc_minibatch << '\n';
  o << "disc_input_noise = " << fmt(a.disc_input_noise) << '\n';
  o << "entropy_coef = " << fmt(a.entropy_coef) << '\n';
  o << "init_log_std = " << fmt(a.init_log_std) << '\n';
  o << "eval_deterministic = " << (a.eval_deterministic ? "true" : "false") << '\n';
  o << "bc_lr = " << fmt(a.bc_lr) << '\n';
  o << "filter = " << (c.synthetic.filter ? "true" : "false") << '\n';
  o << "max_attempts = " << c.synthetic.max_attempts << '\n';
  o << "buffer_capacity = " << c.synthetic.buffer_capacity << '\n';
  o << "synthetic_batch = " << c.synthetic.batch_size << '\n';
  o << "synthetic_deterministic = " << (c.synthetic.deterministic ? "true" : "false") << '\n';
  return o.str();
}

AdvConfig agent_config(const RunConfig& cfg) {
  AdvConfig a = cfg.adv;
  a.bc_iterations = cfg.effective_bc_iterations();
  return a;
}

CatConfig cat_config(const RunConfig& cfg) {
  CatConfig c;
  c.adv = cfg.adv;
  c.adv.bc_iterations = 0;  // identity_init plays that role for the corrector
  c.lambda = cfg.lambda;
  c.per_expert = cfg.per_expert;
  c.auto_sigma = !cfg.sigma.has_value();
  c.sigma = cfg.sigma.value_or(0.0);
  c.identity_init = cfg.identity_init;
  return c;
}

TrajectoryDataset generate_experts(const Environment& env, int count, std::uint64_t expert_seed) {
  if (count < 1) throw InputError("generate_experts: count must be >= 1");
  auto expert = make_expert(env);
  TrajectoryDataset ds = make_dataset(env);
  for (int i = 0; i < count; ++i)
    ds.trajectories.push_back(rollout(env, expert_policy(*expert), expert_seed + static_cast<std::uint64_t>(i)));
  return ds;
}

TrajectoryDataset policy_dataset(const Environment& env, const GaussianPolicy& policy, std::size_t count,
                                 std::uint64_t seed, bool deterministic, std::size_t max_attempts) {
  if (policy.obs_size() != env.spec().state_dim || policy.action_size() != env.spec().action_dim)
    throw InputError("policy_dataset: policy does not match the environment");
  if (max_attempts == 0) max_attempts = 20 * count;
  PolicyFn fn = [&](const State& s, std::size_t, Rng& rng) {
    return deterministic ? policy.mean(s) : policy.sample(s, rng).first;
  };
  TrajectoryDataset ds = make_dataset(env);
  for (std::size_t k = 0; k < max_attempts && ds.size() < count; ++k) {
    Trajectory t = rollout(env, fn, derive_seed(seed, kPolicyDataStream, k));
    if (t.success) ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

CatResult run_cat_stage(const Environment& env, const TrajectoryDataset& experts, const RunConfig& cfg,
                        std::uint64_t seed, const std::string& dir, SeedResult& out, const LogFn& log) {
  fs::create_directories(dir);
  const CatConfig cc = cat_config(cfg);
  CatResult r = train_cat(env, experts, cc, seed, progress_logger(log, "cat", cc.adv.total_steps));
  save_policy(dir + "/cat_policy.ckpt", r.policy);
  save_checkpoint(dir + "/cat_disc.ckpt", r.disc.net());
  save_curve_csv(r.curve, dir + "/cat_curve.csv");
  save_pool(r.pool, dir + "/pool.trajds");
  out.sigma = r.sigma;
  out.random_rate = r.random_rate;
  out.cat_success = r.curve.final_success();
  const TrajectoryDataset corrected = corrected_dataset(r.policy, r.pool, env, static_cast<std::size_t>(cfg.diversity_count),
                                                        derive_seed(seed, kCatDataStream));
  save_dataset(corrected, dir + "/cat_generated.trajds");
  out.cat_diversity = ratio_against(corrected, experts);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "cat seed=%llu sigma=%.4g random=%.3f corrected=%.3f",
                static_cast<unsigned long long>(seed), r.sigma, r.random_rate, *out.cat_success);
  emit(log, buf);
  return r;
}

TrainResult run_dauggi_stage(const Environment& env, const TrajectoryDataset& experts, const CatResult& cat,
                             const RunConfig& cfg, std::uint64_t seed, const std::string& dir, SeedResult& out,
                             const LogFn& log) {
  fs::create_directories(dir);
  const AdvConfig ac = agent_config(cfg);
  SyntheticExpertSource source(env, cat.policy, cat.pool, cfg.synthetic);
  const std::uint64_t before = source.cat_checksum();
  TrainResult r = train_dauggi(env, source, ac, seed, &experts, progress_logger(log, "dauggi", ac.total_steps));
  if (source.cat_checksum() != before || cat.policy.checksum() != before)
    throw NumericalError("corrector parameters changed during DAugGI training");
  const SyntheticStats st = source.stats();
  save_policy(dir + "/dauggi_policy.ckpt", r.policy);
  save_checkpoint(dir + "/dauggi_disc.ckpt", r.disc.net());
  save_curve_csv(r.curve, dir + "/dauggi_curve.csv");
  out.dauggi_success = r.curve.final_success();
  out.unfiltered_fraction = st.draws ? static_cast<double>(st.unfiltered) / static_cast<double>(st.draws) : 0.0;
  const TrajectoryDataset gen = policy_dataset(env, r.policy, static_cast<std::size_t>(cfg.diversity_count),
                                               seed, ac.eval_deterministic);
  save_dataset(gen, dir + "/dauggi_generated.trajds");
  out.dauggi_diversity = ratio_against(gen, experts);
  char buf[200];
  std::snprintf(buf, sizeof(buf), "dauggi seed=%llu success=%.3f draws=%lld exhausted=%lld unfiltered=%lld",
                static_cast<unsigned long long>(seed), *out.dauggi_success, st.draws, st.exhausted, st.unfiltered);
  emit(log, buf);
  return r;
}

TrainResult run_gail_stage(const Environment& env, const TrajectoryDataset& experts, const RunConfig& cfg,
                           std::uint64_t seed, const std::string& dir, SeedResult& out, const LogFn& log) {
  fs::create_directories(dir);
  const AdvConfig ac = agent_config(cfg);
  TrainResult r = train_gail(env, experts, ac, seed, progress_logger(log, "gail", ac.total_steps));
  save_policy(dir + "/gail_policy.ckpt", r.policy);
  save_checkpoint(dir + "/gail_disc.ckpt", r.disc.net());
  save_curve_csv(r.curve, dir + "/gail_curve.csv");
  out.gail_success = r.curve.final_success();
  const TrajectoryDataset gen = policy_dataset(env, r.policy, static_cast<std::size_t>(cfg.diversity_count),
                                               seed, ac.eval_deterministic);
  save_dataset(gen, dir + "/gail_generated.trajds");
  out.gail_diversity = ratio_against(gen, experts);
  char buf[120];
  std::snprintf(buf, sizeof(buf), "gail seed=%llu success=%.3f", static_cast<unsigned long long>(seed),
                *out.gail_success);
  emit(log, buf);
  return r;
}

TrainResult run_rl_stage(const Environment& env, const RunConfig& cfg, std::uint64_t seed, const std::string& dir,
                         SeedResult& out, const LogFn& log) {
  fs::create_directories(dir);
  AdvConfig ac = agent_config(cfg);
  ac.bc_iterations = 0;  // sparse RL never sees the experts
  TrainResult r = train_sparse_rl(env, ac, derive_seed(seed, kRlStream), progress_logger(log, "rl", ac.total_steps));
  save_policy(dir + "/rl_policy.ckpt", r.policy);
  save_curve_csv(r.curve, dir + "/rl_curve.csv");
  out.rl_success = r.curve.final_success();
  char buf[120];
  std::snprintf(buf, sizeof(buf), "rl seed=%llu success=%.3f", static_cast<unsigned long long>(seed), *out.rl_success);
  emit(log, buf);
  return r;
}

PipelineResult run_pipeline(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir + "/config.txt", format_run_config(cfg));
  auto env = make_env(cfg.env, cfg.env_overrides);
  const TrajectoryDataset experts = generate_experts(*env, cfg.experts, cfg.expert_seed);
  save_dataset(experts, cfg.out_dir + "/experts.trajds");

  PipelineResult res;
  if (experts.size() >= 2) res.expert_diversity = mean_pairwise_dtw(experts);
  for (const std::uint64_t seed : cfg.seeds) {
    const std::string dir = cfg.out_dir + "/seed-" + std::to_string(seed);
    SeedResult sr;
    sr.seed = seed;
    auto guarded = [&](const std::string& stage, const std::function<void()>& body) {
      if (!cfg.has_stage(stage)) return;
      try {
        body();
      } catch (const std::exception& e) {
        const std::string msg = "seed " + std::to_string(seed) + " " + stage + ": " + e.what();
        res.failures.push_back(msg);
        emit(log, "FAILED " + msg);
      }
    };
    std::optional<CatResult> cat;
    guarded("cat", [&] { cat = run_cat_stage(*env, experts, cfg, seed, dir, sr, log); });
    guarded("dauggi", [&] {
      if (!cat) throw std::runtime_error("skipped, the cat stage did not complete");
      run_dauggi_stage(*env, experts, *cat, cfg, seed, dir, sr, log);
    });
    guarded("gail", [&] { run_gail_stage(*env, experts, cfg, seed, dir, sr, log); });
    guarded("rl", [&] { run_rl_stage(*env, cfg, seed, dir, sr, log); });

    std::vector<std::pair<std::string, TrajectoryDataset>> named = {{"experts", experts}};
    for (const char* name : {"cat", "dauggi", "gail"}) {
      const std::string path = dir + "/" + name + "_generated.trajds";
      if (fs::exists(path)) {
        TrajectoryDataset ds = load_dataset(path);
        if (ds.size() >= 2) named.emplace_back(name, std::move(ds));
      }
    }
    if (experts.size() >= 2 && fs::exists(dir)) {
      std::ofstream out(dir + "/diversity.csv");
      write_diversity_csv(out, diversity_report(named));
    }
    res.seeds.push_back(sr);
    save_report(res.seeds, cfg.out_dir);
  }
  if (!res.failures.empty()) write_text(cfg.out_dir + "/failures.txt", join(res.failures) + "\n");
  return res;
}

std::optional<double> median(std::vector<double> xs) {
  if (xs.empty()) return std::nullopt;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

namespace {

using Field = std::optional<double> SeedResult::*;

const std::vector<std::pair<std::string, Field>>& report_fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      {"sigma", &SeedResult::sigma},
      {"random_aug", &SeedResult::random_rate},
      {"cat_corrected", &SeedResult::cat_success},
      {"dauggi", &SeedResult::dauggi_success},
      {"gail", &SeedResult::gail_success},
      {"sparse_rl", &SeedResult::rl_success},
      {"div_cat", &SeedResult::cat_diversity},
      {"div_dauggi", &SeedResult::dauggi_diversity},
      {"div_gail", &SeedResult::gail_diversity},
      {"unfiltered_frac", &SeedResult::unfiltered_fraction},
  };
  return f;
}

std::string cell(const std::optional<double>& v, bool csv) {
  if (!v) return csv ? "NA" : "absent";
  char buf[40];
  std::snprintf(buf, sizeof(buf), csv ? "%.10g" : "%.4g", *v);
  return buf;
}

}  // namespace

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"seed"};
    for (const auto& [name, f] : report_fields()) c.push_back(name);
    return c;
  }();
  return cols;
}

void write_report(const std::vector<SeedResult>& results, std::ostream& table, std::ostream& csv) {
  if (results.empty()) throw InputError("write_report: no results");
  const auto& fields = report_fields();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::string>> csv_rows;
  rows.push_back(summary_columns());
  csv_rows.push_back(summary_columns());
  for (const auto& r : results) {
    std::vector<std::string> row = {std::to_string(r.seed)}, crow = row;
    for (const auto& [name, f] : fields) {
      row.push_back(cell(r.*f, false));
      crow.push_back(cell(r.*f, true));
    }
    rows.push_back(std::move(row));
    csv_rows.push_back(std::move(crow));
  }
  std::vector<std::string> mrow = {"median"}, mcrow = mrow;
  for (const auto& [name, f] : fields) {
    std::vector<double> xs;
    for (const auto& r : results)
      if (r.*f) xs.push_back(*(r.*f));
    const auto m = median(xs);
    mrow.push_back(cell(m, false));
    mcrow.push_back(cell(m, true));
  }
  rows.push_back(std::move(mrow));
  csv_rows.push_back(std::move(mcrow));

  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      table << row[j];
      if (j + 1 < row.size()) table << std::string(width[j] - row[j].size() + 2, ' ');
    }
    table << '\n';
  }
  for (const auto& row : csv_rows) csv << join(row) << '\n';
}

void save_report(const std::vector<SeedResult>& results, const std::string& dir) {
  std::ostringstream table, csv;
  write_report(results, table, csv);
  write_text(dir + "/summary.txt", table.str());
  write_text(dir + "/summary.csv", csv.str());
}

std::vector<SeedResult> read_summary_csv(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(origin, 1, "empty summary");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != join(summary_columns())) throw ParseError(origin, 1, "unexpected summary header");
  std::vector<SeedResult> out;
  const auto& fields = report_fields();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string c;
    std::istringstream ls(line);
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (cells.size() != fields.size() + 1) throw ParseError(origin, lineno, "wrong number of columns");
    if (cells[0] == "median") continue;
    SeedResult r;
    try {
      r.seed = config_u64("seed", cells[0]);
      for (std::size_t j = 0; j < fields.size(); ++j)
        if (cells[j + 1] != "NA") r.*(fields[j].second) = config_double(fields[j].first, cells[j + 1]);
    } catch (const ConfigError& e) {
      throw ParseError(origin, lineno, e.what());
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace daug
