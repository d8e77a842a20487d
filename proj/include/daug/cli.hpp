#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "daug/cat.hpp"
#include "daug/config.hpp"
#include "daug/dauggi.hpp"
#include "daug/diversity.hpp"

namespace daug {

// Everything a pipeline run needs. Training knobs live in `adv`; the
// corrector shares them apart from lambda, per_expert and identity_init.
struct RunConfig {
  std::string env = "point-reach";
  ConfigMap env_overrides;  // `env.<key>` entries, passed to make_env
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int experts = 3;
  std::uint64_t expert_seed = 1000;
  std::optional<double> sigma;  // empty means auto calibration
  double lambda = 0.1;
  int per_expert = 32;
  bool identity_init = true;
  std::optional<int> bc_iterations;  // empty: 10000 on latch-door, 0 elsewhere
  int diversity_count = 100;
  std::vector<std::string> stages = {"cat", "dauggi", "gail", "rl"};
  std::string out_dir = "run";
  AdvConfig adv;
  SyntheticSourceConfig synthetic;

  RunConfig();
  int effective_bc_iterations() const;
  bool has_stage(const std::string& name) const;
  // Throws ConfigError.
  void validate() const;
};

// Applies `key = value` entries on top of `base`. Unknown keys throw
// ConfigError listing them.
RunConfig apply_run_config(RunConfig base, const ConfigMap& entries);
std::vector<std::string> run_config_keys();
// Canonical `key = value` dump; apply_run_config of it reproduces the config.
std::string format_run_config(const RunConfig& cfg);

AdvConfig agent_config(const RunConfig& cfg);
CatConfig cat_config(const RunConfig& cfg);

// `count` noise-free expert rollouts from resets seeded expert_seed + i.
TrajectoryDataset generate_experts(const Environment& env, int count, std::uint64_t expert_seed);

// Successful rollouts of a state-only policy from env resets; gives up after
// max_attempts (default 20 * count).
TrajectoryDataset policy_dataset(const Environment& env, const GaussianPolicy& policy, std::size_t count,
                                 std::uint64_t seed, bool deterministic, std::size_t max_attempts = 0);

using LogFn = std::function<void(const std::string&)>;

// One seed's outcome. Empty optionals are stages that did not run or failed.
struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<double> sigma;
  std::optional<double> random_rate;
  std::optional<double> cat_success;
  std::optional<double> dauggi_success;
  std::optional<double> gail_success;
  std::optional<double> rl_success;
  std::optional<double> cat_diversity;
  std::optional<double> dauggi_diversity;
  std::optional<double> gail_diversity;
  std::optional<double> unfiltered_fraction;  // synthetic draws handed over without a success
};

struct PipelineResult {
  std::vector<SeedResult> seeds;
  std::optional<double> expert_diversity;
  std::vector<std::string> failures;  // "seed <k> <stage>: <what>"
  bool ok() const { return failures.empty(); }
};

// Single stages as run by the pipeline and the CLI subcommands. Each writes
// its artifacts into `dir` and fills its fields of `out`.
CatResult run_cat_stage(const Environment& env, const TrajectoryDataset& experts, const RunConfig& cfg,
                        std::uint64_t seed, const std::string& dir, SeedResult& out, const LogFn& log = {});
// Throws NumericalError if the corrector's checksum moves during training.
TrainResult run_dauggi_stage(const Environment& env, const TrajectoryDataset& experts, const CatResult& cat,
                             const RunConfig& cfg, std::uint64_t seed, const std::string& dir, SeedResult& out,
                             const LogFn& log = {});
TrainResult run_gail_stage(const Environment& env, const TrajectoryDataset& experts, const RunConfig& cfg,
                           std::uint64_t seed, const std::string& dir, SeedResult& out, const LogFn& log = {});
TrainResult run_rl_stage(const Environment& env, const RunConfig& cfg, std::uint64_t seed, const std::string& dir,
                         SeedResult& out, const LogFn& log = {});

// gen-experts, then per seed: calibrate + train-cat, train-dauggi, and the
// gail and sparse-rl baselines, writing curves, checkpoints and datasets
// under cfg.out_dir/seed-<k>. A failing stage is recorded and the remaining
// stages still run; the summary is written either way.
PipelineResult run_pipeline(const RunConfig& cfg, const LogFn& log = {});

// Column names of the summary CSV, one row per seed plus a median row.
const std::vector<std::string>& summary_columns();

// Fixed-width table and CSV. Medians ignore absent entries; a column with
// no entries prints "absent" (NA in the CSV). Throws InputError when
// `results` is empty.
void write_report(const std::vector<SeedResult>& results, std::ostream& table, std::ostream& csv);
void save_report(const std::vector<SeedResult>& results, const std::string& dir);
std::vector<SeedResult> read_summary_csv(std::istream& in, const std::string& origin = "<summary>");

std::optional<double> median(std::vector<double> xs);

}  // namespace daug
