#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "daug/cli.hpp"
#include "daug/errors.hpp"

using namespace daug;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string env;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  std::string out;
  std::string experts;
  long long steps = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--env", c.env, "environment name (point-reach, latch-door, pend-swing)");
  app->add_option("--seed", c.seed, "run seed")->each([&c](const std::string&) { c.seed_set = true; });
  app->add_option("--config", c.config, "key = value config file");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--experts", c.experts, "expert dataset path, or a count to generate");
  app->add_option("--steps", c.steps, "environment step budget");
}

// Config file first, then command-line flags on top.
RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) cfg = apply_run_config(cfg, load_config_file(c.config));
  if (!c.env.empty()) cfg.env = c.env;
  if (c.seed_set) cfg.seeds = {c.seed};
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.steps > 0) cfg.adv.total_steps = c.steps;
  if (!c.experts.empty() && c.experts.find_first_not_of("0123456789") == std::string::npos)
    cfg.experts = static_cast<int>(config_int("experts", c.experts));
  cfg.validate();
  return cfg;
}

TrajectoryDataset experts_for(const Common& c, const RunConfig& cfg, const Environment& env) {
  if (!c.experts.empty() && c.experts.find_first_not_of("0123456789") != std::string::npos) {
    TrajectoryDataset ds = load_dataset(c.experts);
    if (ds.env_name != env.name())
      throw InputError("expert file " + c.experts + " is for " + ds.env_name + ", not " + env.name());
    return ds;
  }
  return generate_experts(env, cfg.experts, cfg.expert_seed);
}

void log_line(const std::string& msg) {
  std::fprintf(stderr, "%s\n", msg.c_str());
}

void print_result(const SeedResult& r) {
  std::ostringstream table, csv;
  write_report({r}, table, csv);
  std::cout << table.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory augmentation for imitation learning"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen-experts", "roll out the scripted expert and save the demonstrations");
  add_common(gen, c);

  double sigma = -1.0;
  int trials = 500;
  auto* aug = app.add_subcommand("augment-eval", "calibrate sigma and measure the random-augmentation success rate");
  add_common(aug, c);
  aug->add_option("--sigma", sigma, "noise std; calibrated when omitted");
  aug->add_option("--trials", trials, "open-loop replays")->check(CLI::PositiveNumber);

  auto* cat = app.add_subcommand("train-cat", "train the correction policy");
  add_common(cat, c);

  std::string cat_dir;
  auto* dauggi = app.add_subcommand("train-dauggi", "imitation from synthetic experts produced by a trained corrector");
  add_common(dauggi, c);
  dauggi->add_option("--cat-dir", cat_dir, "directory holding cat_policy.ckpt and pool.trajds (default: --out)");

  auto* gail = app.add_subcommand("train-gail", "imitation from the fixed expert set");
  add_common(gail, c);
  auto* rl = app.add_subcommand("train-rl", "proximal RL on the sparse success reward");
  add_common(rl, c);

  std::vector<std::string> datasets;
  auto* div = app.add_subcommand("eval-diversity", "mean pairwise DTW of datasets relative to the experts");
  add_common(div, c);
  div->add_option("datasets", datasets, "name=path pairs")->required();

  auto* pipe = app.add_subcommand("run-pipeline", "experts, calibration, CAT, DAugGI and both baselines");
  add_common(pipe, c);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "print the summary table of a finished run");
  report->add_option("dir", report_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      const std::string path = report_dir + "/summary.csv";
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open " + path);
      std::ostringstream csv;
      write_report(read_summary_csv(in, path), std::cout, csv);
      return 0;
    }

    const RunConfig cfg = resolve(c);
    auto env = make_env(cfg.env, cfg.env_overrides);
    const std::uint64_t seed = cfg.seeds.front();
    const std::string out = cfg.out_dir;

    if (pipe->parsed()) {
      const PipelineResult res = run_pipeline(cfg, log_line);
      std::ifstream in(out + "/summary.txt");
      std::cout << in.rdbuf();
      for (const auto& f : res.failures) std::cerr << "failed: " << f << '\n';
      return res.ok() ? 0 : 1;
    }

    fs::create_directories(out);
    const TrajectoryDataset experts = experts_for(c, cfg, *env);
    SeedResult r;
    r.seed = seed;

    if (gen->parsed()) {
      save_dataset(experts, out + "/experts.trajds");
      std::cout << "wrote " << experts.size() << " expert trajectories to " << out << "/experts.trajds\n";
    } else if (aug->parsed()) {
      double s = sigma;
      if (s < 0.0) {
        if (cfg.sigma) {
          s = *cfg.sigma;
        } else {
          const CalibrationResult cal = calibrate_sigma(experts, *env, seed);
          s = cal.sigma;
        }
      }
      Rng rng(seed);
      const double rate = random_aug_success_rate(experts, s, trials, *env, rng);
      Rng pool_rng(derive_seed(seed, 1));
      save_pool(build_pool(experts, cfg.per_expert, s, pool_rng), out + "/pool.trajds");
      std::printf("sigma=%.6g random_aug_success_rate=%.4f trials=%d\n", s, rate, trials);
    } else if (cat->parsed()) {
      run_cat_stage(*env, experts, cfg, seed, out, r, log_line);
      print_result(r);
    } else if (dauggi->parsed()) {
      const std::string from = cat_dir.empty() ? out : cat_dir;
      CatResult cr;
      cr.policy = load_policy(from + "/cat_policy.ckpt");
      cr.pool = load_pool(from + "/pool.trajds");
      run_dauggi_stage(*env, experts, cr, cfg, seed, out, r, log_line);
      print_result(r);
    } else if (gail->parsed()) {
      run_gail_stage(*env, experts, cfg, seed, out, r, log_line);
      print_result(r);
    } else if (rl->parsed()) {
      run_rl_stage(*env, cfg, seed, out, r, log_line);
      print_result(r);
    } else if (div->parsed()) {
      std::vector<std::pair<std::string, TrajectoryDataset>> named = {{"experts", experts}};
      for (const auto& d : datasets) {
        const auto eq = d.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError("expected name=path, got '" + d + "'");
        named.emplace_back(d.substr(0, eq), load_dataset(d.substr(eq + 1)));
      }
      const DiversityReport rep = diversity_report(named);
      write_diversity_csv(std::cout, rep);
      if (!c.out.empty()) {
        std::ofstream f(out + "/diversity.csv");
        write_diversity_csv(f, rep);
      }
      if (rep.expert_degenerate) std::cerr << "warning: expert diversity is zero, ratios are undefined\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
