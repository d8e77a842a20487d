#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "daug/cli.hpp"
#include "daug/errors.hpp"

using namespace daug;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("daug_cli_" + name);
  fs::remove_all(p);
  return p.string();
}

// A few thousand steps per stage: exercises every artifact, learns nothing.
RunConfig tiny_run(const std::string& out) {
  RunConfig c;
  c.seeds = {3, 4};
  c.per_expert = 2;
  c.diversity_count = 4;
  c.identity_init = false;
  c.adv.total_steps = 600;
  c.adv.batch_steps = 256;
  c.adv.hidden = {8, 8};
  c.adv.policy_epochs = 1;
  c.adv.eval_rollouts = 2;
  c.adv.final_eval_rollouts = 4;
  c.sigma = 0.1;
  c.out_dir = out;
  return c;
}

SeedResult row(std::uint64_t seed, double dauggi, std::optional<double> gail) {
  SeedResult r;
  r.seed = seed;
  r.dauggi_success = dauggi;
  r.gail_success = gail;
  return r;
}

}  // namespace

TEST(RunConfig, DefaultsAreValid) {
  const RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.experts, 3);
  EXPECT_EQ(c.lambda, 0.1);
  EXPECT_EQ(c.adv.eval_rollouts, 20);
  EXPECT_EQ(c.adv.hidden, (std::vector<int>{64, 64}));
  EXPECT_FALSE(c.sigma.has_value());
  EXPECT_EQ(c.effective_bc_iterations(), 0);
  RunConfig door;
  door.env = "latch-door";
  EXPECT_EQ(door.effective_bc_iterations(), 10000);
}

TEST(RunConfig, AppliesKeysAndEnvOverrides) {
  const ConfigMap m = parse_config_text(
      "env = latch-door\nseeds = 5, 6\nsigma = 0.25\nhidden = 32,16\nlr_disc = 0.002\n"
      "env.horizon = 60\nfilter = false\nstages = cat,dauggi\n");
  const RunConfig c = apply_run_config(RunConfig{}, m);
  EXPECT_EQ(c.env, "latch-door");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{5, 6}));
  EXPECT_EQ(*c.sigma, 0.25);
  EXPECT_EQ(c.adv.hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(c.adv.lr_disc, 0.002);
  EXPECT_EQ(c.env_overrides.at("horizon"), "60");
  EXPECT_FALSE(c.synthetic.filter);
  EXPECT_FALSE(c.has_stage("gail"));
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(make_env(c.env, c.env_overrides)->spec().horizon, 60);
}

TEST(RunConfig, UnknownKeyIsConfigError) {
  EXPECT_THROW(apply_run_config(RunConfig{}, parse_config_text("lamda = 0.1\n")), ConfigError);
  EXPECT_THROW(apply_run_config(RunConfig{}, parse_config_text("experts = three\n")), ConfigError);
}

TEST(RunConfig, InvalidValuesAreConfigErrors) {
  auto bad = [](const std::string& text) {
    return apply_run_config(RunConfig{}, parse_config_text(text)).validate();
  };
  EXPECT_THROW(bad("seeds = \n"), ConfigError);
  EXPECT_THROW(bad("experts = 0\n"), ConfigError);
  EXPECT_THROW(bad("per_expert = 0\n"), ConfigError);
  EXPECT_THROW(bad("sigma = -1\n"), ConfigError);
  EXPECT_THROW(bad("env = cartpole\n"), ConfigError);
  EXPECT_THROW(bad("stages = dauggi\n"), ConfigError);
  EXPECT_THROW(bad("stages = cat,ddpg\n"), ConfigError);
  EXPECT_THROW(bad("lr_disc = 0\n"), ConfigError);
  EXPECT_THROW(bad("env.goal_r_min = 2\n"), ConfigError);
}

TEST(RunConfig, FormatRoundTrips) {
  RunConfig c = apply_run_config(RunConfig{}, parse_config_text("sigma = 0.1234567890123\nenv.horizon = 40\n"));
  const std::string text = format_run_config(c);
  const RunConfig back = apply_run_config(RunConfig{}, parse_config_text(text));
  EXPECT_EQ(format_run_config(back), text);
  EXPECT_EQ(*back.sigma, *c.sigma);
  EXPECT_NE(text.find("sigma = 0.1234567890123"), std::string::npos);
  EXPECT_NE(format_run_config(RunConfig{}).find("sigma = auto"), std::string::npos);
}

TEST(Median, OddEvenEmpty) {
  EXPECT_EQ(*median({0.9, 0.1, 0.5}), 0.5);
  EXPECT_EQ(*median({4.0, 1.0}), 2.5);
  EXPECT_FALSE(median({}).has_value());
}

TEST(Report, EmptyResultsAreAnError) {
  std::ostringstream t, c;
  EXPECT_THROW(write_report({}, t, c), InputError);
}

TEST(Report, MedianRowIsTheMiddleValue) {
  std::ostringstream t, c;
  write_report({row(0, 0.2, 0.1), row(1, 0.9, 0.3), row(2, 0.6, 0.2)}, t, c);
  std::istringstream in(c.str());
  std::string line, last;
  while (std::getline(in, line)) last = line;
  EXPECT_EQ(last.substr(0, 7), "median,");
  std::stringstream csv(c.str());
  std::getline(csv, line);
  const auto cols = summary_columns();
  const auto pos = std::find(cols.begin(), cols.end(), "dauggi") - cols.begin();
  std::vector<std::string> cells;
  std::istringstream ls(last);
  while (std::getline(ls, line, ',')) cells.push_back(line);
  EXPECT_EQ(cells[pos], "0.6");
  EXPECT_NE(t.str().find("median"), std::string::npos);
}

TEST(Report, MissingBaselineIsAbsentNotZero) {
  std::ostringstream t, c;
  write_report({row(0, 0.8, std::nullopt), row(1, 0.7, std::nullopt)}, t, c);
  EXPECT_NE(t.str().find("absent"), std::string::npos);
  EXPECT_NE(c.str().find("NA"), std::string::npos);
  std::istringstream in(c.str());
  const auto back = read_summary_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_FALSE(back[0].gail_success.has_value());
  EXPECT_EQ(*back[1].dauggi_success, 0.7);
}

TEST(Report, SummaryCsvRoundTrips) {
  SeedResult r = row(7, 0.8125, 0.5);
  r.sigma = 0.123456789;
  r.cat_diversity = 0.61;
  std::ostringstream t, c;
  write_report({r}, t, c);
  std::istringstream in(c.str());
  const auto back = read_summary_csv(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].seed, 7u);
  EXPECT_EQ(*back[0].dauggi_success, 0.8125);
  EXPECT_NEAR(*back[0].sigma, 0.123456789, 1e-12);
  EXPECT_FALSE(back[0].rl_success.has_value());
}

TEST(Report, MalformedSummaryIsParseError) {
  std::istringstream wrong_header("seed,foo\n");
  EXPECT_THROW(read_summary_csv(wrong_header), ParseError);
  std::ostringstream t, c;
  write_report({row(0, 0.5, 0.5)}, t, c);
  std::istringstream short_row(c.str().substr(0, c.str().find('\n') + 1) + "0,1,2\n");
  try {
    read_summary_csv(short_row);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(GenerateExperts, SeedsAndSuccess) {
  auto env = make_env("pend-swing");
  const TrajectoryDataset ds = generate_experts(*env, 3, 50);
  ASSERT_EQ(ds.size(), 3u);
  for (const auto& t : ds.trajectories) EXPECT_TRUE(t.success);
  EXPECT_EQ(ds.trajectories[1].states.front(), env->reset(51));
  EXPECT_THROW(generate_experts(*env, 0, 1), InputError);
}

TEST(PolicyDataset, KeepsOnlySuccesses) {
  auto env = make_env("point-reach");
  GaussianPolicy pol({6, 8, 2}, -1.0);
  const TrajectoryDataset ds = policy_dataset(*env, pol, 5, 1, false, 30);
  EXPECT_LE(ds.size(), 5u);
  for (const auto& t : ds.trajectories) EXPECT_TRUE(t.success);
  EXPECT_THROW(policy_dataset(*env, GaussianPolicy({4, 8, 2}), 5, 1, true), InputError);
}

TEST(Pipeline, WritesEveryArtifactAndIsReproducible) {
  const std::string a = scratch_dir("a"), b = scratch_dir("b");
  const PipelineResult ra = run_pipeline(tiny_run(a));
  ASSERT_TRUE(ra.ok()) << ra.failures.front();
  ASSERT_EQ(ra.seeds.size(), 2u);
  for (const char* f : {"config.txt", "experts.trajds", "summary.txt", "summary.csv"})
    EXPECT_TRUE(fs::exists(a + "/" + f)) << f;
  for (const char* f : {"cat_policy.ckpt", "cat_disc.ckpt", "cat_curve.csv", "pool.trajds", "cat_generated.trajds",
                        "dauggi_policy.ckpt", "dauggi_curve.csv", "dauggi_generated.trajds", "gail_policy.ckpt",
                        "gail_curve.csv", "gail_generated.trajds", "rl_policy.ckpt", "rl_curve.csv", "diversity.csv"})
    EXPECT_TRUE(fs::exists(a + "/seed-3/" + f)) << f;
  const auto& s = ra.seeds[0];
  EXPECT_EQ(*s.sigma, 0.1);
  EXPECT_TRUE(s.random_rate && s.cat_success && s.dauggi_success && s.gail_success && s.rl_success);
  EXPECT_TRUE(s.unfiltered_fraction.has_value());
  EXPECT_TRUE(ra.expert_diversity.has_value());

  const PipelineResult rb = run_pipeline(tiny_run(b));
  ASSERT_TRUE(rb.ok());
  EXPECT_EQ(read_file(a + "/summary.csv"), read_file(b + "/summary.csv"));
  EXPECT_EQ(read_file(a + "/seed-4/dauggi_curve.csv"), read_file(b + "/seed-4/dauggi_curve.csv"));
  EXPECT_EQ(read_file(a + "/seed-4/cat_policy.ckpt"), read_file(b + "/seed-4/cat_policy.ckpt"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, FailedStageKeepsPartialResults) {
  const std::string dir = scratch_dir("fail");
  RunConfig c = tiny_run(dir);
  c.seeds = {3};
  c.stages = {"gail", "rl"};
  // A directory where the gail curve should go makes that stage fail.
  fs::create_directories(dir + "/seed-3/gail_curve.csv");
  const PipelineResult r = run_pipeline(c);
  EXPECT_FALSE(r.ok());
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].find("gail"), std::string::npos);
  ASSERT_EQ(r.seeds.size(), 1u);
  EXPECT_FALSE(r.seeds[0].gail_success.has_value());
  EXPECT_TRUE(r.seeds[0].rl_success.has_value());
  EXPECT_TRUE(fs::exists(dir + "/summary.csv"));
  EXPECT_TRUE(fs::exists(dir + "/failures.txt"));
  std::ifstream in(dir + "/summary.csv");
  EXPECT_FALSE(read_summary_csv(in)[0].gail_success.has_value());
  fs::remove_all(dir);
}
