#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "daug/data.hpp"
#include "daug/errors.hpp"
#include "test_util.hpp"

using namespace daug;

namespace {

Trajectory series_trajectory(const std::vector<double>& xs) {
  // One state dim and one action dim carrying the same series.
  Trajectory t;
  t.env_name = "toy";
  for (double x : xs) {
    t.states.push_back(Vec::Constant(1, x));
    t.actions.push_back(Vec::Constant(1, x));
  }
  t.states.push_back(Vec::Constant(1, 0.0));
  return t;
}

TrajectoryDataset noisy_dataset(const std::string& env_name, std::uint64_t seed) {
  auto env = make_env(env_name);
  Rng rng(seed);
  const int da = env->spec().action_dim;
  PolicyFn noisy = [da](const State&, std::size_t, Rng& r) -> Action {
    Action a(da);
    for (int i = 0; i < da; ++i) a[i] = 2.0 * r.normal();
    return a;
  };
  TrajectoryDataset ds = make_dataset(*env);
  const std::size_t n = rng.index(5);
  for (std::size_t k = 0; k < n; ++k) ds.trajectories.push_back(rollout(*env, noisy, rng.next_u64(), 1 + rng.index(env->spec().horizon)));
  return ds;
}

}  // namespace

TEST(Dataset, EmptyDatasetIsHeaderOnly) {
  auto env = make_env("point-reach");
  std::stringstream ss;
  write_dataset(ss, make_dataset(*env));
  EXPECT_EQ(ss.str(), "TRAJDS v1 env=point-reach state_dim=6 action_dim=2\n");
}

TEST(Dataset, ThreeExpertBlocks) {
  auto env = make_env("point-reach");
  std::stringstream ss;
  write_dataset(ss, testutil::expert_set(*env, 3));
  int blocks = 0;
  std::string line;
  while (std::getline(ss, line))
    if (line.rfind("TRAJ ", 0) == 0) {
      ++blocks;
      EXPECT_NE(line.find("success=1"), std::string::npos) << line;
      EXPECT_NE(line.find("n=50"), std::string::npos) << line;
    }
  EXPECT_EQ(blocks, 3);
}

TEST(Dataset, RoundTripIsBitExact) {
  for (const auto& name : env_names())
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const TrajectoryDataset ds = noisy_dataset(name, seed);
      std::stringstream ss;
      write_dataset(ss, ds);
      EXPECT_EQ(read_dataset(ss), ds) << name << " " << seed;
    }
}

TEST(Dataset, SaveLoadFile) {
  auto env = make_env("latch-door");
  const TrajectoryDataset ds = testutil::expert_set(*env, 2);
  const auto path = std::filesystem::temp_directory_path() / "daug_test_dataset.trajds";
  save_dataset(ds, path.string());
  EXPECT_EQ(load_dataset(path.string()), ds);
  std::filesystem::remove(path);
  EXPECT_THROW(load_dataset(path.string()), std::runtime_error);
}

TEST(Dataset, SaveToUnwritablePathNamesPath) {
  auto env = make_env("latch-door");
  try {
    save_dataset(make_dataset(*env), "/nonexistent-dir/x.trajds");
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.trajds"), std::string::npos);
  }
}

TEST(Dataset, ShortStateLineIsParseErrorAtThatLine) {
  std::stringstream ss(
      "TRAJDS v1 env=point-reach state_dim=6 action_dim=2\n"
      "TRAJ n=1 success=0 seed=3\n"
      "0 0 0 0 1 0\n"
      "0 0 0 0 1\n"
      "0 0\n");
  try {
    read_dataset(ss);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Dataset, MalformedInputsAreParseErrors) {
  const std::vector<std::string> bad = {
      "TRAJDS v2 env=point-reach state_dim=6 action_dim=2\n",
      "TRAJDS v1 env=point-reach state_dim=x action_dim=2\n",
      "TRAJDS v1 env=point-reach state_dim=1 action_dim=1\nTRAJ n=1 success=0 seed=0\n0\nnan\n0\n",
      "TRAJDS v1 env=point-reach state_dim=1 action_dim=1\nTRAJ n=2 success=0 seed=0\n0\n1\n",
      "TRAJDS v1 env=point-reach state_dim=1 action_dim=1\nTRAJ n=1 success=2 seed=0\n0\n1\n0\n",
  };
  for (const auto& text : bad) {
    std::stringstream ss(text);
    EXPECT_THROW(read_dataset(ss), ParseError) << text;
  }
}

TEST(Dataset, ValidateRejectsMixedDims) {
  auto env = make_env("point-reach");
  TrajectoryDataset ds = testutil::expert_set(*env, 1);
  ds.trajectories.push_back(series_trajectory({1, 2}));
  EXPECT_THROW(ds.validate(), InputError);
}

TEST(Frames, StateActionConcatenation) {
  auto env = make_env("point-reach");
  const Trajectory t = testutil::expert_set(*env, 1).trajectories[0];
  const FrameSequence f = trajectory_frames(t);
  ASSERT_EQ(f.rows(), 8);
  ASSERT_EQ(f.cols(), 50);
  EXPECT_EQ(Vec(f.col(10).head(6)), t.states[10]);
  EXPECT_EQ(Vec(f.col(10).tail(2)), t.actions[10]);
}

TEST(ZNormalize, AnalyticSeries) {
  const FrameSequence z = z_normalize(series_trajectory({1, 2, 3}));
  const double k = std::sqrt(1.5);
  for (int r = 0; r < 2; ++r) {
    EXPECT_NEAR(z(r, 0), -k, 1e-12);
    EXPECT_NEAR(z(r, 1), 0.0, 1e-12);
    EXPECT_NEAR(z(r, 2), k, 1e-12);
  }
  EXPECT_NEAR(k, 1.2247, 1e-4);
}

TEST(ZNormalize, ConstantSeriesGoesToZero) {
  const FrameSequence z = z_normalize(series_trajectory({5, 5, 5}));
  EXPECT_EQ(z, Mat::Zero(2, 3));
  EXPECT_EQ(z_normalize(series_trajectory({0.1, 0.1, 0.1})), Mat::Zero(2, 3));
}

TEST(ZNormalize, MeanZeroUnitStd) {
  for (const auto& name : env_names()) {
    const TrajectoryDataset ds = noisy_dataset(name, 77);
    for (const auto& t : ds.trajectories) {
      const FrameSequence z = z_normalize(t);
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double mean = z.row(r).mean();
        EXPECT_LT(std::abs(mean), 1e-12);
        const double sd = std::sqrt((z.row(r).array() - mean).square().mean());
        EXPECT_TRUE(std::abs(sd - 1.0) < 1e-9 || sd == 0.0) << name << " dim " << r << " sd " << sd;
      }
    }
  }
}

TEST(ZNormalize, AffineInvariance) {
  Rng rng(3);
  const Mat x = testutil::random_mat(rng, 5, 30);
  const Vec a = testutil::random_vec(rng, 5).cwiseAbs().array() + 0.1;
  const Vec b = testutil::random_vec(rng, 5, 10.0);
  const Mat y = (a.asDiagonal() * x).colwise() + b;
  EXPECT_LT((z_normalize(y) - z_normalize(x)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ZNormalize, LengthOneSeries) {
  EXPECT_EQ(z_normalize(series_trajectory({4.0})), Mat::Zero(2, 1));
}
