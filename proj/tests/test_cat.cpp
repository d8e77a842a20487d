#include <gtest/gtest.h>

#include <cmath>

#include "daug/cat.hpp"
#include "daug/errors.hpp"
#include "test_util.hpp"

using namespace daug;

namespace {

// Mean net that returns the auxiliary action: the first hidden layer picks
// eps * a', tanh is ~linear there, and the output layer rescales by 1/eps.
GaussianPolicy copying_policy(int ds, int da, double log_std) {
  const double eps = 1e-4;
  const int h = 16;
  GaussianPolicy p({ds + da, h, h, da}, log_std);
  DenseNet& net = p.mean_net();
  for (int i = 0; i < da; ++i) {
    net.weight(0)(i, ds + i) = eps;
    net.weight(1)(i, i) = 1.0;
    net.weight(2)(i, i) = 1.0 / eps;
  }
  return p;
}

CatConfig tiny_cat_config(double lambda) {
  CatConfig c;
  c.adv.batch_steps = 512;
  c.adv.total_steps = 20480;
  c.adv.hidden = {32, 32};
  c.adv.eval_rollouts = 10;
  c.adv.final_eval_rollouts = 50;
  c.adv.init_log_std = -1.0;
  c.lambda = lambda;
  c.per_expert = 8;
  return c;
}

}  // namespace

TEST(CatConfig, Validation) {
  EXPECT_NO_THROW(CatConfig{}.validate());
  EXPECT_EQ(CatConfig{}.lambda, 0.1);
  EXPECT_EQ(CatConfig{}.per_expert, 32);
  CatConfig c;
  c.lambda = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = CatConfig{};
  c.per_expert = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(CatReward, Arithmetic) {
  Discriminator d(2, 1, {4});
  const Vec s = Vec::Zero(2);
  const Vec a = Vec::Constant(1, 0.5);
  EXPECT_NEAR(cat_shaped_reward(d, s, a, a, 0.1), std::log(2.0), 1e-15);
  EXPECT_NEAR(cat_shaped_reward(d, s, a, Vec::Constant(1, -0.5), 0.1), std::log(2.0) - 0.1, 1e-15);
  EXPECT_NEAR(std::log(2.0) - 0.1, 0.5931, 1e-4);
  Rng rng(1);
  Discriminator r(6, 2, {16});
  r.net().init_random(rng);
  for (int k = 0; k < 10; ++k) {
    const Vec st = testutil::random_vec(rng, 6), ac = testutil::random_vec(rng, 2), ap = testutil::random_vec(rng, 2);
    EXPECT_EQ(cat_shaped_reward(r, st, ac, ap, 0.0), surrogate_reward(r, st, ac));
  }
}

TEST(CatReward, ActionGradientMatchesFiniteDifferences) {
  for (int point = 0; point < 10; ++point) {
    Rng rng(derive_seed(2, point));
    Discriminator d(6, 2, {64, 64});
    d.net().init_random(rng);
    const Vec s = testutil::random_vec(rng, 6);
    const Vec a = testutil::random_vec(rng, 2);
    const Vec ap = testutil::random_vec(rng, 2);
    auto f = [&](const Vec& x) { return cat_shaped_reward(d, s, x, ap, 0.1); };
    EXPECT_LT(testutil::max_fd_error(f, a, cat_shaped_reward_action_grad(d, s, a, ap, 0.1)), 1e-4);
  }
}

TEST(CatReward, ArgmaxMovesToAuxiliaryActionAsLambdaGrows) {
  Rng rng(3);
  Discriminator d(1, 1, {16});
  d.net().init_random(rng, 3.0);
  const Vec s = Vec::Constant(1, 0.2);
  const Vec ap = Vec::Constant(1, 0.3);
  auto argmax = [&](double lambda) {
    double best = -1e300, arg = 0.0;
    for (int k = 0; k <= 4000; ++k) {
      const Vec a = Vec::Constant(1, -2.0 + 4.0 * k / 4000.0);
      const double r = cat_shaped_reward(d, s, a, ap, lambda);
      if (r > best) best = r, arg = a[0];
    }
    return arg;
  };
  const double free = argmax(0.0);
  const double mid = argmax(0.1);
  EXPECT_NEAR(argmax(1e6), 0.3, 1e-3);
  EXPECT_GE(mid, std::min(free, 0.3) - 1e-3);
  EXPECT_LE(mid, std::max(free, 0.3) + 1e-3);
  EXPECT_LE(std::abs(argmax(10.0) - 0.3), std::abs(mid - 0.3) + 1e-3);
}

TEST(CorrectSequence, CopyingPolicyReproducesReplay) {
  for (const auto& name : env_names()) {
    auto env = make_env(name);
    const int ds = env->spec().state_dim, da = env->spec().action_dim;
    Rng rng(4);
    const AugmentPool pool = build_pool(testutil::expert_set(*env, 2), 3, 0.3, rng);
    const GaussianPolicy pol = copying_policy(ds, da, -20.0);
    for (const auto& q : pool.sequences) {
      const Trajectory r = replay(q, *env);
      const CorrectedTrajectory c = correct_sequence(pol, q, *env, 5, true);
      ASSERT_EQ(c.trajectory.states.size(), r.states.size());
      EXPECT_EQ(c.source, &q);
      EXPECT_EQ(c.trajectory.states.front(), q.init_state);
      double worst = 0.0;
      for (std::size_t t = 0; t < r.states.size(); ++t)
        worst = std::max(worst, (c.trajectory.states[t] - r.states[t]).cwiseAbs().maxCoeff());
      EXPECT_LT(worst, 1e-6) << name;
    }
  }
}

TEST(CorrectSequence, LengthDeterminismAndDims) {
  auto env = make_env("point-reach");
  Rng rng(6);
  const AugmentPool pool = build_pool(testutil::expert_set(*env, 1), 2, 0.2, rng);
  GaussianPolicy pol({8, 16, 2}, -0.5);
  pol.mean_net().init_random(rng);
  const auto& q = pool.sequences[0];
  const CorrectedTrajectory a = correct_sequence(pol, q, *env, 9);
  EXPECT_EQ(a.trajectory.length(), q.length());
  EXPECT_EQ(a.trajectory, correct_sequence(pol, q, *env, 9).trajectory);
  EXPECT_FALSE(a.trajectory == correct_sequence(pol, q, *env, 10).trajectory);
  GaussianPolicy state_only({6, 16, 2}, -0.5);
  EXPECT_THROW(correct_sequence(state_only, q, *env, 9), InputError);
  auto door = make_env("latch-door");
  EXPECT_THROW(correct_sequence(pol, q, *door, 9), InputError);
}

TEST(CatSuccessRate, ZeroSigmaCopyingPolicyMatchesExperts) {
  auto env = make_env("latch-door");
  Rng rng(7);
  const AugmentPool pool = build_pool(testutil::expert_set(*env, 3), 4, 0.0, rng);
  const CorrectionStats st = cat_success_rate(copying_policy(4, 2, -20.0), pool, *env, 50, 3, true);
  EXPECT_EQ(st.success_rate, 1.0);
  EXPECT_LT(st.mean_sq_deviation, 1e-12);
}

TEST(CatSuccessRate, OpenMpMatchesSerialAndInRange) {
  auto env = make_env("point-reach");
  Rng rng(8);
  const AugmentPool pool = build_pool(testutil::expert_set(*env, 3), 4, 0.2, rng);
  GaussianPolicy pol = copying_policy(6, 2, -1.0);
  for (bool det : {false, true}) {
    const CorrectionStats a = cat_success_rate(pol, pool, *env, 64, 11, det);
    const CorrectionStats b = cat_success_rate_serial(pol, pool, *env, 64, 11, det);
    EXPECT_EQ(a.success_rate, b.success_rate);
    EXPECT_NEAR(a.mean_sq_deviation, b.mean_sq_deviation, 1e-12 * std::max(1.0, b.mean_sq_deviation));
    EXPECT_GE(a.success_rate, 0.0);
    EXPECT_LE(a.success_rate, 1.0);
  }
  EXPECT_THROW(cat_success_rate(pol, AugmentPool{}, *env, 10, 1), InputError);
}

TEST(IdentityInit, StartsNearTheAuxiliaryAction) {
  auto env = make_env("point-reach");
  Rng rng(9);
  const AugmentPool pool = build_pool(testutil::expert_set(*env, 3), 4, 0.2, rng);
  GaussianPolicy pol({8, 32, 32, 2}, -1.0);
  pol.mean_net().init_random(rng, 0.01);
  const double before = cat_success_rate(pol, pool, *env, 50, 1, true).mean_sq_deviation;
  identity_init(pol, pool, *env, 1000, 1e-3);
  const double after = cat_success_rate(pol, pool, *env, 50, 1, true).mean_sq_deviation;
  EXPECT_LT(after, 0.1 * before);
  EXPECT_LT(after, 0.01);
}

TEST(TrainCat, NoExpertsIsInputError) {
  auto env = make_env("point-reach");
  EXPECT_THROW(train_cat(*env, make_dataset(*env), tiny_cat_config(0.1), 1), InputError);
}

TEST(TrainCat, PolicyObservesStateAndAuxiliaryAction) {
  auto env = make_env("point-reach");
  CatConfig cfg = tiny_cat_config(0.1);
  cfg.adv.total_steps = 1024;
  const CatResult r = train_cat(*env, testutil::expert_set(*env, 3), cfg, 2);
  EXPECT_EQ(r.policy.obs_size(), 8);
  EXPECT_EQ(r.pool.size(), 24u);
  EXPECT_GT(r.sigma, 0.0);
  EXPECT_EQ(r.curve.points.size(), 2u);
  for (const auto& p : r.curve.points) EXPECT_FALSE(std::isnan(p.mean_sq_deviation));
}

TEST(TrainCat, LargeLambdaKeepsCorrectionsCloser) {
  auto env = make_env("point-reach");
  const TrajectoryDataset ex = testutil::expert_set(*env, 3);
  const CatResult small = train_cat(*env, ex, tiny_cat_config(0.1), 3);
  const CatResult large = train_cat(*env, ex, tiny_cat_config(1e3), 3);
  EXPECT_EQ(small.pool.sequences, large.pool.sequences);
  const double dev_small = cat_success_rate(small.policy, small.pool, *env, 200, 5).mean_sq_deviation;
  const double dev_large = cat_success_rate(large.policy, large.pool, *env, 200, 5).mean_sq_deviation;
  EXPECT_LT(dev_large, dev_small);
}

TEST(CorrectedDataset, OnlySuccessfulCorrections) {
  auto env = make_env("latch-door");
  Rng rng(10);
  const AugmentPool pool = build_pool(testutil::expert_set(*env, 3), 4, 0.3, rng);
  const TrajectoryDataset ds = corrected_dataset(copying_policy(4, 2, -3.0), pool, *env, 20, 6);
  EXPECT_LE(ds.size(), 20u);
  EXPECT_GT(ds.size(), 0u);
  for (const auto& t : ds.trajectories) EXPECT_TRUE(t.success);
}
