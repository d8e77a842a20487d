#include "daug/cat.hpp"

#include <cmath>

#include "daug/errors.hpp"

namespace daug {

namespace {

enum : std::uint64_t { kCalibrationStream = 21, kPoolBuild = 22, kCatTrain = 23, kCatEval = 24 };

struct Correction {
  Trajectory trajectory;
  double sq_deviation = 0.0;
};

Correction run_correction(const GaussianPolicy& policy, const DistortedSequence& q, const Environment& env,
                          std::uint64_t seed, bool deterministic) {
  const int ds = env.spec().state_dim, da = env.spec().action_dim;
  if (q.init_state.size() != ds) throw InputError("correct_sequence: state dimension mismatch");
  if (policy.obs_size() != ds + da || policy.action_size() != da)
    throw InputError("correct_sequence: policy must observe state || action");
  for (const auto& a : q.actions)
    if (a.size() != da) throw InputError("correct_sequence: action dimension mismatch");
  if (q.actions.empty()) throw InputError("correct_sequence: empty sequence");
  Correction c;
  PolicyFn fn = [&](const State& s, std::size_t t, Rng& rng) -> Action {
    const Vec obs = concat(s, q.actions[t]);
    Action a = deterministic ? policy.mean(obs) : policy.sample(obs, rng).first;
    c.sq_deviation += (a - q.actions[t]).squaredNorm();
    return a;
  };
  c.trajectory = rollout(env, fn, seed, static_cast<int>(q.length()), q.init_state);
  c.sq_deviation /= static_cast<double>(q.length());
  return c;
}

void check_pool(const AugmentPool& pool, const Environment& env) {
  if (pool.empty()) throw InputError("empty augmentation pool");
  if (pool.env_name != env.name()) throw InputError("pool belongs to '" + pool.env_name + "', not '" + env.name() + "'");
}

}  // namespace

void CatConfig::validate() const {
  adv.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (!auto_sigma && (!(sigma >= 0.0) || !std::isfinite(sigma))) throw ConfigError("sigma must be finite and >= 0");
  if (per_expert < 1) throw ConfigError("per_expert must be >= 1");
  if (identity_init_iterations < 0) throw ConfigError("identity_init_iterations must be >= 0");
}

double cat_shaped_reward(const Discriminator& disc, const State& s, const Action& a, const Action& a_prime,
                         double lambda) {
  if (a.size() != a_prime.size()) throw InputError("cat_shaped_reward: action dimension mismatch");
  return surrogate_reward(disc, s, a) - lambda * (a - a_prime).squaredNorm();
}

Vec cat_shaped_reward_action_grad(const Discriminator& disc, const State& s, const Action& a, const Action& a_prime,
                                  double lambda) {
  if (a.size() != a_prime.size()) throw InputError("cat_shaped_reward: action dimension mismatch");
  const DenseNet& net = disc.net();
  DenseNet::Cache cache;
  const Mat z = net.forward_batch(concat(s, a), &cache);
  // d softplus(clamp(z))/dz = sigmoid(z) inside the clamp, 0 outside.
  Mat up(1, 1);
  up(0, 0) = std::abs(z(0, 0)) < kLogitClamp ? sigmoid(z(0, 0)) : 0.0;
  GradientVector unused = GradientVector::Zero(net.param_count());
  Mat dx;
  net.backward_batch(cache, up, unused, &dx);
  return dx.col(0).tail(a.size()) - 2.0 * lambda * (a - a_prime);
}

CorrectedTrajectory correct_sequence(const GaussianPolicy& cat_policy, const DistortedSequence& q,
                                     const Environment& env, std::uint64_t seed, bool deterministic) {
  return {run_correction(cat_policy, q, env, seed, deterministic).trajectory, &q};
}

CorrectionStats cat_success_rate(const GaussianPolicy& cat_policy, const AugmentPool& pool, const Environment& env,
                                 int trials, std::uint64_t seed, bool deterministic) {
  check_pool(pool, env);
  if (trials < 1) throw InputError("cat_success_rate: trials must be >= 1");
  Rng pick(seed);
  std::vector<std::size_t> draws(static_cast<std::size_t>(trials));
  for (auto& d : draws) d = pick.index(pool.size());
  long long ok = 0;
  double dev = 0.0;
#pragma omp parallel for reduction(+ : ok, dev) schedule(dynamic, 4)
  for (int k = 0; k < trials; ++k) {
    const Correction c = run_correction(cat_policy, pool.sequences[draws[k]], env,
                                        derive_seed(seed, static_cast<std::uint64_t>(k)), deterministic);
    ok += c.trajectory.success ? 1 : 0;
    dev += c.sq_deviation;
  }
  return {static_cast<double>(ok) / trials, dev / trials};
}

CorrectionStats cat_success_rate_serial(const GaussianPolicy& cat_policy, const AugmentPool& pool,
                                        const Environment& env, int trials, std::uint64_t seed, bool deterministic) {
  check_pool(pool, env);
  if (trials < 1) throw InputError("cat_success_rate: trials must be >= 1");
  Rng pick(seed);
  std::vector<std::size_t> draws(static_cast<std::size_t>(trials));
  for (auto& d : draws) d = pick.index(pool.size());
  long long ok = 0;
  double dev = 0.0;
  for (int k = 0; k < trials; ++k) {
    const Correction c = run_correction(cat_policy, pool.sequences[draws[k]], env,
                                        derive_seed(seed, static_cast<std::uint64_t>(k)), deterministic);
    ok += c.trajectory.success ? 1 : 0;
    dev += c.sq_deviation;
  }
  return {static_cast<double>(ok) / trials, dev / trials};
}

void identity_init(GaussianPolicy& cat_policy, const AugmentPool& pool, const Environment& env, int iterations,
                   double lr) {
  check_pool(pool, env);
  Eigen::Index total = 0;
  for (const auto& q : pool.sequences) total += static_cast<Eigen::Index>(q.length());
  Mat obs(cat_policy.obs_size(), total), targets(cat_policy.action_size(), total);
  Eigen::Index c = 0;
  for (const auto& q : pool.sequences) {
    const Trajectory tr = replay(q, env);
    for (std::size_t t = 0; t < q.length(); ++t, ++c) {
      obs.col(c) = concat(tr.states[t], q.actions[t]);
      targets.col(c) = q.actions[t];
    }
  }
  Adam adam(cat_policy.param_count(), lr);
  for (int it = 0; it < iterations; ++it) {
    const LossGrad lg = bc_loss_and_grad(cat_policy, obs, targets);
    Vec p = cat_policy.flat_params();
    adam.step(p, lg.grad);
    cat_policy.set_flat_params(p);
  }
}

TrainResult train_cat_on_pool(const Environment& env, const TrajectoryDataset& experts, const AugmentPool& pool,
                              const CatConfig& cfg, std::uint64_t seed, const ProgressFn& progress) {
  cfg.validate();
  if (experts.empty()) throw InputError("train_cat: empty expert set");
  if (experts.env_name != env.name()) throw InputError("train_cat: experts belong to '" + experts.env_name + "'");
  check_pool(pool, env);
  DatasetExpertSource source(experts);
  detail::LoopSpec spec;
  spec.source = &source;
  spec.pool = &pool;
  spec.lambda = cfg.lambda;
  spec.progress = progress;
  spec.evaluate = [&](const GaussianPolicy& policy, std::uint64_t eval_seed, int rollouts) {
    const CorrectionStats st = cat_success_rate(policy, pool, env, rollouts, eval_seed, cfg.adv.eval_deterministic);
    return std::make_pair(st.success_rate, st.mean_sq_deviation);
  };
  if (cfg.identity_init) {
    spec.init_hook = [&](GaussianPolicy& policy) {
      identity_init(policy, pool, env, cfg.identity_init_iterations, cfg.adv.bc_lr);
    };
  }
  return detail::run_on_policy(env, cfg.adv, seed, spec, nullptr);
}

CatResult train_cat(const Environment& env, const TrajectoryDataset& experts, const CatConfig& cfg,
                    std::uint64_t seed, const ProgressFn& progress) {
  cfg.validate();
  if (experts.empty()) throw InputError("train_cat: empty expert set");
  CatResult out;
  if (cfg.auto_sigma) {
    out.sigma = calibrate_sigma(experts, env, derive_seed(seed, kCalibrationStream)).sigma;
  } else {
    out.sigma = cfg.sigma;
  }
  Rng pool_rng(derive_seed(seed, kPoolBuild));
  out.pool = build_pool(experts, cfg.per_expert, out.sigma, pool_rng);
  Rng rate_rng(derive_seed(seed, kCatEval));
  out.random_rate = random_aug_success_rate(experts, out.sigma, 500, env, rate_rng);
  TrainResult tr = train_cat_on_pool(env, experts, out.pool, cfg, derive_seed(seed, kCatTrain), progress);
  out.policy = std::move(tr.policy);
  out.disc = std::move(tr.disc);
  out.curve = std::move(tr.curve);
  return out;
}

TrajectoryDataset corrected_dataset(const GaussianPolicy& cat_policy, const AugmentPool& pool, const Environment& env,
                                    std::size_t count, std::uint64_t seed, std::size_t max_attempts) {
  check_pool(pool, env);
  if (max_attempts == 0) max_attempts = 100 * count;
  TrajectoryDataset ds = make_dataset(env);
  Rng pick(seed);
  for (std::size_t k = 0; k < max_attempts && ds.size() < count; ++k) {
    const auto& q = pool.sequences[pick.index(pool.size())];
    Trajectory tr = run_correction(cat_policy, q, env, derive_seed(seed, k), false).trajectory;
    if (tr.success) ds.trajectories.push_back(std::move(tr));
  }
  return ds;
}

}  // namespace daug
