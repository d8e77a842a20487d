#pragma once

#include <string>

#include "daug/adversarial.hpp"
#include "daug/augment.hpp"

namespace daug {

struct CatConfig {
  AdvConfig adv;
  double lambda = 0.1;
  double sigma = 0.0;        // used when calibrate_sigma is false
  bool auto_sigma = true;    // calibrate sigma on the experts first
  int per_expert = 32;       // N distorted sequences per expert
  bool identity_init = false;
  int identity_init_iterations = 2000;

  void validate() const;
};

// -log(1 - D(s, a)) - lambda * ||a - a'||^2.
double cat_shaped_reward(const Discriminator& disc, const State& s, const Action& a, const Action& a_prime,
                         double lambda);
// Gradient of cat_shaped_reward w.r.t. the action `a`.
Vec cat_shaped_reward_action_grad(const Discriminator& disc, const State& s, const Action& a, const Action& a_prime,
                                  double lambda);

struct CorrectedTrajectory {
  Trajectory trajectory;
  const DistortedSequence* source = nullptr;
};

// Rollout from q.init_state; at step t the policy observes s_t || a'_t.
// The policy's sampling stream is `seed`. With `deterministic` the mean
// action is taken.
CorrectedTrajectory correct_sequence(const GaussianPolicy& cat_policy, const DistortedSequence& q,
                                     const Environment& env, std::uint64_t seed, bool deterministic = false);

struct CorrectionStats {
  double success_rate = 0.0;
  double mean_sq_deviation = 0.0;  // mean over steps of ||a_c - a'||^2 (executed vs distorted)
};

// Corrections of `trials` uniform draws from the pool, run in parallel.
CorrectionStats cat_success_rate(const GaussianPolicy& cat_policy, const AugmentPool& pool, const Environment& env,
                                 int trials, std::uint64_t seed, bool deterministic = false);
CorrectionStats cat_success_rate_serial(const GaussianPolicy& cat_policy, const AugmentPool& pool,
                                        const Environment& env, int trials, std::uint64_t seed,
                                        bool deterministic = false);

// Regresses the mean net onto the auxiliary action over the pool's open-loop
// replays so the untrained corrector starts near the identity on a'.
void identity_init(GaussianPolicy& cat_policy, const AugmentPool& pool, const Environment& env, int iterations,
                   double lr);

struct CatResult {
  GaussianPolicy policy;
  Discriminator disc;
  LearningCurve curve;
  AugmentPool pool;
  double sigma = 0.0;
  double random_rate = 0.0;  // random_aug_success_rate at sigma on the pool's experts
};

TrainResult train_cat_on_pool(const Environment& env, const TrajectoryDataset& experts, const AugmentPool& pool,
                              const CatConfig& cfg, std::uint64_t seed, const ProgressFn& progress = {});

// Calibrates sigma (when cfg.auto_sigma), builds the pool and trains the
// corrector against the fixed experts.
CatResult train_cat(const Environment& env, const TrajectoryDataset& experts, const CatConfig& cfg,
                    std::uint64_t seed, const ProgressFn& progress = {});

// Up to `count` successful corrections drawn from the pool.
TrajectoryDataset corrected_dataset(const GaussianPolicy& cat_policy, const AugmentPool& pool, const Environment& env,
                                    std::size_t count, std::uint64_t seed, std::size_t max_attempts = 0);

}  // namespace daug
