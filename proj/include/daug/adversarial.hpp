#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "daug/augment.hpp"
#include "daug/data.hpp"
#include "daug/env.hpp"
#include "daug/nets.hpp"

namespace daug {

struct AdvConfig {
  double lr_policy = 3e-4;
  double lr_value = 1e-3;
  double lr_disc = 3e-4;
  double clip_eps = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int batch_steps = 1024;
  int policy_epochs = 10;
  int disc_epochs = 1;
  int minibatch = 64;
  int disc_minibatch = 256;
  double disc_input_noise = 0.0;  // std of Gaussian noise added to both sides of each discriminator step
  double entropy_coef = 0.0;
  double kl_stop = 0.05;
  double max_grad_norm = 0.5;
  double init_log_std = -0.5;
  std::vector<int> hidden = {64, 64};
  long long total_steps = 300000;
  int eval_rollouts = 20;
  int eval_interval = 1;          // iterations between curve points
  int final_eval_rollouts = 100;  // rollouts behind the last curve point
  bool eval_deterministic = false;
  int bc_iterations = 0;
  double bc_lr = 1e-3;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  GradientVector grad;
};

// Mean-per-batch discriminator loss
//   L = -mean_expert log D - mean_generated log(1 - D)
// with D = sigmoid(clamp(logit)). Columns of each matrix are s||a inputs.
LossGrad disc_loss_and_grad(const Discriminator& disc, const Mat& expert_inputs, const Mat& generated_inputs);

// -log(1 - D(s, a)), computed as softplus of the clamped logit.
double surrogate_reward(const Discriminator& disc, const State& s, const Action& a);
double surrogate_reward_from_logit(double logit);

// Gradient of the clipped surrogate min(rho*A, clip(rho, 1-eps, 1+eps)*A)
// with respect to log pi(a|s); zero when the clipped branch is active.
double clipped_surrogate_dlogp(double ratio, double advantage, double clip_eps);

// Negated clipped surrogate minus the entropy bonus, averaged over the
// columns; gradient w.r.t. the policy's flat parameters.
LossGrad ppo_policy_loss_and_grad(const GaussianPolicy& policy, const Mat& obs, const Mat& actions,
                                  const Vec& logp_old, const Vec& advantages, double clip_eps,
                                  double entropy_coef);

// 0.5 * mean (V(obs) - target)^2.
LossGrad value_loss_and_grad(const DenseNet& value, const Mat& obs, const Vec& targets);

// mean ||mu(obs) - target||^2 w.r.t. the policy's flat parameters.
LossGrad bc_loss_and_grad(const GaussianPolicy& policy, const Mat& obs, const Mat& targets);

// One training batch; columns/entries are steps, episodes are contiguous.
struct RolloutBatch {
  Mat obs;            // policy observations
  Mat actions;        // sampled, unclipped
  Mat disc_inputs;    // state || clipped action
  Mat aux_actions;    // distorted actions a'_t (empty unless correcting)
  Vec logp_old;
  Vec rewards;
  Vec values;
  Vec advantages;
  Vec returns;
  std::vector<Eigen::Index> episode_ends;  // one past the last step of each episode
  std::vector<bool> episode_success;

  Eigen::Index size() const { return obs.cols(); }
};

// Generalized advantage estimates per episode; every episode ends in a
// terminal step (fixed horizon), so the bootstrap value after it is 0.
void compute_gae(const Vec& rewards, const Vec& values, const std::vector<Eigen::Index>& episode_ends, double gamma,
                 double gae_lambda, Vec& advantages, Vec& returns);

// Fills batch.values from `value_net`, then advantages and returns.
void estimate_advantages(RolloutBatch& batch, const DenseNet& value_net, double gamma, double gae_lambda);

// Shift/scale to mean 0, std 1; an all-equal batch becomes all zeros.
void normalize_advantages(Vec& advantages);

// Adam state that persists across policy updates.
struct PolicyOptimizer {
  Adam policy;
  Adam value;
  PolicyOptimizer() = default;
  PolicyOptimizer(const GaussianPolicy& p, const DenseNet& v, const AdvConfig& cfg);
};

struct UpdateStats {
  double kl = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  int epochs_run = 0;
  bool early_stopped = false;
};

// Clipped-surrogate proximal update with a KL guard: after each epoch the
// sample KL(old || new) is estimated and the remaining epochs are skipped
// once it exceeds cfg.kl_stop. The value net is regressed to the returns.
// Advantages in `batch` must already be normalized.
UpdateStats policy_update(GaussianPolicy& policy, DenseNet& value_net, const RolloutBatch& batch,
                          const AdvConfig& cfg, PolicyOptimizer& opt, Rng& rng);

// Mean-squared regression of the policy mean onto expert actions at expert
// states. Policies whose input is state || action see the expert's own
// action as the auxiliary channel. Returns the loss before and after.
std::pair<double, double> bc_pretrain(GaussianPolicy& policy, const TrajectoryDataset& experts, int iterations,
                                      double lr = 1e-3);

struct CurvePoint {
  long long env_steps = 0;
  double success_rate = 0.0;
  double disc_loss = std::numeric_limits<double>::quiet_NaN();
  double policy_kl = 0.0;
  double filter_attempts_mean = std::numeric_limits<double>::quiet_NaN();
  double mean_sq_deviation = std::numeric_limits<double>::quiet_NaN();
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  bool filter_column = false;

  double final_success() const { return points.empty() ? 0.0 : points.back().success_rate; }
};

// `env_steps,success_rate,disc_loss,policy_kl` (+ `,filter_attempts_mean`).
void write_curve_csv(std::ostream& out, const LearningCurve& curve);
void save_curve_csv(const LearningCurve& curve, const std::string& path);

// Supplies the expert side of each discriminator update.
class ExpertSource {
 public:
  virtual ~ExpertSource() = default;
  virtual std::vector<Trajectory> next_batch(std::size_t iteration, Rng& rng) = 0;
  // Mean sampling attempts behind the last batch; NaN when not filtering.
  virtual double last_attempts_mean() const { return std::numeric_limits<double>::quiet_NaN(); }
};

// GAIL's fixed demonstration set: every call returns all of it.
class DatasetExpertSource final : public ExpertSource {
 public:
  explicit DatasetExpertSource(TrajectoryDataset experts);
  std::vector<Trajectory> next_batch(std::size_t iteration, Rng& rng) override;
  const TrajectoryDataset& dataset() const { return experts_; }

 private:
  TrajectoryDataset experts_;
};

using ProgressFn = std::function<void(const CurvePoint&)>;

struct TrainResult {
  GaussianPolicy policy;
  DenseNet value_net;
  Discriminator disc;  // unused (zero-sized) for sparse RL
  LearningCurve curve;
};

// Success rate of `policy` (state observations) over `rollouts` env resets
// with seeds derived from `seed`. Rollouts run in parallel.
double evaluate_policy(const Environment& env, const GaussianPolicy& policy, int rollouts, std::uint64_t seed,
                       bool deterministic);
double evaluate_policy_serial(const Environment& env, const GaussianPolicy& policy, int rollouts,
                              std::uint64_t seed, bool deterministic);

// Imitation from whatever `source` provides (GAIL when it is a
// DatasetExpertSource). Policy observes state only.
// BC warm start (cfg.bc_iterations) uses `bc_experts` when given.
TrainResult train_imitation(const Environment& env, ExpertSource& source, const AdvConfig& cfg, std::uint64_t seed,
                            const TrajectoryDataset* bc_experts = nullptr, const ProgressFn& progress = {});

TrainResult train_gail(const Environment& env, const TrajectoryDataset& experts, const AdvConfig& cfg,
                       std::uint64_t seed, const ProgressFn& progress = {});

// Same proximal machinery, reward 1 on the final step of a successful
// episode and 0 everywhere else; no discriminator.
TrainResult train_sparse_rl(const Environment& env, const AdvConfig& cfg, std::uint64_t seed,
                            const ProgressFn& progress = {});

// Shared on-policy loop, also driven by the correction trainer.
namespace detail {

struct EpisodePlan {
  std::uint64_t seed = 0;
  const DistortedSequence* sequence = nullptr;  // start state + auxiliary actions
};

enum class RewardMode { kDiscriminator, kSparse };

struct LoopSpec {
  RewardMode reward = RewardMode::kDiscriminator;
  double lambda = 0.0;                    // correction penalty weight
  const AugmentPool* pool = nullptr;      // episodes start from pool draws
  ExpertSource* source = nullptr;
  // Returns (success rate, mean squared deviation); defaults to
  // evaluate_policy on the environment.
  std::function<std::pair<double, double>(const GaussianPolicy&, std::uint64_t seed, int rollouts)> evaluate;
  ProgressFn progress;
  // Runs on the freshly initialized policy, before training.
  std::function<void(GaussianPolicy&)> init_hook;
};

TrainResult run_on_policy(const Environment& env, const AdvConfig& cfg, std::uint64_t seed, const LoopSpec& spec,
                          const TrajectoryDataset* bc_experts);

RolloutBatch collect_batch(const Environment& env, const GaussianPolicy& policy, const std::vector<EpisodePlan>& plans);
RolloutBatch collect_batch_serial(const Environment& env, const GaussianPolicy& policy,
                                  const std::vector<EpisodePlan>& plans);

Mat expert_inputs(const std::vector<Trajectory>& demos);

}  // namespace detail

}  // namespace daug
