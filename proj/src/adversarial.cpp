#include "daug/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "daug/errors.hpp"

namespace daug {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

// Stream tags under the run seed.
enum : std::uint64_t {
  kPolicyInit = 1,
  kValueInit = 2,
  kDiscInit = 3,
  kEpisodeStream = 10,
  kPoolStream = 11,
  kUpdateStream = 12,
  kDiscStream = 13,
  kSourceStream = 14,
  kDiscNoiseStream = 16,
  kEvalStream = 15,
};

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void clip_norm(GradientVector& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
}

Mat gather_cols(const Mat& m, const std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end) {
  Mat out(m.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k) out.col(static_cast<Eigen::Index>(k - begin)) = m.col(idx[k]);
  return out;
}

Vec gather(const Vec& v, const std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end) {
  Vec out(static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k) out[static_cast<Eigen::Index>(k - begin)] = v[idx[k]];
  return out;
}

std::vector<Eigen::Index> permutation(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng.index(i)]);
  return p;
}

void project_log_std(GaussianPolicy& policy) {
  Vec& ls = policy.raw_log_std();
  ls = ls.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

struct Episode {
  std::vector<Vec> obs, actions, disc_inputs, aux;
  std::vector<double> logp;
  bool success = false;
};

Episode run_episode(const Environment& env, const GaussianPolicy& policy, const detail::EpisodePlan& plan) {
  Episode ep;
  Rng rng(plan.seed);
  State s = plan.sequence ? plan.sequence->init_state : env.reset(plan.seed);
  const std::size_t horizon =
      plan.sequence ? plan.sequence->length() : static_cast<std::size_t>(env.spec().horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    Vec obs = plan.sequence ? concat(s, plan.sequence->actions[t]) : s;
    auto [a, logp] = policy.sample(obs, rng);
    if (!a.allFinite()) throw NumericalError("policy produced a non-finite action");
    ep.disc_inputs.push_back(concat(s, env.clip(a)));
    if (plan.sequence) ep.aux.push_back(plan.sequence->actions[t]);
    s = env.step(s, a);
    ep.obs.push_back(std::move(obs));
    ep.actions.push_back(std::move(a));
    ep.logp.push_back(logp);
  }
  ep.success = env.success_at(s);
  return ep;
}

RolloutBatch assemble(const std::vector<Episode>& eps) {
  Eigen::Index total = 0;
  for (const auto& e : eps) total += static_cast<Eigen::Index>(e.obs.size());
  RolloutBatch b;
  if (eps.empty() || total == 0) throw InputError("collect_batch: no steps collected");
  const auto& f = eps.front();
  b.obs.resize(f.obs.front().size(), total);
  b.actions.resize(f.actions.front().size(), total);
  b.disc_inputs.resize(f.disc_inputs.front().size(), total);
  if (!f.aux.empty()) b.aux_actions.resize(f.aux.front().size(), total);
  b.logp_old.resize(total);
  b.rewards = Vec::Zero(total);
  Eigen::Index c = 0;
  for (const auto& e : eps) {
    for (std::size_t t = 0; t < e.obs.size(); ++t, ++c) {
      b.obs.col(c) = e.obs[t];
      b.actions.col(c) = e.actions[t];
      b.disc_inputs.col(c) = e.disc_inputs[t];
      if (!e.aux.empty()) b.aux_actions.col(c) = e.aux[t];
      b.logp_old[c] = e.logp[t];
    }
    b.episode_ends.push_back(c);
    b.episode_success.push_back(e.success);
  }
  return b;
}

void put_double(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "NA";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  out << buf;
}

}  // namespace

void AdvConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid training config: ") + what);
  };
  need(lr_policy > 0 && lr_value > 0 && lr_disc > 0 && bc_lr > 0, "learning rates must be > 0");
  need(clip_eps > 0 && clip_eps < 1, "clip_eps must be in (0, 1)");
  need(gamma > 0 && gamma <= 1, "gamma must be in (0, 1]");
  need(gae_lambda >= 0 && gae_lambda <= 1, "gae_lambda must be in [0, 1]");
  need(batch_steps >= 1, "batch_steps must be >= 1");
  need(policy_epochs >= 1 && disc_epochs >= 0, "epochs out of range");
  need(minibatch >= 1 && disc_minibatch >= 1, "minibatch sizes must be >= 1");
  need(entropy_coef >= 0, "entropy_coef must be >= 0");
  need(disc_input_noise >= 0, "disc_input_noise must be >= 0");
  need(kl_stop > 0, "kl_stop must be > 0");
  need(max_grad_norm >= 0, "max_grad_norm must be >= 0");
  need(init_log_std >= kLogStdMin && init_log_std <= kLogStdMax, "init_log_std out of range");
  need(!hidden.empty(), "hidden must list at least one layer");
  for (int h : hidden) need(h >= 1, "hidden sizes must be >= 1");
  need(total_steps >= batch_steps, "total_steps must be >= batch_steps");
  need(eval_rollouts >= 1 && final_eval_rollouts >= 1, "evaluation rollouts must be >= 1");
  need(eval_interval >= 1, "eval_interval must be >= 1");
  need(bc_iterations >= 0, "bc_iterations must be >= 0");
}

double surrogate_reward_from_logit(double logit) { return softplus(clamp_logit(logit)); }

double surrogate_reward(const Discriminator& disc, const State& s, const Action& a) {
  return surrogate_reward_from_logit(disc.logit(s, a));
}

LossGrad disc_loss_and_grad(const Discriminator& disc, const Mat& expert_inputs, const Mat& generated_inputs) {
  if (expert_inputs.cols() == 0 || generated_inputs.cols() == 0)
    throw InputError("disc_loss_and_grad: empty batch");
  const DenseNet& net = disc.net();
  LossGrad r;
  r.grad = GradientVector::Zero(net.param_count());
  auto side = [&](const Mat& x, bool expert) {
    DenseNet::Cache cache;
    const Mat z = net.forward_batch(x, &cache);
    const double n = static_cast<double>(x.cols());
    Mat up(1, x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      const double zc = clamp_logit(z(0, k));
      const bool inside = std::abs(z(0, k)) < kLogitClamp;
      if (expert) {
        r.loss += softplus(-zc) / n;
        up(0, k) = inside ? (sigmoid(zc) - 1.0) / n : 0.0;
      } else {
        r.loss += softplus(zc) / n;
        up(0, k) = inside ? sigmoid(zc) / n : 0.0;
      }
    }
    net.backward_batch(cache, up, r.grad);
  };
  side(expert_inputs, true);
  side(generated_inputs, false);
  return r;
}

double clipped_surrogate_dlogp(double ratio, double advantage, double clip_eps) {
  const bool clipped = (advantage > 0.0 && ratio > 1.0 + clip_eps) || (advantage < 0.0 && ratio < 1.0 - clip_eps);
  return clipped ? 0.0 : ratio * advantage;
}

LossGrad ppo_policy_loss_and_grad(const GaussianPolicy& policy, const Mat& obs, const Mat& actions,
                                  const Vec& logp_old, const Vec& advantages, double clip_eps,
                                  double entropy_coef) {
  const Eigen::Index n = obs.cols();
  if (n == 0 || actions.cols() != n || logp_old.size() != n || advantages.size() != n)
    throw InputError("ppo_policy_loss_and_grad: batch size mismatch");
  const DenseNet& net = policy.mean_net();
  const Vec ls = policy.log_std();
  const Vec inv_var = (-2.0 * ls).array().exp();
  const Eigen::Index d = ls.size();
  DenseNet::Cache cache;
  const Mat mu = net.forward_batch(obs, &cache);
  Mat up_mu(d, n);
  Vec g_ls = Vec::Zero(d);
  LossGrad r;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec diff = actions.col(k) - mu.col(k);
    const double logp =
        -0.5 * diff.cwiseProduct(diff).dot(inv_var) - ls.sum() - 0.5 * static_cast<double>(d) * kLog2Pi;
    const double ratio = std::exp(logp - logp_old[k]);
    const double a = advantages[k];
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    r.loss -= std::min(ratio * a, clipped_ratio * a) * inv_n;
    // dloss/dlogp, then chain through the Gaussian density.
    const double dl = -clipped_surrogate_dlogp(ratio, a, clip_eps) * inv_n;
    up_mu.col(k) = dl * diff.cwiseProduct(inv_var);
    g_ls.array() += dl * (diff.array().square() * inv_var.array() - 1.0);
  }
  r.loss -= entropy_coef * policy.entropy();
  g_ls.array() -= entropy_coef;
  GradientVector g_net = GradientVector::Zero(net.param_count());
  net.backward_batch(cache, up_mu, g_net);
  const Vec& raw = policy.raw_log_std();
  for (Eigen::Index i = 0; i < d; ++i)
    if (raw[i] < kLogStdMin || raw[i] > kLogStdMax) g_ls[i] = 0.0;
  r.grad.resize(policy.param_count());
  r.grad << g_net, g_ls;
  return r;
}

LossGrad value_loss_and_grad(const DenseNet& value, const Mat& obs, const Vec& targets) {
  if (obs.cols() == 0 || targets.size() != obs.cols()) throw InputError("value_loss_and_grad: batch size mismatch");
  DenseNet::Cache cache;
  const Mat v = value.forward_batch(obs, &cache);
  const double n = static_cast<double>(obs.cols());
  const Vec diff = v.row(0).transpose() - targets;
  LossGrad r;
  r.loss = 0.5 * diff.squaredNorm() / n;
  r.grad = GradientVector::Zero(value.param_count());
  value.backward_batch(cache, diff.transpose() / n, r.grad);
  return r;
}

LossGrad bc_loss_and_grad(const GaussianPolicy& policy, const Mat& obs, const Mat& targets) {
  if (obs.cols() == 0 || targets.cols() != obs.cols()) throw InputError("bc_loss_and_grad: batch size mismatch");
  const DenseNet& net = policy.mean_net();
  DenseNet::Cache cache;
  const Mat diff = net.forward_batch(obs, &cache) - targets;
  const double n = static_cast<double>(obs.cols());
  LossGrad r;
  r.loss = diff.squaredNorm() / n;
  GradientVector g_net = GradientVector::Zero(net.param_count());
  net.backward_batch(cache, 2.0 * diff / n, g_net);
  r.grad = GradientVector::Zero(policy.param_count());
  r.grad.head(net.param_count()) = g_net;
  return r;
}

void compute_gae(const Vec& rewards, const Vec& values, const std::vector<Eigen::Index>& episode_ends, double gamma,
                 double gae_lambda, Vec& advantages, Vec& returns) {
  if (values.size() != rewards.size()) throw InputError("compute_gae: size mismatch");
  if (episode_ends.empty() || episode_ends.back() != rewards.size())
    throw InputError("compute_gae: episode boundaries do not cover the batch");
  advantages.resize(rewards.size());
  Eigen::Index begin = 0;
  for (Eigen::Index end : episode_ends) {
    if (end <= begin) throw InputError("compute_gae: empty or unordered episode");
    double acc = 0.0;
    for (Eigen::Index t = end - 1; t >= begin; --t) {
      const double next_v = t + 1 < end ? values[t + 1] : 0.0;
      const double delta = rewards[t] + gamma * next_v - values[t];
      acc = delta + gamma * gae_lambda * acc;
      advantages[t] = acc;
    }
    begin = end;
  }
  returns = advantages + values;
}

void estimate_advantages(RolloutBatch& batch, const DenseNet& value_net, double gamma, double gae_lambda) {
  batch.values = value_net.forward_batch(batch.obs).row(0).transpose();
  compute_gae(batch.rewards, batch.values, batch.episode_ends, gamma, gae_lambda, batch.advantages, batch.returns);
}

void normalize_advantages(Vec& advantages) {
  if (advantages.size() == 0) return;
  const double mean = advantages.mean();
  advantages.array() -= mean;
  const double sd = std::sqrt(advantages.squaredNorm() / static_cast<double>(advantages.size()));
  if (sd > 1e-12) {
    advantages /= sd;
  } else {
    advantages.setZero();
  }
}

PolicyOptimizer::PolicyOptimizer(const GaussianPolicy& p, const DenseNet& v, const AdvConfig& cfg)
    : policy(p.param_count(), cfg.lr_policy), value(v.param_count(), cfg.lr_value) {}

UpdateStats policy_update(GaussianPolicy& policy, DenseNet& value_net, const RolloutBatch& batch,
                          const AdvConfig& cfg, PolicyOptimizer& opt, Rng& rng) {
  UpdateStats st;
  const Eigen::Index n = batch.size();
  const std::size_t mb = static_cast<std::size_t>(cfg.minibatch);
  for (int epoch = 0; epoch < cfg.policy_epochs; ++epoch) {
    const auto perm = permutation(n, rng);
    double pl = 0.0, vl = 0.0;
    int count = 0;
    for (std::size_t b = 0; b < perm.size(); b += mb) {
      const std::size_t e = std::min(perm.size(), b + mb);
      const Mat obs = gather_cols(batch.obs, perm, b, e);
      LossGrad lg = ppo_policy_loss_and_grad(policy, obs, gather_cols(batch.actions, perm, b, e),
                                             gather(batch.logp_old, perm, b, e), gather(batch.advantages, perm, b, e),
                                             cfg.clip_eps, cfg.entropy_coef);
      clip_norm(lg.grad, cfg.max_grad_norm);
      Vec p = policy.flat_params();
      opt.policy.step(p, lg.grad);
      policy.set_flat_params(p);
      project_log_std(policy);

      LossGrad vg = value_loss_and_grad(value_net, obs, gather(batch.returns, perm, b, e));
      clip_norm(vg.grad, cfg.max_grad_norm);
      opt.value.step(value_net.params(), vg.grad);
      pl += lg.loss;
      vl += vg.loss;
      ++count;
    }
    st.policy_loss = pl / count;
    st.value_loss = vl / count;
    st.epochs_run = epoch + 1;
    // k3 estimator of KL(old || new) on the batch.
    double kl = 0.0;
    const Mat mu = policy.mean_net().forward_batch(batch.obs);
    const Vec ls = policy.log_std();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double log_r = log_prob_diag_gaussian(batch.actions.col(k), mu.col(k), ls) - batch.logp_old[k];
      kl += std::expm1(log_r) - log_r;
    }
    st.kl = kl / static_cast<double>(n);
    if (st.kl > cfg.kl_stop) {
      st.early_stopped = epoch + 1 < cfg.policy_epochs;
      break;
    }
  }
  return st;
}

std::pair<double, double> bc_pretrain(GaussianPolicy& policy, const TrajectoryDataset& experts, int iterations,
                                      double lr) {
  if (experts.empty()) throw InputError("bc_pretrain: empty expert set");
  const bool with_action = policy.obs_size() == experts.state_dim + experts.action_dim;
  if (!with_action && policy.obs_size() != experts.state_dim) throw InputError("bc_pretrain: observation size mismatch");
  std::vector<Vec> xs, ys;
  for (const auto& tr : experts.trajectories)
    for (std::size_t t = 0; t < tr.length(); ++t) {
      xs.push_back(with_action ? concat(tr.states[t], tr.actions[t]) : tr.states[t]);
      ys.push_back(tr.actions[t]);
    }
  Mat obs(policy.obs_size(), static_cast<Eigen::Index>(xs.size()));
  Mat targets(policy.action_size(), static_cast<Eigen::Index>(ys.size()));
  for (std::size_t k = 0; k < xs.size(); ++k) {
    obs.col(static_cast<Eigen::Index>(k)) = xs[k];
    targets.col(static_cast<Eigen::Index>(k)) = ys[k];
  }
  const double before = bc_loss_and_grad(policy, obs, targets).loss;
  Adam adam(policy.param_count(), lr);
  for (int it = 0; it < iterations; ++it) {
    const LossGrad lg = bc_loss_and_grad(policy, obs, targets);
    Vec p = policy.flat_params();
    adam.step(p, lg.grad);
    policy.set_flat_params(p);
  }
  return {before, bc_loss_and_grad(policy, obs, targets).loss};
}

void write_curve_csv(std::ostream& out, const LearningCurve& curve) {
  out << "env_steps,success_rate,disc_loss,policy_kl";
  if (curve.filter_column) out << ",filter_attempts_mean";
  out << '\n';
  for (const auto& p : curve.points) {
    out << p.env_steps << ',';
    put_double(out, p.success_rate);
    out << ',';
    put_double(out, p.disc_loss);
    out << ',';
    put_double(out, p.policy_kl);
    if (curve.filter_column) {
      out << ',';
      put_double(out, p.filter_attempts_mean);
    }
    out << '\n';
  }
}

void save_curve_csv(const LearningCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write learning curve: " + path);
  write_curve_csv(out, curve);
  out.flush();
  if (!out) throw std::runtime_error("I/O error writing learning curve: " + path);
}

DatasetExpertSource::DatasetExpertSource(TrajectoryDataset experts) : experts_(std::move(experts)) {
  if (experts_.empty()) throw InputError("DatasetExpertSource: empty expert set");
}

std::vector<Trajectory> DatasetExpertSource::next_batch(std::size_t, Rng&) { return experts_.trajectories; }

namespace {

bool eval_episode(const Environment& env, const GaussianPolicy& policy, std::uint64_t seed, bool deterministic) {
  PolicyFn fn = [&](const State& s, std::size_t, Rng& rng) -> Action {
    return deterministic ? policy.mean(s) : policy.sample(s, rng).first;
  };
  return rollout(env, fn, seed).success;
}

void check_policy(const Environment& env, const GaussianPolicy& policy) {
  if (policy.obs_size() != env.spec().state_dim || policy.action_size() != env.spec().action_dim)
    throw InputError("policy does not match environment dimensions");
}

}  // namespace

double evaluate_policy(const Environment& env, const GaussianPolicy& policy, int rollouts, std::uint64_t seed,
                       bool deterministic) {
  if (rollouts < 1) throw InputError("evaluate_policy: rollouts must be >= 1");
  check_policy(env, policy);
  long long ok = 0;
#pragma omp parallel for reduction(+ : ok) schedule(static)
  for (int k = 0; k < rollouts; ++k)
    ok += eval_episode(env, policy, derive_seed(seed, static_cast<std::uint64_t>(k)), deterministic) ? 1 : 0;
  return static_cast<double>(ok) / rollouts;
}

double evaluate_policy_serial(const Environment& env, const GaussianPolicy& policy, int rollouts,
                              std::uint64_t seed, bool deterministic) {
  if (rollouts < 1) throw InputError("evaluate_policy: rollouts must be >= 1");
  check_policy(env, policy);
  long long ok = 0;
  for (int k = 0; k < rollouts; ++k)
    ok += eval_episode(env, policy, derive_seed(seed, static_cast<std::uint64_t>(k)), deterministic) ? 1 : 0;
  return static_cast<double>(ok) / rollouts;
}

namespace detail {

RolloutBatch collect_batch(const Environment& env, const GaussianPolicy& policy, const std::vector<EpisodePlan>& plans) {
  std::vector<Episode> eps(plans.size());
  const long long n = static_cast<long long>(plans.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long k = 0; k < n; ++k) eps[k] = run_episode(env, policy, plans[k]);
  return assemble(eps);
}

RolloutBatch collect_batch_serial(const Environment& env, const GaussianPolicy& policy,
                                  const std::vector<EpisodePlan>& plans) {
  std::vector<Episode> eps;
  eps.reserve(plans.size());
  for (const auto& p : plans) eps.push_back(run_episode(env, policy, p));
  return assemble(eps);
}

Mat expert_inputs(const std::vector<Trajectory>& demos) {
  Eigen::Index total = 0;
  for (const auto& d : demos) total += static_cast<Eigen::Index>(d.length());
  if (total == 0) throw InputError("expert batch has no steps");
  const auto& f = demos.front();
  Mat out(f.states.front().size() + f.actions.front().size(), total);
  Eigen::Index c = 0;
  for (const auto& d : demos)
    for (std::size_t t = 0; t < d.length(); ++t) out.col(c++) = concat(d.states[t], d.actions[t]);
  return out;
}

TrainResult run_on_policy(const Environment& env, const AdvConfig& cfg, std::uint64_t seed, const LoopSpec& spec,
                          const TrajectoryDataset* bc_experts) {
  cfg.validate();
  const bool adversarial = spec.reward == RewardMode::kDiscriminator;
  if (adversarial && !spec.source) throw InputError("adversarial training needs an expert source");
  if (spec.pool && spec.pool->empty()) throw InputError("correction training needs a non-empty pool");
  const int ds = env.spec().state_dim, da = env.spec().action_dim;
  const int obs_dim = spec.pool ? ds + da : ds;
  const Rng root(seed);

  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(da);
  TrainResult res;
  res.policy = GaussianPolicy(sizes, cfg.init_log_std);
  Rng init_p = root.fork(kPolicyInit);
  res.policy.mean_net().init_random(init_p, 0.01);
  sizes.back() = 1;
  res.value_net = DenseNet(sizes);
  Rng init_v = root.fork(kValueInit);
  res.value_net.init_random(init_v);
  if (adversarial) {
    res.disc = Discriminator(ds, da, cfg.hidden);
    Rng init_d = root.fork(kDiscInit);
    res.disc.net().init_random(init_d);
  }
  if (bc_experts && cfg.bc_iterations > 0) bc_pretrain(res.policy, *bc_experts, cfg.bc_iterations, cfg.bc_lr);
  if (spec.init_hook) spec.init_hook(res.policy);

  PolicyOptimizer opt(res.policy, res.value_net, cfg);
  Adam disc_opt(res.disc.net().param_count(), cfg.lr_disc);
  Rng pool_rng = root.fork(kPoolStream);
  Rng update_rng = root.fork(kUpdateStream);
  Rng disc_rng = root.fork(kDiscStream);
  Rng source_rng = root.fork(kSourceStream);
  Rng noise_rng = root.fork(kDiscNoiseStream);
  auto jitter = [&](Mat m) {
    if (cfg.disc_input_noise > 0.0)
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] += cfg.disc_input_noise * noise_rng.normal();
    return m;
  };

  auto evaluate = [&](std::uint64_t eval_seed, int rollouts) -> std::pair<double, double> {
    if (spec.evaluate) return spec.evaluate(res.policy, eval_seed, rollouts);
    return {evaluate_policy(env, res.policy, rollouts, eval_seed, cfg.eval_deterministic),
            std::numeric_limits<double>::quiet_NaN()};
  };

  const long long iterations = cfg.total_steps / cfg.batch_steps;
  const int horizon = spec.pool ? static_cast<int>(spec.pool->sequences.front().length()) : env.spec().horizon;
  const int episodes = std::max(1, (cfg.batch_steps + horizon - 1) / horizon);
  long long env_steps = 0;
  for (long long it = 0; it < iterations; ++it) {
    std::vector<EpisodePlan> plans(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
      auto& p = plans[static_cast<std::size_t>(e)];
      p.seed = derive_seed(seed, kEpisodeStream, static_cast<std::uint64_t>(it) * episodes + e);
      if (spec.pool) p.sequence = &spec.pool->sequences[pool_rng.index(spec.pool->size())];
    }
    RolloutBatch batch = collect_batch(env, res.policy, plans);
    env_steps += batch.size();

    double disc_loss = std::numeric_limits<double>::quiet_NaN();
    if (adversarial) {
      const Mat expert = expert_inputs(spec.source->next_batch(static_cast<std::size_t>(it), source_rng));
      if (expert.rows() != ds + da) throw InputError("expert batch does not match environment dimensions");
      const std::size_t mb = static_cast<std::size_t>(cfg.disc_minibatch);
      for (int epoch = 0; epoch < cfg.disc_epochs; ++epoch) {
        const auto perm = permutation(batch.size(), disc_rng);
        double total = 0.0;
        int count = 0;
        for (std::size_t b = 0; b < perm.size(); b += mb) {
          const std::size_t e = std::min(perm.size(), b + mb);
          Mat ex(expert.rows(), static_cast<Eigen::Index>(e - b));
          for (Eigen::Index k = 0; k < ex.cols(); ++k)
            ex.col(k) = expert.col(static_cast<Eigen::Index>(disc_rng.index(static_cast<std::size_t>(expert.cols()))));
          LossGrad lg = disc_loss_and_grad(res.disc, jitter(std::move(ex)),
                                           jitter(gather_cols(batch.disc_inputs, perm, b, e)));
          disc_opt.step(res.disc.net().params(), lg.grad);
          total += lg.loss;
          ++count;
        }
        disc_loss = total / count;
      }
      const Mat z = res.disc.net().forward_batch(batch.disc_inputs);
      for (Eigen::Index k = 0; k < batch.size(); ++k) batch.rewards[k] = surrogate_reward_from_logit(z(0, k));
      if (spec.pool && spec.lambda != 0.0)
        batch.rewards -= spec.lambda * (batch.actions - batch.aux_actions).colwise().squaredNorm().transpose();
    } else {
      for (std::size_t e = 0; e < batch.episode_ends.size(); ++e)
        if (batch.episode_success[e]) batch.rewards[batch.episode_ends[e] - 1] = 1.0;
    }

    estimate_advantages(batch, res.value_net, cfg.gamma, cfg.gae_lambda);
    normalize_advantages(batch.advantages);
    const UpdateStats st = policy_update(res.policy, res.value_net, batch, cfg, opt, update_rng);

    const bool last = it + 1 == iterations;
    if (last || (it + 1) % cfg.eval_interval == 0) {
      CurvePoint pt;
      pt.env_steps = env_steps;
      const auto [success, msd] =
          evaluate(derive_seed(seed, kEvalStream, static_cast<std::uint64_t>(it)),
                   last ? cfg.final_eval_rollouts : cfg.eval_rollouts);
      pt.success_rate = success;
      pt.mean_sq_deviation = msd;
      pt.disc_loss = disc_loss;
      pt.policy_kl = st.kl;
      if (spec.source) pt.filter_attempts_mean = spec.source->last_attempts_mean();
      res.curve.points.push_back(pt);
      if (spec.progress) spec.progress(pt);
    }
  }
  return res;
}

}  // namespace detail

TrainResult train_imitation(const Environment& env, ExpertSource& source, const AdvConfig& cfg, std::uint64_t seed,
                            const TrajectoryDataset* bc_experts, const ProgressFn& progress) {
  detail::LoopSpec spec;
  spec.source = &source;
  spec.progress = progress;
  return detail::run_on_policy(env, cfg, seed, spec, bc_experts);
}

TrainResult train_gail(const Environment& env, const TrajectoryDataset& experts, const AdvConfig& cfg,
                       std::uint64_t seed, const ProgressFn& progress) {
  if (experts.env_name != env.name()) throw InputError("train_gail: experts belong to '" + experts.env_name + "'");
  DatasetExpertSource source(experts);
  return train_imitation(env, source, cfg, seed, &experts, progress);
}

TrainResult train_sparse_rl(const Environment& env, const AdvConfig& cfg, std::uint64_t seed,
                            const ProgressFn& progress) {
  detail::LoopSpec spec;
  spec.reward = detail::RewardMode::kSparse;
  spec.progress = progress;
  return detail::run_on_policy(env, cfg, seed, spec, nullptr);
}

}  // namespace daug
