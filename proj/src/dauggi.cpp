#include "daug/dauggi.hpp"

#include <cstdio>

#include "daug/errors.hpp"

namespace daug {

SyntheticExpertSource::SyntheticExpertSource(const Environment& env, GaussianPolicy cat_policy, AugmentPool pool,
                                             SyntheticSourceConfig cfg)
    : env_(env), cat_(std::move(cat_policy)), pool_(std::move(pool)), cfg_(cfg) {
  if (pool_.empty()) throw InputError("SyntheticExpertSource: empty pool");
  if (pool_.env_name != env.name()) throw InputError("SyntheticExpertSource: pool belongs to '" + pool_.env_name + "'");
  if (cat_.obs_size() != env.spec().state_dim + env.spec().action_dim)
    throw InputError("SyntheticExpertSource: corrector must observe state || action");
  if (cfg_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (cfg_.buffer_capacity < 1) throw ConfigError("buffer capacity must be >= 1");
  if (cfg_.batch_size < 1) throw ConfigError("synthetic batch size must be >= 1");
}

SyntheticExpertSource::Attempt SyntheticExpertSource::attempt_until_success(std::uint64_t seed) const {
  Rng pick(seed);
  const int limit = cfg_.filter ? cfg_.max_attempts : 1;
  Attempt a;
  for (int k = 0; k < limit; ++k) {
    const auto& q = pool_.sequences[pick.index(pool_.size())];
    a.trajectory = correct_sequence(cat_, q, env_, pick.next_u64(), cfg_.deterministic).trajectory;
    a.attempts = k + 1;
    if (a.trajectory.success) break;
  }
  return a;
}

Trajectory SyntheticExpertSource::settle(Attempt a, Rng& rng) {
  std::lock_guard<std::mutex> lock(mu_);
  ++stats_.draws;
  stats_.attempts += a.attempts;
  if (!cfg_.filter) return std::move(a.trajectory);
  if (a.trajectory.success) {
    buffer_.push_back(a.trajectory);
    if (buffer_.size() > cfg_.buffer_capacity) buffer_.pop_front();
    return std::move(a.trajectory);
  }
  ++stats_.exhausted;
  if (!buffer_.empty()) return buffer_[rng.index(buffer_.size())];
  // Counted in stats(); warn once so long runs do not flood stderr.
  if (stats_.unfiltered++ == 0)
    std::fprintf(stderr,
                 "warning: no successful correction in %d attempts and an empty buffer; using an unfiltered one\n",
                 a.attempts);
  return std::move(a.trajectory);
}

Trajectory SyntheticExpertSource::sample(Rng& rng) { return settle(attempt_until_success(rng.next_u64()), rng); }

std::vector<Trajectory> SyntheticExpertSource::next_batch(std::size_t, Rng& rng) {
  // Attempts run in parallel; buffer bookkeeping happens afterwards in slot
  // order so the batch does not depend on thread scheduling.
  std::vector<std::uint64_t> seeds(cfg_.batch_size);
  for (auto& s : seeds) s = rng.next_u64();
  std::vector<Attempt> attempts(seeds.size());
  const long long n = static_cast<long long>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long k = 0; k < n; ++k) attempts[k] = attempt_until_success(seeds[k]);
  std::vector<Trajectory> out;
  out.reserve(attempts.size());
  double total = 0.0;
  for (auto& a : attempts) {
    total += a.attempts;
    out.push_back(settle(std::move(a), rng));
  }
  std::lock_guard<std::mutex> lock(mu_);
  last_attempts_mean_ = total / static_cast<double>(attempts.size());
  return out;
}

double SyntheticExpertSource::last_attempts_mean() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_attempts_mean_;
}

SyntheticStats SyntheticExpertSource::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stats_;
}

std::size_t SyntheticExpertSource::buffer_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return buffer_.size();
}

TrainResult train_dauggi(const Environment& env, ExpertSource& source, const AdvConfig& cfg, std::uint64_t seed,
                         const TrajectoryDataset* bc_experts, const ProgressFn& progress) {
  TrainResult r = train_imitation(env, source, cfg, seed, bc_experts, progress);
  r.curve.filter_column = true;
  return r;
}

}  // namespace daug
