#pragma once

#include <deque>
#include <mutex>

#include "daug/adversarial.hpp"
#include "daug/cat.hpp"

namespace daug {

struct SyntheticSourceConfig {
  bool filter = true;
  int max_attempts = 16;
  std::size_t buffer_capacity = 64;
  std::size_t batch_size = 3;  // synthetic experts per discriminator update
  bool deterministic = false;  // corrector samples its actions by default
};

struct SyntheticStats {
  long long draws = 0;
  long long attempts = 0;
  long long exhausted = 0;       // no success within max_attempts
  long long unfiltered = 0;      // exhausted with an empty buffer
};

// Produces fresh synthetic experts by running a frozen copy of the
// corrector on uniform pool draws, optionally keeping only successes.
class SyntheticExpertSource final : public ExpertSource {
 public:
  SyntheticExpertSource(const Environment& env, GaussianPolicy cat_policy, AugmentPool pool,
                        SyntheticSourceConfig cfg = {});

  // One synthetic expert. On exhaustion returns a uniform draw from the
  // success buffer, or the last attempt (flagging a warning) when empty.
  Trajectory sample(Rng& rng);

  std::vector<Trajectory> next_batch(std::size_t iteration, Rng& rng) override;
  double last_attempts_mean() const override;

  const GaussianPolicy& cat_policy() const { return cat_; }
  std::uint64_t cat_checksum() const { return cat_.checksum(); }
  SyntheticStats stats() const;
  std::size_t buffer_size() const;

 private:
  struct Attempt {
    Trajectory trajectory;
    int attempts = 0;
  };
  Attempt attempt_until_success(std::uint64_t seed) const;
  Trajectory settle(Attempt a, Rng& rng);

  const Environment& env_;
  const GaussianPolicy cat_;
  const AugmentPool pool_;
  SyntheticSourceConfig cfg_;
  mutable std::mutex mu_;
  std::deque<Trajectory> buffer_;
  SyntheticStats stats_;
  double last_attempts_mean_ = 0.0;
};

// Imitation against synthetic experts; the policy observes state only.
TrainResult train_dauggi(const Environment& env, ExpertSource& source, const AdvConfig& cfg, std::uint64_t seed,
                         const TrajectoryDataset* bc_experts = nullptr, const ProgressFn& progress = {});

}  // namespace daug
