#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "daug/data.hpp"
#include "daug/env.hpp"
#include "daug/rng.hpp"

namespace daug {

// Expert action sequence with i.i.d. uniform noise on every step and
// dimension. Actions are kept unclipped; clipping happens on execution.
struct DistortedSequence {
  std::size_t source_expert_index = 0;
  std::vector<Action> actions;
  double sigma = 0.0;
  State init_state;
  std::uint64_t noise_seed = 0;

  std::size_t length() const { return actions.size(); }
  bool operator==(const DistortedSequence& o) const;
};

struct AugmentPool {
  std::string env_name;
  int state_dim = 0;
  int action_dim = 0;
  std::size_t per_expert = 0;
  std::vector<DistortedSequence> sequences;

  std::size_t size() const { return sequences.size(); }
  bool empty() const { return sequences.empty(); }
};

// Half-width of the uniform noise so that its standard deviation is sigma.
double uniform_half_width(double sigma);

// a'_t = a_t + nu_t, nu ~ U(-sigma*sqrt(3), sigma*sqrt(3)). The noise is
// drawn from a fresh stream keyed by a seed taken from `rng`.
DistortedSequence distort(const Trajectory& expert, double sigma, Rng& rng, std::size_t source_index = 0);
// Deterministic given the noise seed.
DistortedSequence distort_with_seed(const Trajectory& expert, double sigma, std::uint64_t noise_seed,
                                    std::size_t source_index = 0);

// N sequences per expert, grouped by expert in dataset order.
AugmentPool build_pool(const TrajectoryDataset& experts, int per_expert, double sigma, Rng& rng);

// Executes clip(a'_t) open loop from the sequence's initial state.
Trajectory replay(const DistortedSequence& q, const Environment& env);

// Fraction of successful replays over `trials` fresh distortions, each of a
// uniformly chosen expert. Distortions are drawn serially from `rng`; the
// replays run in parallel. The serial variant is the reference.
double random_aug_success_rate(const TrajectoryDataset& experts, double sigma, int trials, const Environment& env,
                               Rng& rng);
double random_aug_success_rate_serial(const TrajectoryDataset& experts, double sigma, int trials,
                                      const Environment& env, Rng& rng);

struct CalibrationResult {
  double sigma = 0.0;
  double rate = 0.0;  // on the calibration replays
  int evaluations = 0;
};

// Bisection on log(sigma) for a random-augmentation success rate near
// `target`, evaluated with `replays` common-random-number replays. Stops early
// once the rate lies within [band_lo, band_hi] and is within `tolerance` of target.
CalibrationResult calibrate_sigma(const TrajectoryDataset& experts, const Environment& env, std::uint64_t seed,
                                  int replays = 200, double target = 0.08, double band_lo = 0.01,
                                  double band_hi = 0.20, double tolerance = 0.02);

// Pool file: TRAJDS v1 header with `kind=pool`; each TRAJ line carries
// `source=<expert index> sigma=<sigma>` and seed=<noise seed>, followed by the
// initial state line and n action lines.
void write_pool(std::ostream& out, const AugmentPool& pool);
AugmentPool read_pool(std::istream& in, const std::string& origin = "<pool>");
void save_pool(const AugmentPool& pool, const std::string& path);
AugmentPool load_pool(const std::string& path);

}  // namespace daug
