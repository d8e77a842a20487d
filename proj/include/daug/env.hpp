#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "daug/config.hpp"
#include "daug/rng.hpp"

namespace daug {

using Vec = Eigen::VectorXd;
using State = Vec;
using Action = Vec;

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  Vec action_low;
  Vec action_high;
  int horizon = 0;
  double dt = 0.0;

  // Throws ConfigError if dims/horizon are non-positive or bounds are not ordered.
  void validate() const;
};

// states.size() == actions.size() + 1. Actions are stored as executed,
// i.e. after clipping to the action bounds.
struct Trajectory {
  std::vector<State> states;
  std::vector<Action> actions;
  bool success = false;
  std::string env_name;
  std::uint64_t seed = 0;

  std::size_t length() const { return actions.size(); }
  bool operator==(const Trajectory& o) const;
};

// Deterministic fixed-horizon environment. Handles are immutable and
// stepping is a pure function, so rollouts can run concurrently.
class Environment {
 public:
  explicit Environment(EnvSpec spec);
  virtual ~Environment() = default;

  const EnvSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }

  // Initial state drawn from the seeded reset distribution.
  virtual State reset(std::uint64_t seed) const = 0;

  // Clips `action` and advances one integration step. Throws InputError on
  // a non-finite or wrongly sized state, NumericalError on a non-finite action.
  State step(const State& state, const Action& action) const;

  Action clip(const Action& action) const;

  // Success criterion on the final state of `traj`. Throws InputError when
  // the trajectory belongs to a different environment or is empty.
  bool is_success(const Trajectory& traj) const;
  virtual bool success_at(const State& final_state) const = 0;

  void check_state(const State& state) const;

 protected:
  virtual State dynamics(const State& state, const Action& clipped) const = 0;

  EnvSpec spec_;
};

// Known names: "point-reach", "latch-door", "pend-swing".
// Override keys: horizon (all); goal_cx, goal_cy, goal_r_min, goal_r_max
// (point-reach: goals are area-uniform on the annulus around (goal_cx, goal_cy)).
std::unique_ptr<Environment> make_env(const std::string& name, const ConfigMap& overrides = {});
const std::vector<std::string>& env_names();

// Observation -> action. `t` is the step index; `rng` is the policy's stream.
using PolicyFn = std::function<Action(const State& obs, std::size_t t, Rng& rng)>;

// Runs `horizon` steps (spec horizon when unset) from `init`, or from
// reset(seed) when no init is given. The policy's rng stream is derived from
// `seed`, so equal (policy, seed, init) give bit-identical trajectories.
Trajectory rollout(const Environment& env, const PolicyFn& policy, std::uint64_t seed,
                   std::optional<int> horizon = std::nullopt,
                   const std::optional<State>& init = std::nullopt);

// Open-loop execution of an action sequence from `init`.
Trajectory replay_actions(const Environment& env, const State& init,
                          const std::vector<Action>& actions, std::uint64_t seed = 0);

// Hand-written controller that solves its environment.
class ScriptedExpert {
 public:
  virtual ~ScriptedExpert() = default;
  virtual Action act(const State& state) const = 0;
  virtual const std::string& env_name() const = 0;
};

std::unique_ptr<ScriptedExpert> make_expert(const Environment& env);

// Expert as a policy with optional additive Gaussian action noise. The noise
// stream comes from `noise_seed`, independent of the rollout seed.
PolicyFn expert_policy(const ScriptedExpert& expert, double noise_std = 0.0,
                       std::uint64_t noise_seed = 0);

}  // namespace daug
