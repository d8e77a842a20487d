#include "daug/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "daug/errors.hpp"

namespace daug {

namespace {

constexpr std::uint64_t kPolicyStream = 0x706f6c696379ULL;  // "policy"

bool all_finite(const Vec& v) { return v.allFinite(); }

Vec bounds(int n, double value) { return Vec::Constant(n, value); }

double wrap_angle(double a) {
  // to (-pi, pi]
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

// 2-D double integrator. State (px, py, vx, vy, gx, gy).
class PointReach final : public Environment {
 public:
  PointReach(int horizon, double cx, double cy, double r_min, double r_max)
      : Environment(EnvSpec{"point-reach", 6, 2, bounds(2, -1.0), bounds(2, 1.0), horizon, 0.1}),
        cx_(cx),
        cy_(cy),
        r_min_(r_min),
        r_max_(r_max) {
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw ConfigError("point-reach: goal centre must be finite");
    if (!(r_min >= 0.0 && r_max > r_min)) throw ConfigError("point-reach: need 0 <= goal_r_min < goal_r_max");
  }

  State reset(std::uint64_t seed) const override {
    Rng rng(seed);
    // area-uniform radius on the annulus
    const double r = std::sqrt(rng.uniform(r_min_ * r_min_, r_max_ * r_max_));
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    State s = State::Zero(6);
    s[4] = cx_ + r * std::cos(phi);
    s[5] = cy_ + r * std::sin(phi);
    return s;
  }

  bool success_at(const State& s) const override {
    const double dx = s[0] - s[4], dy = s[1] - s[5];
    return std::hypot(dx, dy) < 0.1 && std::hypot(s[2], s[3]) < 0.5;
  }

 protected:
  State dynamics(const State& s, const Action& a) const override {
    State n = s;
    const double dt = spec_.dt;
    n[2] = s[2] + dt * a[0];
    n[3] = s[3] + dt * a[1];
    n[0] = s[0] + dt * n[2];
    n[1] = s[1] + dt * n[3];
    return n;
  }

 private:
  double cx_, cy_, r_min_, r_max_;
};

// Latch must be held above the gate angle for door torque to act.
// State (latch_angle, door_angle, latch_vel, door_vel).
class LatchDoor final : public Environment {
 public:
  static constexpr double kGate = 0.8;
  static constexpr double kLatchGain = 2.0, kLatchSpring = 1.5, kLatchDamping = 1.0;
  static constexpr double kDoorGain = 2.0, kDoorSpring = 0.5, kDoorDamping = 1.0;
  static constexpr double kDoorMax = std::numbers::pi / 2.0;

  explicit LatchDoor(int horizon)
      : Environment(EnvSpec{"latch-door", 4, 2, bounds(2, -1.0), bounds(2, 1.0), horizon, 0.05}) {}

  State reset(std::uint64_t seed) const override {
    Rng rng(seed);
    State s = State::Zero(4);
    s[0] = rng.uniform(0.0, 0.1);
    return s;
  }

  bool success_at(const State& s) const override { return s[1] > 1.0; }

 protected:
  State dynamics(const State& s, const Action& a) const override {
    const double dt = spec_.dt;
    State n = s;
    const double latch_acc = kLatchGain * a[0] - kLatchSpring * s[0] - kLatchDamping * s[2];
    n[2] = s[2] + dt * latch_acc;
    n[0] = s[0] + dt * n[2];
    const double push = s[0] > kGate ? kDoorGain * a[1] : 0.0;
    const double door_acc = push - kDoorSpring * s[1] - kDoorDamping * s[3];
    n[3] = s[3] + dt * door_acc;
    n[1] = s[1] + dt * n[3];
    // hinge stops
    if (n[1] < 0.0) {
      n[1] = 0.0;
      n[3] = std::max(n[3], 0.0);
    } else if (n[1] > kDoorMax) {
      n[1] = kDoorMax;
      n[3] = std::min(n[3], 0.0);
    }
    return n;
  }
};

// Torque-limited pendulum, theta = 0 hanging down. State (cos, sin, omega).
class PendSwing final : public Environment {
 public:
  static constexpr double kGravity = 10.0;   // g / l
  static constexpr double kMaxTorque = 3.25;  // < kGravity: cannot lift directly
  static constexpr double kDamping = 0.05;

  explicit PendSwing(int horizon)
      : Environment(EnvSpec{"pend-swing", 3, 1, bounds(1, -1.0), bounds(1, 1.0), horizon, 0.05}) {}

  State reset(std::uint64_t seed) const override {
    Rng rng(seed);
    const double theta = rng.uniform(-0.1, 0.1);
    const double omega = rng.uniform(-0.1, 0.1);
    State s(3);
    s << std::cos(theta), std::sin(theta), omega;
    return s;
  }

  bool success_at(const State& s) const override {
    const double theta = std::atan2(s[1], s[0]);
    const double off = std::abs(wrap_angle(theta - std::numbers::pi));
    return off < 0.2 && std::abs(s[2]) < 1.0;
  }

 protected:
  State dynamics(const State& s, const Action& a) const override {
    const double dt = spec_.dt;
    const double theta = std::atan2(s[1], s[0]);
    const double acc = -kGravity * s[1] + kMaxTorque * a[0] - kDamping * s[2];
    const double omega = s[2] + dt * acc;
    const double next = theta + dt * omega;
    State n(3);
    n << std::cos(next), std::sin(next), omega;
    return n;
  }
};

class PointReachExpert final : public ScriptedExpert {
 public:
  Action act(const State& s) const override {
    Action a(2);
    for (int i = 0; i < 2; ++i) a[i] = kP * (s[4 + i] - s[i]) - kD * s[2 + i];
    return a.cwiseMax(-1.0).cwiseMin(1.0);
  }
  const std::string& env_name() const override { return name_; }

 private:
  static constexpr double kP = 2.0, kD = 2.5;
  std::string name_ = "point-reach";
};

// Phase 1 drives the latch open; once past the gate, phase 2 also drives
// the door. Both channels are bang-bang around a hold set-point.
class LatchDoorExpert final : public ScriptedExpert {
 public:
  Action act(const State& s) const override {
    Action a(2);
    a[0] = s[0] < kLatchHold ? 1.0 : -1.0;
    a[1] = s[0] > kLatchOpen ? (s[1] < kDoorHold ? 1.0 : -1.0) : 0.0;
    return a;
  }
  const std::string& env_name() const override { return name_; }

 private:
  static constexpr double kLatchHold = 1.0, kLatchOpen = 0.9, kDoorHold = 1.25;
  std::string name_ = "latch-door";
};

// Energy pumping far from upright, PD capture near it.
class PendSwingExpert final : public ScriptedExpert {
 public:
  Action act(const State& s) const override {
    const double theta = std::atan2(s[1], s[0]);
    const double err = wrap_angle(theta - std::numbers::pi);
    const double omega = s[2];
    double u = 0.0;
    if (std::abs(err) < kCapture) {
      u = (-kP * err - kD * omega) / PendSwing::kMaxTorque;
    } else {
      const double energy = 0.5 * omega * omega + PendSwing::kGravity * (1.0 - s[0]);
      const double target = 2.0 * PendSwing::kGravity;
      u = kE * (target - energy) * omega;
    }
    Action a(1);
    a[0] = std::clamp(u, -1.0, 1.0);
    return a;
  }
  const std::string& env_name() const override { return name_; }

 private:
  static constexpr double kCapture = 0.5, kP = 20.0, kD = 5.0, kE = 0.5;
  std::string name_ = "pend-swing";
};

}  // namespace

void EnvSpec::validate() const {
  if (state_dim < 1 || action_dim < 1) throw ConfigError(name + ": dims must be >= 1");
  if (horizon < 1) throw ConfigError(name + ": horizon must be >= 1");
  if (action_low.size() != action_dim || action_high.size() != action_dim)
    throw ConfigError(name + ": bounds size mismatch");
  if (!(action_low.array() < action_high.array()).all())
    throw ConfigError(name + ": action_low must be < action_high");
}

bool Trajectory::operator==(const Trajectory& o) const {
  if (success != o.success || env_name != o.env_name || seed != o.seed) return false;
  if (states.size() != o.states.size() || actions.size() != o.actions.size()) return false;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i].size() != o.states[i].size() || states[i] != o.states[i]) return false;
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (actions[i].size() != o.actions[i].size() || actions[i] != o.actions[i]) return false;
  return true;
}

Environment::Environment(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void Environment::check_state(const State& state) const {
  if (state.size() != spec_.state_dim)
    throw InputError(spec_.name + ": state has " + std::to_string(state.size()) + " entries, expected " +
                     std::to_string(spec_.state_dim));
  if (!all_finite(state)) throw InputError(spec_.name + ": non-finite state");
}

Action Environment::clip(const Action& action) const {
  return action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
}

State Environment::step(const State& state, const Action& action) const {
  check_state(state);
  if (action.size() != spec_.action_dim)
    throw InputError(spec_.name + ": action has " + std::to_string(action.size()) + " entries, expected " +
                     std::to_string(spec_.action_dim));
  if (!all_finite(action)) throw NumericalError(spec_.name + ": non-finite action");
  return dynamics(state, clip(action));
}

bool Environment::is_success(const Trajectory& traj) const {
  if (traj.env_name != spec_.name)
    throw InputError("trajectory from '" + traj.env_name + "' evaluated on '" + spec_.name + "'");
  if (traj.states.empty()) throw InputError("is_success: empty trajectory");
  check_state(traj.states.back());
  return success_at(traj.states.back());
}

std::unique_ptr<Environment> make_env(const std::string& name, const ConfigMap& overrides) {
  int horizon = 0;
  auto take_horizon = [&](int fallback) {
    horizon = fallback;
    if (auto it = overrides.find("horizon"); it != overrides.end())
      horizon = static_cast<int>(config_int("horizon", it->second));
    if (horizon < 1) throw ConfigError(name + ": horizon must be >= 1");
  };
  if (name == "point-reach") {
    reject_unknown_keys(overrides, {"horizon", "goal_cx", "goal_cy", "goal_r_min", "goal_r_max"}, name);
    take_horizon(50);
    double cx = 1.0, cy = 0.0, r_min = 0.1, r_max = 0.3;
    if (auto it = overrides.find("goal_cx"); it != overrides.end()) cx = config_double(it->first, it->second);
    if (auto it = overrides.find("goal_cy"); it != overrides.end()) cy = config_double(it->first, it->second);
    if (auto it = overrides.find("goal_r_min"); it != overrides.end()) r_min = config_double(it->first, it->second);
    if (auto it = overrides.find("goal_r_max"); it != overrides.end()) r_max = config_double(it->first, it->second);
    return std::make_unique<PointReach>(horizon, cx, cy, r_min, r_max);
  }
  if (name == "latch-door") {
    reject_unknown_keys(overrides, {"horizon"}, name);
    take_horizon(80);
    return std::make_unique<LatchDoor>(horizon);
  }
  if (name == "pend-swing") {
    reject_unknown_keys(overrides, {"horizon"}, name);
    take_horizon(100);
    return std::make_unique<PendSwing>(horizon);
  }
  throw ConfigError("unknown environment '" + name + "' (known: point-reach, latch-door, pend-swing)");
}

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names{"point-reach", "latch-door", "pend-swing"};
  return names;
}

Trajectory rollout(const Environment& env, const PolicyFn& policy, std::uint64_t seed,
                   std::optional<int> horizon, const std::optional<State>& init) {
  const int steps = horizon.value_or(env.spec().horizon);
  if (steps < 1 || steps > env.spec().horizon)
    throw InputError("rollout: horizon must be in [1, " + std::to_string(env.spec().horizon) + "]");
  Trajectory traj;
  traj.env_name = env.name();
  traj.seed = seed;
  traj.states.reserve(steps + 1);
  traj.actions.reserve(steps);
  State s = init ? *init : env.reset(seed);
  env.check_state(s);
  Rng rng(derive_seed(seed, kPolicyStream));
  traj.states.push_back(s);
  for (int t = 0; t < steps; ++t) {
    Action a = policy(s, static_cast<std::size_t>(t), rng);
    if (a.size() != env.spec().action_dim || !a.allFinite())
      throw NumericalError("rollout on " + env.name() + ": policy emitted a non-finite or mis-sized action at step " +
                           std::to_string(t) + " (seed " + std::to_string(seed) + ")");
    s = env.step(s, a);
    traj.actions.push_back(env.clip(a));
    traj.states.push_back(s);
  }
  traj.success = env.is_success(traj);
  return traj;
}

Trajectory replay_actions(const Environment& env, const State& init, const std::vector<Action>& actions,
                          std::uint64_t seed) {
  if (actions.empty()) throw InputError("replay: empty action sequence");
  if (static_cast<int>(actions.size()) > env.spec().horizon) throw InputError("replay: sequence longer than horizon");
  Trajectory traj;
  traj.env_name = env.name();
  traj.seed = seed;
  env.check_state(init);
  traj.states.push_back(init);
  for (const auto& a : actions) {
    if (a.size() != env.spec().action_dim) throw InputError("replay: action dimension mismatch");
    traj.states.push_back(env.step(traj.states.back(), a));
    traj.actions.push_back(env.clip(a));
  }
  traj.success = env.is_success(traj);
  return traj;
}

std::unique_ptr<ScriptedExpert> make_expert(const Environment& env) {
  if (env.name() == "point-reach") return std::make_unique<PointReachExpert>();
  if (env.name() == "latch-door") return std::make_unique<LatchDoorExpert>();
  if (env.name() == "pend-swing") return std::make_unique<PendSwingExpert>();
  throw ConfigError("no scripted expert for '" + env.name() + "'");
}

PolicyFn expert_policy(const ScriptedExpert& expert, double noise_std, std::uint64_t noise_seed) {
  return [&expert, noise_std, noise_seed](const State& s, std::size_t t, Rng&) {
    Action a = expert.act(s);
    if (noise_std > 0.0) {
      Rng noise(derive_seed(noise_seed, t));
      for (int i = 0; i < a.size(); ++i) a[i] += noise_std * noise.normal();
    }
    return a;
  };
}

}  // namespace daug
