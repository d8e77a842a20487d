#include "daug/augment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "daug/errors.hpp"
#include "text_io.hpp"

namespace daug {

bool DistortedSequence::operator==(const DistortedSequence& o) const {
  if (source_expert_index != o.source_expert_index || sigma != o.sigma || noise_seed != o.noise_seed) return false;
  if (init_state.size() != o.init_state.size() || init_state != o.init_state) return false;
  if (actions.size() != o.actions.size()) return false;
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (actions[i].size() != o.actions[i].size() || actions[i] != o.actions[i]) return false;
  return true;
}

double uniform_half_width(double sigma) { return sigma * std::sqrt(3.0); }

DistortedSequence distort_with_seed(const Trajectory& expert, double sigma, std::uint64_t noise_seed,
                                    std::size_t source_index) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("distort: sigma must be finite and >= 0");
  if (expert.states.empty()) throw InputError("distort: empty expert trajectory");
  DistortedSequence q;
  q.source_expert_index = source_index;
  q.sigma = sigma;
  q.noise_seed = noise_seed;
  q.init_state = expert.states.front();
  q.actions.reserve(expert.actions.size());
  const double b = uniform_half_width(sigma);
  Rng noise(noise_seed);
  for (const auto& a : expert.actions) {
    Action d = a;
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] += noise.uniform(-b, b);
    q.actions.push_back(std::move(d));
  }
  return q;
}

DistortedSequence distort(const Trajectory& expert, double sigma, Rng& rng, std::size_t source_index) {
  return distort_with_seed(expert, sigma, rng.next_u64(), source_index);
}

AugmentPool build_pool(const TrajectoryDataset& experts, int per_expert, double sigma, Rng& rng) {
  if (experts.empty()) throw InputError("build_pool: empty expert set");
  if (per_expert < 1) throw InputError("build_pool: N must be >= 1");
  AugmentPool pool;
  pool.env_name = experts.env_name;
  pool.state_dim = experts.state_dim;
  pool.action_dim = experts.action_dim;
  pool.per_expert = static_cast<std::size_t>(per_expert);
  pool.sequences.reserve(experts.size() * pool.per_expert);
  for (std::size_t e = 0; e < experts.size(); ++e)
    for (int k = 0; k < per_expert; ++k) pool.sequences.push_back(distort(experts.trajectories[e], sigma, rng, e));
  return pool;
}

Trajectory replay(const DistortedSequence& q, const Environment& env) {
  if (q.init_state.size() != env.spec().state_dim) throw InputError("replay: state dimension mismatch");
  for (const auto& a : q.actions)
    if (a.size() != env.spec().action_dim) throw InputError("replay: action dimension mismatch");
  return replay_actions(env, q.init_state, q.actions, q.noise_seed);
}

namespace {

struct Draw {
  std::size_t expert;
  std::uint64_t noise_seed;
};

std::vector<Draw> draw_trials(const TrajectoryDataset& experts, int trials, Rng& rng) {
  if (experts.empty()) throw InputError("random_aug_success_rate: empty expert set");
  if (trials < 1) throw InputError("random_aug_success_rate: trials must be >= 1");
  std::vector<Draw> draws(static_cast<std::size_t>(trials));
  for (auto& d : draws) {
    d.expert = rng.index(experts.size());
    d.noise_seed = rng.next_u64();
  }
  return draws;
}

bool trial_success(const TrajectoryDataset& experts, double sigma, const Draw& d, const Environment& env) {
  return replay(distort_with_seed(experts.trajectories[d.expert], sigma, d.noise_seed, d.expert), env).success;
}

}  // namespace

double random_aug_success_rate(const TrajectoryDataset& experts, double sigma, int trials, const Environment& env,
                               Rng& rng) {
  const auto draws = draw_trials(experts, trials, rng);
  const long long n = static_cast<long long>(draws.size());
  long long ok = 0;
#pragma omp parallel for reduction(+ : ok) schedule(static)
  for (long long k = 0; k < n; ++k) ok += trial_success(experts, sigma, draws[k], env) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(n);
}

double random_aug_success_rate_serial(const TrajectoryDataset& experts, double sigma, int trials,
                                      const Environment& env, Rng& rng) {
  const auto draws = draw_trials(experts, trials, rng);
  long long ok = 0;
  for (const auto& d : draws) ok += trial_success(experts, sigma, d, env) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(draws.size());
}

CalibrationResult calibrate_sigma(const TrajectoryDataset& experts, const Environment& env, std::uint64_t seed,
                                  int replays, double target, double band_lo, double band_hi, double tolerance) {
  if (!(band_lo <= target && target <= band_hi)) throw InputError("calibrate_sigma: target outside band");
  auto rate_at = [&](double sigma) {
    Rng rng(seed);  // same draws at every sigma
    return random_aug_success_rate(experts, sigma, replays, env, rng);
  };
  CalibrationResult best;
  double best_gap = 1e300;
  double lo = std::log(1e-6), hi = std::log(4.0);
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double sigma = std::exp(mid);
    const double rate = rate_at(sigma);
    ++best.evaluations;
    const bool in_band = rate >= band_lo && rate <= band_hi;
    const double gap = std::abs(rate - target) + (in_band ? 0.0 : 1.0);
    if (gap < best_gap) {
      best_gap = gap;
      best.sigma = sigma;
      best.rate = rate;
    }
    if (in_band && std::abs(rate - target) <= tolerance) break;
    if (rate > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best;
}

void write_pool(std::ostream& out, const AugmentPool& pool) {
  out << "TRAJDS v1 env=" << pool.env_name << " state_dim=" << pool.state_dim << " action_dim=" << pool.action_dim
      << " kind=pool\n";
  for (const auto& q : pool.sequences) {
    if (q.init_state.size() != pool.state_dim) throw InputError("write_pool: state dimension mismatch");
    char sigma[40];
    std::snprintf(sigma, sizeof(sigma), "%.17g", q.sigma);
    out << "TRAJ n=" << q.length() << " success=0 seed=" << q.noise_seed << " source=" << q.source_expert_index
        << " sigma=" << sigma << '\n';
    text_io::put_vector(out, q.init_state);
    for (const auto& a : q.actions) {
      if (a.size() != pool.action_dim) throw InputError("write_pool: action dimension mismatch");
      text_io::put_vector(out, a);
    }
  }
}

AugmentPool read_pool(std::istream& in, const std::string& origin) {
  text_io::LineReader r(in, origin);
  std::string line;
  if (!r.next(line)) r.fail("missing TRAJDS header");
  if (line.rfind("TRAJDS v1", 0) != 0) r.fail("expected 'TRAJDS v1' header");
  AugmentPool pool;
  bool is_pool = false;
  for (const auto& [k, v] : text_io::split_fields(line, 2)) {
    if (k == "env") {
      pool.env_name = v;
    } else if (k == "state_dim") {
      pool.state_dim = text_io::parse_int<int>(r, k, v);
    } else if (k == "action_dim") {
      pool.action_dim = text_io::parse_int<int>(r, k, v);
    } else if (k == "kind") {
      if (v != "pool") r.fail("unsupported kind '" + v + "'");
      is_pool = true;
    } else {
      r.fail("unknown header field '" + k + "'");
    }
  }
  if (!is_pool) r.fail("not a pool file (missing kind=pool)");
  if (pool.env_name.empty() || pool.state_dim < 1 || pool.action_dim < 1) r.fail("incomplete header");
  std::map<std::size_t, std::size_t> per_source;
  while (r.next(line)) {
    if (line.empty()) continue;
    if (line.rfind("TRAJ ", 0) != 0) r.fail("expected 'TRAJ' block");
    DistortedSequence q;
    std::size_t n = 0;
    std::set<std::string> seen;
    for (const auto& [k, v] : text_io::split_fields(line, 1)) {
      if (k == "n") {
        n = text_io::parse_int<std::size_t>(r, k, v);
      } else if (k == "success") {
        if (v != "0" && v != "1") r.fail("success must be 0 or 1");
      } else if (k == "seed") {
        q.noise_seed = text_io::parse_int<std::uint64_t>(r, k, v);
      } else if (k == "source") {
        q.source_expert_index = text_io::parse_int<std::size_t>(r, k, v);
      } else if (k == "sigma") {
        char* end = nullptr;
        q.sigma = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0' || !(q.sigma >= 0.0)) r.fail("bad sigma '" + v + "'");
      } else {
        r.fail("unknown TRAJ field '" + k + "'");
      }
      if (!seen.insert(k).second) r.fail("duplicate TRAJ field '" + k + "'");
    }
    if (seen.size() != 5) r.fail("pool TRAJ needs n, success, seed, source and sigma");
    q.init_state = r.numbers(r.require("initial state line"), pool.state_dim);
    for (std::size_t i = 0; i < n; ++i) q.actions.push_back(r.numbers(r.require("action line"), pool.action_dim));
    ++per_source[q.source_expert_index];
    pool.sequences.push_back(std::move(q));
  }
  pool.per_expert = per_source.empty() ? 0 : per_source.begin()->second;
  return pool;
}

void save_pool(const AugmentPool& pool, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pool: " + path);
  write_pool(out, pool);
  out.flush();
  if (!out) throw std::runtime_error("I/O error writing pool: " + path);
}

AugmentPool load_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pool: " + path);
  return read_pool(in, path);
}

}  // namespace daug
