#include "daug/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "daug/errors.hpp"
#include "text_io.hpp"

namespace daug {

using text_io::LineReader;
using text_io::parse_int;
using text_io::put_vector;
using text_io::split_fields;

void TrajectoryDataset::validate() const {
  if (state_dim < 1 || action_dim < 1) throw InputError("dataset: dims must be >= 1");
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const auto& t = trajectories[k];
    const std::string where = "dataset trajectory " + std::to_string(k) + ": ";
    if (t.env_name != env_name) throw InputError(where + "env '" + t.env_name + "' != '" + env_name + "'");
    if (t.states.size() != t.actions.size() + 1) throw InputError(where + "needs states = actions + 1");
    for (const auto& s : t.states)
      if (s.size() != state_dim || !s.allFinite()) throw InputError(where + "bad state");
    for (const auto& a : t.actions)
      if (a.size() != action_dim || !a.allFinite()) throw InputError(where + "bad action");
  }
}

bool TrajectoryDataset::operator==(const TrajectoryDataset& o) const {
  return env_name == o.env_name && state_dim == o.state_dim && action_dim == o.action_dim &&
         trajectories == o.trajectories;
}

TrajectoryDataset make_dataset(const Environment& env, std::vector<Trajectory> trajectories) {
  TrajectoryDataset ds{env.name(), env.spec().state_dim, env.spec().action_dim, std::move(trajectories)};
  ds.validate();
  return ds;
}

void write_dataset(std::ostream& out, const TrajectoryDataset& ds) {
  ds.validate();
  out << "TRAJDS v1 env=" << ds.env_name << " state_dim=" << ds.state_dim << " action_dim=" << ds.action_dim
      << '\n';
  for (const auto& t : ds.trajectories) {
    out << "TRAJ n=" << t.length() << " success=" << (t.success ? 1 : 0) << " seed=" << t.seed << '\n';
    for (const auto& s : t.states) put_vector(out, s);
    for (const auto& a : t.actions) put_vector(out, a);
  }
}

TrajectoryDataset read_dataset(std::istream& in, const std::string& origin) {
  LineReader r(in, origin);
  std::string line;
  if (!r.next(line)) r.fail("missing TRAJDS header");
  if (line.rfind("TRAJDS v1", 0) != 0) r.fail("expected 'TRAJDS v1' header");
  TrajectoryDataset ds;
  bool have_env = false, have_ds = false, have_da = false;
  for (const auto& [k, v] : split_fields(line, 2)) {
    if (k == "env") {
      ds.env_name = v;
      have_env = !v.empty();
    } else if (k == "state_dim") {
      ds.state_dim = parse_int<int>(r, k, v);
      have_ds = true;
    } else if (k == "action_dim") {
      ds.action_dim = parse_int<int>(r, k, v);
      have_da = true;
    } else {
      r.fail("unknown header field '" + k + "'");
    }
  }
  if (!have_env || !have_ds || !have_da) r.fail("header needs env, state_dim and action_dim");
  if (ds.state_dim < 1 || ds.action_dim < 1) r.fail("dims must be >= 1");

  while (r.next(line)) {
    if (line.empty()) continue;
    if (line.rfind("TRAJ ", 0) != 0) r.fail("expected 'TRAJ' block");
    Trajectory t;
    t.env_name = ds.env_name;
    std::size_t n = 0;
    bool have_n = false, have_success = false, have_seed = false;
    for (const auto& [k, v] : split_fields(line, 1)) {
      if (k == "n") {
        n = parse_int<std::size_t>(r, k, v);
        have_n = true;
      } else if (k == "success") {
        if (v != "0" && v != "1") r.fail("success must be 0 or 1");
        t.success = v == "1";
        have_success = true;
      } else if (k == "seed") {
        t.seed = parse_int<std::uint64_t>(r, k, v);
        have_seed = true;
      } else {
        r.fail("unknown TRAJ field '" + k + "'");
      }
    }
    if (!have_n || !have_success || !have_seed) r.fail("TRAJ needs n, success and seed");
    for (std::size_t i = 0; i <= n; ++i) t.states.push_back(r.numbers(r.require("state line"), ds.state_dim));
    for (std::size_t i = 0; i < n; ++i) t.actions.push_back(r.numbers(r.require("action line"), ds.action_dim));
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

void save_dataset(const TrajectoryDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  write_dataset(out, ds);
  out.flush();
  if (!out) throw std::runtime_error("I/O error writing dataset: " + path);
}

TrajectoryDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  return read_dataset(in, path);
}

FrameSequence trajectory_frames(const Trajectory& traj) {
  if (traj.actions.empty()) throw InputError("trajectory_frames: empty trajectory");
  const Eigen::Index ds = traj.states.front().size(), da = traj.actions.front().size();
  FrameSequence f(ds + da, static_cast<Eigen::Index>(traj.actions.size()));
  for (std::size_t t = 0; t < traj.actions.size(); ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    f.col(c).head(ds) = traj.states[t];
    f.col(c).tail(da) = traj.actions[t];
  }
  return f;
}

FrameSequence z_normalize(const FrameSequence& frames) {
  if (frames.cols() == 0) throw InputError("z_normalize: empty sequence");
  FrameSequence out(frames.rows(), frames.cols());
  const double n = static_cast<double>(frames.cols());
  for (Eigen::Index d = 0; d < frames.rows(); ++d) {
    const auto row = frames.row(d);
    if (row.maxCoeff() == row.minCoeff()) {
      out.row(d).setZero();
      continue;
    }
    const double mean = row.sum() / n;
    const double var = (row.array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    const double scale = sd > 0.0 ? sd : 1.0;
    out.row(d) = (row.array() - mean) / scale;
  }
  return out;
}

FrameSequence z_normalize(const Trajectory& traj) { return z_normalize(trajectory_frames(traj)); }

}  // namespace daug
