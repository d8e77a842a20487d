#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "daug/env.hpp"
#include "daug/nets.hpp"

namespace daug {

struct TrajectoryDataset {
  std::string env_name;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<Trajectory> trajectories;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }

  // Throws InputError if any trajectory disagrees with the header fields.
  void validate() const;
  bool operator==(const TrajectoryDataset& o) const;
};

TrajectoryDataset make_dataset(const Environment& env, std::vector<Trajectory> trajectories = {});

// TRAJDS v1, line oriented:
//   TRAJDS v1 env=<name> state_dim=<ds> action_dim=<da>
//   TRAJ n=<T> success=<0|1> seed=<u64>
//   T+1 state lines, then T action lines; values in %.17g
void write_dataset(std::ostream& out, const TrajectoryDataset& ds);
TrajectoryDataset read_dataset(std::istream& in, const std::string& origin = "<dataset>");
void save_dataset(const TrajectoryDataset& ds, const std::string& path);
TrajectoryDataset load_dataset(const std::string& path);

// Frames are the columns: frame t = state_t || action_t, t in [0, T).
using FrameSequence = Mat;

FrameSequence trajectory_frames(const Trajectory& traj);

// Per-dimension z-score over time with population std. Constant dimensions
// are shifted to zero and left unscaled.
FrameSequence z_normalize(const FrameSequence& frames);
FrameSequence z_normalize(const Trajectory& traj);

}  // namespace daug
