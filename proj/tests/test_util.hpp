#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "daug/data.hpp"
#include "daug/env.hpp"
#include "daug/nets.hpp"

namespace daug::testutil {

inline TrajectoryDataset expert_set(const Environment& env, int n, std::uint64_t base_seed = 1000) {
  auto expert = make_expert(env);
  TrajectoryDataset ds = make_dataset(env);
  for (int i = 0; i < n; ++i) ds.trajectories.push_back(rollout(env, expert_policy(*expert), base_seed + i));
  return ds;
}

inline Vec random_vec(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.uniform(-1.0, 1.0);
  return v;
}

inline Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) m.col(j) = random_vec(rng, rows, scale);
  return m;
}

// Relative error with a floor on the denominator so that coordinates whose
// true gradient is ~0 are compared absolutely.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Max relative error between `analytic` and central differences of `f` at `x`.
inline double max_fd_error(const std::function<double(const Vec&)>& f, const Vec& x, const Vec& analytic,
                           double h = 1e-5) {
  double worst = 0.0;
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double up = f(xp);
    xp[i] = x[i] - h;
    const double down = f(xp);
    xp[i] = x[i];
    worst = std::max(worst, rel_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

}  // namespace daug::testutil
