#include "daug/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "daug/errors.hpp"

namespace daug {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const FrameSequence& a, const FrameSequence& b) {
  if (a.cols() == 0 || b.cols() == 0) throw InputError("dtw: empty sequence");
  if (a.rows() != b.rows()) throw InputError("dtw: frame dimension mismatch");
}

// Row-wise band: row i covers columns [lo[i], hi[i]].
struct Window {
  std::vector<Eigen::Index> lo, hi;
};

Window full_window(Eigen::Index n, Eigen::Index m) {
  return Window{std::vector<Eigen::Index>(n, 0), std::vector<Eigen::Index>(n, m - 1)};
}

// DP restricted to the band, with path recovery.
DtwResult windowed_dtw(const FrameSequence& a, const FrameSequence& b, const Window& w) {
  const Eigen::Index n = a.cols(), m = b.cols();
  std::vector<std::size_t> offset(n + 1, 0);
  for (Eigen::Index i = 0; i < n; ++i) offset[i + 1] = offset[i] + static_cast<std::size_t>(w.hi[i] - w.lo[i] + 1);
  std::vector<double> cost(offset[n], kInf);
  auto at = [&](Eigen::Index i, Eigen::Index j) -> double {
    if (i < 0 || j < 0 || j < w.lo[i] || j > w.hi[i]) return kInf;
    return cost[offset[i] + static_cast<std::size_t>(j - w.lo[i])];
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = w.lo[i]; j <= w.hi[i]; ++j) {
      const double d = frame_distance(a, i, b, j);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = std::min({at(i - 1, j), at(i, j - 1), at(i - 1, j - 1)});
      }
      cost[offset[i] + static_cast<std::size_t>(j - w.lo[i])] = d + best;
    }
  }
  DtwResult r;
  r.distance = at(n - 1, m - 1);
  Eigen::Index i = n - 1, j = m - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    const double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());
  return r;
}

FrameSequence halve(const FrameSequence& x) {
  const Eigen::Index half = x.cols() / 2;
  FrameSequence out(x.rows(), half);
  for (Eigen::Index k = 0; k < half; ++k) out.col(k) = 0.5 * (x.col(2 * k) + x.col(2 * k + 1));
  return out;
}

// Projects a coarse path onto the fine grid and widens it by `radius`.
Window expand_window(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& coarse_path, Eigen::Index n,
                     Eigen::Index m, int radius) {
  Window w{std::vector<Eigen::Index>(n, m), std::vector<Eigen::Index>(n, -1)};
  auto mark = [&](Eigen::Index i, Eigen::Index lo, Eigen::Index hi) {
    if (i < 0 || i >= n) return;
    lo = std::max<Eigen::Index>(lo, 0);
    hi = std::min<Eigen::Index>(hi, m - 1);
    if (lo > hi) return;
    w.lo[i] = std::min(w.lo[i], lo);
    w.hi[i] = std::max(w.hi[i], hi);
  };
  for (const auto& [ci, cj] : coarse_path) {
    for (Eigen::Index di = -radius; di <= radius; ++di) {
      const Eigen::Index i = ci + di;
      const Eigen::Index jlo = 2 * (cj - radius), jhi = 2 * (cj + radius) + 1;
      mark(2 * i, jlo, jhi);
      mark(2 * i + 1, jlo, jhi);
    }
  }
  // An odd-length sequence has a trailing fine index no coarse cell maps to.
  // Rows left unmarked inherit their neighbour; then endpoints are pinned
  // and the band is made monotone and connected.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w.hi[i] < 0 && i > 0) {
      w.lo[i] = w.lo[i - 1];
      w.hi[i] = w.hi[i - 1];
    }
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (w.hi[i] < 0 && i + 1 < n) {
      w.lo[i] = w.lo[i + 1];
      w.hi[i] = w.hi[i + 1];
    }
  }
  w.lo[0] = 0;
  w.hi[n - 1] = m - 1;
  for (Eigen::Index i = 1; i < n; ++i) w.hi[i] = std::max(w.hi[i], w.hi[i - 1]);
  for (Eigen::Index i = n - 2; i >= 0; --i) w.lo[i] = std::min(w.lo[i], w.lo[i + 1]);
  for (Eigen::Index i = 1; i < n; ++i) w.lo[i] = std::min(w.lo[i], w.hi[i - 1] + 1);
  return w;
}

DtwResult fastdtw_rec(const FrameSequence& a, const FrameSequence& b, int radius) {
  const Eigen::Index min_size = radius + 2;
  if (a.cols() < min_size || b.cols() < min_size) return windowed_dtw(a, b, full_window(a.cols(), b.cols()));
  const DtwResult coarse = fastdtw_rec(halve(a), halve(b), radius);
  return windowed_dtw(a, b, expand_window(coarse.path, a.cols(), b.cols(), radius));
}

std::vector<FrameSequence> normalized_frames(const TrajectoryDataset& ds) {
  std::vector<FrameSequence> out;
  out.reserve(ds.size());
  for (const auto& t : ds.trajectories) out.push_back(z_normalize(t));
  for (const auto& f : out)
    if (f.rows() != out.front().rows()) throw InputError("mean_pairwise_dtw: frame dimension mismatch");
  return out;
}

double ordered_mean(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

double frame_distance(const FrameSequence& a, Eigen::Index i, const FrameSequence& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < a.rows(); ++d) {
    const double diff = a(d, i) - b(d, j);
    s += diff * diff;
  }
  return std::sqrt(s);
}

double dtw_exact(const FrameSequence& a, const FrameSequence& b) {
  check_pair(a, b);
  const Eigen::Index n = a.cols(), m = b.cols();
  Mat cost = Mat::Constant(n + 1, m + 1, kInf);
  cost(0, 0) = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i)
    for (Eigen::Index j = 1; j <= m; ++j)
      cost(i, j) = frame_distance(a, i - 1, b, j - 1) + std::min({cost(i - 1, j), cost(i, j - 1), cost(i - 1, j - 1)});
  return cost(n, m);
}

DtwResult fastdtw_with_path(const FrameSequence& a, const FrameSequence& b, const DtwConfig& cfg) {
  check_pair(a, b);
  if (cfg.radius < 0) throw ConfigError("fastdtw: radius must be >= 0");
  return fastdtw_rec(a, b, cfg.radius);
}

double fastdtw_approx(const FrameSequence& a, const FrameSequence& b, const DtwConfig& cfg) {
  return fastdtw_with_path(a, b, cfg).distance;
}

std::vector<double> pairwise_dtw_serial(const std::vector<FrameSequence>& z, const DtwConfig& cfg) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j) out.push_back(fastdtw_approx(z[i], z[j], cfg));
  return out;
}

std::vector<double> pairwise_dtw(const std::vector<FrameSequence>& z, const DtwConfig& cfg) {
  const long long n = static_cast<long long>(z.size());
  std::vector<std::pair<long long, long long>> pairs;
  for (long long i = 0; i + 1 < n; ++i)
    for (long long j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> out(pairs.size());
  const long long count = static_cast<long long>(pairs.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long long k = 0; k < count; ++k) out[k] = fastdtw_approx(z[pairs[k].first], z[pairs[k].second], cfg);
  return out;
}

double mean_pairwise_dtw(const TrajectoryDataset& ds, const DtwConfig& cfg) {
  if (ds.size() < 2) throw InputError("mean_pairwise_dtw: need at least 2 trajectories");
  return ordered_mean(pairwise_dtw(normalized_frames(ds), cfg));
}

double mean_pairwise_dtw_serial(const TrajectoryDataset& ds, const DtwConfig& cfg) {
  if (ds.size() < 2) throw InputError("mean_pairwise_dtw: need at least 2 trajectories");
  return ordered_mean(pairwise_dtw_serial(normalized_frames(ds), cfg));
}

DiversityRatio diversity_ratio(const TrajectoryDataset& generated, const TrajectoryDataset& experts,
                               const DtwConfig& cfg) {
  DiversityRatio r;
  r.generated = mean_pairwise_dtw(generated, cfg);
  r.experts = mean_pairwise_dtw(experts, cfg);
  if (r.experts > 0.0) r.ratio = r.generated / r.experts;
  return r;
}

DiversityReport diversity_report(const std::vector<std::pair<std::string, TrajectoryDataset>>& named,
                                 const DtwConfig& cfg) {
  if (named.empty()) throw InputError("diversity_report: no datasets");
  DiversityReport rep;
  double expert_score = 0.0;
  for (std::size_t k = 0; k < named.size(); ++k) {
    DiversityEntry e;
    e.dataset = named[k].first;
    e.n = named[k].second.size();
    e.mean_pairwise_dtw = mean_pairwise_dtw(named[k].second, cfg);
    if (k == 0) {
      expert_score = e.mean_pairwise_dtw;
      rep.expert_degenerate = !(expert_score > 0.0);
    }
    if (!rep.expert_degenerate) e.ratio_vs_experts = e.mean_pairwise_dtw / expert_score;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

void write_diversity_csv(std::ostream& out, const DiversityReport& report) {
  out << "dataset,n,mean_pairwise_dtw,ratio_vs_experts\n";
  char buf[64];
  for (const auto& e : report.entries) {
    out << e.dataset << ',' << e.n << ',';
    std::snprintf(buf, sizeof(buf), "%.10g", e.mean_pairwise_dtw);
    out << buf << ',';
    if (e.ratio_vs_experts) {
      std::snprintf(buf, sizeof(buf), "%.10g", *e.ratio_vs_experts);
      out << buf;
    } else {
      out << "NA";
    }
    out << '\n';
  }
}

}  // namespace daug
