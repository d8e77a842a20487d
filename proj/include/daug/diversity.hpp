#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "daug/data.hpp"

namespace daug {

struct DtwConfig {
  int radius = 1;  // FastDTW refinement radius, >= 0
};

// Euclidean distance between column `i` of a and column `j` of b.
double frame_distance(const FrameSequence& a, Eigen::Index i, const FrameSequence& b, Eigen::Index j);

// Full O(|a||b|) dynamic program, step pattern {(-1,0), (0,-1), (-1,-1)}.
double dtw_exact(const FrameSequence& a, const FrameSequence& b);

// Multi-resolution approximation: halve both sequences, solve recursively,
// project the coarse path to the finer grid, widen it by `radius` cells and
// run the DP inside that window only. Never below dtw_exact; equal to it
// when radius >= max(|a|, |b|).
double fastdtw_approx(const FrameSequence& a, const FrameSequence& b, const DtwConfig& cfg = {});

// Result plus optimal warping path as (i, j) pairs from (0, 0) to the end.
struct DtwResult {
  double distance = 0.0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> path;
};
DtwResult fastdtw_with_path(const FrameSequence& a, const FrameSequence& b, const DtwConfig& cfg = {});

// Mean over all unordered pairs i < j of fastdtw(z(τ_i), z(τ_j)).
// The OpenMP kernel and the serial reference produce bit-identical results:
// pair scores are summed in fixed (i, j) order after the parallel phase.
double mean_pairwise_dtw(const TrajectoryDataset& ds, const DtwConfig& cfg = {});
double mean_pairwise_dtw_serial(const TrajectoryDataset& ds, const DtwConfig& cfg = {});

// All pair scores in (i, j) lexicographic order.
std::vector<double> pairwise_dtw(const std::vector<FrameSequence>& normalized, const DtwConfig& cfg);
std::vector<double> pairwise_dtw_serial(const std::vector<FrameSequence>& normalized, const DtwConfig& cfg);

struct DiversityRatio {
  double generated = 0.0;
  double experts = 0.0;
  std::optional<double> ratio;  // empty when the expert score is zero
  bool degenerate() const { return !ratio.has_value(); }
};

DiversityRatio diversity_ratio(const TrajectoryDataset& generated, const TrajectoryDataset& experts,
                               const DtwConfig& cfg = {});

struct DiversityEntry {
  std::string dataset;
  std::size_t n = 0;
  double mean_pairwise_dtw = 0.0;
  std::optional<double> ratio_vs_experts;
};

struct DiversityReport {
  std::vector<DiversityEntry> entries;
  bool expert_degenerate = false;
};

// First dataset in `named` is the expert reference.
DiversityReport diversity_report(const std::vector<std::pair<std::string, TrajectoryDataset>>& named,
                                 const DtwConfig& cfg = {});

// `dataset,n,mean_pairwise_dtw,ratio_vs_experts`; absent ratios print as "NA".
void write_diversity_csv(std::ostream& out, const DiversityReport& report);

}  // namespace daug
