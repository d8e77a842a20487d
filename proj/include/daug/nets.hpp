#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "daug/env.hpp"
#include "daug/rng.hpp"

namespace daug {

using Mat = Eigen::MatrixXd;
// Flat gradient aligned with a parameter vector.
using GradientVector = Vec;

// Fully connected net: tanh on hidden layers, identity on the output.
//
// Parameters live in one flat vector, layer by layer; each layer stores its
// weight matrix row-major (row = output unit) followed by its bias. The same
// order is used by checkpoints and gradients.
class DenseNet {
 public:
  DenseNet() = default;
  // Zero-initialized. Needs at least input and output sizes, all >= 1.
  explicit DenseNet(std::vector<int> layer_sizes);

  // Uniform fan-in scaled weights, zero biases. The output layer's weights
  // are additionally scaled by `output_gain`.
  void init_random(Rng& rng, double output_gain = 1.0);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& sizes() const { return sizes_; }
  Eigen::Index param_count() const { return params_.size(); }

  const Vec& params() const { return params_; }
  Vec& params() { return params_; }
  void set_params(const Vec& p);

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMajor> weight(int layer);
  Eigen::Map<const RowMajor> weight(int layer) const;
  Eigen::Map<Vec> bias(int layer);
  Eigen::Map<const Vec> bias(int layer) const;

  Vec forward(const Vec& x) const;

  // Activations of every layer for a batch, columns are samples.
  struct Cache {
    std::vector<Mat> activations;  // [0] = input, back() = output
  };
  Mat forward_batch(const Mat& x, Cache* cache = nullptr) const;

  // Accumulates d(sum_b upstream_b . out_b)/d(params) into `grad`, and
  // optionally writes the gradient w.r.t. the inputs.
  void backward_batch(const Cache& cache, const Mat& upstream, GradientVector& grad,
                      Mat* input_grad = nullptr) const;

  // Exact gradient of upstream . net(x) w.r.t. all parameters.
  GradientVector grad(const Vec& x, const Vec& upstream) const;

 private:
  Eigen::Index weight_offset(int layer) const { return offsets_[layer]; }
  Eigen::Index bias_offset(int layer) const {
    return offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer]) * sizes_[layer + 1];
  }
  void check_input(Eigen::Index n) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Vec params_;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kLogitClamp = 20.0;

// Diagonal Gaussian with state-independent learnable log std.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(std::vector<int> layer_sizes, double init_log_std = 0.0);

  DenseNet& mean_net() { return mean_net_; }
  const DenseNet& mean_net() const { return mean_net_; }
  int obs_size() const { return mean_net_.input_size(); }
  int action_size() const { return mean_net_.output_size(); }

  // Raw parameter; every use goes through log_std() which clamps to [-5, 2].
  Vec& raw_log_std() { return log_std_; }
  const Vec& raw_log_std() const { return log_std_; }
  Vec log_std() const { return log_std_.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax); }

  Vec mean(const Vec& obs) const;
  // action = mean + exp(log_std) * eps; logp is the density of that
  // (unclipped) action.
  std::pair<Action, double> sample(const Vec& obs, Rng& rng) const;
  double log_prob(const Vec& obs, const Action& action) const;
  double entropy() const;

  // Flat view: mean-net params followed by log_std.
  Eigen::Index param_count() const { return mean_net_.param_count() + log_std_.size(); }
  Vec flat_params() const;
  void set_flat_params(const Vec& p);

  // Stable FNV-1a hash of the parameter bytes.
  std::uint64_t checksum() const;

 private:
  DenseNet mean_net_;
  Vec log_std_;
};

double log_prob_diag_gaussian(const Vec& x, const Vec& mean, const Vec& log_std);

// State-action classifier; D(s,a) = sigmoid(clamp(logit, -20, 20)).
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(int state_dim, int action_dim, std::vector<int> hidden);

  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

  double logit(const State& s, const Action& a) const;
  double prob(const State& s, const Action& a) const;

 private:
  DenseNet net_;
  int state_dim_ = 0;
  int action_dim_ = 0;
};

double sigmoid(double x);
inline double clamp_logit(double z) { return z < -kLogitClamp ? -kLogitClamp : (z > kLogitClamp ? kLogitClamp : z); }

Vec concat(const Vec& a, const Vec& b);

// NETCKPT v1: header `NETCKPT v1 sizes=<comma list>[ extra=<k>]`, then one
// parameter per line with 17 significant digits. `extra` trailing values
// (e.g. a policy's log std) follow the net parameters.
void write_checkpoint(std::ostream& out, const DenseNet& net, const Vec& extra = Vec());
std::pair<DenseNet, Vec> read_checkpoint(std::istream& in, const std::string& origin = "<checkpoint>");
void save_checkpoint(const std::string& path, const DenseNet& net, const Vec& extra = Vec());
std::pair<DenseNet, Vec> load_checkpoint(const std::string& path);

void save_policy(const std::string& path, const GaussianPolicy& policy);
GaussianPolicy load_policy(const std::string& path);

// Adam on a flat parameter vector (descent direction).
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Vec& params, const GradientVector& grad);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  Vec m_, v_;
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long long t_ = 0;
};

}  // namespace daug
