#include "daug/nets.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "daug/errors.hpp"

namespace daug {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

std::string join_sizes(const std::vector<int>& sizes) {
  std::string s;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(sizes[i]);
  }
  return s;
}

}  // namespace

DenseNet::DenseNet(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw InputError("DenseNet: need at least input and output sizes");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw InputError("DenseNet: layer sizes must be >= 1");
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l] + 1) * sizes_[l + 1];
  }
  params_ = Vec::Zero(total);
}

void DenseNet::init_random(Rng& rng, double output_gain) {
  for (int l = 0; l < num_layers(); ++l) {
    const double limit = std::sqrt(3.0 / sizes_[l]) * (l + 1 == num_layers() ? output_gain : 1.0);
    auto w = weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
    bias(l).setZero();
  }
}

void DenseNet::set_params(const Vec& p) {
  if (p.size() != params_.size()) throw InputError("DenseNet::set_params: size mismatch");
  params_ = p;
}

Eigen::Map<DenseNet::RowMajor> DenseNet::weight(int layer) {
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}
Eigen::Map<const DenseNet::RowMajor> DenseNet::weight(int layer) const {
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}
Eigen::Map<Vec> DenseNet::bias(int layer) { return {params_.data() + bias_offset(layer), sizes_[layer + 1]}; }
Eigen::Map<const Vec> DenseNet::bias(int layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

void DenseNet::check_input(Eigen::Index n) const {
  if (sizes_.empty()) throw InputError("DenseNet: uninitialized net");
  if (n != input_size())
    throw InputError("DenseNet: input has " + std::to_string(n) + " entries, expected " +
                     std::to_string(input_size()));
}

Vec DenseNet::forward(const Vec& x) const {
  check_input(x.size());
  Vec h = x;
  for (int l = 0; l < num_layers(); ++l) {
    Vec z = weight(l) * h + bias(l);
    h = (l + 1 < num_layers()) ? Vec(z.array().tanh()) : z;
  }
  return h;
}

Mat DenseNet::forward_batch(const Mat& x, Cache* cache) const {
  check_input(x.rows());
  Mat h = x;
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  for (int l = 0; l < num_layers(); ++l) {
    Mat z = weight(l) * h;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) z = z.array().tanh().matrix();
    h = std::move(z);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

void DenseNet::backward_batch(const Cache& cache, const Mat& upstream, GradientVector& grad, Mat* input_grad) const {
  if (grad.size() != params_.size()) throw InputError("DenseNet::backward_batch: gradient size mismatch");
  if (cache.activations.size() != sizes_.size()) throw InputError("DenseNet::backward_batch: stale cache");
  if (upstream.rows() != output_size() || upstream.cols() != cache.activations.back().cols())
    throw InputError("DenseNet::backward_batch: upstream shape mismatch");
  Mat g = upstream;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Mat& in = cache.activations[l];
    Eigen::Map<RowMajor> gw(grad.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    Eigen::Map<Vec> gb(grad.data() + bias_offset(l), sizes_[l + 1]);
    gw.noalias() += g * in.transpose();
    gb += g.rowwise().sum();
    if (l > 0 || input_grad) {
      Mat prev = weight(l).transpose() * g;
      if (l > 0) prev.array() *= (1.0 - in.array().square());
      if (l == 0) {
        *input_grad = std::move(prev);
      } else {
        g = std::move(prev);
      }
    }
  }
}

GradientVector DenseNet::grad(const Vec& x, const Vec& upstream) const {
  check_input(x.size());
  if (upstream.size() != output_size()) throw InputError("DenseNet::grad: upstream size mismatch");
  Cache cache;
  forward_batch(x, &cache);
  GradientVector g = GradientVector::Zero(params_.size());
  backward_batch(cache, upstream, g);
  return g;
}

GaussianPolicy::GaussianPolicy(std::vector<int> layer_sizes, double init_log_std)
    : mean_net_(std::move(layer_sizes)) {
  log_std_ = Vec::Constant(mean_net_.output_size(), init_log_std);
}

Vec GaussianPolicy::mean(const Vec& obs) const { return mean_net_.forward(obs); }

double log_prob_diag_gaussian(const Vec& x, const Vec& mean, const Vec& log_std) {
  if (x.size() != mean.size() || x.size() != log_std.size()) throw InputError("log_prob: dimension mismatch");
  double lp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

std::pair<Action, double> GaussianPolicy::sample(const Vec& obs, Rng& rng) const {
  const Vec mu = mean(obs);
  const Vec ls = log_std();
  Action a(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) a[i] = mu[i] + std::exp(ls[i]) * rng.normal();
  return {a, log_prob_diag_gaussian(a, mu, ls)};
}

double GaussianPolicy::log_prob(const Vec& obs, const Action& action) const {
  if (action.size() != action_size()) throw InputError("GaussianPolicy::log_prob: action dimension mismatch");
  return log_prob_diag_gaussian(action, mean(obs), log_std());
}

double GaussianPolicy::entropy() const {
  const Vec ls = log_std();
  return ls.sum() + static_cast<double>(ls.size()) * (kHalfLog2Pi + 0.5);
}

Vec GaussianPolicy::flat_params() const {
  Vec p(param_count());
  p << mean_net_.params(), log_std_;
  return p;
}

void GaussianPolicy::set_flat_params(const Vec& p) {
  if (p.size() != param_count()) throw InputError("GaussianPolicy::set_flat_params: size mismatch");
  mean_net_.set_params(p.head(mean_net_.param_count()));
  log_std_ = p.tail(log_std_.size());
}

std::uint64_t GaussianPolicy::checksum() const {
  const Vec p = flat_params();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(p.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(p.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

Discriminator::Discriminator(int state_dim, int action_dim, std::vector<int> hidden)
    : state_dim_(state_dim), action_dim_(action_dim) {
  std::vector<int> sizes{state_dim + action_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  net_ = DenseNet(std::move(sizes));
}

double Discriminator::logit(const State& s, const Action& a) const {
  if (s.size() != state_dim_ || a.size() != action_dim_) throw InputError("Discriminator: dimension mismatch");
  return net_.forward(concat(s, a))[0];
}

double Discriminator::prob(const State& s, const Action& a) const { return sigmoid(clamp_logit(logit(s, a))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

void write_checkpoint(std::ostream& out, const DenseNet& net, const Vec& extra) {
  out << "NETCKPT v1 sizes=" << join_sizes(net.sizes());
  if (extra.size() > 0) out << " extra=" << extra.size();
  out << '\n';
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  };
  for (Eigen::Index i = 0; i < net.param_count(); ++i) put(net.params()[i]);
  for (Eigen::Index i = 0; i < extra.size(); ++i) put(extra[i]);
}

std::pair<DenseNet, Vec> read_checkpoint(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin, 1, "missing NETCKPT header");
  std::istringstream hs(line);
  std::string magic, version, tok;
  hs >> magic >> version;
  if (magic != "NETCKPT" || version != "v1") throw ParseError(origin, 1, "expected 'NETCKPT v1'");
  std::vector<int> sizes;
  long long extra = 0;
  while (hs >> tok) {
    if (tok.rfind("sizes=", 0) == 0) {
      std::istringstream ls(tok.substr(6));
      std::string item;
      while (std::getline(ls, item, ',')) {
        try {
          sizes.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw ParseError(origin, 1, "bad layer size '" + item + "'");
        }
      }
    } else if (tok.rfind("extra=", 0) == 0) {
      try {
        extra = std::stoll(tok.substr(6));
      } catch (const std::exception&) {
        throw ParseError(origin, 1, "bad extra count");
      }
      if (extra < 0) throw ParseError(origin, 1, "bad extra count");
    } else {
      throw ParseError(origin, 1, "unexpected header token '" + tok + "'");
    }
  }
  DenseNet net;
  try {
    net = DenseNet(sizes);
  } catch (const InputError& e) {
    throw ParseError(origin, 1, e.what());
  }
  Vec values(net.param_count() + extra);
  std::size_t lineno = 1;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    ++lineno;
    if (!std::getline(in, line)) throw ParseError(origin, lineno, "unexpected end of file");
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0' || !std::isfinite(v))
      throw ParseError(origin, lineno, "bad parameter value '" + line + "'");
    values[i] = v;
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty()) throw ParseError(origin, lineno, "trailing content");
  }
  net.set_params(values.head(net.param_count()));
  return {std::move(net), values.tail(extra)};
}

void save_checkpoint(const std::string& path, const DenseNet& net, const Vec& extra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  write_checkpoint(out, net, extra);
  if (!out) throw std::runtime_error("I/O error writing checkpoint: " + path);
}

std::pair<DenseNet, Vec> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return read_checkpoint(in, path);
}

void save_policy(const std::string& path, const GaussianPolicy& policy) {
  save_checkpoint(path, policy.mean_net(), policy.raw_log_std());
}

GaussianPolicy load_policy(const std::string& path) {
  auto [net, extra] = load_checkpoint(path);
  if (extra.size() != net.output_size())
    throw ParseError(path, 1, "policy checkpoint needs extra=" + std::to_string(net.output_size()));
  GaussianPolicy policy(net.sizes());
  policy.mean_net() = std::move(net);
  policy.raw_log_std() = extra;
  return policy;
}

Adam::Adam(Eigen::Index n, double lr, double beta1, double beta2, double eps)
    : m_(Vec::Zero(n)), v_(Vec::Zero(n)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Vec& params, const GradientVector& grad) {
  if (grad.size() != m_.size() || params.size() != m_.size()) throw InputError("Adam: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace daug
