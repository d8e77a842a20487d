#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "daug/errors.hpp"
#include "daug/nets.hpp"
#include "test_util.hpp"

using namespace daug;

namespace {

// Parameters 0.3 sin(0.7 i + 0.1), inputs cos(1.3 j); the expected outputs
// below were computed by an independent numpy forward pass.
DenseNet patterned_net(std::vector<int> sizes) {
  DenseNet net(std::move(sizes));
  Vec p(net.param_count());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = 0.3 * std::sin(0.7 * static_cast<double>(i) + 0.1);
  net.set_params(p);
  return net;
}

Vec patterned_input(int n) {
  Vec x(n);
  for (int j = 0; j < n; ++j) x[j] = std::cos(1.3 * j);
  return x;
}

const std::vector<std::vector<int>> kShapes = {{6, 64, 64, 2}, {8, 64, 64, 1}, {3, 64, 64, 1}, {4, 5, 3}, {3, 2}};

}  // namespace

TEST(DenseNet, ParamCount) {
  EXPECT_EQ(DenseNet({6, 64, 64, 2}).param_count(), 7 * 64 + 65 * 64 + 65 * 2);
  EXPECT_EQ(DenseNet({3, 2}).param_count(), 8);
  EXPECT_THROW(DenseNet({3}), InputError);
  EXPECT_THROW(DenseNet({3, 0, 2}), InputError);
}

TEST(DenseNet, ZeroWeightsOutputBias) {
  DenseNet net({4, 8, 3});
  Vec b(3);
  b << 0.5, -1.0, 2.0;
  net.bias(1) = b;
  Rng rng(1);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(net.forward(testutil::random_vec(rng, 4)), b);
}

TEST(DenseNet, IdentityLayer) {
  DenseNet net({3, 3});
  net.weight(0) = DenseNet::RowMajor::Identity(3, 3);
  Vec x(3);
  x << 0.1, -2.0, 7.5;
  EXPECT_EQ(net.forward(x), x);
}

TEST(DenseNet, MatchesIndependentForwardPass) {
  const Vec y = patterned_net({6, 64, 64, 2}).forward(patterned_input(6));
  EXPECT_NEAR(y[0], 1.5535211130529167, 1e-12);
  EXPECT_NEAR(y[1], 1.0437686068891712, 1e-12);
}

TEST(DenseNet, BatchForwardMatchesSingle) {
  Rng rng(2);
  DenseNet net({5, 16, 16, 3});
  net.init_random(rng);
  const Mat X = testutil::random_mat(rng, 5, 7);
  const Mat Y = net.forward_batch(X);
  for (Eigen::Index j = 0; j < X.cols(); ++j) EXPECT_LT((Y.col(j) - net.forward(X.col(j))).norm(), 1e-14);
}

TEST(DenseNet, DimensionMismatchIsInputError) {
  DenseNet net({4, 3});
  EXPECT_THROW(net.forward(Vec::Zero(3)), InputError);
  EXPECT_THROW(net.grad(Vec::Zero(4), Vec::Zero(2)), InputError);
  EXPECT_THROW(net.set_params(Vec::Zero(3)), InputError);
}

TEST(DenseNet, ZeroUpstreamGivesZeroGradient) {
  Rng rng(3);
  DenseNet net({4, 8, 2});
  net.init_random(rng);
  EXPECT_EQ(net.grad(testutil::random_vec(rng, 4), Vec::Zero(2)), Vec::Zero(net.param_count()));
}

TEST(DenseNet, LinearNetGradientIsOuterProduct) {
  Rng rng(4);
  DenseNet net({3, 2});
  net.init_random(rng);
  const Vec x = testutil::random_vec(rng, 3);
  const Vec u = testutil::random_vec(rng, 2);
  const Vec g = net.grad(x, u);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(g[i * 3 + j], u[i] * x[j]);
    EXPECT_DOUBLE_EQ(g[6 + i], u[i]);
  }
}

TEST(DenseNet, GradientMatchesFiniteDifferences) {
  for (const auto& shape : kShapes) {
    for (int point = 0; point < 10; ++point) {
      Rng rng(derive_seed(100, point, shape.front()));
      DenseNet net(shape);
      net.init_random(rng);
      const Vec x = testutil::random_vec(rng, shape.front());
      const Vec u = testutil::random_vec(rng, shape.back());
      const Vec analytic = net.grad(x, u);
      auto f = [&](const Vec& p) {
        DenseNet n2 = net;
        n2.set_params(p);
        return u.dot(n2.forward(x));
      };
      EXPECT_LT(testutil::max_fd_error(f, net.params(), analytic), 1e-4) << "shape starting " << shape.front();
    }
  }
}

TEST(DenseNet, InputGradientMatchesFiniteDifferences) {
  Rng rng(5);
  DenseNet net({8, 64, 64, 1});
  net.init_random(rng);
  const Mat X = testutil::random_mat(rng, 8, 3);
  const Mat U = testutil::random_mat(rng, 1, 3);
  DenseNet::Cache cache;
  net.forward_batch(X, &cache);
  GradientVector g = GradientVector::Zero(net.param_count());
  Mat dx;
  net.backward_batch(cache, U, g, &dx);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    auto f = [&](const Vec& x) { return U(0, j) * net.forward(x)[0]; };
    EXPECT_LT(testutil::max_fd_error(f, X.col(j), dx.col(j)), 1e-4);
  }
}

TEST(DenseNet, BatchBackwardAccumulatesPerSampleGradients) {
  Rng rng(6);
  DenseNet net({4, 8, 2});
  net.init_random(rng);
  const Mat X = testutil::random_mat(rng, 4, 5);
  const Mat U = testutil::random_mat(rng, 2, 5);
  DenseNet::Cache cache;
  net.forward_batch(X, &cache);
  GradientVector g = GradientVector::Ones(net.param_count());
  net.backward_batch(cache, U, g);
  Vec expected = Vec::Ones(net.param_count());
  for (Eigen::Index j = 0; j < 5; ++j) expected += net.grad(X.col(j), U.col(j));
  EXPECT_LT((g - expected).norm(), 1e-12);
}

TEST(GaussianPolicy, LogProbAtModeK2) {
  GaussianPolicy pol({3, 2}, 0.0);
  const Vec obs = Vec::Ones(3);
  EXPECT_NEAR(pol.log_prob(obs, pol.mean(obs)), -std::log(2.0 * M_PI), 1e-12);
  EXPECT_NEAR(pol.log_prob(obs, pol.mean(obs)), -1.8379, 1e-4);
}

TEST(GaussianPolicy, LogProbMatchesClosedForm) {
  Vec m(2), ls(2), a(2);
  m << 0.2, -0.4;
  ls << -0.5, 0.3;
  a << 0.7, 0.1;
  EXPECT_NEAR(log_prob_diag_gaussian(a, m, ls), -2.046263749478479, 1e-12);
}

TEST(GaussianPolicy, LogProbSymmetricAndUnimodal) {
  Rng rng(7);
  GaussianPolicy pol({3, 8, 2}, -0.3);
  pol.mean_net().init_random(rng);
  const Vec obs = testutil::random_vec(rng, 3);
  const Vec mu = pol.mean(obs);
  Vec d(2);
  d << 0.3, -0.2;
  EXPECT_NEAR(pol.log_prob(obs, mu + d), pol.log_prob(obs, mu - d), 1e-12);
  double prev = pol.log_prob(obs, mu);
  for (double s = 0.1; s < 3.0; s += 0.1) {
    Vec a = mu;
    a[0] += s;
    const double lp = pol.log_prob(obs, a);
    EXPECT_LT(lp, prev);
    prev = lp;
  }
}

TEST(GaussianPolicy, SampleLogpConsistentWithLogProb) {
  Rng rng(8);
  GaussianPolicy pol({4, 8, 3}, 0.4);
  pol.mean_net().init_random(rng);
  for (int k = 0; k < 20; ++k) {
    const Vec obs = testutil::random_vec(rng, 4);
    // Far outside any env bounds: density is of the unclipped action.
    const auto [a, lp] = pol.sample(obs, rng);
    EXPECT_NEAR(lp, pol.log_prob(obs, a), 1e-10);
  }
}

TEST(GaussianPolicy, LogStdIsClamped) {
  GaussianPolicy pol({2, 2}, -20.0);
  EXPECT_EQ(pol.log_std(), Vec::Constant(2, kLogStdMin));
  pol.raw_log_std().setConstant(9.0);
  EXPECT_EQ(pol.log_std(), Vec::Constant(2, kLogStdMax));
}

TEST(GaussianPolicy, VanishingNoiseGivesMean) {
  Rng rng(9);
  GaussianPolicy pol({3, 8, 2}, -20.0);
  pol.mean_net().init_random(rng);
  const Vec obs = testutil::random_vec(rng, 3);
  for (int k = 0; k < 100; ++k) EXPECT_LT((pol.sample(obs, rng).first - pol.mean(obs)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(GaussianPolicy, EmpiricalStdMatches) {
  Rng rng(10);
  GaussianPolicy pol({2, 2}, 0.0);
  pol.raw_log_std() << -0.7, 0.4;
  const Vec obs = Vec::Zero(2);
  const int n = 100000;
  Vec sum = Vec::Zero(2), sq = Vec::Zero(2);
  for (int k = 0; k < n; ++k) {
    const Vec a = pol.sample(obs, rng).first;
    sum += a;
    sq += a.cwiseProduct(a);
  }
  for (int i = 0; i < 2; ++i) {
    const double mean = sum[i] / n;
    const double sd = std::sqrt(sq[i] / n - mean * mean);
    EXPECT_NEAR(sd / std::exp(pol.log_std()[i]), 1.0, 0.02);
  }
}

TEST(GaussianPolicy, EntropyClosedForm) {
  GaussianPolicy pol({2, 3}, 0.0);
  pol.raw_log_std() << -1.0, 0.0, 0.5;
  EXPECT_NEAR(pol.entropy(), 1.5 * (1.0 + std::log(2.0 * M_PI)) - 0.5, 1e-12);
}

TEST(GaussianPolicy, FlatParamsRoundTripAndChecksum) {
  Rng rng(11);
  GaussianPolicy pol({3, 8, 2}, -0.5);
  pol.mean_net().init_random(rng);
  const Vec p = pol.flat_params();
  EXPECT_EQ(p.size(), pol.param_count());
  GaussianPolicy other({3, 8, 2}, 0.0);
  other.set_flat_params(p);
  EXPECT_EQ(other.flat_params(), p);
  EXPECT_EQ(other.checksum(), pol.checksum());
  Vec q = p;
  q[0] = std::nextafter(q[0], 1.0);
  other.set_flat_params(q);
  EXPECT_NE(other.checksum(), pol.checksum());
}

TEST(Discriminator, ZeroNetGivesHalf) {
  Discriminator d(3, 2, {8, 8});
  EXPECT_DOUBLE_EQ(d.prob(Vec::Ones(3), Vec::Ones(2)), 0.5);
}

TEST(Discriminator, MatchesIndependentForwardPass) {
  Discriminator d(6, 2, {64, 64});
  d.net() = patterned_net({8, 64, 64, 1});
  const Vec x = patterned_input(8);
  EXPECT_NEAR(d.logit(x.head(6), x.tail(2)), 1.7295086013012182, 1e-12);
  EXPECT_NEAR(d.prob(x.head(6), x.tail(2)), 0.8493495541816806, 1e-12);
}

TEST(Discriminator, ClampedProbabilityStaysInsideUnitInterval) {
  Discriminator d(1, 1, {2});
  d.net().bias(1)[0] = 1e3;
  EXPECT_NEAR(d.prob(Vec::Zero(1), Vec::Zero(1)), 0.9999999979388463, 1e-16);
  EXPECT_LT(d.prob(Vec::Zero(1), Vec::Zero(1)), 1.0);
  EXPECT_TRUE(std::isfinite(std::log(1.0 - d.prob(Vec::Zero(1), Vec::Zero(1)))));
  d.net().bias(1)[0] = -1e3;
  EXPECT_GT(d.prob(Vec::Zero(1), Vec::Zero(1)), 0.0);
  EXPECT_THROW(d.prob(Vec::Zero(2), Vec::Zero(1)), InputError);
}

TEST(Checkpoint, RoundTripsBitExactly) {
  Rng rng(12);
  DenseNet net({6, 64, 64, 2});
  net.init_random(rng);
  Vec extra(2);
  extra << -0.5, 1.0 / 3.0;
  std::stringstream ss;
  write_checkpoint(ss, net, extra);
  const auto [back, ex] = read_checkpoint(ss);
  EXPECT_EQ(back.sizes(), net.sizes());
  EXPECT_EQ(back.params(), net.params());
  EXPECT_EQ(ex, extra);
}

TEST(Checkpoint, HeaderFormat) {
  DenseNet net({2, 3, 1});
  std::stringstream ss;
  write_checkpoint(ss, net);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "NETCKPT v1 sizes=2,3,1");
}

TEST(Checkpoint, MalformedInputReportsLine) {
  std::stringstream bad_header("NETCKPT v2 sizes=2,1\n");
  EXPECT_THROW(read_checkpoint(bad_header), ParseError);
  std::stringstream short_body("NETCKPT v1 sizes=2,1\n0.1\n0.2\n");
  EXPECT_THROW(read_checkpoint(short_body), ParseError);
  std::stringstream garbage("NETCKPT v1 sizes=2,1\n0.1\nabc\n0.3\n");
  try {
    read_checkpoint(garbage);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Adam, FirstStepMovesEachCoordinateByLr) {
  Vec p = Vec::Zero(3);
  Vec g(3);
  g << 2.0, -0.5, 1e-3;
  Adam opt(3, 0.01);
  opt.step(p, g);
  EXPECT_NEAR(p[0], -0.01, 1e-8);
  EXPECT_NEAR(p[1], 0.01, 1e-8);
  EXPECT_NEAR(p[2], -0.01, 1e-7);
}

TEST(Adam, MinimizesQuadratic) {
  Vec p(2);
  p << 3.0, -2.0;
  Adam opt(2, 0.05);
  for (int k = 0; k < 2000; ++k) opt.step(p, 2.0 * p);
  EXPECT_LT(p.norm(), 1e-3);
}
