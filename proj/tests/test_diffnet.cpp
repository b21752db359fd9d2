#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rankmbo/diffnet.hpp"

using namespace rankmbo;

namespace {

// Loop-based forward pass used as a reference.
double loop_forward(const DenseNet& net, const Vector& x) {
  std::vector<double> h(x.data(), x.data() + x.size());
  for (const auto& l : net.layers()) {
    std::vector<double> z(static_cast<size_t>(l.out_dim()));
    for (Eigen::Index o = 0; o < l.out_dim(); ++o) {
      double s = l.bias(o);
      for (Eigen::Index i = 0; i < l.in_dim(); ++i) s += l.weight(o, i) * h[static_cast<size_t>(i)];
      z[static_cast<size_t>(o)] = l.activation == Activation::relu ? std::max(s, 0.0) : s;
    }
    h = z;
  }
  return h[0];
}

Matrix random_matrix(std::mt19937_64& gen, int r, int c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(gen);
  return m;
}

double weighted_sum(const DenseNet& net, const Matrix& xs, const Vector& w) {
  return net.forward_batch(xs).dot(w);
}

}  // namespace

TEST(DenseNet, ForwardMatchesLoopReference) {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + t % 8;
    const auto net = DenseNet::initialized(d, {7, 5}, 100 + t);
    const Matrix xs = random_matrix(gen, 6, d);
    const Vector batch = net.forward_batch(xs);
    for (int r = 0; r < 6; ++r) {
      const Vector x = xs.row(r).transpose();
      EXPECT_NEAR(batch(r), loop_forward(net, x), 1e-12);
      EXPECT_NEAR(net.forward(x), batch(r), 1e-12);
    }
  }
}

// Both gradient paths against central differences over 50 instances.
TEST(DenseNet, ParameterGradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 8;
    DenseNet net = DenseNet::initialized(d, {6, 4}, 200 + t);
    const Matrix xs = random_matrix(gen, 5, d);
    const Vector w = random_matrix(gen, 5, 1).col(0);
    const ParamSet g = net.grad_params(xs, w);
    const double h = 1e-6;
    double num = 0.0, den = 0.0;
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
      auto& layer = net.parameters()[li];
      for (Eigen::Index k = 0; k < layer.weight.size(); ++k) {
        const double keep = layer.weight.data()[k];
        layer.weight.data()[k] = keep + h;
        const double up = weighted_sum(net, xs, w);
        layer.weight.data()[k] = keep - h;
        const double dn = weighted_sum(net, xs, w);
        layer.weight.data()[k] = keep;
        const double fd = (up - dn) / (2 * h);
        num += std::pow(fd - g[li].weight.data()[k], 2);
        den += fd * fd;
      }
      for (Eigen::Index k = 0; k < layer.bias.size(); ++k) {
        const double keep = layer.bias(k);
        layer.bias(k) = keep + h;
        const double up = weighted_sum(net, xs, w);
        layer.bias(k) = keep - h;
        const double dn = weighted_sum(net, xs, w);
        layer.bias(k) = keep;
        const double fd = (up - dn) / (2 * h);
        num += std::pow(fd - g[li].bias(k), 2);
        den += fd * fd;
      }
    }
    EXPECT_LT(std::sqrt(num) / std::max(1.0, std::sqrt(den)), 1e-4) << "instance " << t;
  }
}

TEST(DenseNet, InputGradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 8;
    const auto net = DenseNet::initialized(d, {8, 8}, 300 + t);
    const Vector x = random_matrix(gen, d, 1).col(0);
    const Vector g = net.grad_input(x);
    Vector fd(d);
    for (int i = 0; i < d; ++i) {
      Vector a = x, b = x;
      a(i) += 1e-6;
      b(i) -= 1e-6;
      fd(i) = (net.forward(a) - net.forward(b)) / 2e-6;
    }
    EXPECT_LT((g - fd).norm() / std::max(1.0, fd.norm()), 1e-4) << "instance " << t;
  }
}

TEST(DenseNet, AffineModel) {
  Vector w(3);
  w << 1.0, -2.0, 0.5;
  const auto net = DenseNet::affine(w, 0.25);
  Vector x(3);
  x << 2.0, 1.0, 4.0;
  EXPECT_DOUBLE_EQ(net.forward(x), 2.0 - 2.0 + 2.0 + 0.25);
  EXPECT_TRUE(net.grad_input(x).isApprox(w));
  EXPECT_EQ(net.parameter_count(), 4u);
}

TEST(DenseNet, InitializationIsSeededAndBounded) {
  const auto a = DenseNet::initialized(4, {16}, 9);
  const auto b = DenseNet::initialized(4, {16}, 9);
  const auto c = DenseNet::initialized(4, {16}, 10);
  EXPECT_TRUE(a.layers()[0].weight == b.layers()[0].weight);
  EXPECT_FALSE(a.layers()[0].weight == c.layers()[0].weight);
  EXPECT_LE(a.layers()[0].weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 4));
  EXPECT_LE(a.layers()[1].weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 16));
  EXPECT_EQ(a.parameter_count(), 4u * 16 + 16 + 16 + 1);
}

TEST(DenseNet, CheckpointRoundTripIsExact) {
  const auto net = DenseNet::initialized(3, {5, 4}, 77);
  std::stringstream s;
  net.save(s);
  const auto back = DenseNet::load(s);
  ASSERT_EQ(back.layers().size(), net.layers().size());
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    EXPECT_TRUE(back.layers()[i].weight == net.layers()[i].weight);
    EXPECT_TRUE(back.layers()[i].bias == net.layers()[i].bias);
    EXPECT_EQ(back.layers()[i].activation, net.layers()[i].activation);
  }
}

TEST(DenseNet, LoadRejectsGarbage) {
  std::stringstream bad("not-a-model 1\n");
  EXPECT_THROW(DenseNet::load(bad), std::exception);
  std::stringstream truncated("rankmbo-densenet 1\nlayers 1\nlayer 2 1 identity\n1.0\n");
  EXPECT_THROW(DenseNet::load(truncated), std::exception);
}

TEST(DenseNet, ShapeErrors) {
  const auto net = DenseNet::initialized(3, {4}, 1);
  EXPECT_THROW(net.forward(Vector::Zero(2)), InvalidInput);
  EXPECT_THROW(net.grad_params(Matrix::Zero(2, 3), Vector::Zero(3)), InvalidInput);
  ParamSet broken = net.layers();
  broken[1].weight.resize(1, 5);
  EXPECT_THROW(DenseNet{broken}, InvalidInput);
}

TEST(Adam, MatchesHandComputedSteps) {
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  AdamState adam(cfg);
  Vector p(2);
  p << 1.0, -1.0;
  Vector g(2);
  g << 0.5, -2.0;
  // first step: m_hat = g, v_hat = g^2, so the update is lr * sign(g) up to eps
  adam.step(p, g);
  EXPECT_NEAR(p(0), 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p(1), -1.0 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-12);
  // second step with a new gradient
  Vector g2(2);
  g2 << 1.0, 1.0;
  const double m0 = 0.9 * 0.1 * 0.5 + 0.1 * 1.0, v0 = 0.999 * 0.001 * 0.25 + 0.001 * 1.0;
  const double mh = m0 / (1 - 0.81), vh = v0 / (1 - 0.999 * 0.999);
  const double before = p(0);
  adam.step(p, g2);
  EXPECT_NEAR(p(0), before - 0.1 * mh / (std::sqrt(vh) + 1e-8), 1e-12);
}

TEST(Adam, DecoupledDecayTouchesWeightsOnly) {
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.weight_decay = 0.5;
  AdamState adam(cfg);
  auto net = DenseNet::affine(Vector::Constant(2, 2.0), 3.0);
  ParamSet zero = zeros_like(net.layers());
  adam.step(net.parameters(), zero);
  EXPECT_NEAR(net.layers()[0].weight(0, 0), 2.0 * (1 - 0.005), 1e-15);
  EXPECT_DOUBLE_EQ(net.layers()[0].bias(0), 3.0);
}

TEST(Adam, NonFiniteGradientAborts) {
  AdamState adam;
  Vector p = Vector::Zero(2), g = Vector::Zero(2);
  g(0) = NAN;
  EXPECT_THROW(adam.step(p, g), TrainingAborted);
}

TEST(Adam, ConvergesOnQuadratic) {
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  AdamState adam(cfg);
  Vector p = Vector::Constant(3, 5.0);
  Vector target(3);
  target << 1.0, -2.0, 0.5;
  for (int i = 0; i < 2000; ++i) {
    const Vector g = 2.0 * (p - target);
    adam.step(p, g);
  }
  EXPECT_LT((p - target).norm(), 1e-3);
}
