#include <doctest.h>

#include <cmath>

#include "nashdqn/net.hpp"
#include "test_util.hpp"

using namespace nashdqn;

namespace {

// Straight-line reimplementation of the affine/ReLU stack, used as an
// independent oracle for the forward pass.
Eigen::VectorXd naive_forward(const NetworkSpec& spec,
                              const std::vector<Eigen::MatrixXd>& weights,
                              const std::vector<Eigen::VectorXd>& biases,
                              const Eigen::VectorXd& input) {
  Eigen::VectorXd a = input;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::VectorXd z(weights[l].rows());
    for (Eigen::Index i = 0; i < weights[l].rows(); ++i) {
      double acc = biases[l][i];
      for (Eigen::Index j = 0; j < weights[l].cols(); ++j) {
        acc += weights[l](i, j) * a[j];
      }
      z[i] = acc;
    }
    if (l + 1 < weights.size()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = std::max(z[i], 0.0);
    }
    a = z;
  }
  return a;
}

struct SmallNet {
  ParameterSet params;
  Mlp mlp;
  SmallNet(NetworkSpec spec)
      : mlp(params, std::move(spec), "net", Partition::Value) {}
};

}  // namespace

TEST_CASE("forward: zero parameters give zero output") {
  SmallNet net({3, {4, 4}, 2});
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  CHECK(net.mlp.forward(net.params, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: identity single layer") {
  SmallNet net({3, {}, 3});
  net.params.matrix(0).setIdentity();
  Eigen::VectorXd x(3);
  x << 0.3, -1.5, 2.0;
  CHECK(net.mlp.forward(net.params, x) == x);
}

TEST_CASE("forward matches an independent reimplementation") {
  Rng rng(123);
  SmallNet net({5, {7, 6}, 3});
  net.mlp.init(net.params, rng);
  // nonzero biases so the oracle exercises them too
  for (int t = 0; t < static_cast<int>(net.params.tensors().size()); ++t) {
    if (net.params.info(t).cols == 1) {
      auto b = net.params.matrix(t);
      for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, 0) = 0.1 * rng.normal();
    }
  }
  // tensors alternate weight, bias per layer
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (int t = 0; t + 1 < static_cast<int>(net.params.tensors().size());
       t += 2) {
    weights.emplace_back(net.params.matrix(t));
    biases.emplace_back(net.params.matrix(t + 1).col(0));
  }
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = rng.normal();
    const Eigen::VectorXd got = net.mlp.forward(net.params, x);
    const Eigen::VectorXd want = naive_forward(net.mlp.spec(), weights, biases, x);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward: dimension mismatch is a usage error") {
  SmallNet net({3, {4}, 2});
  CHECK_THROWS_AS(net.mlp.forward(net.params, Eigen::VectorXd::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("forward is pure") {
  Rng rng(9);
  SmallNet net({4, {5, 5}, 2});
  net.mlp.init(net.params, rng);
  Eigen::VectorXd x(4);
  x << 0.1, -0.2, 0.3, -0.4;
  const Eigen::VectorXd a = net.mlp.forward(net.params, x);
  const Eigen::VectorXd b = net.mlp.forward(net.params, x);
  CHECK(a == b);
}

TEST_CASE("backward: zero cotangent gives zero gradient") {
  Rng rng(5);
  SmallNet net({3, {4}, 2});
  net.mlp.init(net.params, rng);
  Tape tape;
  net.mlp.forward(net.params, Eigen::MatrixXd::Random(3, 2), tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params.size());
  net.mlp.backward(net.params, tape, Eigen::MatrixXd::Zero(2, 2), grad);
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: scalar linear model gradient equals the input") {
  SmallNet net({1, {}, 1});
  net.params.matrix(0)(0, 0) = 1.7;
  Tape tape;
  Eigen::MatrixXd x(1, 1);
  x(0, 0) = 3.25;
  net.mlp.forward(net.params, x, tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params.size());
  net.mlp.backward(net.params, tape, Eigen::MatrixXd::Ones(1, 1), grad);
  CHECK(grad[net.params.info(0).offset] == 3.25);  // d(w x)/dw = x
  CHECK(grad[net.params.info(1).offset] == 1.0);   // bias
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(77);
  for (const NetworkSpec spec :
       {NetworkSpec{3, {5, 4}, 2}, NetworkSpec{1, {8}, 1},
        NetworkSpec{6, {10, 10, 10}, 3}}) {
    SmallNet net(spec);
    net.mlp.init(net.params, rng);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd x(spec.input_dim, 1);
      for (int i = 0; i < spec.input_dim; ++i) x(i, 0) = rng.normal();
      Eigen::MatrixXd cot(spec.output_dim, 1);
      for (int i = 0; i < spec.output_dim; ++i) cot(i, 0) = rng.normal();

      Tape tape;
      net.mlp.forward(net.params, x, tape);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params.size());
      net.mlp.backward(net.params, tape, cot, grad);

      const auto f = [&]() {
        return (cot.col(0).transpose() * net.mlp.forward(net.params, x.col(0)))(0);
      };
      for (Eigen::Index k = 0; k < net.params.size(); ++k) {
        const double fd = test::fd_partial(net.params.flat(), k, f);
        CHECK(test::rel_err(grad[k], fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("backward: reusing a consumed tape is a usage error") {
  Rng rng(4);
  SmallNet net({2, {3}, 1});
  net.mlp.init(net.params, rng);
  Tape tape;
  net.mlp.forward(net.params, Eigen::MatrixXd::Random(2, 1), tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params.size());
  net.mlp.backward(net.params, tape, Eigen::MatrixXd::Ones(1, 1), grad);
  CHECK_THROWS_AS(
      net.mlp.backward(net.params, tape, Eigen::MatrixXd::Ones(1, 1), grad),
      std::logic_error);
}

TEST_CASE("sgd_update honors learning rate, partition and composition") {
  ParameterSet params;
  Mlp value(params, {2, {3}, 1}, "value", Partition::Value);
  Mlp adv(params, {2, {3}, 1}, "adv", Partition::Advantage);
  Rng rng(1);
  value.init(params, rng);
  adv.init(params, rng);

  Eigen::VectorXd grad(params.size());
  for (Eigen::Index i = 0; i < grad.size(); ++i) grad[i] = rng.normal();

  SUBCASE("zero learning rate changes nothing") {
    const Eigen::VectorXd before = params.flat();
    sgd_update(params, grad, 0.0, UpdateScope::All);
    CHECK(params.flat() == before);
  }
  SUBCASE("value scope leaves advantage tensors bit-identical") {
    const Eigen::VectorXd before = params.flat();
    sgd_update(params, grad, 0.01, UpdateScope::Value);
    for (int t = 0; t < static_cast<int>(params.tensors().size()); ++t) {
      const TensorInfo& info = params.info(t);
      const Eigen::Index n = static_cast<Eigen::Index>(info.rows) * info.cols;
      if (info.partition == Partition::Advantage) {
        CHECK(params.flat().segment(info.offset, n) ==
              before.segment(info.offset, n));
      } else {
        CHECK(params.flat().segment(info.offset, n) !=
              before.segment(info.offset, n));
      }
    }
  }
  SUBCASE("scalar hand value") {
    ParameterSet single;
    Mlp net(single, {1, {}, 1}, "w", Partition::Value);
    single.matrix(0)(0, 0) = 1.0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(single.size());
    g[0] = 2.0;
    sgd_update(single, g, 0.01, UpdateScope::All);
    CHECK(single.matrix(0)(0, 0) == doctest::Approx(0.98).epsilon(1e-15));
  }
  SUBCASE("ALL equals VALUE then ADVANTAGE") {
    ParameterSet a = params, b = params;
    sgd_update(a, grad, 0.01, UpdateScope::All);
    sgd_update(b, grad, 0.01, UpdateScope::Value);
    sgd_update(b, grad, 0.01, UpdateScope::Advantage);
    CHECK(a.flat() == b.flat());
  }
}

TEST_CASE("init: deterministic, fan-in scaled, zero biases") {
  SmallNet a({100, {100}, 1});
  SmallNet b({100, {100}, 1});
  Rng ra(99), rb(99);
  a.mlp.init(a.params, ra);
  b.mlp.init(b.params, rb);
  CHECK(a.params.flat() == b.params.flat());

  // first layer: 100x100 = 1e4 samples, variance should be near 2/fan_in
  const auto w = a.params.matrix(0);
  const double var = w.array().square().mean();
  CHECK(var == doctest::Approx(2.0 / 100.0).epsilon(0.10));

  CHECK(a.params.matrix(1).cwiseAbs().maxCoeff() == 0.0);  // biases
  CHECK(a.params.matrix(3).cwiseAbs().maxCoeff() == 0.0);
}
