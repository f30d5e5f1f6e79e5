#include <doctest.h>

#include <cmath>

#include "nashdqn/oracles.hpp"
#include "test_util.hpp"

using namespace nashdqn;
using oracle::QuadraticGame;

namespace {

QuadraticGame symmetric_game(double g) {
  QuadraticGame game;
  game.a = Eigen::VectorXd::Ones(2);
  game.c = Eigen::MatrixXd::Ones(2, 2);
  game.g = Eigen::VectorXd::Constant(2, g);
  return game;
}

MarketParams single_agent_params() {
  MarketParams p;
  p.n_agents = 1;
  p.horizon_T = 5;
  p.q_bound = 20.0;
  return p;
}

}  // namespace

TEST_CASE("one-step Nash: homogeneous symmetric game solves to zero") {
  const Eigen::VectorXd u = oracle::solve_one_step_nash(symmetric_game(0.0));
  CHECK(u.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("one-step Nash: 2u_i - u_j = 1 solves to (1, 1)") {
  const Eigen::VectorXd u = oracle::solve_one_step_nash(symmetric_game(1.0));
  CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("one-step Nash: unilateral perturbations never help") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.bounded(4));
    QuadraticGame game;
    game.a = Eigen::VectorXd::Ones(n) * (1.0 + rng.uniform());
    game.c.resize(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) game.c(i, j) = 0.4 * rng.normal();
    }
    game.g = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) {
      return rng.normal();
    });
    const Eigen::VectorXd u = oracle::solve_one_step_nash(game);
    for (int i = 0; i < n; ++i) {
      const double base = game.payoff(i, u);
      Eigen::VectorXd pert = u;
      pert[i] += 0.01;
      CHECK(game.payoff(i, pert) < base);
      pert[i] = u[i] - 0.01;
      CHECK(game.payoff(i, pert) < base);
    }
  }
}

TEST_CASE("one-step Nash: equivariant under relabeling") {
  QuadraticGame game;
  game.a = Eigen::VectorXd(3);
  game.a << 1.0, 2.0, 1.5;
  game.c = Eigen::MatrixXd::Zero(3, 3);
  game.c(0, 1) = 0.5;
  game.c(1, 0) = 0.25;
  game.c(2, 0) = -0.3;
  game.g = Eigen::VectorXd(3);
  game.g << 1.0, -1.0, 0.5;
  const Eigen::VectorXd u = oracle::solve_one_step_nash(game);

  // swap agents 0 and 2 everywhere
  QuadraticGame swapped = game;
  std::swap(swapped.a[0], swapped.a[2]);
  std::swap(swapped.g[0], swapped.g[2]);
  Eigen::PermutationMatrix<3> perm;
  perm.setIdentity();
  perm.applyTranspositionOnTheRight(0, 2);
  swapped.c = perm * game.c * perm.transpose();
  const Eigen::VectorXd v = oracle::solve_one_step_nash(swapped);
  CHECK(v[0] == doctest::Approx(u[2]).epsilon(1e-12));
  CHECK(v[2] == doctest::Approx(u[0]).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(u[1]).epsilon(1e-12));
}

TEST_CASE("one-step Nash: singular first-order system is an error") {
  QuadraticGame game;
  game.a = Eigen::VectorXd::Ones(2);
  game.c = Eigen::MatrixXd::Constant(2, 2, 2.0);  // FOC matrix [[2,-2],[-2,2]]
  game.g = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(oracle::solve_one_step_nash(game), std::runtime_error);
}

TEST_CASE("lqr oracle rejects unsupported configurations") {
  MarketParams p = single_agent_params();
  p.impact_kind = ImpactKind::SquareRoot;
  CHECK_THROWS_AS(oracle::solve_lqr_market(p), std::invalid_argument);
  p = single_agent_params();
  p.n_agents = 2;
  CHECK_THROWS_AS(oracle::solve_lqr_market(p), std::invalid_argument);
}

TEST_CASE("lqr oracle: forced liquidation at the last step") {
  const oracle::LqSolution sol =
      oracle::solve_lqr_market(single_agent_params());
  for (double s : {6.0, 10.0, 14.0}) {
    for (double q : {-20.0, -3.0, 0.0, 8.0}) {
      CHECK(sol.action_at(4, s, q) == doctest::Approx(-q).epsilon(1e-12));
    }
  }
}

TEST_CASE("lqr oracle: large impact and no risk penalty splits evenly") {
  MarketParams p = single_agent_params();
  p.kappa = 1e-6;
  p.sigma = 0.0;
  p.b1 = 10.0;
  p.b3 = 0.0;
  const oracle::LqSolution sol = oracle::solve_lqr_market(p);

  const double q0 = 10.0;
  double q = q0;
  double s = 10.0;
  MarketState state;
  for (int t = 0; t < p.horizon_T; ++t) {
    const double nu = sol.action_at(t, s, q);
    const double target = -q0 / p.horizon_T;
    CHECK(nu == doctest::Approx(target).epsilon(0.05));
    state.price = s;
    state.step = t;
    state.inventories = Eigen::VectorXd::Constant(1, q);
    JointAction act(1);
    act << nu;
    auto [next, rewards] = step(state, act, p, 0.0);
    q = next.inventories[0];
    s = next.price;
  }
  CHECK(q == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("lqr oracle value matches exhaustive grid search (T=3, sigma=0)") {
  MarketParams p = single_agent_params();
  p.horizon_T = 3;
  p.sigma = 0.0;
  p.b2 = 0.5;  // finite: all three trades free
  const oracle::LqSolution sol = oracle::solve_lqr_market(p);

  const double s0 = 10.0;
  const double q0 = 1.0;
  double best = -1e300;
  const double lo = -2.0, hi = 2.0, step_size = 0.1;
  for (double nu0 = lo; nu0 <= hi + 1e-12; nu0 += step_size) {
    for (double nu1 = lo; nu1 <= hi + 1e-12; nu1 += step_size) {
      for (double nu2 = lo; nu2 <= hi + 1e-12; nu2 += step_size) {
        const double trades[3] = {nu0, nu1, nu2};
        double s = s0, q = q0, total = 0.0;
        for (int t = 0; t < 3; ++t) {
          MarketState state;
          state.price = s;
          state.step = t;
          state.inventories = Eigen::VectorXd::Constant(1, q);
          JointAction act(1);
          act << trades[t];
          auto [next, rewards] = step(state, act, p, 0.0);
          total += rewards[0];
          s = next.price;
          q = next.inventories[0];
        }
        best = std::max(best, total);
      }
    }
  }
  const double oracle_value = sol.value_at(0, s0, q0);
  // the oracle dominates any gridded sequence and the grid gets within its
  // resolution of the optimum
  CHECK(oracle_value >= best - 1e-9);
  CHECK(oracle_value - best < 0.02);
}

TEST_CASE("lqr oracle is consistent with a Monte-Carlo rollout") {
  MarketParams p = single_agent_params();
  const oracle::LqSolution sol = oracle::solve_lqr_market(p);
  const double s0 = 10.0, q0 = 5.0;

  Rng rng(17);
  const int episodes = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    double s = s0, q = q0, total = 0.0;
    for (int t = 0; t < p.horizon_T; ++t) {
      MarketState state;
      state.price = s;
      state.step = t;
      state.inventories = Eigen::VectorXd::Constant(1, q);
      JointAction act(1);
      act << sol.action_at(t, s, q);
      auto [next, rewards] = step(state, act, p, rng.normal());
      total += rewards[0];
      s = next.price;
      q = next.inventories[0];
    }
    sum += total;
    sumsq += total * total;
  }
  const double mean = sum / episodes;
  const double var = (sumsq - sum * sum / episodes) / (episodes - 1);
  const double se = std::sqrt(var / episodes);
  CHECK(std::abs(mean - sol.value_at(0, s0, q0)) < 3.0 * se);
}
