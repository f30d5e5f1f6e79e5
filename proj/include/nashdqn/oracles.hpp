#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "nashdqn/market.hpp"

namespace nashdqn::oracle {

// Static game with per-agent payoff
//   f_i(u) = -a_i u_i^2 + u_i * sum_{j != i} c(i, j) u_j + g_i u_i,
// a_i > 0. The diagonal of c is ignored.
struct QuadraticGame {
  Eigen::VectorXd a;
  Eigen::MatrixXd c;
  Eigen::VectorXd g;

  double payoff(int i, const Eigen::VectorXd& u) const;
};

// Solves the simultaneous first-order conditions 2 a_i u_i - sum c_ij u_j = g_i
// and verifies unilateral optimality by finite perturbation. Throws
// std::runtime_error if the system is singular (no unique equilibrium).
Eigen::VectorXd solve_one_step_nash(const QuadraticGame& game);

// Exact solution of the single-agent execution game with linear impact and
// undiscounted finite horizon: linear policy and quadratic value per step.
struct LqSolution {
  // nu*(t, S, q) = alpha[t] + beta[t] * S + delta[t] * q, t in [0, T).
  std::vector<double> alpha, beta, delta;
  // Value coefficients per t in [0, T]: {v_ss, v_sq, v_qq, v_s, v_q, v_0}.
  std::vector<std::array<double, 6>> value;

  double action_at(int t, double s, double q) const;
  double value_at(int t, double s, double q) const;
};

// Backward induction over the quadratic value ansatz. Requires n_agents == 1
// and linear impact; throws std::invalid_argument otherwise. A finite b2
// enters as the terminal condition, an infinite b2 forces the last trade to
// liquidate.
LqSolution solve_lqr_market(const MarketParams& params);

}  // namespace nashdqn::oracle
