#include "nashdqn/oracles.hpp"

#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

namespace nashdqn::oracle {

double QuadraticGame::payoff(int i, const Eigen::VectorXd& u) const {
  double cross = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (j != i) cross += c(i, j) * u[j];
  }
  return -a[i] * u[i] * u[i] + u[i] * cross + g[i] * u[i];
}

Eigen::VectorXd solve_one_step_nash(const QuadraticGame& game) {
  const Eigen::Index n = game.a.size();
  if (game.c.rows() != n || game.c.cols() != n || game.g.size() != n) {
    throw std::invalid_argument("QuadraticGame: inconsistent sizes");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(game.a[i] > 0.0)) {
      throw std::invalid_argument("QuadraticGame: a_i must be > 0");
    }
  }
  Eigen::MatrixXd foc(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      foc(i, j) = (i == j) ? 2.0 * game.a[i] : -game.c(i, j);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(foc);
  if (!lu.isInvertible()) {
    throw std::runtime_error(
        "solve_one_step_nash: singular first-order system, equilibrium is "
        "not unique");
  }
  Eigen::VectorXd u = lu.solve(game.g);

  // Unilateral-deviation check around the solved point.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double base = game.payoff(static_cast<int>(i), u);
    for (const double eps : {-1e-2, 1e-2}) {
      Eigen::VectorXd pert = u;
      pert[i] += eps;
      if (game.payoff(static_cast<int>(i), pert) > base + 1e-9) {
        throw std::runtime_error(
            "solve_one_step_nash: solution failed the optimality check");
      }
    }
  }
  return u;
}

double LqSolution::action_at(int t, double s, double q) const {
  return alpha.at(static_cast<std::size_t>(t)) +
         beta.at(static_cast<std::size_t>(t)) * s +
         delta.at(static_cast<std::size_t>(t)) * q;
}

double LqSolution::value_at(int t, double s, double q) const {
  const auto& v = value.at(static_cast<std::size_t>(t));
  return v[0] * s * s + v[1] * s * q + v[2] * q * q + v[3] * s + v[4] * q +
         v[5];
}

LqSolution solve_lqr_market(const MarketParams& params) {
  params.validate();
  if (params.n_agents != 1) {
    throw std::invalid_argument("solve_lqr_market: requires n_agents == 1");
  }
  if (params.impact_kind != ImpactKind::Linear) {
    throw std::invalid_argument(
        "solve_lqr_market: square-root impact has no quadratic value, "
        "unsupported");
  }
  const int horizon = params.horizon_T;
  const double dt = params.dt;
  const double ms = 1.0 - params.kappa * dt;          // dS'/dS
  const double m0 = params.kappa * params.theta_mr * dt;
  const double mv = params.b1 * dt;                   // dS'/dnu
  const double var = params.sigma * params.sigma * dt;

  LqSolution sol;
  sol.alpha.assign(static_cast<std::size_t>(horizon), 0.0);
  sol.beta.assign(static_cast<std::size_t>(horizon), 0.0);
  sol.delta.assign(static_cast<std::size_t>(horizon), 0.0);
  sol.value.assign(static_cast<std::size_t>(horizon) + 1,
                   {0.0, 0.0, 0.0, 0.0, 0.0, 0.0});

  int first_generic = horizon - 1;
  if (params.infinite_terminal_penalty()) {
    // Forced liquidation: nu = -q, reward q (S - b1 q), no running penalty
    // (the post-trade inventory is zero).
    const int t = horizon - 1;
    sol.alpha[t] = 0.0;
    sol.beta[t] = 0.0;
    sol.delta[t] = -1.0;
    sol.value[t] = {0.0, 1.0, -params.b1, 0.0, 0.0, 0.0};
    first_generic = horizon - 2;
  } else {
    // Terminal condition: the liquidation value q(S - b2 q) enters as the
    // value at the horizon; it has no S^2 term, so the variance correction
    // vanishes on the final noise draw.
    sol.value[horizon] = {0.0, 1.0, -params.b2, 0.0, 0.0, 0.0};
  }

  for (int t = first_generic; t >= 0; --t) {
    const auto& next = sol.value[static_cast<std::size_t>(t) + 1];
    const double css = next[0], csq = next[1], cqq = next[2];
    const double cs = next[3], cq = next[4], c0 = next[5];

    // One-step objective J(nu) = A2 nu^2 + A1(S, q) nu + A0(S, q), where the
    // price mean after the trade is m = ms S + m0 + mv nu and q' = q + nu.
    const double a2 =
        -params.b1 - params.b3 * dt + css * mv * mv + csq * mv + cqq;
    if (!(a2 < 0.0)) {
      throw std::runtime_error(
          "solve_lqr_market: nonconcave one-step objective");
    }
    const double a1_s = -1.0 + 2.0 * css * mv * ms + csq * ms;
    const double a1_q = -2.0 * params.b3 * dt + csq * mv + 2.0 * cqq;
    const double a1_c = 2.0 * css * mv * m0 + csq * m0 + cs * mv + cq;

    const double a0_ss = css * ms * ms;
    const double a0_sq = csq * ms;
    const double a0_qq = -params.b3 * dt + cqq;
    const double a0_s = 2.0 * css * ms * m0 + cs * ms;
    const double a0_q = csq * m0 + cq;
    const double a0_c = css * (m0 * m0 + var) + cs * m0 + c0;

    const double inv = -1.0 / (2.0 * a2);
    sol.beta[t] = a1_s * inv;
    sol.delta[t] = a1_q * inv;
    sol.alpha[t] = a1_c * inv;

    // V_t = A0 - A1^2 / (4 A2), expanded over (S, q).
    const double k = -1.0 / (4.0 * a2);
    sol.value[t] = {a0_ss + k * a1_s * a1_s,
                    a0_sq + 2.0 * k * a1_s * a1_q,
                    a0_qq + k * a1_q * a1_q,
                    a0_s + 2.0 * k * a1_s * a1_c,
                    a0_q + 2.0 * k * a1_q * a1_c,
                    a0_c + k * a1_c * a1_c};
  }
  return sol;
}

}  // namespace nashdqn::oracle
