#pragma once

#include <Eigen/Core>
#include <vector>

#include "nashdqn/market.hpp"
#include "nashdqn/model.hpp"

namespace nashdqn {

// Equilibrium action of agent 0 on an (own inventory) x (time step) grid at
// a fixed price, with every other agent's inventory set to `qbar_others`.
// Row r, column c hold the action at (q_grid[r], t_grid[c]).
Eigen::MatrixXd heatmap_matrix(const NashQModel& model, double price,
                               double qbar_others,
                               const std::vector<int>& t_grid,
                               const std::vector<double>& q_grid);

// Inventory level where the policy switches from buying to selling:
// the interpolated zero of the first +/- sign change scanning q upward.
// NaN when the action never changes sign on the grid.
double buy_sell_threshold(const Eigen::VectorXd& mu_over_q,
                          const std::vector<double>& q_grid);

// Rolls one episode under the noise-free policy (the game still applies
// clamping and forced liquidation).
std::vector<Transition> greedy_rollout(const Game& game,
                                       const NashQModel& model,
                                       const MarketState& initial, Rng& rng);

struct EvalSummary {
  int episodes = 0;
  Eigen::VectorXd mean_return;          // per agent
  Eigen::VectorXd se_return;            // standard error per agent
  double mean_terminal_abs_inventory = 0.0;
  double mean_bellman_loss = 0.0;       // mean squared residual per transition
};

EvalSummary evaluate_policy(const Game& game, const NashQModel& model,
                            int episodes, double gamma, Rng& rng);

}  // namespace nashdqn
