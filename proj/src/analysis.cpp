#include "nashdqn/analysis.hpp"

#include <cmath>
#include <limits>

namespace nashdqn {

Eigen::MatrixXd heatmap_matrix(const NashQModel& model, double price,
                               double qbar_others,
                               const std::vector<int>& t_grid,
                               const std::vector<double>& q_grid) {
  const int n = model.n_agents();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(q_grid.size()),
                      static_cast<Eigen::Index>(t_grid.size()));
  MarketState state;
  state.price = price;
  state.inventories = Eigen::VectorXd::Constant(n, qbar_others);
  for (std::size_t c = 0; c < t_grid.size(); ++c) {
    state.step = t_grid[c];
    for (std::size_t r = 0; r < q_grid.size(); ++r) {
      state.inventories[0] = q_grid[r];
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          model.coefficients(state, 0).mu;
    }
  }
  return out;
}

double buy_sell_threshold(const Eigen::VectorXd& mu_over_q,
                          const std::vector<double>& q_grid) {
  for (Eigen::Index r = 0; r + 1 < mu_over_q.size(); ++r) {
    const double lo = mu_over_q[r];
    const double hi = mu_over_q[r + 1];
    if (lo >= 0.0 && hi < 0.0) {
      if (lo == 0.0) return q_grid[static_cast<std::size_t>(r)];
      const double w = lo / (lo - hi);
      return q_grid[static_cast<std::size_t>(r)] +
             w * (q_grid[static_cast<std::size_t>(r) + 1] -
                  q_grid[static_cast<std::size_t>(r)]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<Transition> greedy_rollout(const Game& game,
                                       const NashQModel& model,
                                       const MarketState& initial, Rng& rng) {
  std::vector<Transition> out;
  MarketState state = initial;
  while (state.step < game.horizon()) {
    const JointAction action = model.nash_action(state);
    Transition tr = game.transition(state, action, rng);
    state = tr.next_state;
    const bool terminal = tr.terminal;
    out.push_back(std::move(tr));
    if (terminal) break;
  }
  return out;
}

EvalSummary evaluate_policy(const Game& game, const NashQModel& model,
                            int episodes, double gamma, Rng& rng) {
  EvalSummary summary;
  summary.episodes = episodes;
  const int n = game.n_agents();
  summary.mean_return = Eigen::VectorXd::Zero(n);
  summary.se_return = Eigen::VectorXd::Zero(n);
  if (episodes == 0) return summary;

  Eigen::MatrixXd returns(n, episodes);
  double terminal_abs = 0.0;
  double loss_sum = 0.0;
  std::size_t transition_count = 0;
  for (int e = 0; e < episodes; ++e) {
    const MarketState init = game.sample_initial_state(rng);
    const std::vector<Transition> episode = greedy_rollout(game, model, init, rng);
    returns.col(e) = episode_return(episode, gamma);
    terminal_abs +=
        episode.back().next_state.inventories.cwiseAbs().mean();
    for (const Transition& tr : episode) {
      loss_sum += model.sample_loss(tr, gamma);
      ++transition_count;
    }
  }
  summary.mean_return = returns.rowwise().mean();
  if (episodes > 1) {
    for (int i = 0; i < n; ++i) {
      const double mean = summary.mean_return[i];
      const double var =
          (returns.row(i).array() - mean).square().sum() / (episodes - 1);
      summary.se_return[i] = std::sqrt(var / episodes);
    }
  }
  summary.mean_terminal_abs_inventory = terminal_abs / episodes;
  summary.mean_bellman_loss =
      transition_count > 0 ? loss_sum / static_cast<double>(transition_count)
                           : 0.0;
  return summary;
}

}  // namespace nashdqn
