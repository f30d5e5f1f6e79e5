#include "nashdqn/market.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace nashdqn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("MarketParams: " + what);
}

}  // namespace

void MarketParams::validate() const {
  require(kappa > 0.0, "kappa must be > 0");
  require(sigma >= 0.0, "sigma must be >= 0");
  require(b1 > 0.0, "b1 must be > 0");
  require(std::isinf(b2) ? b2 > 0.0 : b2 >= 0.0,
          "b2 must be finite nonnegative or +inf");
  require(b3 >= 0.0, "b3 must be >= 0");
  require(dt > 0.0, "dt must be > 0");
  require(horizon_T >= 1, "horizon_T must be >= 1");
  require(n_agents >= 1, "n_agents must be >= 1");
  require(q_bound > 0.0, "q_bound must be > 0");
}

double drift(const MarketState& state, const JointAction& action,
             const MarketParams& params) {
  const double reversion = params.kappa * (params.theta_mr - state.price);
  if (params.impact_kind == ImpactKind::Linear) {
    return reversion + params.b1 * action.sum();
  }
  const double mean_trade = action.sum() / static_cast<double>(action.size());
  const double impact = (mean_trade >= 0.0 ? 1.0 : -1.0) *
                        std::sqrt(std::abs(mean_trade));
  return reversion + params.b1 * impact;
}

JointAction clamp_action(const MarketState& state, const JointAction& raw,
                         const MarketParams& params) {
  JointAction out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double lo = -params.q_bound - state.inventories[i];
    const double hi = params.q_bound - state.inventories[i];
    out[i] = std::clamp(raw[i], lo, hi);
  }
  return out;
}

std::pair<MarketState, Eigen::VectorXd> step(const MarketState& state,
                                             const JointAction& action,
                                             const MarketParams& params,
                                             double xi) {
  if (state.step >= params.horizon_T) {
    throw std::logic_error("step() called on a terminal state");
  }
  const bool last = (state.step + 1 == params.horizon_T);

  JointAction executed = action;
  if (last && params.infinite_terminal_penalty()) {
    executed = -state.inventories;  // forced liquidation
  }

  MarketState next;
  next.step = state.step + 1;
  // Hard bound on inventories: clamped trades can overshoot by one ulp.
  next.inventories = (state.inventories + executed)
                         .cwiseMax(-params.q_bound)
                         .cwiseMin(params.q_bound);
  next.price = state.price + drift(state, executed, params) * params.dt +
               params.sigma * std::sqrt(params.dt) * xi;

  // Cash increment at the pre-step price plus the running inventory penalty;
  // the terminal liquidation value is attached to the final step.
  Eigen::VectorXd rewards(executed.size());
  for (Eigen::Index i = 0; i < executed.size(); ++i) {
    const double nu = executed[i];
    const double q_next = next.inventories[i];
    double r = -nu * (state.price + params.b1 * nu) -
               params.b3 * q_next * q_next * params.dt;
    if (last && !params.infinite_terminal_penalty()) {
      r += q_next * (next.price - params.b2 * q_next);
    }
    rewards[i] = r;
  }
  return {std::move(next), std::move(rewards)};
}

MarketState sample_initial(const MarketParams& params, const InitConfig& init,
                           Rng& rng) {
  MarketState state;
  state.step = 0;
  state.inventories.resize(params.n_agents);
  for (int i = 0; i < params.n_agents; ++i) {
    double q = 0.0;
    do {
      q = rng.normal(0.0, init.sigma_q);
    } while (std::abs(q) > params.q_bound);
    state.inventories[i] = q;
  }
  double p = 0.0;
  do {
    p = rng.normal(init.price_mean, init.sigma_p);
  } while (p < 0.0);
  state.price = p;
  return state;
}

Eigen::VectorXd episode_return(const std::vector<Transition>& transitions,
                               double gamma) {
  if (transitions.empty()) return Eigen::VectorXd();
  Eigen::VectorXd total = Eigen::VectorXd::Zero(transitions[0].rewards.size());
  double discount = 1.0;
  for (const Transition& tr : transitions) {
    total += discount * tr.rewards;
    discount *= gamma;
  }
  return total;
}

MarketGame::MarketGame(MarketParams params, InitConfig init)
    : params_(std::move(params)), init_(init) {
  params_.validate();
}

MarketState MarketGame::sample_initial_state(Rng& rng) const {
  return sample_initial(params_, init_, rng);
}

JointAction MarketGame::clamp(const MarketState& state,
                              const JointAction& raw) const {
  return clamp_action(state, raw, params_);
}

Transition MarketGame::transition(const MarketState& state,
                                  const JointAction& proposed,
                                  Rng& rng) const {
  Transition tr;
  tr.state = state;
  JointAction executed = clamp_action(state, proposed, params_);
  const bool last = (state.step + 1 == params_.horizon_T);
  if (last && params_.infinite_terminal_penalty()) {
    executed = -state.inventories;
  }
  const double xi = rng.normal();
  auto [next, rewards] = step(state, executed, params_, xi);
  tr.action = std::move(executed);
  tr.rewards = std::move(rewards);
  tr.next_state = std::move(next);
  tr.terminal = (tr.next_state.step == params_.horizon_T);
  return tr;
}

FeatureScales MarketGame::feature_scales() const {
  FeatureScales scales;
  scales.price_scale = 1.0 / params_.theta_mr;
  scales.time_scale = 1.0 / static_cast<double>(params_.horizon_T);
  scales.inventory_scale = 1.0 / params_.q_bound;
  return scales;
}

}  // namespace nashdqn
