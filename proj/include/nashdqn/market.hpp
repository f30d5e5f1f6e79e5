#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <vector>

#include "nashdqn/rng.hpp"

namespace nashdqn {

// Joint trade vector, one entry per agent (units per step).
using JointAction = Eigen::VectorXd;

enum class ImpactKind { Linear, SquareRoot };

// Price process, impact and risk-preference constants of the execution game.
// b2 may be +infinity, which switches the terminal penalty to a hard
// liquidation constraint (the last trade is forced to close the position).
struct MarketParams {
  double kappa = 0.1;     // mean-reversion rate
  double theta_mr = 10.0; // mean-reversion level
  double sigma = 1.0;     // volatility
  double b1 = 0.3;        // transaction cost / impact constant
  double b2 = std::numeric_limits<double>::infinity(); // terminal penalty
  double b3 = 0.1;        // running inventory penalty
  double dt = 1.0;
  int horizon_T = 15;     // number of steps per episode
  int n_agents = 5;
  double q_bound = 100.0; // |inventory| cap
  ImpactKind impact_kind = ImpactKind::Linear;

  bool infinite_terminal_penalty() const { return std::isinf(b2); }
  void validate() const;  // throws std::invalid_argument on a bad field
};

// Game state: price, time index and all agents' inventories.
struct MarketState {
  double price = 0.0;
  int step = 0;
  Eigen::VectorXd inventories;
};

// One observed transition, the replay-buffer element. `action` is the trade
// vector actually executed (after clamping and any forced liquidation).
struct Transition {
  MarketState state;
  JointAction action;
  Eigen::VectorXd rewards;
  MarketState next_state;
  bool terminal = false;
};

// Initial-state distribution: q0 ~ N(0, sigma_q^2) truncated to the
// inventory bound, S0 ~ N(price_mean, sigma_p^2) truncated below at zero.
struct InitConfig {
  double sigma_q = 5.0;
  double price_mean = 10.0;
  double sigma_p = 1.0;
};

// Price drift g1(S, nu). Linear impact responds to the net trade, square-root
// impact to the signed square root of the mean trade across agents.
double drift(const MarketState& state, const JointAction& action,
             const MarketParams& params);

// Projects each trade onto the range keeping q_i + nu_i within the bound.
JointAction clamp_action(const MarketState& state, const JointAction& raw,
                         const MarketParams& params);

// Advances one step with noise draw xi, returning the next state and the
// per-agent reward. `action` must already satisfy the inventory bounds.
// When b2 is infinite the final step ignores `action` and liquidates.
// Throws std::logic_error if called on a terminal state.
std::pair<MarketState, Eigen::VectorXd> step(const MarketState& state,
                                             const JointAction& action,
                                             const MarketParams& params,
                                             double xi);

MarketState sample_initial(const MarketParams& params, const InitConfig& init,
                           Rng& rng);

// Discounted per-agent sum of rewards over one episode.
Eigen::VectorXd episode_return(const std::vector<Transition>& transitions,
                               double gamma);

// Input normalization constants applied by the model (stored in checkpoints).
struct FeatureScales {
  double price_scale = 1.0;
  double time_scale = 1.0;
  double inventory_scale = 1.0;
};

// Minimal game interface consumed by the training loop. Instances are
// independent; each is used by one logical thread at a time.
class Game {
 public:
  virtual ~Game() = default;
  virtual int n_agents() const = 0;
  virtual int horizon() const = 0;
  virtual MarketState sample_initial_state(Rng& rng) const = 0;
  virtual JointAction clamp(const MarketState& state,
                            const JointAction& raw) const = 0;
  // Clamps/overrides `proposed` as the game dictates, advances the state and
  // returns the full transition (with the executed action).
  virtual Transition transition(const MarketState& state,
                                const JointAction& proposed,
                                Rng& rng) const = 0;
  virtual FeatureScales feature_scales() const = 0;
};

// The N-agent execution game over MarketParams dynamics.
class MarketGame final : public Game {
 public:
  MarketGame(MarketParams params, InitConfig init);

  int n_agents() const override { return params_.n_agents; }
  int horizon() const override { return params_.horizon_T; }
  MarketState sample_initial_state(Rng& rng) const override;
  JointAction clamp(const MarketState& state,
                    const JointAction& raw) const override;
  Transition transition(const MarketState& state, const JointAction& proposed,
                        Rng& rng) const override;
  FeatureScales feature_scales() const override;

  const MarketParams& params() const { return params_; }
  const InitConfig& init_config() const { return init_; }

 private:
  MarketParams params_;
  InitConfig init_;
};

}  // namespace nashdqn
