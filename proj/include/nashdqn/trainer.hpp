#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nashdqn/market.hpp"
#include "nashdqn/model.hpp"
#include "nashdqn/replay.hpp"

namespace nashdqn {

struct TrainConfig {
  int episodes = 15000;
  int minibatch = 100;
  int buffer_capacity = 5000;
  double lr_value = 0.01;
  double lr_advantage = 0.01;
  double gamma = 1.0;
  // Exploration noise, linearly decayed across episodes.
  double sigma_start = 10.0;
  double sigma_end = 0.5;
  std::uint64_t seed = 1;
  int eval_every = 1000;  // checkpoint/progress cadence
  bool semi_gradient = false;   // stop-gradient through the bootstrap term
  int target_sync = 0;          // >0: bootstrap from a copy synced every k episodes
  OptimizerKind optimizer = OptimizerKind::Sgd;

  double sigma_at(int episode) const;  // episode is 1-based
  void validate() const;
};

struct EpisodeRecord {
  int episode = 0;
  double sigma = 0.0;
  double mean_loss = 0.0;
  Eigen::VectorXd returns;  // discounted per-agent episode return
};

struct TrainResult {
  std::vector<EpisodeRecord> log;
};

// Raised when the batch loss stops being finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int episode, int step, double loss)
      : std::runtime_error("training diverged: non-finite loss at episode " +
                           std::to_string(episode) + " step " +
                           std::to_string(step)),
        episode(episode),
        step(step),
        loss(loss) {}
  int episode;
  int step;
  double loss;
};

// Equilibrium action plus Gaussian noise, clamped by the game.
JointAction explore_action(const NashQModel& model, const Game& game,
                           const MarketState& state, double sigma, Rng& rng);

// One alternating optimization pass on a fixed batch: a value step, then an
// advantage step on the refreshed residuals. Returns the batch loss before
// the value step.
double alternating_step(NashQModel& model,
                        const std::vector<const Transition*>& batch,
                        double gamma, Optimizer& optimizer, bool semi_gradient,
                        const ParameterSet* bootstrap_params,
                        Eigen::VectorXd& grad_scratch);

// The actor-critic loop: per game step, explore, store the transition,
// and run one alternating optimization pass on a uniform minibatch plus the
// newest transition. `episode_hook`, when set, is called after every episode
// (for checkpointing/progress); `record` receives the per-episode log entry.
TrainResult train(
    const Game& game, NashQModel& model, const TrainConfig& config,
    const std::function<void(int, const NashQModel&)>& episode_hook = {},
    const std::function<void(const EpisodeRecord&)>& record = {});

}  // namespace nashdqn
