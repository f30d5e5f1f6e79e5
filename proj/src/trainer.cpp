#include "nashdqn/trainer.hpp"

#include <cmath>
#include <memory>

namespace nashdqn {

double TrainConfig::sigma_at(int episode) const {
  if (episodes <= 1) return sigma_start;
  const double frac =
      static_cast<double>(episode - 1) / static_cast<double>(episodes - 1);
  return sigma_start + (sigma_end - sigma_start) * frac;
}

void TrainConfig::validate() const {
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (minibatch < 1) throw std::invalid_argument("minibatch must be >= 1");
  if (buffer_capacity < 1) {
    throw std::invalid_argument("buffer_capacity must be >= 1");
  }
  if (gamma <= 0.0 || gamma > 1.0) {
    throw std::invalid_argument("gamma must be in (0, 1]");
  }
  if (sigma_start < 0.0 || sigma_end < 0.0) {
    throw std::invalid_argument("exploration noise must be >= 0");
  }
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
}

JointAction explore_action(const NashQModel& model, const Game& game,
                           const MarketState& state, double sigma, Rng& rng) {
  JointAction raw = model.nash_action(state);
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    raw[i] += sigma * rng.normal();
  }
  return game.clamp(state, raw);
}

double alternating_step(NashQModel& model,
                        const std::vector<const Transition*>& batch,
                        double gamma, Optimizer& optimizer, bool semi_gradient,
                        const ParameterSet* bootstrap_params,
                        Eigen::VectorXd& grad_scratch) {
  LossBatch fb = model.loss_forward(batch, gamma, bootstrap_params);
  const double loss = fb.loss;

  grad_scratch.setZero(model.params().size());
  model.loss_backward_value(fb, semi_gradient, grad_scratch);
  optimizer.apply(model.params(), grad_scratch, UpdateScope::Value);

  model.refresh_values(fb, bootstrap_params);
  grad_scratch.setZero(model.params().size());
  model.loss_backward_advantage(fb, grad_scratch);
  optimizer.apply(model.params(), grad_scratch, UpdateScope::Advantage);
  return loss;
}

TrainResult train(const Game& game, NashQModel& model,
                  const TrainConfig& config,
                  const std::function<void(int, const NashQModel&)>& episode_hook,
                  const std::function<void(const EpisodeRecord&)>& record) {
  config.validate();
  TrainResult result;
  if (config.episodes == 0) return result;

  Rng rng(config.seed);
  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  Eigen::VectorXd grad(model.params().size());
  Optimizer optimizer(config.optimizer, config.lr_value, config.lr_advantage);

  std::unique_ptr<ParameterSet> target;
  if (config.target_sync > 0) {
    target = std::make_unique<ParameterSet>(model.params());
  }

  std::vector<const Transition*> batch;
  batch.reserve(static_cast<std::size_t>(config.minibatch) + 1);

  for (int episode = 1; episode <= config.episodes; ++episode) {
    const double sigma = config.sigma_at(episode);
    MarketState state = game.sample_initial_state(rng);
    std::vector<Transition> rollout;
    rollout.reserve(static_cast<std::size_t>(game.horizon()));
    double loss_sum = 0.0;
    int loss_count = 0;

    for (int t = 0; t < game.horizon(); ++t) {
      const JointAction action =
          explore_action(model, game, state, sigma, rng);
      Transition tr = game.transition(state, action, rng);
      state = tr.next_state;
      const bool terminal = tr.terminal;
      rollout.push_back(tr);
      buffer.push(std::move(tr));

      batch = buffer.sample_excluding_newest(
          static_cast<std::size_t>(config.minibatch), rng);
      batch.push_back(&buffer.newest());

      const double loss =
          alternating_step(model, batch, config.gamma, optimizer,
                           config.semi_gradient, target.get(), grad);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged(episode, t, loss);
      }
      loss_sum += loss;
      ++loss_count;
      if (terminal) break;
    }

    if (target && episode % config.target_sync == 0) {
      *target = model.params();
    }

    EpisodeRecord rec;
    rec.episode = episode;
    rec.sigma = sigma;
    rec.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
    rec.returns = episode_return(rollout, config.gamma);
    if (record) record(rec);
    result.log.push_back(std::move(rec));

    if (episode_hook &&
        (episode % config.eval_every == 0 || episode == config.episodes)) {
      episode_hook(episode, model);
    }
  }
  return result;
}

}  // namespace nashdqn
