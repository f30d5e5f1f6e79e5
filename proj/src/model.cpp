#include "nashdqn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace nashdqn {

double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd lq_advantage(const AdvantageCoefficients& coef,
                             const Eigen::VectorXd& delta) {
  const Eigen::Index n = delta.size();
  const double sum = delta.sum();
  const double sumsq = delta.squaredNorm();
  Eigen::VectorXd adv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = delta[i];
    const double s = sum - d;
    const double t = sumsq - d * d;
    adv[i] = -coef.l11[i] * coef.l11[i] * d * d - coef.p12[i] * d * s -
             coef.p22[i] * t + coef.psi[i] * s;
  }
  return adv;
}

Eigen::VectorXd FeatureVector::value_input() const {
  Eigen::VectorXd out(3 + invariant_sorted.size());
  out.head<3>() = non_invariant;
  out.tail(invariant_sorted.size()) = invariant_sorted;
  return out;
}

namespace {

// Ascending by normalized value, ties by original agent index; shared by the
// single-state and batched paths so both consume identical orderings.
std::vector<std::pair<double, int>> sorted_normalized(
    const Eigen::VectorXd& inventories, double scale) {
  std::vector<std::pair<double, int>> z(inventories.size());
  for (Eigen::Index k = 0; k < inventories.size(); ++k) {
    z[static_cast<std::size_t>(k)] = {inventories[k] * scale,
                                      static_cast<int>(k)};
  }
  std::sort(z.begin(), z.end());
  return z;
}

}  // namespace

NashQModel::NashQModel(int n_agents, ModelConfig cfg, FeatureScales scales)
    : n_agents_(n_agents),
      cfg_(std::move(cfg)),
      scales_(scales),
      value_(params_,
             NetworkSpec{3 + (n_agents - 1), cfg_.value_hidden, 1}, "value",
             Partition::Value),
      phi_(params_, NetworkSpec{1, cfg_.phi_hidden, cfg_.phi_out}, "phi",
           Partition::Advantage),
      main_(params_, NetworkSpec{3 + cfg_.phi_out, cfg_.main_hidden, 5},
            "main", Partition::Advantage) {
  if (n_agents < 1) throw std::invalid_argument("n_agents must be >= 1");
}

void NashQModel::init_params(std::uint64_t seed) {
  Rng rng(seed);
  value_.init(params_, rng);
  phi_.init(params_, rng);
  main_.init(params_, rng);
}

FeatureVector NashQModel::features(const MarketState& state, int agent) const {
  FeatureVector f;
  f.non_invariant << state.price * scales_.price_scale,
      static_cast<double>(state.step) * scales_.time_scale,
      state.inventories[agent] * scales_.inventory_scale;
  f.invariant_sorted.resize(n_agents_ - 1);
  const auto z = sorted_normalized(state.inventories, scales_.inventory_scale);
  Eigen::Index r = 0;
  for (const auto& [value, idx] : z) {
    if (idx == agent) continue;
    f.invariant_sorted[r++] = value;
  }
  return f;
}

Eigen::VectorXd NashQModel::perm_invariant_embed(
    const Eigen::VectorXd& invariant_sorted) const {
  Eigen::VectorXd embed = Eigen::VectorXd::Zero(cfg_.phi_out);
  Eigen::VectorXd in(1);
  for (Eigen::Index j = 0; j < invariant_sorted.size(); ++j) {
    in[0] = invariant_sorted[j];
    embed += phi_.forward(params_, in);
  }
  return embed;
}

Eigen::VectorXd NashQModel::value_all(const MarketState& state) const {
  Eigen::VectorXd v(n_agents_);
  for (int i = 0; i < n_agents_; ++i) {
    v[i] = value_.forward(params_, features(state, i).value_input())[0];
  }
  return v;
}

CoefficientRow NashQModel::coefficients(const MarketState& state,
                                        int agent) const {
  const FeatureVector f = features(state, agent);
  Eigen::VectorXd main_in(3 + cfg_.phi_out);
  main_in.head<3>() = f.non_invariant;
  main_in.tail(cfg_.phi_out) = perm_invariant_embed(f.invariant_sorted);
  const Eigen::VectorXd head = main_.forward(params_, main_in);
  CoefficientRow row;
  row.mu = head[0];
  row.l11 = softplus(head[1]) + cfg_.epsilon;
  row.p12 = head[2];
  row.p22 = head[3];
  row.psi = head[4];
  return row;
}

AdvantageCoefficients NashQModel::coefficients_all(
    const MarketState& state) const {
  AdvantageCoefficients coef;
  coef.mu.resize(n_agents_);
  coef.l11.resize(n_agents_);
  coef.p12.resize(n_agents_);
  coef.p22.resize(n_agents_);
  coef.psi.resize(n_agents_);
  for (int i = 0; i < n_agents_; ++i) {
    const CoefficientRow row = coefficients(state, i);
    coef.mu[i] = row.mu;
    coef.l11[i] = row.l11;
    coef.p12[i] = row.p12;
    coef.p22[i] = row.p22;
    coef.psi[i] = row.psi;
  }
  return coef;
}

Eigen::VectorXd NashQModel::advantage(const MarketState& state,
                                      const JointAction& action) const {
  const AdvantageCoefficients coef = coefficients_all(state);
  return lq_advantage(coef, action - coef.mu);
}

Eigen::VectorXd NashQModel::q_value(const MarketState& state,
                                    const JointAction& action) const {
  return value_all(state) + advantage(state, action);
}

JointAction NashQModel::nash_action(const MarketState& state) const {
  return coefficients_all(state).mu;
}

void NashQModel::fill_state_columns(const MarketState& state,
                                    Eigen::MatrixXd& value_in,
                                    Eigen::MatrixXd* phi_in,
                                    int base_col) const {
  const int n = n_agents_;
  const double p_n = state.price * scales_.price_scale;
  const double t_n = static_cast<double>(state.step) * scales_.time_scale;
  const auto z = sorted_normalized(state.inventories, scales_.inventory_scale);
  for (int i = 0; i < n; ++i) {
    const int col = base_col + i;
    value_in(0, col) = p_n;
    value_in(1, col) = t_n;
    value_in(2, col) = state.inventories[i] * scales_.inventory_scale;
    int r = 3;
    int j = 0;
    for (const auto& [value, idx] : z) {
      if (idx == i) continue;
      value_in(r++, col) = value;
      if (phi_in != nullptr) {
        (*phi_in)(0, static_cast<Eigen::Index>(col) * (n - 1) + j) = value;
      }
      ++j;
    }
  }
}

AssembledX NashQModel::assemble_x(
    const std::vector<const MarketState*>& states) const {
  AssembledX x;
  x.count = static_cast<int>(states.size());
  const int n = n_agents_;
  const Eigen::Index cols = static_cast<Eigen::Index>(x.count) * n;

  Eigen::MatrixXd value_in(3 + (n - 1), cols);
  x.has_phi = (n > 1);
  Eigen::MatrixXd phi_in;
  if (x.has_phi) phi_in.resize(1, cols * (n - 1));
  for (int m = 0; m < x.count; ++m) {
    fill_state_columns(*states[static_cast<std::size_t>(m)], value_in,
                       x.has_phi ? &phi_in : nullptr, m * n);
  }

  x.v = value_.forward(params_, value_in, x.value_tape).row(0).array();

  Eigen::MatrixXd main_in(3 + cfg_.phi_out, cols);
  main_in.topRows(3) = value_in.topRows(3);
  main_in.bottomRows(cfg_.phi_out).setZero();
  if (x.has_phi) {
    const Eigen::MatrixXd phi_out = phi_.forward(params_, phi_in, x.phi_tape);
    // In-order accumulation keeps the embedding identical to the
    // single-state path for any input permutation.
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (int j = 0; j < n - 1; ++j) {
        main_in.bottomRows(cfg_.phi_out).col(c) +=
            phi_out.col(c * (n - 1) + j);
      }
    }
  }

  const Eigen::MatrixXd head = main_.forward(params_, main_in, x.main_tape);
  x.mu = head.row(0).array();
  const Eigen::ArrayXd raw = head.row(1).array();
  x.l11.resize(cols);
  x.sig.resize(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    x.l11[c] = softplus(raw[c]) + cfg_.epsilon;
    x.sig[c] = sigmoid(raw[c]);
  }
  x.p12 = head.row(2).array();
  x.p22 = head.row(3).array();
  x.psi = head.row(4).array();
  return x;
}

LossBatch NashQModel::loss_forward(
    const std::vector<const Transition*>& batch, double gamma,
    const ParameterSet* bootstrap_params) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const int n = n_agents_;
  const int m_count = static_cast<int>(batch.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(m_count) * n;

  LossBatch fb;
  fb.gamma = gamma;
  std::vector<const MarketState*> states(batch.size());
  for (int m = 0; m < m_count; ++m) {
    states[static_cast<std::size_t>(m)] = &batch[static_cast<std::size_t>(m)]->state;
  }
  fb.x = assemble_x(states);

  fb.value_next_in.resize(3 + (n - 1), cols);
  for (int m = 0; m < m_count; ++m) {
    fill_state_columns(batch[static_cast<std::size_t>(m)]->next_state,
                       fb.value_next_in, nullptr, m * n);
  }
  if (bootstrap_params != nullptr) {
    fb.next_differentiable = false;
    Tape scratch;
    fb.v_next =
        value_.forward(*bootstrap_params, fb.value_next_in, scratch).row(0).array();
  } else {
    fb.v_next =
        value_.forward(params_, fb.value_next_in, fb.value_next_tape).row(0).array();
  }

  fb.boot.resize(cols);
  fb.reward.resize(cols);
  fb.delta.resize(cols);
  for (int m = 0; m < m_count; ++m) {
    const Transition& tr = *batch[static_cast<std::size_t>(m)];
    for (int i = 0; i < n; ++i) {
      const Eigen::Index c = static_cast<Eigen::Index>(m) * n + i;
      fb.boot[c] = tr.terminal ? 0.0 : gamma;
      fb.reward[c] = tr.rewards[i];
      fb.delta[c] = tr.action[i] - fb.x.mu[c];
    }
  }

  fb.s_other.resize(cols);
  fb.t_other.resize(cols);
  for (int m = 0; m < m_count; ++m) {
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = fb.delta[static_cast<Eigen::Index>(m) * n + i];
      sum += d;
      sumsq += d * d;
    }
    for (int i = 0; i < n; ++i) {
      const Eigen::Index c = static_cast<Eigen::Index>(m) * n + i;
      fb.s_other[c] = sum - fb.delta[c];
      fb.t_other[c] = sumsq - fb.delta[c] * fb.delta[c];
    }
  }

  fb.adv = -fb.x.l11 * fb.x.l11 * fb.delta * fb.delta -
           fb.x.p12 * fb.delta * fb.s_other - fb.x.p22 * fb.t_other +
           fb.x.psi * fb.s_other;
  fb.rho = fb.x.v + fb.adv - fb.reward - fb.boot * fb.v_next;
  fb.loss = fb.rho.square().sum() / static_cast<double>(m_count);
  return fb;
}

void NashQModel::refresh_values(LossBatch& fb,
                                const ParameterSet* bootstrap_params) const {
  Tape replay;
  fb.x.v = value_.forward(params_, fb.x.value_tape.input, replay).row(0).array();
  fb.x.value_tape = std::move(replay);
  if (fb.next_differentiable) {
    Tape next;
    fb.v_next = value_.forward(params_, fb.value_next_in, next).row(0).array();
    fb.value_next_tape = std::move(next);
  } else if (bootstrap_params != nullptr) {
    Tape scratch;
    fb.v_next =
        value_.forward(*bootstrap_params, fb.value_next_in, scratch).row(0).array();
  }
  fb.rho = fb.x.v + fb.adv - fb.reward - fb.boot * fb.v_next;
  fb.loss = fb.rho.square().sum() / static_cast<double>(fb.x.count);
}

void NashQModel::loss_backward_value(LossBatch& fb, bool semi_gradient,
                                     Eigen::VectorXd& grad) const {
  const double inv_m = 1.0 / static_cast<double>(fb.x.count);
  Eigen::MatrixXd cot(1, fb.rho.size());
  cot.row(0) = (2.0 * inv_m * fb.rho).matrix().transpose();
  value_.backward(params_, fb.x.value_tape, cot, grad);
  if (fb.next_differentiable && !semi_gradient) {
    Eigen::MatrixXd cot_next(1, fb.rho.size());
    cot_next.row(0) =
        (-2.0 * inv_m * fb.boot * fb.rho).matrix().transpose();
    value_.backward(params_, fb.value_next_tape, cot_next, grad);
  }
}

void NashQModel::loss_backward_advantage(LossBatch& fb,
                                         Eigen::VectorXd& grad) const {
  const double inv_m = 1.0 / static_cast<double>(fb.x.count);
  const Eigen::ArrayXd a = 2.0 * inv_m * fb.rho;
  advantage_backward(fb.x, fb.delta, fb.s_other, fb.t_other, a, grad);
}

void NashQModel::advantage_backward(AssembledX& x, const Eigen::ArrayXd& delta,
                                    const Eigen::ArrayXd& s_other,
                                    const Eigen::ArrayXd& t_other,
                                    const Eigen::ArrayXd& a,
                                    Eigen::VectorXd& grad) const {
  const int n = n_agents_;
  const Eigen::Index cols = delta.size();
  Eigen::MatrixXd head_cot(5, cols);
  for (int m = 0; m < x.count; ++m) {
    double sum_apd = 0.0, sum_ap22 = 0.0, sum_apsi = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::Index c = static_cast<Eigen::Index>(m) * n + i;
      sum_apd += a[c] * x.p12[c] * delta[c];
      sum_ap22 += a[c] * x.p22[c];
      sum_apsi += a[c] * x.psi[c];
    }
    for (int i = 0; i < n; ++i) {
      const Eigen::Index c = static_cast<Eigen::Index>(m) * n + i;
      const double d = delta[c];
      // dL/d(delta_c): own-row term plus the cross terms of all other rows.
      const double own = a[c] * (-2.0 * x.l11[c] * x.l11[c] * d -
                                 x.p12[c] * s_other[c]);
      const double others = -(sum_apd - a[c] * x.p12[c] * d) -
                            2.0 * d * (sum_ap22 - a[c] * x.p22[c]) +
                            (sum_apsi - a[c] * x.psi[c]);
      head_cot(0, c) = -(own + others);  // delta = u - mu
      head_cot(1, c) = a[c] * (-2.0 * x.l11[c] * d * d) * x.sig[c];
      head_cot(2, c) = -a[c] * d * s_other[c];
      head_cot(3, c) = -a[c] * t_other[c];
      head_cot(4, c) = a[c] * s_other[c];
    }
  }

  const Eigen::MatrixXd main_in_cot =
      main_.backward(params_, x.main_tape, head_cot, grad);
  if (x.has_phi) {
    Eigen::MatrixXd phi_cot(cfg_.phi_out, cols * (n - 1));
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (int j = 0; j < n - 1; ++j) {
        phi_cot.col(c * (n - 1) + j) =
            main_in_cot.col(c).tail(cfg_.phi_out);
      }
    }
    phi_.backward(params_, x.phi_tape, phi_cot, grad);
  }
}

double NashQModel::sample_loss(const Transition& tr, double gamma) const {
  const Eigen::VectorXd q = q_value(tr.state, tr.action);
  Eigen::VectorXd target = tr.rewards;
  if (!tr.terminal) target += gamma * value_all(tr.next_state);
  return (q - target).squaredNorm();
}

double NashQModel::batch_loss(const std::vector<const Transition*>& batch,
                              double gamma) const {
  return loss_forward(batch, gamma).loss;
}

void NashQModel::q_value_grad(const MarketState& state,
                              const JointAction& action,
                              const Eigen::VectorXd& cotangent,
                              Eigen::VectorXd& grad) const {
  AssembledX x = assemble_x({&state});
  const Eigen::Index n = n_agents_;
  Eigen::ArrayXd delta(n), s_other(n), t_other(n);
  for (Eigen::Index i = 0; i < n; ++i) delta[i] = action[i] - x.mu[i];
  const double sum = delta.sum();
  const double sumsq = delta.square().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    s_other[i] = sum - delta[i];
    t_other[i] = sumsq - delta[i] * delta[i];
  }
  Eigen::MatrixXd cot(1, n);
  cot.row(0) = cotangent.transpose();
  value_.backward(params_, x.value_tape, cot, grad);
  advantage_backward(x, delta, s_other, t_other, cotangent.array(), grad);
}

}  // namespace nashdqn
