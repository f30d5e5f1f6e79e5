#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "nashdqn/market.hpp"
#include "nashdqn/net.hpp"

namespace nashdqn {

// Network sizes and the curvature floor of the positivity map
// l11 = softplus(raw) + epsilon.
struct ModelConfig {
  std::vector<int> value_hidden{20, 60, 60, 20};
  std::vector<int> phi_hidden{20, 20, 20};
  int phi_out = 20;
  std::vector<int> main_hidden{20, 40, 20};
  double epsilon = 1e-3;
};

// Per-agent coefficient row of the locally linear-quadratic advantage:
// A_i(x; u) = -l11^2 (u_i - mu)^2 - p12 (u_i - mu_i) sum_{j!=i}(u_j - mu_j)
//             - p22 sum_{j!=i}(u_j - mu_j)^2 + psi sum_{j!=i}(u_j - mu_j).
struct CoefficientRow {
  double mu = 0.0;
  double l11 = 0.0;  // Cholesky factor of the own-action curvature, > 0
  double p12 = 0.0;
  double p22 = 0.0;
  double psi = 0.0;
};

// All rows at one state; shared networks evaluated once per agent.
struct AdvantageCoefficients {
  Eigen::VectorXd mu, l11, p12, p22, psi;
};

// Evaluates the quadratic form above for every agent given all rows and the
// centered actions delta = u - mu.
Eigen::VectorXd lq_advantage(const AdvantageCoefficients& coef,
                             const Eigen::VectorXd& delta);

// Model inputs for one agent: a non-invariant block (normalized price, time,
// own inventory) and the other agents' normalized inventories in canonical
// (ascending) order, which realizes the unordered-set semantics exactly.
struct FeatureVector {
  Eigen::Vector3d non_invariant;
  Eigen::VectorXd invariant_sorted;

  Eigen::VectorXd value_input() const;
};

// Forward cache of the x-side model evaluation for a batch of transitions.
struct AssembledX {
  int count = 0;  // number of transitions
  Tape value_tape, phi_tape, main_tape;
  bool has_phi = false;
  Eigen::ArrayXd v;                          // per (sample, agent)
  Eigen::ArrayXd mu, l11, sig, p12, p22, psi;
};

// Forward cache of one Bellman-loss evaluation, consumed by the backward
// passes below.
struct LossBatch {
  AssembledX x;
  Eigen::MatrixXd value_next_in;
  Tape value_next_tape;
  bool next_differentiable = true;  // false when a target copy was used
  Eigen::ArrayXd v_next;
  Eigen::ArrayXd boot;  // gamma for non-terminal columns, 0 at terminals
  Eigen::ArrayXd reward;
  Eigen::ArrayXd delta, s_other, t_other, adv, rho;
  double gamma = 1.0;
  double loss = 0.0;
};

// The Nash Q-function model: a shared per-agent value network plus a shared
// coefficient network with a permutation-invariant embedding of the other
// agents' inventories. Q(x; u) = V(x) + A(x; u) per agent, and the
// model-implied equilibrium action is the mu head read off directly.
class NashQModel {
 public:
  NashQModel(int n_agents, ModelConfig cfg, FeatureScales scales);

  void init_params(std::uint64_t seed);

  int n_agents() const { return n_agents_; }
  const ModelConfig& config() const { return cfg_; }
  const FeatureScales& scales() const { return scales_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const Mlp& value_net() const { return value_; }
  const Mlp& phi_net() const { return phi_; }
  const Mlp& main_net() const { return main_; }

  FeatureVector features(const MarketState& state, int agent) const;

  // Sum-pooled inner-network embedding of the invariant set; the empty set
  // (single-agent games) embeds to the zero vector.
  Eigen::VectorXd perm_invariant_embed(
      const Eigen::VectorXd& invariant_sorted) const;

  Eigen::VectorXd value_all(const MarketState& state) const;
  CoefficientRow coefficients(const MarketState& state, int agent) const;
  AdvantageCoefficients coefficients_all(const MarketState& state) const;
  Eigen::VectorXd advantage(const MarketState& state,
                            const JointAction& action) const;
  Eigen::VectorXd q_value(const MarketState& state,
                          const JointAction& action) const;
  JointAction nash_action(const MarketState& state) const;

  // Squared Nash-Bellman residual summed over agents; the bootstrap value is
  // zero at terminal transitions.
  double sample_loss(const Transition& tr, double gamma) const;
  double batch_loss(const std::vector<const Transition*>& batch,
                    double gamma) const;

  LossBatch loss_forward(const std::vector<const Transition*>& batch,
                         double gamma,
                         const ParameterSet* bootstrap_params = nullptr) const;
  // Re-runs the value-side forward (after a value update) and refreshes the
  // residuals; advantage caches stay valid because theta_A is untouched.
  void refresh_values(LossBatch& fb,
                      const ParameterSet* bootstrap_params = nullptr) const;
  void loss_backward_value(LossBatch& fb, bool semi_gradient,
                           Eigen::VectorXd& grad) const;
  void loss_backward_advantage(LossBatch& fb, Eigen::VectorXd& grad) const;

  // d<cotangent, Q(x; u)>/dparams, for gradient verification of the
  // assembled quadratic form.
  void q_value_grad(const MarketState& state, const JointAction& action,
                    const Eigen::VectorXd& cotangent,
                    Eigen::VectorXd& grad) const;

 private:
  AssembledX assemble_x(const std::vector<const MarketState*>& states) const;
  void advantage_backward(AssembledX& x, const Eigen::ArrayXd& delta,
                          const Eigen::ArrayXd& s_other,
                          const Eigen::ArrayXd& t_other,
                          const Eigen::ArrayXd& a, Eigen::VectorXd& grad) const;
  void fill_state_columns(const MarketState& state, Eigen::MatrixXd& value_in,
                          Eigen::MatrixXd* phi_in, int base_col) const;

  int n_agents_;
  ModelConfig cfg_;
  FeatureScales scales_;
  ParameterSet params_;
  Mlp value_;
  Mlp phi_;
  Mlp main_;
};

double softplus(double x);
double sigmoid(double x);

}  // namespace nashdqn
