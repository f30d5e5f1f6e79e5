#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "nashdqn/rng.hpp"

namespace nashdqn {

// Which half of the parameter set a tensor belongs to. The training loop
// alternates updates between the two partitions.
enum class Partition { Value, Advantage };
enum class UpdateScope { Value, Advantage, All };

struct TensorInfo {
  std::string name;
  Partition partition = Partition::Value;
  int rows = 0;
  int cols = 0;
  Eigen::Index offset = 0;  // position in the flat vector
};

// All trainable scalars of a model, stored flat with a stable tensor
// registry on top. Gradients use plain vectors of the same flat length.
class ParameterSet {
 public:
  int add_tensor(const std::string& name, Partition partition, int rows,
                 int cols);

  Eigen::Map<Eigen::MatrixXd> matrix(int idx);
  Eigen::Map<const Eigen::MatrixXd> matrix(int idx) const;
  Eigen::Map<Eigen::MatrixXd> matrix_in(Eigen::VectorXd& flat, int idx) const;

  const TensorInfo& info(int idx) const { return tensors_.at(idx); }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  Eigen::Index size() const { return flat_.size(); }

  Eigen::VectorXd& flat() { return flat_; }
  const Eigen::VectorXd& flat() const { return flat_; }

  bool in_scope(int idx, UpdateScope scope) const;

 private:
  std::vector<TensorInfo> tensors_;
  Eigen::VectorXd flat_;
};

// p <- p - lr * g, restricted to tensors in the selected partition.
void sgd_update(ParameterSet& params, const Eigen::VectorXd& grad, double lr,
                UpdateScope scope);

enum class OptimizerKind { Sgd, Adam };

// First-order updater over a ParameterSet. Plain constant-rate SGD by
// default; Adam is available for configurations whose gradient scales make
// raw SGD steps unstable. Moment state is tracked per partition so that
// alternating updates never touch the other partition's tensors.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr_value, double lr_advantage);

  void apply(ParameterSet& params, const Eigen::VectorXd& grad,
             UpdateScope scope);
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  double lr_value_;
  double lr_advantage_;
  // Adam state
  Eigen::VectorXd m_, v_;
  long step_value_ = 0;
  long step_advantage_ = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
};

// Fixed-topology fully connected network: affine + ReLU on hidden layers,
// identity output.
struct NetworkSpec {
  int input_dim = 1;
  std::vector<int> hidden;
  int output_dim = 1;

  void validate() const;
};

// Forward-pass record for one batch: the input and every post-activation,
// consumed exactly once by backward().
struct Tape {
  Eigen::MatrixXd input;                // input_dim x batch
  std::vector<Eigen::MatrixXd> hidden;  // post-ReLU activations per layer
  bool consumed = false;
};

class Mlp {
 public:
  // Registers this network's tensors (weights "<prefix>.w<l>", biases
  // "<prefix>.b<l>") in `params` under the given partition.
  Mlp(ParameterSet& params, NetworkSpec spec, const std::string& prefix,
      Partition partition);

  const NetworkSpec& spec() const { return spec_; }

  // He-scaled zero-mean weights, zero biases.
  void init(ParameterSet& params, Rng& rng) const;

  Eigen::VectorXd forward(const ParameterSet& params,
                          const Eigen::VectorXd& input) const;

  // Smallest |pre-activation| over the hidden layers; +inf for a purely
  // linear network. Finite-difference checks use this to pick evaluation
  // points that keep every ReLU strictly on one side across the stencil.
  double activation_margin(const ParameterSet& params,
                           const Eigen::VectorXd& input) const;
  // Columns of `input` are independent samples.
  Eigen::MatrixXd forward(const ParameterSet& params,
                          const Eigen::MatrixXd& input, Tape& tape) const;

  // Accumulates d<cotangent, output>/dparams into `grad` (flat, same indexing
  // as `params`) and returns the input cotangent. Marks the tape consumed.
  Eigen::MatrixXd backward(const ParameterSet& params, Tape& tape,
                           const Eigen::MatrixXd& output_cotangent,
                           Eigen::VectorXd& grad) const;

 private:
  NetworkSpec spec_;
  std::vector<int> weight_idx_;
  std::vector<int> bias_idx_;
};

}  // namespace nashdqn
