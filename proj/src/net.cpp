#include "nashdqn/net.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nashdqn {

int ParameterSet::add_tensor(const std::string& name, Partition partition,
                             int rows, int cols) {
  TensorInfo info;
  info.name = name;
  info.partition = partition;
  info.rows = rows;
  info.cols = cols;
  info.offset = flat_.size();
  tensors_.push_back(info);
  flat_.conservativeResize(flat_.size() +
                           static_cast<Eigen::Index>(rows) * cols);
  flat_.tail(static_cast<Eigen::Index>(rows) * cols).setZero();
  return static_cast<int>(tensors_.size()) - 1;
}

Eigen::Map<Eigen::MatrixXd> ParameterSet::matrix(int idx) {
  const TensorInfo& t = tensors_.at(idx);
  return {flat_.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<const Eigen::MatrixXd> ParameterSet::matrix(int idx) const {
  const TensorInfo& t = tensors_.at(idx);
  return {flat_.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<Eigen::MatrixXd> ParameterSet::matrix_in(Eigen::VectorXd& flat,
                                                    int idx) const {
  const TensorInfo& t = tensors_.at(idx);
  if (flat.size() != flat_.size()) {
    throw std::invalid_argument("flat buffer size mismatch");
  }
  return {flat.data() + t.offset, t.rows, t.cols};
}

bool ParameterSet::in_scope(int idx, UpdateScope scope) const {
  if (scope == UpdateScope::All) return true;
  const Partition p = tensors_.at(idx).partition;
  return (scope == UpdateScope::Value) ? p == Partition::Value
                                       : p == Partition::Advantage;
}

void sgd_update(ParameterSet& params, const Eigen::VectorXd& grad, double lr,
                UpdateScope scope) {
  if (grad.size() != params.size()) {
    throw std::invalid_argument("gradient/parameter size mismatch");
  }
  for (int i = 0; i < static_cast<int>(params.tensors().size()); ++i) {
    if (!params.in_scope(i, scope)) continue;
    const TensorInfo& t = params.info(i);
    const Eigen::Index n = static_cast<Eigen::Index>(t.rows) * t.cols;
    params.flat().segment(t.offset, n) -= lr * grad.segment(t.offset, n);
  }
}

Optimizer::Optimizer(OptimizerKind kind, double lr_value, double lr_advantage)
    : kind_(kind), lr_value_(lr_value), lr_advantage_(lr_advantage) {}

void Optimizer::apply(ParameterSet& params, const Eigen::VectorXd& grad,
                      UpdateScope scope) {
  const double lr = (scope == UpdateScope::Advantage) ? lr_advantage_
                                                      : lr_value_;
  if (kind_ == OptimizerKind::Sgd) {
    if (scope == UpdateScope::All) {
      sgd_update(params, grad, lr_value_, UpdateScope::Value);
      sgd_update(params, grad, lr_advantage_, UpdateScope::Advantage);
    } else {
      sgd_update(params, grad, lr, scope);
    }
    return;
  }

  if (m_.size() != params.size()) {
    m_ = Eigen::VectorXd::Zero(params.size());
    v_ = Eigen::VectorXd::Zero(params.size());
  }
  if (scope == UpdateScope::All) {
    apply(params, grad, UpdateScope::Value);
    apply(params, grad, UpdateScope::Advantage);
    return;
  }
  long& step = (scope == UpdateScope::Value) ? step_value_ : step_advantage_;
  ++step;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  for (int i = 0; i < static_cast<int>(params.tensors().size()); ++i) {
    if (!params.in_scope(i, scope)) continue;
    const TensorInfo& t = params.info(i);
    const Eigen::Index n = static_cast<Eigen::Index>(t.rows) * t.cols;
    auto m = m_.segment(t.offset, n);
    auto v = v_.segment(t.offset, n);
    const auto g = grad.segment(t.offset, n);
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    params.flat().segment(t.offset, n).array() -=
        lr * (m.array() / bc1) /
        ((v.array() / bc2).sqrt() + kEps);
  }
}

void NetworkSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("NetworkSpec: dims must be >= 1");
  }
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("NetworkSpec: dims must be >= 1");
  }
}

Mlp::Mlp(ParameterSet& params, NetworkSpec spec, const std::string& prefix,
         Partition partition)
    : spec_(std::move(spec)) {
  spec_.validate();
  int in = spec_.input_dim;
  std::vector<int> outs = spec_.hidden;
  outs.push_back(spec_.output_dim);
  for (std::size_t l = 0; l < outs.size(); ++l) {
    const std::string tag = std::to_string(l);
    weight_idx_.push_back(
        params.add_tensor(prefix + ".w" + tag, partition, outs[l], in));
    bias_idx_.push_back(
        params.add_tensor(prefix + ".b" + tag, partition, outs[l], 1));
    in = outs[l];
  }
}

void Mlp::init(ParameterSet& params, Rng& rng) const {
  for (std::size_t l = 0; l < weight_idx_.size(); ++l) {
    auto w = params.matrix(weight_idx_[l]);
    const double scale = std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = scale * rng.normal();
      }
    }
    params.matrix(bias_idx_[l]).setZero();
  }
}

Eigen::VectorXd Mlp::forward(const ParameterSet& params,
                             const Eigen::VectorXd& input) const {
  if (input.size() != spec_.input_dim) {
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  }
  Eigen::VectorXd a = input;
  const std::size_t layers = weight_idx_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::VectorXd z = params.matrix(weight_idx_[l]) * a;
    z += params.matrix(bias_idx_[l]).col(0);
    if (l + 1 < layers) {
      a = z.cwiseMax(0.0);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

double Mlp::activation_margin(const ParameterSet& params,
                              const Eigen::VectorXd& input) const {
  if (input.size() != spec_.input_dim) {
    throw std::invalid_argument("Mlp::activation_margin: dimension mismatch");
  }
  double margin = std::numeric_limits<double>::infinity();
  Eigen::VectorXd a = input;
  const std::size_t layers = weight_idx_.size();
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::VectorXd z = params.matrix(weight_idx_[l]) * a;
    z += params.matrix(bias_idx_[l]).col(0);
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    a = z.cwiseMax(0.0);
  }
  return margin;
}

Eigen::MatrixXd Mlp::forward(const ParameterSet& params,
                             const Eigen::MatrixXd& input, Tape& tape) const {
  if (input.rows() != spec_.input_dim) {
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  }
  tape.input = input;
  tape.hidden.clear();
  tape.consumed = false;
  const std::size_t layers = weight_idx_.size();
  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = params.matrix(weight_idx_[l]) * a;
    z.colwise() += params.matrix(bias_idx_[l]).col(0);
    if (l + 1 < layers) {
      a = z.cwiseMax(0.0);
      tape.hidden.push_back(a);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::MatrixXd Mlp::backward(const ParameterSet& params, Tape& tape,
                              const Eigen::MatrixXd& output_cotangent,
                              Eigen::VectorXd& grad) const {
  if (tape.consumed) {
    throw std::logic_error("Mlp::backward: tape already consumed");
  }
  if (tape.hidden.size() + 1 != weight_idx_.size() ||
      output_cotangent.rows() != spec_.output_dim ||
      output_cotangent.cols() != tape.input.cols()) {
    throw std::invalid_argument("Mlp::backward: tape/cotangent mismatch");
  }
  if (grad.size() != params.size()) {
    throw std::invalid_argument("Mlp::backward: grad buffer size mismatch");
  }
  tape.consumed = true;

  Eigen::MatrixXd delta = output_cotangent;
  for (int l = static_cast<int>(weight_idx_.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd& below =
        (l == 0) ? tape.input : tape.hidden[static_cast<std::size_t>(l) - 1];
    {
      const TensorInfo& wi = params.info(weight_idx_[l]);
      Eigen::Map<Eigen::MatrixXd> dw(grad.data() + wi.offset, wi.rows,
                                     wi.cols);
      dw.noalias() += delta * below.transpose();
      const TensorInfo& bi = params.info(bias_idx_[l]);
      Eigen::Map<Eigen::VectorXd> db(grad.data() + bi.offset, bi.rows);
      db += delta.rowwise().sum();
    }
    if (l == 0) {
      return params.matrix(weight_idx_[0]).transpose() * delta;
    }
    Eigen::MatrixXd up = params.matrix(weight_idx_[l]).transpose() * delta;
    // ReLU gate: post-activation > 0 iff pre-activation > 0.
    delta = up.cwiseProduct(
        (below.array() > 0.0).cast<double>().matrix());
  }
  return {};
}

}  // namespace nashdqn
