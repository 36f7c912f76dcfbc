#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rpslab/rng.hpp"

namespace rpslab {

enum class Activation : int { Relu = 0, Identity = 1 };

// Regression batch for masked Q updates: each sample constrains the output
// for exactly one action (action_mask) toward target_q[action_mask].
struct TrainBatch {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> target_q;
  std::vector<int> action_mask;

  std::size_t size() const { return inputs.size(); }
};

// Dense feed-forward network, double precision, linear output layer,
// configurable hidden nonlinearity. All parameters live in one flat array
// (per layer: weights row-major [out x in], then biases) so the optimizer
// and finite-difference checks can treat them uniformly.
class QNetwork {
 public:
  QNetwork() = default;
  // dims = {input, hidden..., output}; parameters start at zero.
  QNetwork(std::vector<int> dims, Activation hidden_activation);

  // Uniform fan-in/fan-out scaled init: +-sqrt(6 / (fan_in + fan_out)).
  void init_uniform(Rng& rng);

  // Affine-then-activation composition; output layer is linear.
  // Throws std::invalid_argument on an input width mismatch.
  std::vector<double> forward(std::span<const double> input) const;

  const std::vector<int>& dims() const { return dims_; }
  Activation activation() const { return activation_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layer_count() const { return static_cast<int>(dims_.size()) - 1; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> weights(int layer);
  std::span<const double> weights(int layer) const;
  std::span<double> biases(int layer);
  std::span<const double> biases(int layer) const;

  bool same_shape(const QNetwork& other) const {
    return dims_ == other.dims_ && activation_ == other.activation_;
  }

 private:
  std::vector<int> dims_;
  Activation activation_ = Activation::Relu;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offset_, bias_offset_;
};

// One gradient step over flat parameters. Adam keeps per-parameter moment
// accumulators shaped like the parameter array; SGD is plain descent.
class Optimizer {
 public:
  enum class Kind { Sgd, Adam };

  Optimizer(Kind kind, double learning_rate, std::size_t parameter_count);

  void step(std::span<double> params, std::span<const double> grads);

  Kind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  long step_count() const { return t_; }

 private:
  Kind kind_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;  // Adam moments
};

// Loss and flat analytic gradient of the masked-action MSE, no update:
//   L = mean_b (q(x_b)[mask_b] - target_q_b[mask_b])^2
double batch_gradients(const QNetwork& net, const TrainBatch& batch,
                       std::vector<double>& grads);

// One optimizer step on the masked MSE. Returns the pre-step loss.
// Throws std::invalid_argument on an empty/misshapen batch and
// std::runtime_error when the loss is non-finite (divergence).
double train_batch(QNetwork& net, Optimizer& opt, const TrainBatch& batch);

// Central finite differences against the analytic gradient, parameter by
// parameter; returns the worst relative error.
double gradient_check(const QNetwork& net, const TrainBatch& batch, double epsilon);

// Copies parameters; target must have identical shape (throws otherwise).
void clone_into_target(const QNetwork& online, QNetwork& target);

// Checkpoint container (layout in README): magic "RPSLABQN", format version,
// activation tag, layer dims, then the flat parameter array as little-endian
// float64.
void save_network(const QNetwork& net, std::ostream& out);
QNetwork load_network(std::istream& in);
void save_network_file(const QNetwork& net, const std::string& path);
QNetwork load_network_file(const std::string& path);

}  // namespace rpslab
