#include "rpslab/net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace rpslab {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

double activate(Activation act, double z) {
  return act == Activation::Relu ? (z > 0.0 ? z : 0.0) : z;
}

double activate_grad(Activation act, double z) {
  return act == Activation::Relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

// y = W x + b, W row-major [out x in].
void affine(std::span<const double> w, std::span<const double> b,
            std::span<const double> x, std::span<double> y) {
  const std::size_t in = x.size(), out = y.size();
  for (std::size_t o = 0; o < out; ++o) {
    const double* row = w.data() + o * in;
    double acc = b[o];
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

}  // namespace

QNetwork::QNetwork(std::vector<int> dims, Activation hidden_activation)
    : dims_(std::move(dims)), activation_(hidden_activation) {
  if (dims_.size() < 2) throw std::invalid_argument("network needs at least two layer dims");
  for (int d : dims_) {
    if (d < 1) throw std::invalid_argument("layer dims must be positive");
  }
  std::size_t total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    weight_offset_.push_back(total);
    total += static_cast<std::size_t>(dims_[l + 1]) * dims_[l];
    bias_offset_.push_back(total);
    total += static_cast<std::size_t>(dims_[l + 1]);
  }
  params_.assign(total, 0.0);
}

void QNetwork::init_uniform(Rng& rng) {
  for (int l = 0; l < layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / (dims_[l] + dims_[l + 1]));
    for (double& w : weights(l)) w = rng.uniform(-bound, bound);
    for (double& b : biases(l)) b = 0.0;
  }
}

std::span<double> QNetwork::weights(int layer) {
  return std::span<double>(params_).subspan(
      weight_offset_[layer], static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer]);
}

std::span<const double> QNetwork::weights(int layer) const {
  return std::span<const double>(params_).subspan(
      weight_offset_[layer], static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer]);
}

std::span<double> QNetwork::biases(int layer) {
  return std::span<double>(params_).subspan(bias_offset_[layer],
                                            static_cast<std::size_t>(dims_[layer + 1]));
}

std::span<const double> QNetwork::biases(int layer) const {
  return std::span<const double>(params_).subspan(
      bias_offset_[layer], static_cast<std::size_t>(dims_[layer + 1]));
}

std::vector<double> QNetwork::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    throw std::invalid_argument("forward: input width " + std::to_string(input.size()) +
                                " does not match network input dim " +
                                std::to_string(input_dim()));
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (int l = 0; l < layer_count(); ++l) {
    next.assign(static_cast<std::size_t>(dims_[l + 1]), 0.0);
    affine(weights(l), biases(l), cur, next);
    if (l + 1 < layer_count()) {
      for (double& z : next) z = activate(activation_, z);
    }
    cur.swap(next);
  }
  return cur;
}

Optimizer::Optimizer(Kind kind, double learning_rate, std::size_t parameter_count)
    : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (kind_ == Kind::Adam) {
    m_.assign(parameter_count, 0.0);
    v_.assign(parameter_count, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer: parameter/gradient size mismatch");
  }
  ++t_;
  if (kind_ == Kind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grads[i];
    return;
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("optimizer: moment/parameter size mismatch");
  }
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

namespace {

void check_batch(const QNetwork& net, const TrainBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("train batch is empty");
  if (batch.target_q.size() != batch.size() || batch.action_mask.size() != batch.size()) {
    throw std::invalid_argument("train batch field lengths disagree");
  }
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (static_cast<int>(batch.inputs[b].size()) != net.input_dim()) {
      throw std::invalid_argument("train batch input width mismatch");
    }
    if (static_cast<int>(batch.target_q[b].size()) != net.output_dim()) {
      throw std::invalid_argument("train batch target width mismatch");
    }
    if (batch.action_mask[b] < 0 || batch.action_mask[b] >= net.output_dim()) {
      throw std::invalid_argument("train batch action mask out of range");
    }
  }
}

}  // namespace

double batch_gradients(const QNetwork& net, const TrainBatch& batch,
                       std::vector<double>& grads) {
  check_batch(net, batch);
  const int layers = net.layer_count();
  const auto& dims = net.dims();
  grads.assign(net.parameters().size(), 0.0);

  // Per-layer activations (post-nonlinearity) and pre-activations.
  std::vector<std::vector<double>> acts(static_cast<std::size_t>(layers) + 1);
  std::vector<std::vector<double>> preacts(static_cast<std::size_t>(layers));
  std::vector<double> delta, delta_prev;

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;

  // Gradient spans into the flat array, mirroring the parameter layout.
  std::vector<std::span<double>> gw(static_cast<std::size_t>(layers));
  std::vector<std::span<double>> gb(static_cast<std::size_t>(layers));
  {
    std::size_t off = 0;
    for (int l = 0; l < layers; ++l) {
      const std::size_t nw = static_cast<std::size_t>(dims[l + 1]) * dims[l];
      gw[l] = std::span<double>(grads).subspan(off, nw);
      off += nw;
      gb[l] = std::span<double>(grads).subspan(off, static_cast<std::size_t>(dims[l + 1]));
      off += static_cast<std::size_t>(dims[l + 1]);
    }
  }

  for (std::size_t b = 0; b < batch.size(); ++b) {
    // Forward, caching layer inputs and pre-activations.
    acts[0].assign(batch.inputs[b].begin(), batch.inputs[b].end());
    for (int l = 0; l < layers; ++l) {
      preacts[l].assign(static_cast<std::size_t>(dims[l + 1]), 0.0);
      affine(net.weights(l), net.biases(l), acts[l], preacts[l]);
      acts[l + 1] = preacts[l];
      if (l + 1 < layers) {
        for (double& z : acts[l + 1]) z = activate(net.activation(), z);
      }
    }

    const int mask = batch.action_mask[b];
    const double err = acts[layers][mask] - batch.target_q[b][mask];
    loss += err * err;

    // Output delta: masked entry only.
    delta.assign(static_cast<std::size_t>(dims[layers]), 0.0);
    delta[mask] = 2.0 * err * inv_b;

    for (int l = layers - 1; l >= 0; --l) {
      const std::size_t in = static_cast<std::size_t>(dims[l]);
      const std::size_t out = static_cast<std::size_t>(dims[l + 1]);
      const std::span<const double> x = acts[l];
      // dL/dW and dL/db
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* grow = gw[l].data() + o * in;
        for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
        gb[l][o] += d;
      }
      if (l == 0) break;
      // delta for the layer below: W^T delta, gated by the activation.
      delta_prev.assign(in, 0.0);
      const std::span<const double> w = net.weights(l);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* row = w.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) delta_prev[i] += d * row[i];
      }
      for (std::size_t i = 0; i < in; ++i) {
        delta_prev[i] *= activate_grad(net.activation(), preacts[l - 1][i]);
      }
      delta.swap(delta_prev);
    }
  }

  return loss * inv_b;
}

double train_batch(QNetwork& net, Optimizer& opt, const TrainBatch& batch) {
  static thread_local std::vector<double> grads;
  const double loss = batch_gradients(net, batch, grads);
  if (!std::isfinite(loss)) {
    throw std::runtime_error("train_batch: non-finite loss (divergence)");
  }
  opt.step(net.parameters(), grads);
  return loss;
}

double gradient_check(const QNetwork& net, const TrainBatch& batch, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");

  std::vector<double> analytic;
  batch_gradients(net, batch, analytic);

  QNetwork probe = net;
  std::span<double> p = probe.parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + epsilon;
    double loss_hi = 0.0;
    {
      std::vector<double> scratch;
      loss_hi = batch_gradients(probe, batch, scratch);
    }
    p[i] = saved - epsilon;
    double loss_lo = 0.0;
    {
      std::vector<double> scratch;
      loss_lo = batch_gradients(probe, batch, scratch);
    }
    p[i] = saved;

    const double numeric = (loss_hi - loss_lo) / (2.0 * epsilon);
    const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-8);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

void clone_into_target(const QNetwork& online, QNetwork& target) {
  if (!online.same_shape(target)) {
    throw std::invalid_argument("clone_into_target: shape mismatch");
  }
  std::copy(online.parameters().begin(), online.parameters().end(),
            target.parameters().begin());
}

namespace {

constexpr char kMagic[8] = {'R', 'P', 'S', 'L', 'A', 'B', 'Q', 'N'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("network checkpoint truncated");
  return v;
}

}  // namespace

void save_network(const QNetwork& net, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(net.activation()));
  write_u32(out, static_cast<std::uint32_t>(net.dims().size()));
  for (int d : net.dims()) write_u32(out, static_cast<std::uint32_t>(d));
  const auto params = net.parameters();
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("network checkpoint write failed");
}

QNetwork load_network(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("not a network checkpoint (bad magic)");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t act = read_u32(in);
  if (act > 1) throw std::runtime_error("unknown activation tag in checkpoint");
  const std::uint32_t ndims = read_u32(in);
  if (ndims < 2 || ndims > 64) throw std::runtime_error("implausible checkpoint layer count");
  std::vector<int> dims(ndims);
  for (auto& d : dims) d = static_cast<int>(read_u32(in));

  QNetwork net(dims, static_cast<Activation>(act));
  auto params = net.parameters();
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!in) throw std::runtime_error("network checkpoint truncated");
  return net;
}

void save_network_file(const QNetwork& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_network(net, out);
}

QNetwork load_network_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_network(in);
}

}  // namespace rpslab
