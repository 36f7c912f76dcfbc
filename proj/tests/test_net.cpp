#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rpslab/net.hpp"
#include "rpslab/rng.hpp"

using namespace rpslab;

namespace {

void fill(std::span<double> dst, std::initializer_list<double> values) {
  REQUIRE(dst.size() == values.size());
  std::size_t i = 0;
  for (double v : values) dst[i++] = v;
}

TrainBatch random_batch(const QNetwork& net, Rng& rng, int size) {
  TrainBatch batch;
  for (int b = 0; b < size; ++b) {
    std::vector<double> x(static_cast<std::size_t>(net.input_dim()));
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<double> t(static_cast<std::size_t>(net.output_dim()));
    for (double& v : t) v = rng.uniform(-2.0, 2.0);
    batch.inputs.push_back(std::move(x));
    batch.target_q.push_back(std::move(t));
    batch.action_mask.push_back(rng.uniform_index(net.output_dim()));
  }
  return batch;
}

}  // namespace

TEST_CASE("forward pass matches a hand-computed two-layer network") {
  QNetwork net({2, 2, 1}, Activation::Relu);
  fill(net.weights(0), {1, 2, 3, 4});
  fill(net.biases(0), {0.5, -1});
  fill(net.weights(1), {1, -1});
  fill(net.biases(1), {0.25});

  // x = (1,-1): pre-activations (-0.5, -2) clamp to zero, output = bias.
  const std::vector<double> y1 = net.forward(std::vector<double>{1, -1});
  REQUIRE(y1.size() == 1);
  CHECK(y1[0] == doctest::Approx(0.25).epsilon(1e-15));

  // x = (1,1): pre-activations (3.5, 6) pass through, output 3.5 - 6 + 0.25.
  const std::vector<double> y2 = net.forward(std::vector<double>{1, 1});
  CHECK(y2[0] == doctest::Approx(-2.25).epsilon(1e-15));
}

TEST_CASE("identity activation composes to a plain affine map") {
  QNetwork net({3, 2}, Activation::Identity);
  fill(net.weights(0), {1, 0, -1, 2, 1, 0});
  fill(net.biases(0), {0.5, -0.5});
  const std::vector<double> y = net.forward(std::vector<double>{2, 3, 4});
  CHECK(y[0] == doctest::Approx(2 - 4 + 0.5).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(4 + 3 - 0.5).epsilon(1e-15));
}

TEST_CASE("forward rejects mismatched input width") {
  QNetwork net({4, 3}, Activation::Relu);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("network construction validates dims") {
  CHECK_THROWS_AS(QNetwork({5}, Activation::Relu), std::invalid_argument);
  CHECK_THROWS_AS(QNetwork({5, 0, 3}, Activation::Relu), std::invalid_argument);
}

TEST_CASE("uniform init respects fan bounds, zeroes biases and is seeded") {
  QNetwork net({10, 20, 3}, Activation::Relu);
  Rng rng(42);
  net.init_uniform(rng);

  const double bound0 = std::sqrt(6.0 / (10 + 20));
  for (double w : net.weights(0)) {
    CHECK(w >= -bound0);
    CHECK(w <= bound0);
  }
  const double bound1 = std::sqrt(6.0 / (20 + 3));
  for (double w : net.weights(1)) {
    CHECK(w >= -bound1);
    CHECK(w <= bound1);
  }
  for (double b : net.biases(0)) CHECK(b == 0.0);
  for (double b : net.biases(1)) CHECK(b == 0.0);

  QNetwork again({10, 20, 3}, Activation::Relu);
  Rng rng_same(42);
  again.init_uniform(rng_same);
  CHECK(std::equal(net.parameters().begin(), net.parameters().end(),
                   again.parameters().begin()));

  QNetwork other({10, 20, 3}, Activation::Relu);
  Rng rng_diff(43);
  other.init_uniform(rng_diff);
  CHECK_FALSE(std::equal(net.parameters().begin(), net.parameters().end(),
                         other.parameters().begin()));
}

TEST_CASE("loss only sees the masked action's output") {
  QNetwork net({2, 3}, Activation::Identity);
  Rng rng(7);
  net.init_uniform(rng);

  TrainBatch batch;
  batch.inputs = {{0.3, -0.7}, {1.0, 0.5}};
  batch.target_q = {{0.4, 99.0, -99.0}, {123.0, 0.1, -456.0}};
  batch.action_mask = {0, 1};

  std::vector<double> grads;
  const double loss = batch_gradients(net, batch, grads);

  const double e0 = net.forward(batch.inputs[0])[0] - 0.4;
  const double e1 = net.forward(batch.inputs[1])[1] - 0.1;
  CHECK(loss == doctest::Approx((e0 * e0 + e1 * e1) / 2.0).epsilon(1e-12));

  // Garbage on the unmasked entries must not change anything.
  batch.target_q[0][1] = -1.0;
  batch.target_q[0][2] = 2.0;
  std::vector<double> grads2;
  const double loss2 = batch_gradients(net, batch, grads2);
  CHECK(loss2 == doctest::Approx(loss).epsilon(1e-15));
  CHECK(grads2 == grads);
}

TEST_CASE("analytic gradients agree with central differences") {
  Rng rng(2024);
  const std::vector<std::vector<int>> shapes = {
      {3, 4, 3}, {5, 8, 3}, {2, 6, 4, 3}, {4, 4}, {6, 5, 3}};
  for (const auto& dims : shapes) {
    for (Activation act : {Activation::Relu, Activation::Identity}) {
      QNetwork net(dims, act);
      net.init_uniform(rng);
      const TrainBatch batch = random_batch(net, rng, 6);
      const double worst = gradient_check(net, batch, 1e-5);
      CAPTURE(dims.size());
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("one SGD step applies the hand-derived masked MSE gradient") {
  QNetwork net({1, 1}, Activation::Identity);
  fill(net.weights(0), {1.0});
  fill(net.biases(0), {0.0});
  Optimizer opt(Optimizer::Kind::Sgd, 0.1, net.parameters().size());

  TrainBatch batch;
  batch.inputs = {{2.0}};
  batch.target_q = {{5.0}};
  batch.action_mask = {0};

  // q = 2, err = -3: loss 9, dw = 2*err*x = -12, db = 2*err = -6.
  const double loss = train_batch(net, opt, batch);
  CHECK(loss == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(net.weights(0)[0] == doctest::Approx(1.0 + 0.1 * 12.0).epsilon(1e-15));
  CHECK(net.biases(0)[0] == doctest::Approx(0.1 * 6.0).epsilon(1e-15));
  CHECK(opt.step_count() == 1);
}

TEST_CASE("two Adam steps match the hand-unrolled update") {
  QNetwork net({1, 1}, Activation::Identity);
  fill(net.weights(0), {1.0});
  fill(net.biases(0), {0.0});
  Optimizer opt(Optimizer::Kind::Adam, 0.1, net.parameters().size());

  TrainBatch batch;
  batch.inputs = {{2.0}};
  batch.target_q = {{5.0}};
  batch.action_mask = {0};

  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, lr = 0.1;
  double w = 1.0, b = 0.0;
  double mw = 0.0, vw = 0.0, mb = 0.0, vb = 0.0;
  for (int t = 1; t <= 2; ++t) {
    train_batch(net, opt, batch);

    const double err = w * 2.0 + b - 5.0;
    const double gw = 2.0 * err * 2.0, gb = 2.0 * err;
    mw = beta1 * mw + (1 - beta1) * gw;
    vw = beta2 * vw + (1 - beta2) * gw * gw;
    mb = beta1 * mb + (1 - beta1) * gb;
    vb = beta2 * vb + (1 - beta2) * gb * gb;
    const double c1 = 1 - std::pow(beta1, t), c2 = 1 - std::pow(beta2, t);
    w -= lr * (mw / c1) / (std::sqrt(vw / c2) + eps);
    b -= lr * (mb / c1) / (std::sqrt(vb / c2) + eps);

    CHECK(net.weights(0)[0] == doctest::Approx(w).epsilon(1e-14));
    CHECK(net.biases(0)[0] == doctest::Approx(b).epsilon(1e-14));
  }
  CHECK(opt.step_count() == 2);
}

TEST_CASE("training drives the masked regression loss down") {
  Rng rng(11);
  QNetwork net({4, 16, 3}, Activation::Relu);
  net.init_uniform(rng);
  Optimizer opt(Optimizer::Kind::Adam, 0.01, net.parameters().size());
  const TrainBatch batch = random_batch(net, rng, 8);

  const double first = train_batch(net, opt, batch);
  double last = first;
  for (int i = 0; i < 200; ++i) last = train_batch(net, opt, batch);
  CHECK(last < first * 0.05);
}

TEST_CASE("train_batch validates shape and flags divergence") {
  QNetwork net({2, 3}, Activation::Relu);
  Optimizer opt(Optimizer::Kind::Sgd, 0.1, net.parameters().size());

  TrainBatch empty;
  CHECK_THROWS_AS(train_batch(net, opt, empty), std::invalid_argument);

  TrainBatch bad;
  bad.inputs = {{1.0}};  // wrong input width
  bad.target_q = {{0.0, 0.0, 0.0}};
  bad.action_mask = {0};
  CHECK_THROWS_AS(train_batch(net, opt, bad), std::invalid_argument);

  TrainBatch mask_out;
  mask_out.inputs = {{1.0, 2.0}};
  mask_out.target_q = {{0.0, 0.0, 0.0}};
  mask_out.action_mask = {3};
  CHECK_THROWS_AS(train_batch(net, opt, mask_out), std::invalid_argument);

  fill(net.weights(0), {1e200, 1e200, 1e200, 1e200, 1e200, 1e200});
  TrainBatch diverge;
  diverge.inputs = {{1e200, 1e200}};
  diverge.target_q = {{0.0, 0.0, 0.0}};
  diverge.action_mask = {0};
  CHECK_THROWS_AS(train_batch(net, opt, diverge), std::runtime_error);
}

TEST_CASE("target cloning copies parameters and checks shape") {
  Rng rng(5);
  QNetwork online({3, 5, 3}, Activation::Relu);
  online.init_uniform(rng);
  QNetwork target({3, 5, 3}, Activation::Relu);
  clone_into_target(online, target);
  CHECK(std::equal(online.parameters().begin(), online.parameters().end(),
                   target.parameters().begin()));

  QNetwork wrong({3, 4, 3}, Activation::Relu);
  CHECK_THROWS_AS(clone_into_target(online, wrong), std::invalid_argument);
  QNetwork wrong_act({3, 5, 3}, Activation::Identity);
  CHECK_THROWS_AS(clone_into_target(online, wrong_act), std::invalid_argument);
}

TEST_CASE("network checkpoints round-trip through streams and files") {
  Rng rng(99);
  QNetwork net({6, 10, 3}, Activation::Relu);
  net.init_uniform(rng);

  std::stringstream buf;
  save_network(net, buf);
  const QNetwork loaded = load_network(buf);
  CHECK(loaded.dims() == net.dims());
  CHECK(loaded.activation() == net.activation());
  CHECK(std::equal(net.parameters().begin(), net.parameters().end(),
                   loaded.parameters().begin()));

  const std::string path = "net_roundtrip.ckpt";
  save_network_file(net, path);
  const QNetwork from_file = load_network_file(path);
  CHECK(std::equal(net.parameters().begin(), net.parameters().end(),
                   from_file.parameters().begin()));
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loading rejects corrupt input") {
  {
    std::stringstream buf;
    buf << "definitely not a checkpoint";
    CHECK_THROWS_AS(load_network(buf), std::runtime_error);
  }
  {
    QNetwork net({2, 2}, Activation::Relu);
    std::stringstream buf;
    save_network(net, buf);
    std::string bytes = buf.str();
    bytes.resize(bytes.size() - 5);  // drop the tail of the parameter block
    std::stringstream cut(bytes);
    CHECK_THROWS_AS(load_network(cut), std::runtime_error);
  }
}
