#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "bnnfilt/rng.hpp"
#include "bnnfilt/tinynet/dataset.hpp"
#include "bnnfilt/tinynet/network.hpp"
#include "bnnfilt/tinynet/train.hpp"
#include "doctest.h"
#include "gradcheck.hpp"

using namespace bnnfilt;
using namespace bnnfilt::tinynet;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.normal();
  return m;
}

std::vector<int> random_labels(std::size_t n, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.index(k));
  return y;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("bnnfilt_" + name);
}

BinaryOptimizerConfig filtered_config(double alpha, double gamma, binopt::ScheduleKind decay) {
  BinaryOptimizerConfig c;
  c.view = View::filtered;
  c.filtered.alpha = {decay, alpha, 1};
  c.filtered.gamma = gamma;
  return c;
}

}  // namespace

TEST_CASE("forward on zero input is finite") {
  Network net(NetConfig{}, 7);
  const Matrix x(8, 16, 0.0);
  for (auto mode : {Mode::train, Mode::eval}) {
    const auto& logits = net.forward(x, mode);
    CHECK(logits.rows == 8);
    CHECK(logits.cols == 4);
    for (double v : logits.data) CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(net.forward(Matrix(2, 3), Mode::eval), DimensionMismatch);
}

TEST_CASE("a net without hidden blocks is a linear model") {
  Network net(NetConfig{3, {}, {}, 2}, 1);
  net.head().weight = {1.0, -2.0, 0.5, 0.0, 3.0, 1.0};
  net.head().bias = {0.25, -1.0};
  Matrix x(1, 3);
  x.data = {2.0, 1.0, -4.0};
  const auto& logits = net.forward(x, Mode::eval);
  CHECK(logits(0, 0) == 2.0 - 2.0 - 2.0 + 0.25);
  CHECK(logits(0, 1) == 0.0 + 3.0 - 4.0 - 1.0);
}

TEST_CASE("hand-built 2-2-2 net") {
  Network net(NetConfig{2, {2}, {true}, 2}, 1);
  const std::vector<std::int8_t> theta{1, -1, 1, 1};
  net.set_binary_theta(theta);
  net.head().weight = {1.0, 2.0, 3.0, -1.0};
  net.head().bias = {0.5, -0.5};
  Matrix x(1, 2);
  x.data = {0.5, -1.0};
  // z = (1.5, -0.5); fresh running stats leave the signs; act = (1, -1)
  const auto& logits = net.forward(x, Mode::eval);
  CHECK(logits(0, 0) == -0.5);
  CHECK(logits(0, 1) == 3.5);
  CHECK(net.preactivation(0)(0, 0) == doctest::Approx(1.5 / std::sqrt(1.0 + 1e-5)).epsilon(1e-15));

  const std::vector<std::int8_t> bad{1, 0, 1, 1};
  CHECK_THROWS(net.set_binary_theta(bad));
}

TEST_CASE("uniform logits give (softmax - onehot) / B") {
  Network net(NetConfig{2, {}, {}, 3}, 1);
  std::fill(net.head().weight.begin(), net.head().weight.end(), 0.0);
  const Matrix x = random_matrix(4, 2, 3);
  const std::vector<int> y{0, 2, 2, 1};
  net.forward(x, Mode::train);
  const double loss = net.backward(y);
  CHECK(loss == doctest::Approx(std::log(3.0)));
  for (std::size_t c = 0; c < 3; ++c) {
    double expected = 0.0;
    for (std::size_t r = 0; r < 4; ++r) expected += (1.0 / 3.0 - (y[r] == static_cast<int>(c) ? 1.0 : 0.0)) / 4.0;
    CHECK(net.head().grad_bias[c] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("clipped straight-through mask") {
  NetConfig cfg{3, {4}, {false}, 2};
  Network net(cfg, 5);
  net.batchnorm(0).shift[1] = 10.0;  // every row's pre-activation in feature 1 is well above 1
  const Matrix x = random_matrix(16, 3, 9);
  const auto y = random_labels(16, 2, 9);
  net.forward(x, Mode::train);
  for (std::size_t r = 0; r < 16; ++r) CHECK(net.preactivation(0)(r, 1) > 1.0);
  net.backward(y);
  CHECK(net.batchnorm(0).grad_shift[1] == 0.0);
  CHECK(net.batchnorm(0).grad_scale[1] == 0.0);
  for (std::size_t k = 0; k < 3; ++k) CHECK(net.real_layer(0).grad_weight[1 * 3 + k] == 0.0);
  double other = 0.0;
  for (std::size_t k = 0; k < 3; ++k) other += std::abs(net.real_layer(0).grad_weight[k]);
  CHECK(other > 0.0);
}

TEST_CASE("backward needs a train-mode forward") {
  Network net(NetConfig{2, {4}, {false}, 2}, 1);
  const std::vector<int> y{0, 1};
  CHECK_THROWS_AS(net.backward(y), std::logic_error);
  net.forward(random_matrix(2, 2, 1), Mode::eval);
  CHECK_THROWS_AS(net.backward(y), std::logic_error);
}

TEST_CASE("finite-difference gradient check") {
  NetConfig cfg{2, {8, 8}, {false, false}, 3};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Network net(cfg, seed);
    net.set_activation(Activation::hardtanh);
    for (auto& v : net.batchnorm(0).scale) v = 0.5;
    const Matrix x = random_matrix(12, 2, 100 + seed);
    const auto y = random_labels(12, 3, 200 + seed);
    const auto r = testsupport::check_real_gradients(net, x, y);
    INFO(r.worst_where);
    CHECK(r.checked < 1000);
    CHECK(r.worst_rel < 1e-5);
  }
}

TEST_CASE("finite-difference check through a binary layer") {
  NetConfig cfg{2, {8, 8}, {false, true}, 3};
  Network net(cfg, 4);
  net.set_activation(Activation::hardtanh);
  Rng rng(4);
  std::vector<std::int8_t> theta(net.binary_size());
  for (auto& t : theta) t = rng.uniform() < 0.5 ? -1 : 1;
  net.set_binary_theta(theta);
  const Matrix x = random_matrix(10, 2, 44);
  const auto y = random_labels(10, 3, 45);
  const auto r = testsupport::check_real_gradients(net, x, y);
  INFO(r.worst_where);
  CHECK(r.worst_rel < 1e-5);

  // The binary gradient equals the derivative of the loss w.r.t. a real copy of the weights.
  Network real(NetConfig{2, {8, 8}, {false, false}, 3}, 4);
  real.set_activation(Activation::hardtanh);
  real.real_layer(0).weight = net.real_layer(0).weight;
  real.head().weight = net.head().weight;
  real.real_layer(1).weight.assign(theta.begin(), theta.end());
  net.forward(x, Mode::train);
  net.backward(y);
  real.forward(x, Mode::train);
  real.backward(y);
  for (std::size_t k = 0; k < theta.size(); ++k)
    CHECK(net.binary_layer(1).grad_theta[k] == doctest::Approx(real.real_layer(1).grad_weight[k]).epsilon(1e-12));
}

TEST_CASE("batch statistics normalize every feature") {
  Network net(NetConfig{}, 11);
  Matrix x = random_matrix(64, 16, 12);
  for (auto& v : x.data) v = 3.0 * v + 1.5;
  net.forward(x, Mode::train);
  for (std::size_t b = 0; b < net.block_count(); ++b) {
    const auto& xh = net.normalized(b);
    for (std::size_t j = 0; j < xh.cols; ++j) {
      double mean = 0.0, var = 0.0;
      for (std::size_t r = 0; r < xh.rows; ++r) mean += xh(r, j);
      mean /= 64.0;
      for (std::size_t r = 0; r < xh.rows; ++r) var += (xh(r, j) - mean) * (xh(r, j) - mean);
      var /= 64.0;
      CHECK(std::abs(mean) < 1e-6);
      // constant features (zero batch variance) cannot be normalized
      double raw = 0.0;
      for (std::size_t r = 0; r < xh.rows; ++r) raw += std::abs(xh(r, j));
      if (raw > 0.0) CHECK(std::abs(var - 1.0) < 1e-4);
    }
  }
}

TEST_CASE("running statistics follow an EMA with momentum 0.1") {
  Network net(NetConfig{1, {1}, {false}, 2}, 1);
  net.real_layer(0).weight = {1.0};
  Matrix x(4, 1);
  x.data = {1.0, 2.0, 3.0, 6.0};
  net.forward(x, Mode::train);
  CHECK(net.batchnorm(0).running_mean[0] == doctest::Approx(0.3));
  CHECK(net.batchnorm(0).running_var[0] == doctest::Approx(0.9 + 0.1 * 14.0 / 3.0));
}

TEST_CASE("real SGD with momentum and weight decay") {
  std::vector<double> w{1.0, -2.0}, g{0.5, 0.5}, s{1.0}, gs{1.0};
  RealSgd opt(0.9, 0.1);
  const std::vector<ParamRef> params{{w, g, true}, {s, gs, false}};
  opt.step(params, 0.1);
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 * 0.6));
  CHECK(w[1] == doctest::Approx(-2.0 - 0.1 * 0.3));
  CHECK(s[0] == doctest::Approx(0.9));
  opt.step(params, 0.1);
  CHECK(w[0] == doctest::Approx(0.94 - 0.1 * (0.9 * 0.6 + 0.5 + 0.1 * 0.94)));
  CHECK(s[0] == doctest::Approx(0.9 - 0.1 * (0.9 + 1.0)));
}

TEST_CASE("make_blobs") {
  const auto a = make_blobs(50, 3, 5, 0.3, 42);
  const auto b = make_blobs(50, 3, 5, 0.3, 42);
  CHECK(a == b);
  CHECK(!(a == make_blobs(50, 3, 5, 0.3, 43)));
  CHECK(a.train_x.rows == 120);
  CHECK(a.test_x.rows == 30);
  CHECK(a.n_classes == 3);
  CHECK_THROWS(make_blobs(0, 3, 5, 0.3, 1));

  const auto clean = make_blobs(20, 4, 16, 0.0, 5);
  Matrix centers(4, 16);
  for (std::size_t r = 0; r < clean.train_x.rows; ++r)
    for (std::size_t c = 0; c < 16; ++c) centers(static_cast<std::size_t>(clean.train_y[r]), c) = clean.train_x(r, c);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < clean.test_x.rows; ++r) {
    double best = 1e300;
    int arg = -1;
    for (std::size_t k = 0; k < 4; ++k) {
      double d = 0.0;
      for (std::size_t c = 0; c < 16; ++c) d += std::pow(clean.test_x(r, c) - centers(k, c), 2);
      if (d < best) best = d, arg = static_cast<int>(k);
    }
    correct += arg == clean.test_y[r];
  }
  CHECK(correct == clean.test_x.rows);
}

TEST_CASE("load_csv reads a toy file") {
  const auto path = temp_file("toy.csv");
  {
    std::ofstream f(path);
    f << "a,target,b\n0.5,1,-2\n1e-3,0,3.25\n-7,2,0\n";
  }
  const auto d = load_csv(path, "target", 0.0);
  CHECK(d.train_x.rows == 3);
  CHECK(d.test_x.rows == 0);
  CHECK(d.train_x.data == std::vector<double>{0.5, -2.0, 1e-3, 3.25, -7.0, 0.0});
  CHECK(d.train_y == std::vector<int>{1, 0, 2});
  CHECK(d.n_classes == 3);
  CHECK(d.source == DataSource::csv);

  const auto split = load_csv(path, "target", 1.0 / 3.0);
  CHECK(split.train_x.rows == 2);
  CHECK(split.test_y == std::vector<int>{2});
  std::filesystem::remove(path);
}

TEST_CASE("load_csv errors name the location") {
  const auto path = temp_file("bad.csv");
  {
    std::ofstream f(path);
    f << "a,b,label\n1,2,0\n3,x4,1\n";
  }
  try {
    load_csv(path, "label");
    FAIL("expected a parse error");
  } catch (const CsvError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == 2);
  }
  CHECK_THROWS_AS(load_csv(path, "missing"), std::runtime_error);
  CHECK_THROWS(load_csv(temp_file("does_not_exist.csv"), "label"));
  {
    std::ofstream f(path);
    f << "a,label\n1,0.5\n";
  }
  CHECK_THROWS_AS(load_csv(path, "label"), CsvError);
  std::filesystem::remove(path);
}

TEST_CASE("save_csv round-trips exactly") {
  const auto path = temp_file("roundtrip.csv");
  const auto d = make_blobs(25, 4, 7, 0.7, 3);
  save_csv(path, d);
  auto back = load_csv(path, "label");
  back.source = d.source;
  CHECK(back == d);
  std::filesystem::remove(path);
}

TEST_CASE("training with zero epochs only evaluates") {
  const auto data = make_blobs(20, 4, 16, 0.3, 1);
  TrainOptions opt;
  opt.epochs = 0;
  const auto log = train(data, default_net(data, 16), filtered_config(1e-3, 0.1, binopt::ScheduleKind::cosine), {}, opt);
  CHECK(log.steps.empty());
  REQUIRE(log.epochs.size() == 1);
  CHECK(log.epochs[0].epoch == 0);
}

TEST_CASE("training is deterministic") {
  const auto data = make_blobs(40, 4, 16, 0.3, 2);
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch_size = 16;
  opt.seed = 99;
  opt.tracked_weights = {0, 17};
  auto run = [&](View view, Exec exec) {
    auto cfg = filtered_config(1e-2, 0.1, binopt::ScheduleKind::cosine);
    cfg.view = view;
    cfg.latent.epsilon = {binopt::ScheduleKind::cosine, 1.0, 1};
    cfg.latent.lambda = 1e-2;
    cfg.latent.gamma = 0.1;
    opt.exec = exec;
    return train(data, default_net(data, 16), cfg, {}, opt);
  };
  for (auto view : {View::latent, View::filtered}) {
    const auto a = run(view, Exec::serial);
    const auto b = run(view, Exec::parallel);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      CHECK(a.steps[i].loss == b.steps[i].loss);
      CHECK(a.steps[i].flips.flips == b.steps[i].flips.flips);
      CHECK(a.steps[i].layer_flips == b.steps[i].layer_flips);
    }
    REQUIRE(a.epochs.size() == 4);
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
      CHECK(a.epochs[e].train_accuracy == b.epochs[e].train_accuracy);
      CHECK(a.epochs[e].test_accuracy == b.epochs[e].test_accuracy);
    }
    CHECK(a.traces[1].accumulator == b.traces[1].accumulator);
    CHECK(a.traces[1].grad.size() == a.steps.size());
  }
}

TEST_CASE("trainer keeps binary weights pure and logs per-layer flips") {
  const auto data = make_blobs(30, 4, 16, 0.3, 3);
  TrainOptions opt;
  opt.epochs = 2;
  opt.batch_size = 32;
  Trainer t(data, default_net(data, 16), filtered_config(0.05, 0.5, binopt::ScheduleKind::constant), {}, opt);
  std::vector<std::uint8_t> mask(t.network().binary_size());
  while (!t.finished()) {
    const auto& rec = t.step(mask);
    for (auto v : t.network().binary_theta()) CHECK((v == 1 || v == -1));
    CHECK(std::accumulate(rec.layer_flips.begin(), rec.layer_flips.end(), std::size_t{0}) == rec.flips.flips);
    CHECK(std::accumulate(mask.begin(), mask.end(), std::size_t{0}) == rec.flips.flips);
  }
  CHECK_THROWS_AS(t.step(), std::logic_error);
  CHECK(t.log().steps.size() == 2 * t.steps_per_epoch());
}

TEST_CASE("trainer rejects invalid setups") {
  const auto data = make_blobs(10, 2, 4, 0.3, 3);
  TrainOptions opt;
  opt.batch_size = 0;
  CHECK_THROWS(Trainer(data, default_net(data, 8), {}, {}, opt));
  opt.batch_size = 8;
  opt.tracked_weights = {100000};
  CHECK_THROWS(Trainer(data, default_net(data, 8), {}, {}, opt));
  opt.tracked_weights = {};
  CHECK_THROWS(Trainer(data, NetConfig{}, {}, {}, opt));
}

TEST_CASE("cosine alpha decay stops flipping by the end of training") {
  const auto data = make_blobs(500, 4, 16, 0.3, 1);
  TrainOptions opt;
  opt.epochs = 10;
  const auto log = train(data, default_net(data), filtered_config(1e-3, 0.1, binopt::ScheduleKind::cosine), {}, opt);
  CHECK(log.steps.back().flips.ff_ratio < 1e-4);
  CHECK(log.steps.front().flips.flips > 0);
}
