#include "bnnfilt/tinynet/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bnnfilt/kernels.hpp"
#include "bnnfilt/rng.hpp"

namespace bnnfilt::tinynet {

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), src.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = src.row(rows[i]);
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

namespace {

RealLinear make_real(std::size_t in, std::size_t out, bool bias, Rng& rng) {
  RealLinear l;
  l.in = in;
  l.out = out;
  l.has_bias = bias;
  l.weight.resize(in * out);
  const double std_dev = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& w : l.weight) w = std_dev * rng.normal();
  l.grad_weight.assign(in * out, 0.0);
  if (bias) {
    l.bias.assign(out, 0.0);
    l.grad_bias.assign(out, 0.0);
  }
  return l;
}

BatchNorm make_bn(std::size_t f) {
  BatchNorm bn;
  bn.features = f;
  bn.scale.assign(f, 1.0);
  bn.shift.assign(f, 0.0);
  bn.grad_scale.assign(f, 0.0);
  bn.grad_shift.assign(f, 0.0);
  bn.running_mean.assign(f, 0.0);
  bn.running_var.assign(f, 1.0);
  return bn;
}

// Numerically stable log-softmax cross-entropy for one row; writes softmax into `prob`.
double row_cross_entropy(std::span<const double> logits, int label, std::span<double> prob) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    prob[c] = std::exp(logits[c] - mx);
    sum += prob[c];
  }
  for (auto& p : prob) p /= sum;
  return -(logits[static_cast<std::size_t>(label)] - mx - std::log(sum));
}

}  // namespace

Network::Network(NetConfig cfg, std::uint64_t seed, Exec exec) : cfg_(std::move(cfg)), exec_(exec) {
  if (cfg_.binary.size() != cfg_.hidden.size())
    throw std::invalid_argument("NetConfig: one binary flag per hidden block is required");
  if (cfg_.input_dim == 0 || cfg_.n_classes == 0) throw std::invalid_argument("NetConfig: empty dimensions");
  Rng rng(seed);
  std::size_t in = cfg_.input_dim;
  for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
    Block b;
    b.binary = cfg_.binary[i];
    const std::size_t out = cfg_.hidden[i];
    if (b.binary) {
      b.bin.in = in;
      b.bin.out = out;
      b.bin.theta.assign(in * out, 1);
      b.bin.grad_theta.assign(in * out, 0.0);
    } else {
      b.real = make_real(in, out, false, rng);
    }
    b.bn = make_bn(out);
    blocks_.push_back(std::move(b));
    in = out;
  }
  head_ = make_real(in, cfg_.n_classes, true, rng);
}

void Network::linear_forward(const Block& b, const Matrix& in, Matrix& z) const {
  if (b.binary) {
    z.resize(in.rows, b.bin.out);
    kernels::matmul_abt<std::int8_t>(exec_, in.data, b.bin.theta, z.data, in.rows, b.bin.in, b.bin.out);
  } else {
    z.resize(in.rows, b.real.out);
    kernels::matmul_abt<double>(exec_, in.data, b.real.weight, z.data, in.rows, b.real.in, b.real.out);
  }
}

const Matrix& Network::forward(const Matrix& x, Mode mode) {
  check_dims("input feature dimension", cfg_.input_dim, x.cols);
  input_copy_ = x;
  const Matrix* in = &input_copy_;
  const std::size_t batch = x.rows;
  for (auto& b : blocks_) {
    b.input = in;
    linear_forward(b, *in, b.z);
    const std::size_t f = b.z.cols;
    b.xhat.resize(batch, f);
    b.y.resize(batch, f);
    b.act.resize(batch, f);
    b.inv_std.assign(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
      double mean, var;
      if (mode == Mode::train) {
        mean = 0.0;
        for (std::size_t r = 0; r < batch; ++r) mean += b.z(r, j);
        mean /= static_cast<double>(batch);
        var = 0.0;
        for (std::size_t r = 0; r < batch; ++r) {
          const double d = b.z(r, j) - mean;
          var += d * d;
        }
        var /= static_cast<double>(batch);
        const double unbiased = batch > 1 ? var * static_cast<double>(batch) / static_cast<double>(batch - 1) : var;
        b.bn.running_mean[j] = (1.0 - BatchNorm::kMomentum) * b.bn.running_mean[j] + BatchNorm::kMomentum * mean;
        b.bn.running_var[j] = (1.0 - BatchNorm::kMomentum) * b.bn.running_var[j] + BatchNorm::kMomentum * unbiased;
      } else {
        mean = b.bn.running_mean[j];
        var = b.bn.running_var[j];
      }
      const double inv = 1.0 / std::sqrt(var + BatchNorm::kEpsilon);
      b.inv_std[j] = inv;
      for (std::size_t r = 0; r < batch; ++r) {
        const double xh = (b.z(r, j) - mean) * inv;
        const double y = b.bn.scale[j] * xh + b.bn.shift[j];
        b.xhat(r, j) = xh;
        b.y(r, j) = y;
        b.act(r, j) = activation_ == Activation::sign ? (y >= 0.0 ? 1.0 : -1.0) : std::clamp(y, -1.0, 1.0);
      }
    }
    in = &b.act;
  }
  logits_.resize(batch, cfg_.n_classes);
  kernels::matmul_abt<double>(exec_, in->data, head_.weight, logits_.data, batch, head_.in, head_.out);
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t c = 0; c < cfg_.n_classes; ++c) logits_(r, c) += head_.bias[c];
  cache_valid_ = mode == Mode::train;
  return logits_;
}

double Network::backward(std::span<const int> labels) {
  if (!cache_valid_) throw std::logic_error("backward() needs a preceding train-mode forward()");
  const std::size_t batch = logits_.rows;
  check_dims("label count", batch, labels.size());
  const std::size_t k = cfg_.n_classes;
  const double inv_batch = 1.0 / static_cast<double>(batch);

  Matrix dlogits(batch, k);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) throw std::out_of_range("label out of range");
    loss += row_cross_entropy(logits_.row(r), labels[r], dlogits.row(r));
    dlogits(r, static_cast<std::size_t>(labels[r])) -= 1.0;
    for (auto& v : dlogits.row(r)) v *= inv_batch;
  }
  loss *= inv_batch;

  const Matrix& last = blocks_.empty() ? input_copy_ : blocks_.back().act;
  kernels::matmul_atb(exec_, dlogits.data, last.data, head_.grad_weight, batch, k, head_.in);
  std::fill(head_.grad_bias.begin(), head_.grad_bias.end(), 0.0);
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t c = 0; c < k; ++c) head_.grad_bias[c] += dlogits(r, c);

  Matrix grad_act(batch, head_.in);
  if (!blocks_.empty())
    kernels::matmul_ab<double>(exec_, dlogits.data, head_.weight, grad_act.data, batch, k, head_.in);

  Matrix dz;
  for (std::size_t bi = blocks_.size(); bi-- > 0;) {
    Block& b = blocks_[bi];
    const std::size_t f = b.z.cols;
    dz.resize(batch, f);
    for (std::size_t j = 0; j < f; ++j) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        // clipped straight-through estimator
        const double dy = std::abs(b.y(r, j)) <= 1.0 ? grad_act(r, j) : 0.0;
        dz(r, j) = dy;
        sum_dy += dy;
        sum_dy_xhat += dy * b.xhat(r, j);
      }
      b.bn.grad_shift[j] = sum_dy;
      b.bn.grad_scale[j] = sum_dy_xhat;
      // dxhat = dy * scale; fold the scale into the closed-form batchnorm gradient
      const double s = b.bn.scale[j];
      const double c = b.inv_std[j] * inv_batch;
      for (std::size_t r = 0; r < batch; ++r) {
        const double dxhat = dz(r, j) * s;
        dz(r, j) = c * (static_cast<double>(batch) * dxhat - s * sum_dy - b.xhat(r, j) * s * sum_dy_xhat);
      }
    }
    const Matrix& in = *b.input;
    if (b.binary) {
      kernels::matmul_atb(exec_, dz.data, in.data, b.bin.grad_theta, batch, f, b.bin.in);
    } else {
      kernels::matmul_atb(exec_, dz.data, in.data, b.real.grad_weight, batch, f, b.real.in);
    }
    if (bi > 0) {
      grad_act.resize(batch, in.cols);
      if (b.binary)
        kernels::matmul_ab<std::int8_t>(exec_, dz.data, b.bin.theta, grad_act.data, batch, f, b.bin.in);
      else
        kernels::matmul_ab<double>(exec_, dz.data, b.real.weight, grad_act.data, batch, f, b.real.in);
    }
  }
  return loss;
}

double Network::loss(const Matrix& x, std::span<const int> labels, Mode mode) {
  const Matrix& logits = forward(x, mode);
  check_dims("label count", logits.rows, labels.size());
  std::vector<double> prob(cfg_.n_classes);
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows; ++r) total += row_cross_entropy(logits.row(r), labels[r], prob);
  return total / static_cast<double>(logits.rows);
}

double Network::accuracy(const Matrix& x, std::span<const int> labels) {
  if (x.rows == 0) return 0.0;
  const Matrix& logits = forward(x, Mode::eval);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const auto row = logits.row(r);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == labels[r] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

std::vector<ParamRef> Network::real_parameters() {
  std::vector<ParamRef> out;
  for (auto& b : blocks_) {
    if (!b.binary) out.push_back({b.real.weight, b.real.grad_weight, true});
    out.push_back({b.bn.scale, b.bn.grad_scale, false});
    out.push_back({b.bn.shift, b.bn.grad_shift, false});
  }
  out.push_back({head_.weight, head_.grad_weight, true});
  out.push_back({head_.bias, head_.grad_bias, true});
  return out;
}

std::size_t Network::binary_size() const {
  std::size_t n = 0;
  for (const auto& b : blocks_)
    if (b.binary) n += b.bin.theta.size();
  return n;
}

std::vector<std::size_t> Network::binary_layer_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& b : blocks_)
    if (b.binary) sizes.push_back(b.bin.theta.size());
  return sizes;
}

std::vector<std::size_t> Network::binary_channel_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& b : blocks_)
    if (b.binary) sizes.insert(sizes.end(), b.bin.out, b.bin.in);
  return sizes;
}

void Network::set_binary_theta(std::span<const std::int8_t> theta) {
  check_dims("binary weight count", binary_size(), theta.size());
  std::size_t offset = 0;
  for (auto& b : blocks_) {
    if (!b.binary) continue;
    for (std::size_t k = 0; k < b.bin.theta.size(); ++k) {
      const auto v = theta[offset + k];
      if (v != 1 && v != -1) throw std::invalid_argument("binary weights must be +-1");
      b.bin.theta[k] = v;
    }
    offset += b.bin.theta.size();
  }
}

void Network::gather_binary_grad(std::span<double> out) const {
  check_dims("binary gradient buffer", binary_size(), out.size());
  std::size_t offset = 0;
  for (const auto& b : blocks_) {
    if (!b.binary) continue;
    std::copy(b.bin.grad_theta.begin(), b.bin.grad_theta.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += b.bin.grad_theta.size();
  }
}

std::vector<std::int8_t> Network::binary_theta() const {
  std::vector<std::int8_t> out;
  out.reserve(binary_size());
  for (const auto& b : blocks_)
    if (b.binary) out.insert(out.end(), b.bin.theta.begin(), b.bin.theta.end());
  return out;
}

void RealSgd::step(std::span<const ParamRef> params, double lr) {
  const bool first = buffers_.empty();
  if (first) {
    buffers_.reserve(params.size());
    for (const auto& p : params) buffers_.emplace_back(p.value.size(), 0.0);
  }
  check_dims("parameter group count", buffers_.size(), params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    auto& buf = buffers_[i];
    const double wd = p.weight_decay ? weight_decay_ : 0.0;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double d = p.grad[k] + wd * p.value[k];
      buf[k] = first ? d : momentum_ * buf[k] + d;
      p.value[k] -= lr * buf[k];
    }
  }
}

}  // namespace bnnfilt::tinynet
