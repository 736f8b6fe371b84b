#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bnnfilt/common.hpp"
#include "bnnfilt/tinynet/matrix.hpp"

namespace bnnfilt::tinynet {

/// Hidden blocks are linear -> batchnorm -> activation; the head is a real
/// linear layer with bias producing logits.
struct NetConfig {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden{64, 64, 64};
  std::vector<bool> binary{false, true, true};  // per hidden block
  std::size_t n_classes = 4;
};

enum class Mode { train, eval };

/// sign is the training activation; its backward is the clipped
/// straight-through mask 1{|x| <= 1}. hardtanh = clamp(x, -1, 1) has that
/// mask as its true derivative.
enum class Activation { sign, hardtanh };

struct RealLinear {
  std::size_t in = 0, out = 0;
  bool has_bias = false;
  std::vector<double> weight, bias;  // weight is out x in
  std::vector<double> grad_weight, grad_bias;
};

/// Weights are +-1 only and are set from a binary optimizer. The gradient is
/// delivered to grad_theta untouched (identity straight-through estimator).
struct BinaryLinear {
  std::size_t in = 0, out = 0;
  std::vector<std::int8_t> theta;  // out x in
  std::vector<double> grad_theta;
};

struct BatchNorm {
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  std::size_t features = 0;
  std::vector<double> scale, shift;
  std::vector<double> grad_scale, grad_shift;
  std::vector<double> running_mean, running_var;
};

/// A trainable array together with its gradient buffer.
struct ParamRef {
  std::span<double> value;
  std::span<double> grad;
  bool weight_decay;
};

class Network {
 public:
  Network(NetConfig cfg, std::uint64_t seed, Exec exec = Exec::parallel);

  const NetConfig& config() const { return cfg_; }

  void set_activation(Activation a) { activation_ = a; }
  Activation activation() const { return activation_; }

  /// Returns logits (batch x n_classes). Train mode caches activations for backward.
  const Matrix& forward(const Matrix& x, Mode mode);

  /// Mean softmax cross-entropy of the cached train-mode forward pass; fills
  /// every gradient buffer. Throws std::logic_error without a cache.
  double backward(std::span<const int> labels);

  /// Forward in the given mode and return the mean cross-entropy (no gradients).
  double loss(const Matrix& x, std::span<const int> labels, Mode mode);

  /// Fraction of rows whose argmax logit equals the label (eval mode).
  double accuracy(const Matrix& x, std::span<const int> labels);

  std::vector<ParamRef> real_parameters();

  std::size_t binary_size() const;
  std::vector<std::size_t> binary_layer_sizes() const;
  /// One entry per output channel of every binary layer (its fan-in).
  std::vector<std::size_t> binary_channel_sizes() const;
  void set_binary_theta(std::span<const std::int8_t> theta);
  void gather_binary_grad(std::span<double> out) const;
  std::vector<std::int8_t> binary_theta() const;

  std::size_t block_count() const { return blocks_.size(); }
  /// Batch-normalized, pre-scale values of block i from the last train forward.
  const Matrix& normalized(std::size_t block) const { return blocks_.at(block).xhat; }
  /// Batchnorm output (activation input) of block i from the last forward.
  const Matrix& preactivation(std::size_t block) const { return blocks_.at(block).y; }
  BatchNorm& batchnorm(std::size_t block) { return blocks_.at(block).bn; }
  RealLinear& head() { return head_; }
  RealLinear& real_layer(std::size_t block) { return blocks_.at(block).real; }
  BinaryLinear& binary_layer(std::size_t block) { return blocks_.at(block).bin; }
  bool is_binary(std::size_t block) const { return blocks_.at(block).binary; }

 private:
  struct Block {
    bool binary = false;
    RealLinear real;
    BinaryLinear bin;
    BatchNorm bn;
    // cache
    const Matrix* input = nullptr;
    Matrix z, xhat, y, act;
    std::vector<double> inv_std;
  };

  void linear_forward(const Block& b, const Matrix& in, Matrix& z) const;

  NetConfig cfg_;
  Exec exec_;
  Activation activation_ = Activation::sign;
  std::vector<Block> blocks_;
  RealLinear head_;
  Matrix input_copy_;
  Matrix logits_;
  bool cache_valid_ = false;
};

/// Plain SGD with momentum and weight decay for the real-valued parameters:
///   d = grad + wd * p;  buf = mu * buf + d (buf = d on the first step);  p -= lr_t * buf
class RealSgd {
 public:
  RealSgd(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}
  void step(std::span<const ParamRef> params, double lr);

 private:
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<double>> buffers_;
};

}  // namespace bnnfilt::tinynet
