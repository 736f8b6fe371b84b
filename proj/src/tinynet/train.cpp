#include "bnnfilt/tinynet/train.hpp"

#include <numeric>
#include <stdexcept>

#include "bnnfilt/rng.hpp"

namespace bnnfilt::tinynet {

namespace {

enum SeedTag : std::uint64_t { kShuffle = 1, kNetInit = 2, kTieBreak = 3, kLatentInit = 4 };

std::unique_ptr<binopt::BinaryOptimizer> make_binary(const BinaryOptimizerConfig& cfg, const Network& net,
                                                     std::size_t total_steps, std::uint64_t seed, Exec exec) {
  const std::size_t n = net.binary_size();
  const binopt::TieBreakRng tie(derive_seed(seed, kTieBreak));
  if (cfg.view == View::latent) {
    auto hyper = cfg.latent;
    hyper.epsilon.total_steps = total_steps;
    std::vector<double> w0(n, 0.0);
    if (cfg.w0_init_scale != 0.0) {
      Rng rng(derive_seed(seed, kLatentInit));
      for (auto& w : w0) w = cfg.w0_init_scale * rng.normal();
    }
    return std::make_unique<binopt::LatentOptimizer>(std::move(w0), hyper, tie, net.binary_channel_sizes(), exec);
  }
  auto hyper = cfg.filtered;
  hyper.alpha.total_steps = total_steps;
  return std::make_unique<binopt::FilterOptimizer>(n, hyper, tie, exec);
}

}  // namespace

std::vector<bitmetrics::FlipRecord> TrainingLog::flip_records() const {
  std::vector<bitmetrics::FlipRecord> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.flips);
  return out;
}

NetConfig default_net(const Dataset& data, std::size_t width) {
  NetConfig cfg;
  cfg.input_dim = data.dim();
  cfg.hidden = {width, width, width};
  cfg.binary = {false, true, true};
  cfg.n_classes = data.n_classes;
  return cfg;
}

Trainer::Trainer(const Dataset& data, NetConfig net, BinaryOptimizerConfig binary, RealOptimizerConfig real,
                 TrainOptions options)
    : data_(data),
      options_(std::move(options)),
      real_cfg_(real),
      net_(std::move(net), derive_seed(options_.seed, kNetInit), options_.exec),
      real_opt_(real.momentum, real.weight_decay),
      shuffle_rng_(derive_seed(options_.seed, kShuffle)) {
  if (options_.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (data.train_x.rows == 0) throw std::invalid_argument("empty training set");
  check_dims("dataset feature dimension", net_.config().input_dim, data.dim());
  if (data.n_classes > net_.config().n_classes) throw std::invalid_argument("dataset has more classes than the net");

  const std::size_t n = data.train_x.rows;
  steps_per_epoch_ = (n + options_.batch_size - 1) / options_.batch_size;
  // A trailing batch of one row has no batch statistics; drop it.
  if (steps_per_epoch_ > 1 && n % options_.batch_size == 1) --steps_per_epoch_;

  binary_ = make_binary(binary, net_, std::max<std::size_t>(total_steps(), 1), options_.seed, options_.exec);
  net_.set_binary_theta(binary_->theta());
  real_lr_ = binopt::Schedule{real.decay, real.lr, std::max<std::size_t>(total_steps(), 1)};

  layer_sizes_ = net_.binary_layer_sizes();
  grad_.assign(net_.binary_size(), 0.0);
  mask_.assign(net_.binary_size(), 0);
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  for (auto idx : options_.tracked_weights) {
    if (idx >= net_.binary_size()) throw std::out_of_range("tracked weight index " + std::to_string(idx));
    log_.traces.push_back({idx, {}, {}});
  }
  log_.epochs.push_back(evaluate(0));
}

EpochRecord Trainer::evaluate(std::size_t epoch) {
  EpochRecord r;
  r.epoch = epoch;
  r.train_accuracy = net_.accuracy(data_.train_x, data_.train_y);
  r.test_accuracy = net_.accuracy(data_.test_x, data_.test_y);
  return r;
}

void Trainer::start_epoch() { shuffle_rng_.shuffle(order_); }

const StepRecord& Trainer::step(std::span<std::uint8_t> flipped) {
  if (finished()) throw std::logic_error("training already finished");
  const std::size_t in_epoch = step_ % steps_per_epoch_;
  if (in_epoch == 0) start_epoch();

  const std::size_t n = data_.train_x.rows;
  const std::size_t begin = in_epoch * options_.batch_size;
  const std::size_t end = in_epoch + 1 == steps_per_epoch_ ? n : std::min(n, begin + options_.batch_size);
  const std::span<const std::size_t> rows(order_.data() + begin, end - begin);
  const Matrix x = gather_rows(data_.train_x, rows);
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = data_.train_y[rows[i]];

  net_.forward(x, Mode::train);
  StepRecord rec;
  rec.epoch = step_ / steps_per_epoch_ + 1;
  rec.loss = net_.backward(y);

  net_.gather_binary_grad(grad_);
  const std::span<std::uint8_t> mask = flipped.empty() ? std::span<std::uint8_t>(mask_) : flipped;
  const std::size_t flips = binary_->step(grad_, step_, mask);
  net_.set_binary_theta(binary_->theta());
  real_opt_.step(net_.real_parameters(), real_lr_.value(step_));

  rec.rate = binary_->last_rate();
  rec.flips.step = step_;
  rec.flips.flips = flips;
  rec.flips.total_weights = grad_.size();
  rec.flips.ff_ratio = grad_.empty() ? 0.0 : static_cast<double>(flips) / static_cast<double>(grad_.size());
  std::size_t offset = 0;
  for (std::size_t len : layer_sizes_) {
    std::size_t c = 0;
    for (std::size_t k = offset; k < offset + len; ++k) c += mask[k];
    rec.layer_flips.push_back(c);
    offset += len;
  }
  for (auto& t : log_.traces) {
    t.grad.push_back(grad_[t.index]);
    t.accumulator.push_back(binary_->accumulator(t.index));
  }

  ++step_;
  log_.steps.push_back(std::move(rec));
  if (step_ % steps_per_epoch_ == 0) log_.epochs.push_back(evaluate(step_ / steps_per_epoch_));
  return log_.steps.back();
}

const TrainingLog& Trainer::run() {
  while (!finished()) step();
  return log_;
}

TrainingLog train(const Dataset& data, const NetConfig& net, const BinaryOptimizerConfig& binary,
                  const RealOptimizerConfig& real, const TrainOptions& options) {
  Trainer t(data, net, binary, real, options);
  return t.run();
}

}  // namespace bnnfilt::tinynet
