#include "bnnfilt/expcli/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bnnfilt::expcli {

namespace {

using binopt::ScheduleKind;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view what, std::string_view text) {
  throw ConfigError("expected " + std::string(what) + ", got '" + std::string(text) + "'", 0);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) bad_value("a number", text);
  return v;
}

std::uint64_t parse_u64(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) bad_value("a non-negative integer", text);
  return v;
}

std::size_t parse_size(std::string_view text) { return static_cast<std::size_t>(parse_u64(text)); }

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "on" || text == "1") return true;
  if (text == "false" || text == "off" || text == "0") return false;
  bad_value("on/off", text);
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse_double(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

ScheduleKind parse_decay(std::string_view text) {
  try {
    return binopt::parse_schedule_kind(trim(text));
  } catch (const std::invalid_argument&) {
    bad_value("none, constant, cosine or linear", text);
  }
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt_bool(bool v) { return v ? "on" : "off"; }

std::string fmt(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

std::string fmt(ScheduleKind k) { return std::string(binopt::to_string(k)); }

struct Entry {
  KeyInfo info;
  void (*set)(ExperimentConfig&, std::string_view);
  std::string (*get)(const ExperimentConfig&);
};

constexpr KeyGroup S = KeyGroup::structural;
constexpr KeyGroup L = KeyGroup::latent_tunable;
constexpr KeyGroup F = KeyGroup::filtered_tunable;

// clang-format off
const std::array kEntries = {
  Entry{{"experiment", S, "experiment kind"},
        [](ExperimentConfig& c, std::string_view v) { c.experiment = parse_experiment_kind(trim(v)); },
        [](const ExperimentConfig& c) { return std::string(to_string(c.experiment)); }},
  Entry{{"view", S, "optimizer view: latent or filtered"},
        [](ExperimentConfig& c, std::string_view v) { c.view = parse_view(trim(v)); },
        [](const ExperimentConfig& c) { return std::string(to_string(c.view)); }},
  Entry{{"name", S, "run name used in output file names"},
        [](ExperimentConfig& c, std::string_view v) { c.name = std::string(trim(v)); },
        [](const ExperimentConfig& c) { return c.name; }},
  Entry{{"seed", S, "run seed"},
        [](ExperimentConfig& c, std::string_view v) { c.seed = parse_u64(v); },
        [](const ExperimentConfig& c) { return fmt(c.seed); }},
  Entry{{"output_dir", S, "directory for CSV outputs"},
        [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(trim(v)); },
        [](const ExperimentConfig& c) { return c.output_dir; }},

  Entry{{"latent.epsilon", L, "learning rate"},
        [](ExperimentConfig& c, std::string_view v) { c.latent.epsilon = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.latent.epsilon); }},
  Entry{{"latent.epsilon_decay", L, "learning-rate schedule"},
        [](ExperimentConfig& c, std::string_view v) { c.latent.epsilon_decay = parse_decay(v); },
        [](const ExperimentConfig& c) { return fmt(c.latent.epsilon_decay); }},
  Entry{{"latent.w0_init_scale", L, "std of the normal latent-weight init (0 = zero init)"},
        [](ExperimentConfig& c, std::string_view v) { c.latent.w0_init_scale = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.latent.w0_init_scale); }},
  Entry{{"latent.gamma", L, "momentum discount"},
        [](ExperimentConfig& c, std::string_view v) { c.latent.gamma = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.latent.gamma); }},
  Entry{{"latent.lambda", L, "weight decay factor"},
        [](ExperimentConfig& c, std::string_view v) { c.latent.lambda = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.latent.lambda); }},
  Entry{{"latent.scaling", L, "scale gradients by the channel mean |w|"},
        [](ExperimentConfig& c, std::string_view v) { c.latent.scaling = parse_bool(v); },
        [](const ExperimentConfig& c) { return fmt_bool(c.latent.scaling); }},
  Entry{{"latent.clipping", L, "clip latent weights to [-1, 1]"},
        [](ExperimentConfig& c, std::string_view v) { c.latent.clipping = parse_bool(v); },
        [](const ExperimentConfig& c) { return fmt_bool(c.latent.clipping); }},

  Entry{{"filtered.alpha", F, "outer filter coefficient"},
        [](ExperimentConfig& c, std::string_view v) { c.filtered.alpha = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.filtered.alpha); }},
  Entry{{"filtered.alpha_decay", F, "alpha schedule"},
        [](ExperimentConfig& c, std::string_view v) { c.filtered.alpha_decay = parse_decay(v); },
        [](const ExperimentConfig& c) { return fmt(c.filtered.alpha_decay); }},
  Entry{{"filtered.gamma", F, "inner filter coefficient"},
        [](ExperimentConfig& c, std::string_view v) { c.filtered.gamma = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.filtered.gamma); }},

  Entry{{"filter_form", S, "filter realization: cascade or direct2"},
        [](ExperimentConfig& c, std::string_view v) { c.filter_form = binopt::parse_filter_form(trim(v)); },
        [](const ExperimentConfig& c) { return std::string(binopt::to_string(c.filter_form)); }},
  Entry{{"dataset", S, "blobs or csv"},
        [](ExperimentConfig& c, std::string_view v) {
          v = trim(v);
          if (v == "blobs") c.dataset = DatasetKind::blobs;
          else if (v == "csv") c.dataset = DatasetKind::csv;
          else bad_value("blobs or csv", v);
        },
        [](const ExperimentConfig& c) { return std::string(c.dataset == DatasetKind::blobs ? "blobs" : "csv"); }},
  Entry{{"blobs.n_per_class", S, "samples per class"},
        [](ExperimentConfig& c, std::string_view v) { c.blobs.n_per_class = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.blobs.n_per_class); }},
  Entry{{"blobs.n_classes", S, "number of classes"},
        [](ExperimentConfig& c, std::string_view v) { c.blobs.n_classes = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.blobs.n_classes); }},
  Entry{{"blobs.dim", S, "feature dimension"},
        [](ExperimentConfig& c, std::string_view v) { c.blobs.dim = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.blobs.dim); }},
  Entry{{"blobs.sigma", S, "cluster noise std"},
        [](ExperimentConfig& c, std::string_view v) { c.blobs.sigma = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.blobs.sigma); }},
  Entry{{"blobs.seed", S, "dataset seed"},
        [](ExperimentConfig& c, std::string_view v) { c.blobs.seed = parse_u64(v); },
        [](const ExperimentConfig& c) { return fmt(c.blobs.seed); }},
  Entry{{"csv.path", S, "CSV dataset path"},
        [](ExperimentConfig& c, std::string_view v) { c.csv.path = std::string(trim(v)); },
        [](const ExperimentConfig& c) { return c.csv.path; }},
  Entry{{"csv.label_column", S, "label column name"},
        [](ExperimentConfig& c, std::string_view v) { c.csv.label_column = std::string(trim(v)); },
        [](const ExperimentConfig& c) { return c.csv.label_column; }},
  Entry{{"csv.test_fraction", S, "trailing fraction of rows held out"},
        [](ExperimentConfig& c, std::string_view v) { c.csv.test_fraction = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.csv.test_fraction); }},
  Entry{{"net.hidden_width", S, "width of the three hidden blocks"},
        [](ExperimentConfig& c, std::string_view v) { c.hidden_width = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.hidden_width); }},
  Entry{{"epochs", S, "training epochs"},
        [](ExperimentConfig& c, std::string_view v) { c.epochs = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.epochs); }},
  Entry{{"batch_size", S, "minibatch size"},
        [](ExperimentConfig& c, std::string_view v) { c.batch_size = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.batch_size); }},
  Entry{{"real.lr", S, "learning rate of the real-valued parameters"},
        [](ExperimentConfig& c, std::string_view v) { c.real.lr = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.real.lr); }},
  Entry{{"real.momentum", S, "momentum of the real-valued parameters"},
        [](ExperimentConfig& c, std::string_view v) { c.real.momentum = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.real.momentum); }},
  Entry{{"real.weight_decay", S, "weight decay of the real-valued parameters"},
        [](ExperimentConfig& c, std::string_view v) { c.real.weight_decay = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.real.weight_decay); }},
  Entry{{"real.decay", S, "learning-rate schedule of the real-valued parameters"},
        [](ExperimentConfig& c, std::string_view v) { c.real.decay = parse_decay(v); },
        [](const ExperimentConfig& c) { return fmt(c.real.decay); }},
  Entry{{"sweep.epsilons", S, "comma-separated learning rates"},
        [](ExperimentConfig& c, std::string_view v) { c.sweep_epsilons = parse_list(v); },
        [](const ExperimentConfig& c) { return fmt(c.sweep_epsilons); }},
  Entry{{"sweep.alphas", S, "comma-separated alpha values"},
        [](ExperimentConfig& c, std::string_view v) { c.sweep_alphas = parse_list(v); },
        [](const ExperimentConfig& c) { return fmt(c.sweep_alphas); }},
  Entry{{"sweep.scales", S, "comma-separated scale factors"},
        [](ExperimentConfig& c, std::string_view v) { c.sweep_scales = parse_list(v); },
        [](const ExperimentConfig& c) { return fmt(c.sweep_scales); }},
  Entry{{"response.source", S, "training or synthetic"},
        [](ExperimentConfig& c, std::string_view v) {
          v = trim(v);
          if (v == "training") c.response.source = ResponseSource::training;
          else if (v == "synthetic") c.response.source = ResponseSource::synthetic;
          else bad_value("training or synthetic", v);
        },
        [](const ExperimentConfig& c) {
          return std::string(c.response.source == ResponseSource::training ? "training" : "synthetic");
        }},
  Entry{{"response.weight", S, "tracked binary weight index"},
        [](ExperimentConfig& c, std::string_view v) { c.response.weight = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.response.weight); }},
  Entry{{"response.epoch", S, "recorded epoch (0 = last)"},
        [](ExperimentConfig& c, std::string_view v) { c.response.epoch = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.response.epoch); }},
  Entry{{"response.coefficient", S, "alpha = gamma of the compared filters"},
        [](ExperimentConfig& c, std::string_view v) { c.response.coefficient = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.response.coefficient); }},
  Entry{{"response.steps", S, "synthetic stream length"},
        [](ExperimentConfig& c, std::string_view v) { c.response.steps = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.response.steps); }},
  Entry{{"response.period", S, "synthetic sinusoid period in steps"},
        [](ExperimentConfig& c, std::string_view v) { c.response.period = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.response.period); }},
  Entry{{"response.amplitude", S, "synthetic sinusoid amplitude"},
        [](ExperimentConfig& c, std::string_view v) { c.response.amplitude = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.response.amplitude); }},
  Entry{{"response.noise", S, "synthetic white noise std"},
        [](ExperimentConfig& c, std::string_view v) { c.response.noise = parse_double(v); },
        [](const ExperimentConfig& c) { return fmt(c.response.noise); }},
  Entry{{"hpsearch.trials", S, "random-search trials per repeat"},
        [](ExperimentConfig& c, std::string_view v) { c.hpsearch.trials = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.hpsearch.trials); }},
  Entry{{"hpsearch.repeats", S, "independent search repeats"},
        [](ExperimentConfig& c, std::string_view v) { c.hpsearch.repeats = parse_size(v); },
        [](const ExperimentConfig& c) { return fmt(c.hpsearch.repeats); }},
};
// clang-format on

const std::array<KeyInfo, kEntries.size()> kSchema = [] {
  std::array<KeyInfo, kEntries.size()> out{};
  for (std::size_t i = 0; i < kEntries.size(); ++i) out[i] = kEntries[i].info;
  return out;
}();

const Entry* find_entry(std::string_view key) {
  for (const auto& e : kEntries)
    if (e.info.name == key) return &e;
  return nullptr;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what, 0);
}

bool in_unit(double v) { return v > 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::equivalence: return "equivalence";
    case ExperimentKind::filter_response: return "filter-response";
    case ExperimentKind::lr_vs_init: return "lr-vs-init";
    case ExperimentKind::lr_sensitivity: return "lr-sensitivity";
    case ExperimentKind::alpha_sweep: return "alpha-sweep";
    case ExperimentKind::alpha_decay: return "alpha-decay";
    case ExperimentKind::hpsearch: return "hpsearch";
    case ExperimentKind::train: return "train";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  for (auto k : {ExperimentKind::equivalence, ExperimentKind::filter_response, ExperimentKind::lr_vs_init,
                 ExperimentKind::lr_sensitivity, ExperimentKind::alpha_sweep, ExperimentKind::alpha_decay,
                 ExperimentKind::hpsearch, ExperimentKind::train})
    if (to_string(k) == text) return k;
  bad_value("an experiment kind", text);
}

std::string_view to_string(tinynet::View view) { return view == tinynet::View::latent ? "latent" : "filtered"; }

tinynet::View parse_view(std::string_view text) {
  if (text == "latent") return tinynet::View::latent;
  if (text == "filtered") return tinynet::View::filtered;
  bad_value("latent or filtered", text);
}

std::span<const KeyInfo> config_schema() { return kSchema; }

std::vector<std::string_view> tunable_keys(tinynet::View view) {
  const KeyGroup want = view == tinynet::View::latent ? KeyGroup::latent_tunable : KeyGroup::filtered_tunable;
  std::vector<std::string_view> out;
  for (const auto& k : kSchema)
    if (k.group == want) out.push_back(k.name);
  return out;
}

bool uses_both_views(ExperimentKind kind) {
  return kind == ExperimentKind::equivalence || kind == ExperimentKind::hpsearch;
}

void set_key(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const Entry* e = find_entry(key);
  if (!e) throw ConfigError("unknown key '" + std::string(key) + "'", 0);
  try {
    e->set(cfg, value);
  } catch (const ConfigError& err) {
    throw ConfigError(std::string(key) + ": " + err.what(), 0);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string(key) + ": " + err.what(), 0);
  }
}

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  std::vector<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw ConfigError("duplicate key '" + std::string(key) + "'", line_no);
    try {
      set_key(cfg, key, value);
    } catch (const ConfigError& err) {
      throw ConfigError(err.what(), line_no);
    }
    seen.emplace_back(key);
  }
  validate(cfg, seen);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string format_config(const ExperimentConfig& cfg) {
  const KeyGroup other = cfg.view == tinynet::View::latent ? KeyGroup::filtered_tunable : KeyGroup::latent_tunable;
  std::string out;
  for (const auto& e : kEntries) {
    if (e.info.group == other && !uses_both_views(cfg.experiment)) continue;
    out += std::string(e.info.name) + " = " + e.get(cfg) + "\n";
  }
  return out;
}

void validate(const ExperimentConfig& cfg, std::span<const std::string> explicit_keys) {
  if (!uses_both_views(cfg.experiment)) {
    const KeyGroup other =
        cfg.view == tinynet::View::latent ? KeyGroup::filtered_tunable : KeyGroup::latent_tunable;
    for (const auto& key : explicit_keys) {
      const Entry* e = find_entry(key);
      if (e && e->info.group == other)
        throw ConfigError("'" + key + "' is not a tunable of the " + std::string(to_string(cfg.view)) + " view", 0);
    }
  }
  require(!cfg.name.empty() && cfg.name.find_first_of("/\\ ,") == std::string::npos,
          "name must be non-empty without slashes, commas or spaces");
  require(cfg.latent.epsilon > 0.0, "latent.epsilon must be positive");
  require(cfg.latent.lambda >= 0.0, "latent.lambda must be non-negative");
  require(in_unit(cfg.latent.gamma), "latent.gamma must lie in (0, 1]");
  require(cfg.latent.w0_init_scale >= 0.0, "latent.w0_init_scale must be non-negative");
  require(in_unit(cfg.filtered.alpha), "filtered.alpha must lie in (0, 1]");
  require(in_unit(cfg.filtered.gamma), "filtered.gamma must lie in (0, 1]");
  require(cfg.blobs.n_per_class > 0 && cfg.blobs.n_classes > 0 && cfg.blobs.dim > 0, "blobs counts must be positive");
  require(cfg.blobs.sigma >= 0.0, "blobs.sigma must be non-negative");
  require(cfg.dataset != DatasetKind::csv || !cfg.csv.path.empty(), "csv.path is required for dataset = csv");
  require(cfg.csv.test_fraction >= 0.0 && cfg.csv.test_fraction < 1.0, "csv.test_fraction must lie in [0, 1)");
  require(cfg.hidden_width > 0, "net.hidden_width must be positive");
  require(cfg.batch_size > 0, "batch_size must be positive");
  require(cfg.real.lr >= 0.0 && cfg.real.momentum >= 0.0 && cfg.real.weight_decay >= 0.0,
          "real optimizer settings must be non-negative");
  auto positive_list = [](const std::vector<double>& v) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
  };
  require(positive_list(cfg.sweep_epsilons), "sweep.epsilons must be a non-empty list of positive values");
  require(positive_list(cfg.sweep_scales), "sweep.scales must be a non-empty list of positive values");
  require(positive_list(cfg.sweep_alphas) &&
              std::all_of(cfg.sweep_alphas.begin(), cfg.sweep_alphas.end(), [](double a) { return a <= 1.0; }),
          "sweep.alphas must be a non-empty list of values in (0, 1]");
  require(in_unit(cfg.response.coefficient), "response.coefficient must lie in (0, 1]");
  require(cfg.response.period > 0.0 && cfg.response.noise >= 0.0, "response stream settings out of range");
  require(cfg.hpsearch.trials > 0 && cfg.hpsearch.repeats > 0, "hpsearch trials and repeats must be positive");
}

tinynet::NetConfig make_net_config(const ExperimentConfig& cfg, const tinynet::Dataset& data) {
  return tinynet::default_net(data, cfg.hidden_width);
}

tinynet::BinaryOptimizerConfig make_binary_config(const ExperimentConfig& cfg, tinynet::View view) {
  tinynet::BinaryOptimizerConfig b;
  b.view = view;
  b.latent.epsilon = {cfg.latent.epsilon_decay, cfg.latent.epsilon, 1};
  b.latent.lambda = cfg.latent.lambda;
  b.latent.gamma = cfg.latent.gamma;
  b.latent.clip = cfg.latent.clipping;
  b.latent.scale = cfg.latent.scaling;
  b.w0_init_scale = cfg.latent.w0_init_scale;
  b.filtered.alpha = {cfg.filtered.alpha_decay, cfg.filtered.alpha, 1};
  b.filtered.gamma = cfg.filtered.gamma;
  b.filtered.form = cfg.filter_form;
  return b;
}

tinynet::RealOptimizerConfig make_real_config(const ExperimentConfig& cfg) {
  return {cfg.real.lr, cfg.real.momentum, cfg.real.weight_decay, cfg.real.decay};
}

tinynet::Dataset make_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == DatasetKind::csv) return tinynet::load_csv(cfg.csv.path, cfg.csv.label_column, cfg.csv.test_fraction);
  return tinynet::make_blobs(cfg.blobs.n_per_class, cfg.blobs.n_classes, cfg.blobs.dim, cfg.blobs.sigma, cfg.blobs.seed);
}

}  // namespace bnnfilt::expcli
