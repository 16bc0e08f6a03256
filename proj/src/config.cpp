#include "dmt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dmt {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: bad value for " + key + ": '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + value + "'");
}

std::vector<int> parse_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter number(T TrainConfig::*field) {
  return [field](TrainConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}

template <typename T>
Setter weight(T LossWeights::*field) {
  return [field](TrainConfig& c, const std::string& k, const std::string& v) {
    c.weights.*field = parse_number<T>(k, v);
  };
}

template <typename T>
Setter arch_number(T ArchSpec::*field) {
  return [field](TrainConfig& c, const std::string& k, const std::string& v) { c.arch.*field = parse_number<T>(k, v); };
}

Setter arch_list(std::vector<int> ArchSpec::*field) {
  return [field](TrainConfig& c, const std::string& k, const std::string& v) { c.arch.*field = parse_list(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", number(&TrainConfig::seed)},
      {"dataset_root", [](TrainConfig& c, auto&, auto& v) { c.dataset_root = v; }},
      {"output_dir", [](TrainConfig& c, auto&, auto& v) { c.output_dir = v; }},
      {"label_mapping", [](TrainConfig& c, auto&, auto& v) { c.label_mapping = v; }},
      {"test_makeup", number(&TrainConfig::test_makeup)},
      {"test_nonmakeup", number(&TrainConfig::test_nonmakeup)},
      {"split_seed", number(&TrainConfig::split_seed)},
      {"epochs", number(&TrainConfig::epochs)},
      {"constant_epochs", number(&TrainConfig::constant_epochs)},
      {"steps_per_epoch", number(&TrainConfig::steps_per_epoch)},
      {"max_steps", number(&TrainConfig::max_steps)},
      {"lr", number(&TrainConfig::lr)},
      {"beta1", number(&TrainConfig::beta1)},
      {"beta2", number(&TrainConfig::beta2)},
      {"batch_size", number(&TrainConfig::batch_size)},
      {"load_size", number(&TrainConfig::load_size)},
      {"eye_margin", number(&TrainConfig::eye_margin)},
      {"reconstruct_both", [](TrainConfig& c, auto& k, auto& v) { c.reconstruct_both = parse_bool(k, v); }},
      {"perceptual", [](TrainConfig& c, auto&, auto& v) { c.perceptual = v; }},
      {"vgg_weights", [](TrainConfig& c, auto&, auto& v) { c.vgg_weights = v; }},
      {"perceptual_width_divisor", number(&TrainConfig::perceptual_width_divisor)},
      {"grad_clip", number(&TrainConfig::grad_clip)},
      {"checkpoint_every", number(&TrainConfig::checkpoint_every)},
      {"log_every", number(&TrainConfig::log_every)},
      {"cache_images", [](TrainConfig& c, auto& k, auto& v) { c.cache_images = parse_bool(k, v); }},
      {"lambda_rec", weight(&LossWeights::rec)},
      {"lambda_per", weight(&LossWeights::per)},
      {"lambda_face", weight(&LossWeights::face)},
      {"lambda_brow", weight(&LossWeights::brow)},
      {"lambda_eye", weight(&LossWeights::eye)},
      {"lambda_lip", weight(&LossWeights::lip)},
      {"lambda_i", weight(&LossWeights::identity)},
      {"lambda_m", weight(&LossWeights::makeup)},
      {"lambda_a", weight(&LossWeights::attention)},
      {"lambda_kl", weight(&LossWeights::kl)},
      {"lambda_tv", weight(&LossWeights::tv)},
      {"arch.image_size", arch_number(&ArchSpec::image_size)},
      {"arch.code_dim", arch_number(&ArchSpec::code_dim)},
      {"arch.encoder_widths", arch_list(&ArchSpec::encoder_widths)},
      {"arch.identity_res_blocks", arch_number(&ArchSpec::identity_res_blocks)},
      {"arch.decoder_res_blocks", arch_number(&ArchSpec::decoder_res_blocks)},
      {"arch.decoder_up_widths", arch_list(&ArchSpec::decoder_up_widths)},
      {"arch.mlp_hidden", arch_number(&ArchSpec::mlp_hidden)},
      {"arch.mlp_hidden_layers", arch_number(&ArchSpec::mlp_hidden_layers)},
      {"arch.upsample_kernel", arch_number(&ArchSpec::upsample_kernel)},
      {"arch.head_kernel", arch_number(&ArchSpec::head_kernel)},
      {"arch.disc_widths", arch_list(&ArchSpec::disc_widths)},
      {"arch.disc_final_width", arch_number(&ArchSpec::disc_final_width)},
      {"arch.leaky_slope", arch_number(&ArchSpec::leaky_slope)},
  };
  return table;
}

}  // namespace

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.preset = "desk";
  c.arch = ArchSpec::desk();
  c.load_size = 72;
  c.epochs = 20;
  c.constant_epochs = 10;
  c.steps_per_epoch = 100;
  c.perceptual = "random";
  c.perceptual_width_divisor = 4;
  c.checkpoint_every = 500;
  c.cache_images = true;
  c.test_makeup = 10;
  c.test_nonmakeup = 10;
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  weights.validate();
  arch.validate();
  if (epochs <= 0) fail("epochs must be positive");
  if (constant_epochs < 0 || constant_epochs > epochs) fail("constant_epochs must lie in [0, epochs]");
  if (steps_per_epoch < 0 || max_steps < 0) fail("step counts must be >= 0");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail("adam betas must lie in [0,1)");
  if (batch_size != 1) fail("only batch_size = 1 is supported");
  if (load_size < arch.image_size) fail("load_size must be >= arch.image_size");
  if (!(eye_margin >= 0.0)) fail("eye_margin must be >= 0");
  if (perceptual != "vgg16" && perceptual != "random") fail("perceptual must be 'vgg16' or 'random'");
  if (perceptual_width_divisor < 1) fail("perceptual_width_divisor must be >= 1");
  if (!(grad_clip >= 0.0)) fail("grad_clip must be >= 0");
  if (checkpoint_every <= 0 || log_every <= 0) fail("checkpoint_every and log_every must be positive");
}

TrainConfig parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::string preset = "full";
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key == "preset") {
      preset = value;
    } else {
      entries.emplace_back(key, value);
    }
  }

  TrainConfig config;
  if (preset == "desk") {
    config = TrainConfig::desk();
  } else if (preset != "full") {
    throw std::invalid_argument("config: unknown preset '" + preset + "'");
  }
  for (const auto& [key, value] : entries) {
    auto it = setters().find(key);
    if (it == setters().end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream os;
  const auto& w = c.weights;
  const auto& a = c.arch;
  os << "preset = " << c.preset << '\n'
     << "seed = " << c.seed << '\n'
     << "dataset_root = " << c.dataset_root.string() << '\n'
     << "output_dir = " << c.output_dir.string() << '\n'
     << "label_mapping = " << c.label_mapping << '\n'
     << "test_makeup = " << c.test_makeup << '\n'
     << "test_nonmakeup = " << c.test_nonmakeup << '\n'
     << "split_seed = " << c.split_seed << '\n'
     << "epochs = " << c.epochs << '\n'
     << "constant_epochs = " << c.constant_epochs << '\n'
     << "steps_per_epoch = " << c.steps_per_epoch << '\n'
     << "max_steps = " << c.max_steps << '\n'
     << "lr = " << num(c.lr) << '\n'
     << "beta1 = " << num(c.beta1) << '\n'
     << "beta2 = " << num(c.beta2) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "load_size = " << c.load_size << '\n'
     << "eye_margin = " << num(c.eye_margin) << '\n'
     << "reconstruct_both = " << (c.reconstruct_both ? "true" : "false") << '\n'
     << "perceptual = " << c.perceptual << '\n'
     << "vgg_weights = " << c.vgg_weights.string() << '\n'
     << "perceptual_width_divisor = " << c.perceptual_width_divisor << '\n'
     << "grad_clip = " << num(c.grad_clip) << '\n'
     << "checkpoint_every = " << c.checkpoint_every << '\n'
     << "log_every = " << c.log_every << '\n'
     << "cache_images = " << (c.cache_images ? "true" : "false") << '\n'
     << "lambda_rec = " << num(w.rec) << '\n'
     << "lambda_per = " << num(w.per) << '\n'
     << "lambda_face = " << num(w.face) << '\n'
     << "lambda_brow = " << num(w.brow) << '\n'
     << "lambda_eye = " << num(w.eye) << '\n'
     << "lambda_lip = " << num(w.lip) << '\n'
     << "lambda_i = " << num(w.identity) << '\n'
     << "lambda_m = " << num(w.makeup) << '\n'
     << "lambda_a = " << num(w.attention) << '\n'
     << "lambda_kl = " << num(w.kl) << '\n'
     << "lambda_tv = " << num(w.tv) << '\n'
     << "arch.image_size = " << a.image_size << '\n'
     << "arch.code_dim = " << a.code_dim << '\n'
     << "arch.encoder_widths = " << join(a.encoder_widths) << '\n'
     << "arch.identity_res_blocks = " << a.identity_res_blocks << '\n'
     << "arch.decoder_res_blocks = " << a.decoder_res_blocks << '\n'
     << "arch.decoder_up_widths = " << join(a.decoder_up_widths) << '\n'
     << "arch.mlp_hidden = " << a.mlp_hidden << '\n'
     << "arch.mlp_hidden_layers = " << a.mlp_hidden_layers << '\n'
     << "arch.upsample_kernel = " << a.upsample_kernel << '\n'
     << "arch.head_kernel = " << a.head_kernel << '\n'
     << "arch.disc_widths = " << join(a.disc_widths) << '\n'
     << "arch.disc_final_width = " << a.disc_final_width << '\n'
     << "arch.leaky_slope = " << num(a.leaky_slope) << '\n';
  return os.str();
}

double learning_rate_at(const TrainConfig& config, int epoch) {
  if (epoch <= config.constant_epochs) return config.lr;
  const int decay = config.epochs - config.constant_epochs;
  if (decay <= 0) return 0.0;
  const double remaining = static_cast<double>(config.epochs - epoch) / static_cast<double>(decay);
  return config.lr * std::clamp(remaining, 0.0, 1.0);
}

}  // namespace dmt
