#include "dmt/trainer.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "dmt/augment.hpp"
#include "dmt/checkpoint.hpp"
#include "dmt/histmatch.hpp"
#include "dmt/regions.hpp"
#include "json.hpp"

namespace dmt {

// --- data ------------------------------------------------------------------

ImagePool::ImagePool(std::vector<DatasetEntry> makeup, std::vector<DatasetEntry> nonmakeup,
                     LabelMapping mapping, bool cache)
    : makeup_(std::move(makeup)),
      nonmakeup_(std::move(nonmakeup)),
      makeup_count_(makeup_.size()),
      nonmakeup_count_(nonmakeup_.size()),
      mapping_(mapping),
      cache_(cache),
      makeup_cache_(cache ? makeup_count_ : 0),
      nonmakeup_cache_(cache ? nonmakeup_count_ : 0) {}

ImagePool ImagePool::from_samples(std::vector<LoadedSample> makeup, std::vector<LoadedSample> nonmakeup) {
  ImagePool pool;
  pool.cache_ = true;
  pool.makeup_count_ = makeup.size();
  pool.nonmakeup_count_ = nonmakeup.size();
  for (auto& s : makeup) pool.makeup_cache_.emplace_back(std::move(s));
  for (auto& s : nonmakeup) pool.nonmakeup_cache_.emplace_back(std::move(s));
  return pool;
}

LoadedSample ImagePool::get(bool makeup, std::size_t index) const {
  const std::size_t count = makeup ? makeup_count_ : nonmakeup_count_;
  if (index >= count) throw std::out_of_range("image pool index out of range");
  if (cache_) {
    auto& slot = (makeup ? makeup_cache_ : nonmakeup_cache_)[index];
    if (!slot) slot = load_sample((makeup ? makeup_ : nonmakeup_)[index], mapping_);
    return *slot;
  }
  return load_sample((makeup ? makeup_ : nonmakeup_)[index], mapping_);
}

PairDraw draw_pair(std::size_t n_makeup, std::size_t n_nonmakeup, std::mt19937_64& rng) {
  if (n_makeup + n_nonmakeup == 0) throw std::invalid_argument("sample_pair: empty image pool");
  auto pick = [&](bool& is_makeup, std::size_t& index) {
    if (n_makeup == 0) {
      is_makeup = false;
    } else if (n_nonmakeup == 0) {
      is_makeup = true;
    } else {
      is_makeup = std::bernoulli_distribution(0.5)(rng);
    }
    const auto n = is_makeup ? n_makeup : n_nonmakeup;
    index = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  PairDraw draw;
  pick(draw.x_makeup, draw.x_index);
  pick(draw.y_makeup, draw.y_index);
  return draw;
}

Batch sample_pair(const ImagePool& pool, const AugmentConfig& augment_config, std::mt19937_64& rng) {
  const auto draw = draw_pair(pool.makeup_size(), pool.nonmakeup_size(), rng);
  auto x = pool.get(draw.x_makeup, draw.x_index);
  auto y = pool.get(draw.y_makeup, draw.y_index);
  auto [xi, xl] = augment(x.image, x.labels, augment_config, rng);
  auto [yi, yl] = augment(y.image, y.labels, augment_config, rng);
  return {std::move(xi), std::move(yi), std::move(xl), std::move(yl)};
}

// --- graph and losses ------------------------------------------------------

ForwardGraph forward_graph(Model& model, const Batch& batch, const TrainConfig& config, at::Generator& noise) {
  const auto dtype = model.dtype();
  ForwardGraph g;
  g.x = batch.x.pixels.unsqueeze(0).to(dtype);
  g.y = batch.y.pixels.unsqueeze(0).to(dtype);

  g.regions_x = extract_cosmetic_regions(batch.labels_x, config.eye_margin);
  const auto regions_y = extract_cosmetic_regions(batch.labels_y, config.eye_margin);
  g.x_y = makeup_ground_truth(batch.x, batch.y, g.regions_x, regions_y).image.pixels.unsqueeze(0).to(dtype);
  g.related_x = related_mask(batch.labels_x);
  g.related_y = related_mask(batch.labels_y);

  g.i_x = model.encode_identity(g.x);
  g.m_x = model.encode_makeup(g.x);
  g.m_y = model.encode_makeup(g.y);
  g.recon_x = model.decode(g.i_x, g.m_x, g.x);
  g.transfer = model.decode(g.i_x, g.m_y, g.x);
  g.i_x_s = model.encode_identity(g.transfer.composed);
  g.m_x_s = model.encode_makeup(g.transfer.composed);
  g.sampled = {torch::randn({1, model.arch().code_dim}, noise, torch::TensorOptions().dtype(torch::kFloat32)).to(dtype)};
  g.random = model.decode(g.i_x, g.sampled, g.x);
  if (config.reconstruct_both) {
    g.recon_y = model.decode(model.encode_identity(g.y), g.m_y, g.y);
  }
  return g;
}

LossTerms generator_terms(Model& model, const ForwardGraph& g, const FeatureExtractor& extractor,
                          const TrainConfig& config) {
  const auto& w = config.weights;
  LossTerms t;
  t.adv_g = adversarial_loss_g(model.discriminate(g.transfer.composed), model.discriminate(g.random.composed));

  t.rec = reconstruction_loss(g.x, g.recon_x.composed);
  if (g.recon_y) t.rec = 0.5 * (t.rec + reconstruction_loss(g.y, g.recon_y->composed));

  t.per = perceptual_loss(g.x, g.transfer.composed, extractor);
  t.mak = makeup_loss(g.transfer.composed, g.x_y, g.regions_x, w);
  t.imr = imr_loss(g.i_x.features, g.i_x_s.features, g.m_y.values, g.m_x_s.values, w);

  // Attention and smoothness apply to every mask the decoder produced.
  std::vector<std::pair<torch::Tensor, torch::Tensor>> masks = {
      {g.recon_x.mask, g.related_x}, {g.transfer.mask, g.related_x}, {g.random.mask, g.related_x}};
  if (g.recon_y) masks.emplace_back(g.recon_y->mask, g.related_y);
  t.att = torch::zeros({}, g.x.options());
  t.tv = torch::zeros({}, g.x.options());
  for (const auto& [mask, related] : masks) {
    t.att = t.att + attention_loss(mask, related);
    t.tv = t.tv + tv_loss(mask);
  }
  t.att = t.att / static_cast<double>(masks.size());
  t.tv = t.tv / static_cast<double>(masks.size());

  t.kl = kl_loss(g.m_x.values, g.m_y.values);
  return t;
}

namespace {

void require_finite(const torch::Tensor& value, const std::string& name) {
  if (!std::isfinite(value.item<double>())) throw NonFiniteLoss(name);
}

void set_requires_grad(const std::vector<torch::Tensor>& params, bool flag) {
  for (auto p : params) p.requires_grad_(flag);
}

void restore_adam(torch::optim::Adam& opt, const std::vector<torch::Tensor>& params, const TensorArchive& archive,
                  const std::string& prefix) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto base = prefix + std::to_string(i);
    if (!archive.contains(base + ".step")) continue;
    auto state = std::make_unique<torch::optim::AdamParamState>();
    state->step(archive.at(base + ".step").item<std::int64_t>());
    state->exp_avg(archive.at(base + ".exp_avg").clone());
    state->exp_avg_sq(archive.at(base + ".exp_avg_sq").clone());
    opt.state()[params[i].unsafeGetTensorImpl()] = std::move(state);
  }
}

void store_adam(torch::optim::Adam& opt, const std::vector<torch::Tensor>& params, TensorArchive& archive,
                const std::string& prefix) {
  auto& states = opt.state();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = states.find(params[i].unsafeGetTensorImpl());
    if (it == states.end()) continue;
    auto& st = static_cast<torch::optim::AdamParamState&>(*it->second);
    const auto base = prefix + std::to_string(i);
    archive.tensors.emplace_back(base + ".step", torch::tensor(st.step(), torch::kInt64));
    archive.tensors.emplace_back(base + ".exp_avg", st.exp_avg().clone());
    archive.tensors.emplace_back(base + ".exp_avg_sq", st.exp_avg_sq().clone());
  }
}

}  // namespace

std::string StepRecord::to_json() const {
  nlohmann::json j;
  j["step"] = step;
  j["epoch"] = epoch;
  j["lr"] = lr;
  for (const auto& [k, v] : losses) j[k] = v;
  return j.dump();
}

// --- state -----------------------------------------------------------------

TrainState::TrainState(Model model, const TrainConfig& config)
    : data_rng(config.seed), noise(at::make_generator<at::CPUGeneratorImpl>(config.seed + 7919)), model_(std::move(model)) {
  auto options = torch::optim::AdamOptions(config.lr).betas({config.beta1, config.beta2});
  g_opt_ = std::make_unique<torch::optim::Adam>(model_.generator_parameters(), options);
  d_opt_ = std::make_unique<torch::optim::Adam>(model_.discriminator_parameters(), options);
}

void TrainState::set_learning_rate(double lr) {
  for (auto* opt : {g_opt_.get(), d_opt_.get()}) {
    for (auto& group : opt->param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

void TrainState::save(const std::filesystem::path& path, const TrainConfig& config) const {
  TensorArchive archive;
  archive.meta["kind"] = "train_state";
  archive.meta["step"] = step;
  archive.meta["config"] = format_config(config);
  std::ostringstream rng_text;
  rng_text << data_rng;
  archive.meta["data_rng"] = rng_text.str();
  append_model(archive, model_);
  store_adam(*g_opt_, model_.generator_parameters(), archive, "optim.g.");
  store_adam(*d_opt_, model_.discriminator_parameters(), archive, "optim.d.");
  archive.tensors.emplace_back("rng.noise", noise.get_state());
  write_archive(path, archive);
}

std::unique_ptr<TrainState> TrainState::load(const std::filesystem::path& path, TrainConfig* stored_config) {
  const auto archive = read_archive(path);
  if (archive.meta.value("kind", std::string{}) != "train_state") {
    throw std::runtime_error(path.string() + " is not a training state file");
  }
  const auto config = parse_config(archive.meta.at("config").get<std::string>());
  auto state = std::make_unique<TrainState>(model_from_archive(archive), config);
  state->step = archive.meta.at("step").get<std::int64_t>();
  std::istringstream rng_text(archive.meta.at("data_rng").get<std::string>());
  rng_text >> state->data_rng;
  state->noise.set_state(archive.at("rng.noise"));
  restore_adam(*state->g_opt_, state->model_.generator_parameters(), archive, "optim.g.");
  restore_adam(*state->d_opt_, state->model_.discriminator_parameters(), archive, "optim.d.");
  if (stored_config) *stored_config = config;
  return state;
}

std::unique_ptr<TrainState> make_train_state(const TrainConfig& config) {
  config.validate();
  return std::make_unique<TrainState>(Model(config.arch, config.seed), config);
}

FeatureExtractor make_extractor(const TrainConfig& config) {
  if (config.perceptual == "random") return FeatureExtractor::random(config.seed + 104729, config.perceptual_width_divisor);
  return FeatureExtractor::load_vgg16(config.vgg_weights);
}

// --- step ------------------------------------------------------------------

StepRecord train_step(TrainState& state, const Batch& batch, const FeatureExtractor& extractor,
                      const TrainConfig& config) {
  auto& model = state.model();
  auto graph = forward_graph(model, batch, config, state.noise);

  auto adv_d = adversarial_loss_d(model.discriminate(graph.x), model.discriminate(graph.transfer.composed.detach()),
                                  model.discriminate(graph.random.composed.detach()));
  require_finite(adv_d, "adv_d");
  state.discriminator_optimizer().zero_grad();
  adv_d.backward();
  state.discriminator_optimizer().step();

  const auto d_params = model.discriminator_parameters();
  set_requires_grad(d_params, false);
  LossTerms terms;
  Objectives objectives;
  try {
    terms = generator_terms(model, graph, extractor, config);
    terms.adv_d = adv_d.detach();
    objectives = total_losses(terms, config.weights);
    for (const auto& [name, value] : loss_record(terms, objectives)) {
      if (!std::isfinite(value)) throw NonFiniteLoss(name);
    }
    state.generator_optimizer().zero_grad();
    objectives.generator.backward();
    if (config.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(model.generator_parameters(), config.grad_clip);
    state.generator_optimizer().step();
  } catch (...) {
    set_requires_grad(d_params, true);
    throw;
  }
  set_requires_grad(d_params, true);

  ++state.step;
  StepRecord record;
  record.step = state.step;
  record.losses = loss_record(terms, objectives);
  return record;
}

// --- schedule and driver ---------------------------------------------------

std::int64_t resolved_steps_per_epoch(const TrainConfig& config, const ImagePool& pool) {
  if (config.steps_per_epoch > 0) return config.steps_per_epoch;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(pool.size()));
}

std::int64_t resolved_total_steps(const TrainConfig& config, const ImagePool& pool) {
  if (config.max_steps > 0) return config.max_steps;
  return resolved_steps_per_epoch(config, pool) * config.epochs;
}

int epoch_of_step(std::int64_t zero_based_step, std::int64_t steps_per_epoch) {
  return static_cast<int>(zero_based_step / steps_per_epoch) + 1;
}

Trainer::Trainer(TrainConfig config, ImagePool pool, std::unique_ptr<TrainState> state)
    : config_(std::move(config)),
      pool_(std::move(pool)),
      state_(state ? std::move(state) : make_train_state(config_)),
      extractor_(make_extractor(config_)),
      steps_per_epoch_(resolved_steps_per_epoch(config_, pool_)),
      total_steps_(resolved_total_steps(config_, pool_)) {
  config_.validate();
  if (!(state_->model().arch() == config_.arch)) {
    throw std::invalid_argument("training state architecture differs from the config");
  }
}

StepRecord Trainer::step() {
  const int epoch = epoch_of_step(state_->step, steps_per_epoch_);
  const double lr = learning_rate_at(config_, epoch);
  state_->set_learning_rate(lr);
  auto batch = sample_pair(pool_, config_.augment(), state_->data_rng);
  auto record = train_step(*state_, batch, extractor_, config_);
  record.epoch = epoch;
  record.lr = lr;
  return record;
}

std::vector<StepRecord> Trainer::run(std::optional<std::int64_t> limit) {
  std::vector<StepRecord> records;
  std::int64_t done = 0;
  while (!finished() && (!limit || done < *limit)) {
    records.push_back(step());
    ++done;
  }
  return records;
}

std::filesystem::path fit(const TrainConfig& config) {
  config.validate();
  const auto index = load_dataset(config.dataset_root, config.split());
  ImagePool pool(index.train_makeup, index.train_nonmakeup, LabelMapping::parse(config.label_mapping),
                 config.cache_images);

  std::filesystem::create_directories(config.output_dir);
  const auto state_path = config.output_dir / "state.dmt";
  std::unique_ptr<TrainState> state;
  if (std::filesystem::exists(state_path)) state = TrainState::load(state_path);

  {
    nlohmann::json split;
    for (const auto* list : {&index.test_makeup, &index.test_nonmakeup}) {
      for (const auto& e : *list) {
        split["test"].push_back({{"image", e.image.string()}, {"mask", e.mask.string()}, {"makeup", e.has_makeup}});
      }
    }
    std::ofstream(config.output_dir / "split.json") << split.dump(2) << '\n';
    std::ofstream(config.output_dir / "config.txt") << format_config(config);
  }

  Trainer trainer(config, std::move(pool), std::move(state));
  std::ofstream log(config.output_dir / "train.log", std::ios::app);
  while (!trainer.finished()) {
    const auto record = trainer.step();
    if (record.step % config.log_every == 0) log << record.to_json() << '\n' << std::flush;
    if (record.step % config.checkpoint_every == 0) trainer.state().save(state_path, config);
  }
  trainer.state().save(state_path, config);
  const auto final_path = config.output_dir / "model_final.dmt";
  save_model(final_path, trainer.state().model(), {{"steps", trainer.state().step}});
  return final_path;
}

}  // namespace dmt
