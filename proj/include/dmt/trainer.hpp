#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <ATen/core/Generator.h>
#include <torch/torch.h>

#include "dmt/config.hpp"
#include "dmt/dataset.hpp"
#include "dmt/features.hpp"
#include "dmt/losses.hpp"
#include "dmt/nets.hpp"

namespace dmt {

/// Training images of both classes, optionally decoded once and kept in memory.
class ImagePool {
 public:
  ImagePool(std::vector<DatasetEntry> makeup, std::vector<DatasetEntry> nonmakeup,
            LabelMapping mapping = {}, bool cache = false);
  /// Wraps already-loaded samples (no disk access).
  static ImagePool from_samples(std::vector<LoadedSample> makeup, std::vector<LoadedSample> nonmakeup);

  std::size_t makeup_size() const { return makeup_count_; }
  std::size_t nonmakeup_size() const { return nonmakeup_count_; }
  std::size_t size() const { return makeup_count_ + nonmakeup_count_; }

  LoadedSample get(bool makeup, std::size_t index) const;

 private:
  ImagePool() = default;

  std::vector<DatasetEntry> makeup_, nonmakeup_;
  std::size_t makeup_count_ = 0, nonmakeup_count_ = 0;
  LabelMapping mapping_;
  bool cache_ = false;
  mutable std::vector<std::optional<LoadedSample>> makeup_cache_, nonmakeup_cache_;
};

struct PairDraw {
  bool x_makeup = false;
  std::size_t x_index = 0;
  bool y_makeup = false;
  std::size_t y_index = 0;
};

/// x and y each independently pick the makeup or non-makeup class with
/// probability 1/2 (or the only non-empty class), then a uniform image.
PairDraw draw_pair(std::size_t n_makeup, std::size_t n_nonmakeup, std::mt19937_64& rng);

struct Batch {
  FaceImage x, y;
  LabelMap labels_x, labels_y;
};

/// Draws a pair and augments each image independently.
Batch sample_pair(const ImagePool& pool, const AugmentConfig& augment, std::mt19937_64& rng);

/// Everything the forward graph of one step produces.
struct ForwardGraph {
  torch::Tensor x, y, x_y;
  CosmeticRegionSet regions_x;
  torch::Tensor related_x, related_y;
  IdentityCode i_x, i_x_s;
  MakeupCode m_x, m_y, m_x_s, sampled;
  GeneratorOutput recon_x, transfer, random;
  std::optional<GeneratorOutput> recon_y;
};

ForwardGraph forward_graph(Model& model, const Batch& batch, const TrainConfig& config,
                           at::Generator& noise);

/// Generator-side loss terms for a graph, evaluated against the current D.
LossTerms generator_terms(Model& model, const ForwardGraph& graph, const FeatureExtractor& extractor,
                          const TrainConfig& config);

class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(const std::string& term)
      : std::runtime_error("non-finite loss term '" + term + "'"), term_(term) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

struct StepRecord {
  std::int64_t step = 0;  // 1-based index of the completed step
  int epoch = 1;
  double lr = 0.0;
  std::map<std::string, double> losses;

  std::string to_json() const;
};

/// Model, both Adam optimizers, counters and random streams.
class TrainState {
 public:
  TrainState(Model model, const TrainConfig& config);

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  torch::optim::Adam& generator_optimizer() { return *g_opt_; }
  torch::optim::Adam& discriminator_optimizer() { return *d_opt_; }
  void set_learning_rate(double lr);

  std::int64_t step = 0;
  std::mt19937_64 data_rng;
  at::Generator noise;

  void save(const std::filesystem::path& path, const TrainConfig& config) const;
  /// Restores a state written by save(). The config stored in the file is
  /// returned through `stored_config` when non-null.
  static std::unique_ptr<TrainState> load(const std::filesystem::path& path,
                                          TrainConfig* stored_config = nullptr);

 private:
  Model model_;
  std::unique_ptr<torch::optim::Adam> g_opt_;
  std::unique_ptr<torch::optim::Adam> d_opt_;
};

std::unique_ptr<TrainState> make_train_state(const TrainConfig& config);

/// One D update on L_D (fakes detached) followed by one update of E_i, E_m
/// and G on L_G (D frozen). Throws NonFiniteLoss naming the first bad term.
StepRecord train_step(TrainState& state, const Batch& batch, const FeatureExtractor& extractor,
                      const TrainConfig& config);

FeatureExtractor make_extractor(const TrainConfig& config);

/// Steps per epoch after resolving the "one per training image" default.
std::int64_t resolved_steps_per_epoch(const TrainConfig& config, const ImagePool& pool);
std::int64_t resolved_total_steps(const TrainConfig& config, const ImagePool& pool);
int epoch_of_step(std::int64_t zero_based_step, std::int64_t steps_per_epoch);

/// Drives train_step over a pool with the learning-rate schedule.
class Trainer {
 public:
  Trainer(TrainConfig config, ImagePool pool, std::unique_ptr<TrainState> state = nullptr);

  StepRecord step();
  /// Runs until the configured total step count (or `limit` more steps).
  std::vector<StepRecord> run(std::optional<std::int64_t> limit = std::nullopt);

  bool finished() const { return state_->step >= total_steps_; }
  TrainState& state() { return *state_; }
  const TrainConfig& config() const { return config_; }
  const ImagePool& pool() const { return pool_; }
  std::int64_t total_steps() const { return total_steps_; }

 private:
  TrainConfig config_;
  ImagePool pool_;
  std::unique_ptr<TrainState> state_;
  FeatureExtractor extractor_;
  std::int64_t steps_per_epoch_;
  std::int64_t total_steps_;
};

/// Full run: loads the dataset, resumes from <output_dir>/state.dmt when it
/// exists, appends one JSON line per logged step to <output_dir>/train.log,
/// writes the state every checkpoint_every steps and returns the path of the
/// final model checkpoint <output_dir>/model_final.dmt.
std::filesystem::path fit(const TrainConfig& config);

}  // namespace dmt
