#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dmt/arch.hpp"
#include "dmt/augment.hpp"
#include "dmt/dataset.hpp"
#include "dmt/losses.hpp"

namespace dmt {

/// Training configuration. Serialized as a flat `key = value` file; `#`
/// starts a comment. A `preset = full|desk` line selects the baseline that
/// every other key then overrides, regardless of line order.
///
/// Keys:
///   preset, seed, dataset_root, output_dir, label_mapping, test_makeup,
///   test_nonmakeup, split_seed, epochs, constant_epochs, steps_per_epoch,
///   max_steps, lr, beta1, beta2, batch_size, load_size, eye_margin,
///   reconstruct_both, perceptual (vgg16|random), vgg_weights,
///   perceptual_width_divisor, grad_clip, checkpoint_every, log_every,
///   cache_images,
///   lambda_rec, lambda_per, lambda_face, lambda_brow, lambda_eye,
///   lambda_lip, lambda_i, lambda_m, lambda_a, lambda_kl, lambda_tv,
///   arch.image_size, arch.code_dim, arch.encoder_widths (comma list),
///   arch.identity_res_blocks, arch.decoder_res_blocks,
///   arch.decoder_up_widths, arch.mlp_hidden, arch.mlp_hidden_layers,
///   arch.upsample_kernel, arch.head_kernel, arch.disc_widths,
///   arch.disc_final_width, arch.leaky_slope
struct TrainConfig {
  std::string preset = "full";
  LossWeights weights;
  ArchSpec arch = ArchSpec::full();

  int epochs = 100;
  int constant_epochs = 50;
  /// 0 means one step per training image.
  std::int64_t steps_per_epoch = 0;
  /// 0 means epochs * steps_per_epoch.
  std::int64_t max_steps = 0;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 1;
  int load_size = 286;
  std::uint64_t seed = 0;

  std::filesystem::path dataset_root;
  std::filesystem::path output_dir = "runs/dmt";
  std::string label_mapping;
  std::size_t test_makeup = 250;
  std::size_t test_nonmakeup = 100;
  std::uint64_t split_seed = 0;

  double eye_margin = 0.5;
  bool reconstruct_both = true;
  std::string perceptual = "vgg16";
  std::filesystem::path vgg_weights;
  int perceptual_width_divisor = 1;
  double grad_clip = 0.0;  // 0 disables clipping
  std::int64_t checkpoint_every = 1000;
  std::int64_t log_every = 1;
  bool cache_images = false;

  /// 64x64 images, reduced widths, 2000 steps, random-weight perceptual
  /// features and an in-memory image cache.
  static TrainConfig desk();

  AugmentConfig augment() const { return {load_size, arch.image_size, 0.5}; }
  SplitSpec split() const { return {test_makeup, test_nonmakeup, split_seed}; }

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
std::string format_config(const TrainConfig& config);

/// Learning rate at a 1-based epoch: `lr` through `constant_epochs`, then a
/// linear ramp reaching 0 at epoch `epochs`.
double learning_rate_at(const TrainConfig& config, int epoch);

}  // namespace dmt
