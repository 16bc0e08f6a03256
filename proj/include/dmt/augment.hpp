#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "dmt/image.hpp"

namespace dmt {

struct AugmentConfig {
  std::int64_t load_size = 286;
  std::int64_t crop_size = 256;
  double flip_probability = 0.5;
};

/// One concrete draw of the resize/crop/flip pipeline.
struct AugmentParams {
  std::int64_t load_size = 286;
  std::int64_t crop_size = 256;
  std::int64_t top = 0;
  std::int64_t left = 0;
  bool flip = false;

  static AugmentParams center(std::int64_t load_size, std::int64_t crop_size);
};

AugmentParams draw_augment(const AugmentConfig& config, std::mt19937_64& rng);

/// Resizes to load_size (bilinear for pixels, nearest for labels), crops the
/// same window from both and optionally mirrors both horizontally.
std::pair<FaceImage, LabelMap> apply_augment(const FaceImage& image, const LabelMap& labels,
                                             const AugmentParams& params);

std::pair<FaceImage, LabelMap> augment(const FaceImage& image, const LabelMap& labels,
                                       const AugmentConfig& config, std::mt19937_64& rng);

}  // namespace dmt
