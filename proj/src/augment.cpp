#include "dmt/augment.hpp"

#include <stdexcept>

namespace dmt {

AugmentParams AugmentParams::center(std::int64_t load_size, std::int64_t crop_size) {
  const auto offset = (load_size - crop_size) / 2;
  return {load_size, crop_size, offset, offset, false};
}

AugmentParams draw_augment(const AugmentConfig& config, std::mt19937_64& rng) {
  if (config.crop_size > config.load_size) throw std::invalid_argument("crop_size exceeds load_size");
  const auto range = config.load_size - config.crop_size;
  std::uniform_int_distribution<std::int64_t> offset(0, range);
  AugmentParams p;
  p.load_size = config.load_size;
  p.crop_size = config.crop_size;
  p.top = offset(rng);
  p.left = offset(rng);
  p.flip = std::bernoulli_distribution(config.flip_probability)(rng);
  return p;
}

std::pair<FaceImage, LabelMap> apply_augment(const FaceImage& image, const LabelMap& labels,
                                             const AugmentParams& p) {
  validate_aligned(image, labels);
  if (p.top < 0 || p.left < 0 || p.top + p.crop_size > p.load_size ||
      p.left + p.crop_size > p.load_size) {
    throw std::invalid_argument("crop window outside the resized image");
  }
  using torch::indexing::Slice;
  auto pixels = resize_bilinear(image.pixels, p.load_size, p.load_size);
  auto parts = resize_nearest(labels.labels, p.load_size, p.load_size);
  pixels = pixels.index({Slice(), Slice(p.top, p.top + p.crop_size), Slice(p.left, p.left + p.crop_size)});
  parts = parts.index({Slice(p.top, p.top + p.crop_size), Slice(p.left, p.left + p.crop_size)});
  if (p.flip) {
    pixels = pixels.flip({2});
    parts = parts.flip({1});
  }
  return {FaceImage{pixels.contiguous(), image.source_id, image.has_makeup},
          LabelMap{parts.contiguous()}};
}

std::pair<FaceImage, LabelMap> augment(const FaceImage& image, const LabelMap& labels,
                                       const AugmentConfig& config, std::mt19937_64& rng) {
  return apply_augment(image, labels, draw_augment(config, rng));
}

}  // namespace dmt
