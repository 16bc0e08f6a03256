#pragma once

#include <array>
#include <string_view>

#include <torch/torch.h>

#include "dmt/image.hpp"

namespace dmt {

enum class Region { face = 0, brow = 1, eye = 2, lip = 3 };

inline constexpr std::array<Region, 4> kRegions = {Region::face, Region::brow, Region::eye,
                                                   Region::lip};

std::string_view region_name(Region r);

/// Binary uint8 [H,W] masks over the four cosmetic regions.
struct CosmeticRegionSet {
  torch::Tensor face;
  torch::Tensor brow;
  torch::Tensor eye;
  torch::Tensor lip;

  const torch::Tensor& operator[](Region r) const;
  torch::Tensor& operator[](Region r);
};

inline constexpr double kDefaultEyeMargin = 0.5;

/// face: face, nose, ears, neck. brow: both eyebrows. lip: both lips.
/// eye: each eye's bounding box grown by `eye_margin` times its own height
/// (rows) and width (columns) on every side, clipped to the image, minus
/// hair, eye, eyebrow and lip pixels. A map without eye pixels yields an
/// empty eye mask.
CosmeticRegionSet extract_cosmetic_regions(const LabelMap& labels,
                                           double eye_margin = kDefaultEyeMargin);

/// Makeup-related region: 1 everywhere except background, eyes and hair.
torch::Tensor related_mask(const LabelMap& labels);

}  // namespace dmt
