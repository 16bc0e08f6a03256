#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "dmt/image.hpp"
#include "dmt/regions.hpp"

namespace dmt {

/// N×3 pixel values pulled out of one cosmetic region of one image.
/// `values` is float32 [N, 3].
struct PixelSet {
  torch::Tensor values;
  std::string image_id;
  std::string region;

  std::int64_t size() const { return values.size(0); }
};

PixelSet gather_pixels(const FaceImage& image, const torch::Tensor& mask, std::string region = {});

/// Exact quantile (sorted-rank) histogram matching, per channel.
///
/// Source pixels are ranked per channel (ties by ascending index); rank r of
/// N_src receives the reference value of rank round(r (N_ref-1) / (N_src-1)),
/// with halves rounded up. A single source pixel takes the reference median
/// rank round((N_ref-1)/2). Empty src gives an empty result; empty ref throws.
PixelSet match_histogram(const PixelSet& src, const PixelSet& ref);

/// Same rank rule computed on 256-level quantized values via counting sort
/// over bins. On 8-bit data it reproduces match_histogram exactly; otherwise
/// results agree to within one quantization step.
PixelSet match_histogram_binned(const PixelSet& src, const PixelSet& ref);

struct GroundTruth {
  FaceImage image;
  std::vector<std::string> warnings;
};

/// Histogram-matched target x_y: a copy of `x` whose face, brow, eye and lip
/// regions (applied in that order, from the original pixels of x) take the
/// per-channel distribution of the same region in `y`. A region present in x
/// but empty in y is left unchanged and reported in `warnings`.
GroundTruth makeup_ground_truth(const FaceImage& x, const FaceImage& y,
                                const CosmeticRegionSet& rx, const CosmeticRegionSet& ry);

}  // namespace dmt
