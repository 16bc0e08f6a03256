#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace dmt {

/// Frozen VGG-16 style feature network truncated at relu4_1.
///
/// Layers (torchvision `vgg16().features` indices in brackets):
/// conv1_1[0] conv1_2[2] pool conv2_1[5] conv2_2[7] pool conv3_1[10]
/// conv3_2[12] conv3_3[14] pool conv4_1[17] relu. Inputs in [0,1] are
/// normalized with the ImageNet mean/std first. Parameters never require
/// gradients; gradients still flow to the input.
class FeatureExtractor {
 public:
  /// Loads pretrained weights from a tensor archive with entries
  /// "features.<index>.weight" / "features.<index>.bias"
  /// (see tools/export_vgg16.py). Throws with instructions when the file is
  /// missing.
  static FeatureExtractor load_vgg16(const std::filesystem::path& weights);

  /// Same topology with He-normal weights from `seed`, channel widths
  /// divided by `width_divisor`. Used where no pretrained semantics matter.
  static FeatureExtractor random(std::uint64_t seed, int width_divisor = 1);

  torch::Tensor operator()(const torch::Tensor& x) const;

  const std::string& layer() const { return layer_; }
  const std::string& origin() const { return origin_; }
  void to(torch::Dtype dtype);

  struct Conv {
    torch::Tensor weight;
    torch::Tensor bias;
    bool pool_before = false;
  };
  const std::vector<Conv>& convs() const { return convs_; }

 private:
  FeatureExtractor() = default;

  std::vector<Conv> convs_;
  std::string layer_ = "relu4_1";
  std::string origin_;
};

}  // namespace dmt
