#include "dmt/features.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <array>
#include <cmath>
#include <stdexcept>

#include "dmt/checkpoint.hpp"

namespace dmt {

namespace {

struct LayerPlan {
  int index;  // torchvision features index
  int in;
  int out;
  bool pool_before;
};

constexpr std::array<LayerPlan, 8> kPlan = {{{0, 3, 64, false},
                                              {2, 64, 64, false},
                                              {5, 64, 128, true},
                                              {7, 128, 128, false},
                                              {10, 128, 256, true},
                                              {12, 256, 256, false},
                                              {14, 256, 256, false},
                                              {17, 256, 512, true}}};

}  // namespace

FeatureExtractor FeatureExtractor::load_vgg16(const std::filesystem::path& weights) {
  if (weights.empty() || !std::filesystem::exists(weights)) {
    throw std::runtime_error(
        "perceptual loss needs pretrained VGG-16 weights but '" + weights.string() +
        "' does not exist. Export them with `python3 tools/export_vgg16.py --out vgg16.dmt` and "
        "set `vgg_weights = vgg16.dmt` in the run config (or `perceptual = random` to use a "
        "seeded random-weight extractor).");
  }
  auto archive = read_archive(weights);
  FeatureExtractor fx;
  fx.origin_ = weights.string();
  for (const auto& layer : kPlan) {
    const auto prefix = "features." + std::to_string(layer.index);
    Conv conv{archive.at(prefix + ".weight").to(torch::kFloat32), archive.at(prefix + ".bias").to(torch::kFloat32),
              layer.pool_before};
    if (conv.weight.sizes() != torch::IntArrayRef({layer.out, layer.in, 3, 3})) {
      throw std::runtime_error("VGG-16 weight " + prefix + " has an unexpected shape");
    }
    fx.convs_.push_back(conv);
  }
  return fx;
}

FeatureExtractor FeatureExtractor::random(std::uint64_t seed, int width_divisor) {
  if (width_divisor < 1) throw std::invalid_argument("width_divisor must be >= 1");
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  FeatureExtractor fx;
  fx.origin_ = "random:" + std::to_string(seed) + "/" + std::to_string(width_divisor);
  for (const auto& layer : kPlan) {
    const int in = layer.index == 0 ? 3 : std::max(1, layer.in / width_divisor);
    const int out = std::max(1, layer.out / width_divisor);
    auto w = torch::randn({out, in, 3, 3}, gen, torch::kFloat32) * std::sqrt(2.0 / (in * 9.0));
    auto b = torch::randn({out}, gen, torch::kFloat32) * 0.01;
    fx.convs_.push_back({w, b, layer.pool_before});
  }
  return fx;
}

void FeatureExtractor::to(torch::Dtype dtype) {
  for (auto& c : convs_) {
    c.weight = c.weight.to(dtype);
    c.bias = c.bias.to(dtype);
  }
}

torch::Tensor FeatureExtractor::operator()(const torch::Tensor& x) const {
  if (convs_.empty()) throw std::runtime_error("feature extractor has no weights");
  auto opts = torch::TensorOptions().dtype(x.scalar_type());
  auto mean = torch::tensor({0.485, 0.456, 0.406}, opts).view({1, 3, 1, 1});
  auto stddev = torch::tensor({0.229, 0.224, 0.225}, opts).view({1, 3, 1, 1});
  auto h = (x - mean) / stddev;
  for (const auto& c : convs_) {
    if (c.pool_before) h = torch::max_pool2d(h, {2, 2}, {2, 2});
    h = torch::relu(torch::conv2d(h, c.weight, c.bias, 1, 1));
  }
  return h;
}

}  // namespace dmt
