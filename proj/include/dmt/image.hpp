#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "dmt/labels.hpp"

namespace dmt {

/// RGB face image. `pixels` is a float32 tensor laid out channel-first,
/// [3, H, W], with every value in [0, 1].
struct FaceImage {
  torch::Tensor pixels;
  std::string source_id;
  bool has_makeup = false;

  std::int64_t height() const { return pixels.size(1); }
  std::int64_t width() const { return pixels.size(2); }
};

/// Per-pixel canonical part IDs, uint8 [H, W], aligned with a FaceImage.
struct LabelMap {
  torch::Tensor labels;

  std::int64_t height() const { return labels.size(0); }
  std::int64_t width() const { return labels.size(1); }
};

// Throw std::invalid_argument when the invariants do not hold.
void validate(const FaceImage& image);
void validate(const LabelMap& labels);
void validate_aligned(const FaceImage& image, const LabelMap& labels);

FaceImage make_image(torch::Tensor pixels, std::string source_id = {}, bool has_makeup = false);
LabelMap make_labels(torch::Tensor labels);

FaceImage load_image(const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path, const LabelMapping& mapping = {});

/// {height, width} of an image file on disk.
std::pair<int, int> probe_size(const std::filesystem::path& path);

/// Decodes PNG/JPEG bytes. Throws std::runtime_error when undecodable.
torch::Tensor decode_image(std::span<const std::uint8_t> bytes);

/// Lossless PNG encoding of a [3,H,W] or [H,W] tensor in [0,1] (8 bit).
std::vector<std::uint8_t> encode_png(const torch::Tensor& image);
void save_image(const torch::Tensor& image, const std::filesystem::path& path);
void save_labels(const LabelMap& labels, const std::filesystem::path& path);

/// Bilinear resize of a [C,H,W] float tensor.
torch::Tensor resize_bilinear(const torch::Tensor& image, std::int64_t height, std::int64_t width);
/// Nearest-neighbour resize of a [H,W] uint8 label tensor.
torch::Tensor resize_nearest(const torch::Tensor& labels, std::int64_t height, std::int64_t width);

}  // namespace dmt
