#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace dmt {

/// Architecture descriptor. Fully determines every parameter shape of the
/// identity encoder, makeup encoder, decoder (with its AdaIN MLP) and
/// discriminator.
///
/// Encoders: a k7 s1 conv to encoder_widths[0], then one k4 s2 conv per
/// further width. The identity code therefore has encoder_widths.back()
/// channels at image_size / 2^(encoder_widths.size()-1) resolution.
/// Discriminator: one k4 s2 conv per disc_widths entry, then k4 s1 to
/// disc_final_width and k4 s1 to a single channel; all convolutions use
/// "same" padding.
struct ArchSpec {
  int image_size = 256;
  int code_dim = 8;
  std::vector<int> encoder_widths{64, 128, 256};
  int identity_res_blocks = 4;
  int decoder_res_blocks = 4;
  std::vector<int> decoder_up_widths{128, 64};
  int mlp_hidden = 256;
  int mlp_hidden_layers = 2;
  int upsample_kernel = 5;
  int head_kernel = 7;
  std::vector<int> disc_widths{64, 128, 256, 512};
  int disc_final_width = 512;
  double leaky_slope = 0.2;

  /// Full-size plan (256x256, 8-d makeup code).
  static ArchSpec full() { return {}; }
  /// 64x64 with reduced widths, for CPU-scale training.
  static ArchSpec desk();
  /// 8x8 with a 4-d code and a handful of channels, for gradient checks.
  static ArchSpec tiny();

  int downsampling_factor() const;
  int identity_size() const { return image_size / downsampling_factor(); }
  int identity_channels() const { return encoder_widths.back(); }
  int disc_output_size() const;
  /// Number of (gamma, beta) scalars the MLP emits.
  int adain_param_count() const;

  void validate() const;

  bool operator==(const ArchSpec&) const = default;
};

void to_json(nlohmann::json& j, const ArchSpec& a);
void from_json(const nlohmann::json& j, ArchSpec& a);

}  // namespace dmt
