#include "dmt/arch.hpp"

#include <stdexcept>

namespace dmt {

ArchSpec ArchSpec::desk() {
  ArchSpec a;
  a.image_size = 64;
  a.encoder_widths = {16, 32, 64};
  a.identity_res_blocks = 2;
  a.decoder_res_blocks = 2;
  a.decoder_up_widths = {32, 16};
  a.mlp_hidden = 64;
  a.disc_widths = {16, 32, 64, 128};
  a.disc_final_width = 128;
  return a;
}

ArchSpec ArchSpec::tiny() {
  ArchSpec a;
  a.image_size = 8;
  a.code_dim = 4;
  a.encoder_widths = {3, 4, 4};
  a.identity_res_blocks = 1;
  a.decoder_res_blocks = 1;
  a.decoder_up_widths = {3, 3};
  a.mlp_hidden = 5;
  a.mlp_hidden_layers = 1;
  a.upsample_kernel = 3;
  a.head_kernel = 3;
  a.disc_widths = {3, 4};
  a.disc_final_width = 4;
  return a;
}

int ArchSpec::downsampling_factor() const {
  return 1 << (static_cast<int>(encoder_widths.size()) - 1);
}

int ArchSpec::disc_output_size() const {
  int size = image_size;
  for (std::size_t i = 0; i < disc_widths.size(); ++i) size = (size + 1) / 2;
  return size;
}

int ArchSpec::adain_param_count() const {
  // Two AdaIN layers per residual block, each needing gamma and beta per channel.
  return decoder_res_blocks * 2 * 2 * identity_channels();
}

void ArchSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("architecture: " + what); };
  if (encoder_widths.empty()) fail("encoder_widths must not be empty");
  if (decoder_up_widths.size() + 1 != encoder_widths.size()) {
    fail("decoder_up_widths must have one entry per encoder downsampling");
  }
  if (image_size <= 0 || image_size % downsampling_factor() != 0) {
    fail("image_size must be a positive multiple of " + std::to_string(downsampling_factor()));
  }
  if (code_dim <= 0) fail("code_dim must be positive");
  if (mlp_hidden <= 0 || mlp_hidden_layers < 1) fail("MLP needs at least one hidden layer");
  if (disc_widths.empty()) fail("disc_widths must not be empty");
  if (upsample_kernel % 2 == 0 || head_kernel % 2 == 0) fail("decoder kernels must be odd");
  if (!(leaky_slope >= 0.0)) fail("leaky_slope must be >= 0");
  for (int w : encoder_widths) if (w <= 0) fail("widths must be positive");
  for (int w : decoder_up_widths) if (w <= 0) fail("widths must be positive");
  for (int w : disc_widths) if (w <= 0) fail("widths must be positive");
}

void to_json(nlohmann::json& j, const ArchSpec& a) {
  j = nlohmann::json{{"image_size", a.image_size},
                     {"code_dim", a.code_dim},
                     {"encoder_widths", a.encoder_widths},
                     {"identity_res_blocks", a.identity_res_blocks},
                     {"decoder_res_blocks", a.decoder_res_blocks},
                     {"decoder_up_widths", a.decoder_up_widths},
                     {"mlp_hidden", a.mlp_hidden},
                     {"mlp_hidden_layers", a.mlp_hidden_layers},
                     {"upsample_kernel", a.upsample_kernel},
                     {"head_kernel", a.head_kernel},
                     {"disc_widths", a.disc_widths},
                     {"disc_final_width", a.disc_final_width},
                     {"leaky_slope", a.leaky_slope}};
}

void from_json(const nlohmann::json& j, ArchSpec& a) {
  j.at("image_size").get_to(a.image_size);
  j.at("code_dim").get_to(a.code_dim);
  j.at("encoder_widths").get_to(a.encoder_widths);
  j.at("identity_res_blocks").get_to(a.identity_res_blocks);
  j.at("decoder_res_blocks").get_to(a.decoder_res_blocks);
  j.at("decoder_up_widths").get_to(a.decoder_up_widths);
  j.at("mlp_hidden").get_to(a.mlp_hidden);
  j.at("mlp_hidden_layers").get_to(a.mlp_hidden_layers);
  j.at("upsample_kernel").get_to(a.upsample_kernel);
  j.at("head_kernel").get_to(a.head_kernel);
  j.at("disc_widths").get_to(a.disc_widths);
  j.at("disc_final_width").get_to(a.disc_final_width);
  j.at("leaky_slope").get_to(a.leaky_slope);
}

}  // namespace dmt
