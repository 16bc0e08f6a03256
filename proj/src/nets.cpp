#include "dmt/nets.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <stdexcept>

namespace dmt {

namespace F = torch::nn::functional;

namespace {

torch::Tensor to_signed(const torch::Tensor& x) { return x * 2.0 - 1.0; }

void check_image_batch(const torch::Tensor& x, const ArchSpec& arch, const char* who) {
  if (!x.defined() || x.dim() != 4 || x.size(1) != 3) {
    throw std::invalid_argument(std::string(who) + ": expected a [B,3,H,W] image batch");
  }
  const auto factor = arch.downsampling_factor();
  if (x.size(2) % factor != 0 || x.size(3) % factor != 0) {
    throw std::invalid_argument(std::string(who) + ": image size must be divisible by " +
                                std::to_string(factor));
  }
}

}  // namespace

torch::Tensor compose(const torch::Tensor& raw_face, const torch::Tensor& mask,
                      const torch::Tensor& source) {
  return mask * raw_face + (1.0 - mask) * source;
}

// --- building blocks -------------------------------------------------------

SameConv2dImpl::SameConv2dImpl(int in, int out, int kernel, int stride)
    : kernel_(kernel), stride_(stride) {
  const int total = std::max(kernel - stride, 0);
  const bool symmetric = total % 2 == 0;
  conv = register_module(
      "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel)
                                    .stride(stride)
                                    .padding(symmetric ? total / 2 : 0)));
}

torch::Tensor SameConv2dImpl::forward(const torch::Tensor& x) {
  const int total = std::max(kernel_ - stride_, 0);
  if (total % 2 == 0) return conv->forward(x);
  const int before = total / 2;
  const int after = total - before;
  return conv->forward(F::pad(x, F::PadFuncOptions({before, after, before, after})));
}

torch::Tensor instance_norm(const torch::Tensor& x, double eps) {
  auto mean = x.mean({2, 3}, /*keepdim=*/true);
  auto var = x.var({2, 3}, /*unbiased=*/false, /*keepdim=*/true);
  return (x - mean) / torch::sqrt(var + eps);
}

torch::Tensor adain(const torch::Tensor& x, const torch::Tensor& gamma, const torch::Tensor& beta,
                    double eps) {
  return instance_norm(x, eps) * gamma.unsqueeze(-1).unsqueeze(-1) + beta.unsqueeze(-1).unsqueeze(-1);
}

LayerNorm2dImpl::LayerNorm2dImpl(int channels, double eps) : eps_(eps) {
  gamma = register_parameter("gamma", torch::ones({channels}));
  beta = register_parameter("beta", torch::zeros({channels}));
}

torch::Tensor LayerNorm2dImpl::forward(const torch::Tensor& x) {
  auto mean = x.mean({1, 2, 3}, true);
  auto var = x.var({1, 2, 3}, false, true);
  auto y = (x - mean) / torch::sqrt(var + eps_);
  return y * gamma.view({1, -1, 1, 1}) + beta.view({1, -1, 1, 1});
}

ResBlockImpl::ResBlockImpl(int channels) {
  conv1_ = register_module("conv1", SameConv2d(channels, channels, 3, 1));
  conv2_ = register_module("conv2", SameConv2d(channels, channels, 3, 1));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  auto h = torch::relu(instance_norm(conv1_->forward(x)));
  return x + instance_norm(conv2_->forward(h));
}

AdaINResBlockImpl::AdaINResBlockImpl(int channels) : channels_(channels) {
  conv1_ = register_module("conv1", SameConv2d(channels, channels, 3, 1));
  conv2_ = register_module("conv2", SameConv2d(channels, channels, 3, 1));
}

torch::Tensor AdaINResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& params) {
  auto chunks = params.split(channels_, 1);
  auto h = torch::relu(adain(conv1_->forward(x), chunks[0], chunks[1]));
  return x + adain(conv2_->forward(h), chunks[2], chunks[3]);
}

// --- networks --------------------------------------------------------------

IdentityEncoderImpl::IdentityEncoderImpl(const ArchSpec& arch) {
  arch.validate();
  int in = 3;
  for (std::size_t i = 0; i < arch.encoder_widths.size(); ++i) {
    const int out = arch.encoder_widths[i];
    convs_.push_back(register_module("conv" + std::to_string(i),
                                     SameConv2d(in, out, i == 0 ? 7 : 4, i == 0 ? 1 : 2)));
    in = out;
  }
  for (int b = 0; b < arch.identity_res_blocks; ++b) {
    blocks_.push_back(register_module("block" + std::to_string(b), ResBlock(in)));
  }
}

torch::Tensor IdentityEncoderImpl::forward(const torch::Tensor& x) {
  auto h = to_signed(x);
  for (auto& conv : convs_) h = torch::relu(instance_norm(conv->forward(h)));
  for (auto& block : blocks_) h = block->forward(h);
  return h;
}

MakeupEncoderImpl::MakeupEncoderImpl(const ArchSpec& arch) {
  arch.validate();
  int in = 3;
  for (std::size_t i = 0; i < arch.encoder_widths.size(); ++i) {
    const int out = arch.encoder_widths[i];
    convs_.push_back(register_module("conv" + std::to_string(i),
                                     SameConv2d(in, out, i == 0 ? 7 : 4, i == 0 ? 1 : 2)));
    in = out;
  }
  fc_ = register_module("fc", torch::nn::Linear(in, arch.code_dim));
}

torch::Tensor MakeupEncoderImpl::forward(const torch::Tensor& x) {
  auto h = to_signed(x);
  for (auto& conv : convs_) h = torch::relu(conv->forward(h));
  return fc_->forward(h.mean({2, 3}));
}

DecoderImpl::DecoderImpl(const ArchSpec& arch) : code_dim_(arch.code_dim) {
  arch.validate();
  const int channels = arch.identity_channels();

  mlp_ = torch::nn::Sequential();
  int in = arch.code_dim;
  for (int l = 0; l < arch.mlp_hidden_layers; ++l) {
    mlp_->push_back(torch::nn::Linear(in, arch.mlp_hidden));
    mlp_->push_back(torch::nn::ReLU());
    in = arch.mlp_hidden;
  }
  mlp_->push_back(torch::nn::Linear(in, arch.adain_param_count()));
  mlp_ = register_module("mlp", mlp_);

  for (int b = 0; b < arch.decoder_res_blocks; ++b) {
    blocks_.push_back(register_module("block" + std::to_string(b), AdaINResBlock(channels)));
  }
  in = channels;
  for (std::size_t i = 0; i < arch.decoder_up_widths.size(); ++i) {
    const int out = arch.decoder_up_widths[i];
    up_convs_.push_back(register_module("up" + std::to_string(i),
                                        SameConv2d(in, out, arch.upsample_kernel, 1)));
    up_norms_.push_back(register_module("up_norm" + std::to_string(i), LayerNorm2d(out)));
    in = out;
  }
  face_head_ = register_module("face_head", SameConv2d(in, 3, arch.head_kernel, 1));
  mask_head_ = register_module("mask_head", SameConv2d(in, 1, arch.head_kernel, 1));
}

torch::Tensor DecoderImpl::adain_params(const torch::Tensor& code) { return mlp_->forward(code); }

std::pair<torch::Tensor, torch::Tensor> DecoderImpl::forward(const torch::Tensor& identity,
                                                             const torch::Tensor& code) {
  if (code.dim() != 2 || code.size(1) != code_dim_) {
    throw std::invalid_argument("decoder: makeup code must be [B," + std::to_string(code_dim_) + "]");
  }
  if (code.size(0) != identity.size(0)) throw std::invalid_argument("decoder: batch size mismatch");
  auto params = adain_params(code);
  const auto per_block = params.size(1) / static_cast<std::int64_t>(blocks_.size());
  auto h = identity;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    h = blocks_[b]->forward(h, params.narrow(1, static_cast<std::int64_t>(b) * per_block, per_block));
  }
  for (std::size_t i = 0; i < up_convs_.size(); ++i) {
    h = F::interpolate(h, F::InterpolateFuncOptions()
                              .scale_factor(std::vector<double>{2.0, 2.0})
                              .mode(torch::kNearest));
    h = torch::relu(up_norms_[i]->forward(up_convs_[i]->forward(h)));
  }
  auto raw = (torch::tanh(face_head_->forward(h)) + 1.0) * 0.5;
  auto mask = torch::sigmoid(mask_head_->forward(h));
  return {raw, mask};
}

DiscriminatorImpl::DiscriminatorImpl(const ArchSpec& arch) : slope_(arch.leaky_slope) {
  arch.validate();
  int in = 3;
  int index = 0;
  for (int w : arch.disc_widths) {
    convs_.push_back(register_module("conv" + std::to_string(index++), SameConv2d(in, w, 4, 2)));
    in = w;
  }
  convs_.push_back(register_module("conv" + std::to_string(index++),
                                   SameConv2d(in, arch.disc_final_width, 4, 1)));
  convs_.push_back(register_module("conv" + std::to_string(index++),
                                   SameConv2d(arch.disc_final_width, 1, 4, 1)));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) {
  auto h = to_signed(x);
  for (std::size_t i = 0; i + 1 < convs_.size(); ++i) {
    h = F::leaky_relu(convs_[i]->forward(h), F::LeakyReLUFuncOptions().negative_slope(slope_));
  }
  return convs_.back()->forward(h);
}

// --- model -----------------------------------------------------------------

void he_initialize(torch::nn::Module& module, std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& item : module.named_parameters(/*recurse=*/true)) {
    const auto& name = item.key();
    auto& p = item.value();
    const bool is_weight = name.size() >= 6 && name.compare(name.size() - 6, 6, "weight") == 0;
    if (is_weight && p.dim() > 1) {
      const auto fan_in = p.numel() / p.size(0);
      auto w = torch::randn(p.sizes(), gen, torch::TensorOptions().dtype(torch::kFloat64));
      p.copy_(w * std::sqrt(2.0 / static_cast<double>(fan_in)));
    } else if (name.ends_with("gamma")) {
      p.fill_(1.0);
    } else {
      p.zero_();
    }
  }
}

Model::Model(ArchSpec arch, std::uint64_t seed) : arch_(std::move(arch)) {
  arch_.validate();
  identity_encoder_ = IdentityEncoder(arch_);
  makeup_encoder_ = MakeupEncoder(arch_);
  decoder_ = Decoder(arch_);
  discriminator_ = Discriminator(arch_);
  he_initialize(*identity_encoder_, seed * 4 + 0);
  he_initialize(*makeup_encoder_, seed * 4 + 1);
  he_initialize(*decoder_, seed * 4 + 2);
  he_initialize(*discriminator_, seed * 4 + 3);
}

Model Model::clone() const {
  Model copy(arch_, 0);
  copy.to(dtype());
  torch::NoGradGuard no_grad;
  auto src = named_parameters();
  auto dst = copy.named_parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].second.copy_(src[i].second);
  return copy;
}

IdentityCode Model::encode_identity(const torch::Tensor& x) {
  check_image_batch(x, arch_, "encode_identity");
  return {identity_encoder_->forward(x)};
}

MakeupCode Model::encode_makeup(const torch::Tensor& x) {
  check_image_batch(x, arch_, "encode_makeup");
  return {makeup_encoder_->forward(x)};
}

GeneratorOutput Model::decode(const IdentityCode& identity, const MakeupCode& code,
                              const torch::Tensor& source, const DecodeOptions& options) {
  check_image_batch(source, arch_, "decode");
  const auto& f = identity.features;
  const auto factor = arch_.downsampling_factor();
  if (f.dim() != 4 || f.size(1) != arch_.identity_channels() || f.size(2) * factor != source.size(2) ||
      f.size(3) * factor != source.size(3) || f.size(0) != source.size(0)) {
    throw std::invalid_argument("decode: identity code does not match the source image");
  }
  auto [raw, mask] = decoder_->forward(f, code.values);
  if (options.forced_mask) mask = torch::full_like(mask, *options.forced_mask);
  return {raw, mask, compose(raw, mask, source)};
}

torch::Tensor Model::discriminate(const torch::Tensor& x) {
  if (!x.defined() || x.dim() != 4 || x.size(1) != 3) {
    throw std::invalid_argument("discriminate: expected a [B,3,H,W] image batch");
  }
  return discriminator_->forward(x);
}

std::vector<torch::Tensor> Model::generator_parameters() const {
  std::vector<torch::Tensor> params;
  for (const torch::nn::Module* m : {static_cast<const torch::nn::Module*>(identity_encoder_.get()),
                                     static_cast<const torch::nn::Module*>(makeup_encoder_.get()),
                                     static_cast<const torch::nn::Module*>(decoder_.get())}) {
    for (auto& p : m->parameters()) params.push_back(p);
  }
  return params;
}

std::vector<torch::Tensor> Model::discriminator_parameters() const {
  return discriminator_->parameters();
}

std::vector<std::pair<std::string, torch::Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  auto add = [&](const std::string& prefix, const torch::nn::Module& m) {
    for (const auto& item : m.named_parameters()) out.emplace_back(prefix + item.key(), item.value());
  };
  add("identity_encoder.", *identity_encoder_);
  add("makeup_encoder.", *makeup_encoder_);
  add("decoder.", *decoder_);
  add("discriminator.", *discriminator_);
  return out;
}

void Model::to(torch::Dtype dtype) {
  identity_encoder_->to(dtype);
  makeup_encoder_->to(dtype);
  decoder_->to(dtype);
  discriminator_->to(dtype);
}

torch::Dtype Model::dtype() const {
  return identity_encoder_->parameters().front().scalar_type();
}

}  // namespace dmt
