#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "dmt/arch.hpp"

namespace dmt {

/// Makeup-unrelated content, [B, C, H/4, W/4] under the default plan.
struct IdentityCode {
  torch::Tensor features;
};

/// Makeup style, [B, code_dim].
struct MakeupCode {
  torch::Tensor values;
};

/// Decoder output. raw_face [B,3,H,W] and mask [B,1,H,W] lie in [0,1];
/// composed = mask * raw_face + (1 - mask) * source.
struct GeneratorOutput {
  torch::Tensor raw_face;
  torch::Tensor mask;
  torch::Tensor composed;
};

torch::Tensor compose(const torch::Tensor& raw_face, const torch::Tensor& mask,
                      const torch::Tensor& source);

/// Convolution with TensorFlow-style "same" padding: output size is
/// ceil(input / stride). Even kernels pad one extra row/column at the end.
class SameConv2dImpl : public torch::nn::Module {
 public:
  SameConv2dImpl(int in, int out, int kernel, int stride);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};

 private:
  int kernel_;
  int stride_;
};
TORCH_MODULE(SameConv2d);

/// Instance normalization without affine parameters.
torch::Tensor instance_norm(const torch::Tensor& x, double eps = 1e-5);
/// Instance normalization modulated by per-sample, per-channel gamma/beta [B,C].
torch::Tensor adain(const torch::Tensor& x, const torch::Tensor& gamma, const torch::Tensor& beta,
                    double eps = 1e-5);

/// Normalizes each sample over (C,H,W), then applies a per-channel affine.
class LayerNorm2dImpl : public torch::nn::Module {
 public:
  explicit LayerNorm2dImpl(int channels, double eps = 1e-5);
  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor gamma;
  torch::Tensor beta;

 private:
  double eps_;
};
TORCH_MODULE(LayerNorm2d);

class ResBlockImpl : public torch::nn::Module {
 public:
  explicit ResBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  SameConv2d conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(ResBlock);

class AdaINResBlockImpl : public torch::nn::Module {
 public:
  explicit AdaINResBlockImpl(int channels);
  /// `params` is [B, 4C]: gamma1, beta1, gamma2, beta2.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& params);

 private:
  int channels_;
  SameConv2d conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(AdaINResBlock);

/// E_i: strided convolutions with instance norm + relu, then residual blocks.
class IdentityEncoderImpl : public torch::nn::Module {
 public:
  explicit IdentityEncoderImpl(const ArchSpec& arch);
  /// x in [0,1], [B,3,H,W].
  torch::Tensor forward(const torch::Tensor& x);

 private:
  std::vector<SameConv2d> convs_;
  std::vector<ResBlock> blocks_;
};
TORCH_MODULE(IdentityEncoder);

/// E_m: convolutions with relu, no normalization, global average pooling and
/// a fully connected projection to the makeup code.
class MakeupEncoderImpl : public torch::nn::Module {
 public:
  explicit MakeupEncoderImpl(const ArchSpec& arch);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  std::vector<SameConv2d> convs_;
  torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(MakeupEncoder);

/// G: an MLP maps the makeup code to AdaIN parameters for every AdaIN layer;
/// AdaIN residual blocks, then nearest upsampling + conv + layer norm stages,
/// then a tanh face head and a sigmoid attention head.
class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const ArchSpec& arch);
  /// Returns {raw_face in [0,1], mask in [0,1]}.
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& identity,
                                                  const torch::Tensor& code);
  torch::Tensor adain_params(const torch::Tensor& code);

 private:
  int code_dim_;
  torch::nn::Sequential mlp_{nullptr};
  std::vector<AdaINResBlock> blocks_;
  std::vector<SameConv2d> up_convs_;
  std::vector<LayerNorm2d> up_norms_;
  SameConv2d face_head_{nullptr}, mask_head_{nullptr};
};
TORCH_MODULE(Decoder);

/// D: patch discriminator producing raw (unbounded) scores [B,1,h,w].
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const ArchSpec& arch);
  torch::Tensor forward(const torch::Tensor& x);

  SameConv2d& final_layer() { return convs_.back(); }

 private:
  double slope_;
  std::vector<SameConv2d> convs_;
};
TORCH_MODULE(Discriminator);

struct DecodeOptions {
  /// Replace the predicted attention mask by a constant.
  std::optional<double> forced_mask;
};

/// The four networks plus their architecture descriptor.
class Model {
 public:
  static constexpr const char* kVersion = "dmt-model/1";

  /// He-initialized from `seed`.
  Model(ArchSpec arch, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  /// Deep copy with independent parameter storage.
  Model clone() const;

  const ArchSpec& arch() const { return arch_; }

  IdentityCode encode_identity(const torch::Tensor& x);
  MakeupCode encode_makeup(const torch::Tensor& x);
  GeneratorOutput decode(const IdentityCode& identity, const MakeupCode& code,
                         const torch::Tensor& source, const DecodeOptions& options = {});
  torch::Tensor discriminate(const torch::Tensor& x);

  IdentityEncoder& identity_encoder() { return identity_encoder_; }
  MakeupEncoder& makeup_encoder() { return makeup_encoder_; }
  Decoder& decoder() { return decoder_; }
  Discriminator& discriminator() { return discriminator_; }

  /// E_i, E_m and G (including the MLP): everything L_G updates.
  std::vector<torch::Tensor> generator_parameters() const;
  std::vector<torch::Tensor> discriminator_parameters() const;
  /// Every parameter with a stable, prefixed name.
  std::vector<std::pair<std::string, torch::Tensor>> named_parameters() const;

  void to(torch::Dtype dtype);
  torch::Dtype dtype() const;

 private:
  ArchSpec arch_;
  IdentityEncoder identity_encoder_{nullptr};
  MakeupEncoder makeup_encoder_{nullptr};
  Decoder decoder_{nullptr};
  Discriminator discriminator_{nullptr};
};

/// He (fan-in, relu gain) normal init for every weight with dim > 1; zero
/// biases; unit/zero layer-norm affines.
void he_initialize(torch::nn::Module& module, std::uint64_t seed);

}  // namespace dmt
