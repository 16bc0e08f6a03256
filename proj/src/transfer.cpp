#include "dmt/transfer.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <stdexcept>

namespace dmt {

namespace {

torch::Tensor resize_batch(const torch::Tensor& batch, std::int64_t height, std::int64_t width) {
  if (batch.size(2) == height && batch.size(3) == width) return batch;
  auto image = batch.squeeze(0).to(torch::kFloat32);
  return resize_bilinear(image, height, width).unsqueeze(0).to(batch.scalar_type());
}

}  // namespace

PreparedImage prepare(const Model& model, const FaceImage& x) {
  validate(x);
  const auto factor = model.arch().downsampling_factor();
  if (x.height() % factor != 0 || x.width() % factor != 0) {
    throw std::invalid_argument("image size must be divisible by " + std::to_string(factor));
  }
  const auto size = model.arch().image_size;
  auto batch = resize_batch(x.pixels.unsqueeze(0), size, size).to(model.dtype());
  return {batch, x.height(), x.width()};
}

EncodedImage encode(Model& model, const FaceImage& x) {
  torch::NoGradGuard no_grad;
  auto prepared = prepare(model, x);
  auto identity = model.encode_identity(prepared.batch);
  auto code = model.encode_makeup(prepared.batch);
  return {prepared, identity, code};
}

GeneratorOutput decode_with(Model& model, const EncodedImage& source, const MakeupCode& code) {
  torch::NoGradGuard no_grad;
  if (code.values.dim() != 2 || code.values.size(0) != 1 || code.values.size(1) != model.arch().code_dim) {
    throw std::invalid_argument("makeup code must have " + std::to_string(model.arch().code_dim) + " entries");
  }
  auto out = model.decode(source.identity, {code.values.to(model.dtype())}, source.image.batch);
  const auto h = source.image.height;
  const auto w = source.image.width;
  if (out.composed.size(2) != h || out.composed.size(3) != w) {
    out.raw_face = resize_batch(out.raw_face, h, w);
    out.mask = resize_batch(out.mask.expand({-1, 3, -1, -1}), h, w).narrow(1, 0, 1);
    out.composed = resize_batch(out.composed, h, w);
  }
  return out;
}

void validate_alpha(double alpha, bool extrapolate) {
  if (!std::isfinite(alpha) || (!extrapolate && (alpha < 0.0 || alpha > 1.0))) {
    throw std::invalid_argument("alpha must lie in [0,1] (pass extrapolate to go beyond)");
  }
}

void validate_weights(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("hybrid: need at least one weight");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("hybrid: weights must be finite and >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) throw std::invalid_argument("hybrid: weights must sum to 1");
}

MakeupCode interpolate_codes(const MakeupCode& from, const MakeupCode& to, double alpha) {
  return {from.values * (1.0 - alpha) + to.values * alpha};
}

MakeupCode blend_codes(std::span<const MakeupCode> codes, std::span<const double> weights) {
  if (codes.empty() || codes.size() != weights.size()) {
    throw std::invalid_argument("blend_codes: need one weight per code and at least one code");
  }
  auto sum = codes.front().values * weights.front();
  for (std::size_t k = 1; k < codes.size(); ++k) sum = sum + codes[k].values * weights[k];
  return {sum};
}

GeneratorOutput reconstruct(Model& model, const FaceImage& x) {
  auto ex = encode(model, x);
  return decode_with(model, ex, ex.makeup);
}

GeneratorOutput pairwise(Model& model, const FaceImage& x, const FaceImage& y) {
  auto ex = encode(model, x);
  auto ey = encode(model, y);
  return decode_with(model, ex, ey.makeup);
}

GeneratorOutput interpolated(Model& model, const FaceImage& x, const FaceImage& y, double alpha, bool extrapolate) {
  validate_alpha(alpha, extrapolate);
  auto ex = encode(model, x);
  auto ey = encode(model, y);
  return decode_with(model, ex, interpolate_codes(ex.makeup, ey.makeup, alpha));
}

GeneratorOutput hybrid(Model& model, const FaceImage& x, std::span<const FaceImage> references,
                       std::span<const double> weights) {
  if (references.empty()) throw std::invalid_argument("hybrid: need at least one reference");
  if (references.size() != weights.size()) throw std::invalid_argument("hybrid: one weight per reference");
  validate_weights(weights);

  auto ex = encode(model, x);
  std::vector<MakeupCode> codes;
  for (const auto& ref : references) codes.push_back(encode(model, ref).makeup);
  return decode_with(model, ex, blend_codes(codes, weights));
}

torch::Tensor sample_codes(const Model& model, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return torch::randn({n, model.arch().code_dim}, gen, torch::TensorOptions().dtype(torch::kFloat32));
}

std::vector<GeneratorOutput> sample_multimodal(Model& model, const FaceImage& x, int n, std::uint64_t seed) {
  auto codes = sample_codes(model, n, seed);
  auto ex = encode(model, x);
  std::vector<GeneratorOutput> outputs;
  for (int i = 0; i < n; ++i) outputs.push_back(decode_with(model, ex, {codes.narrow(0, i, 1)}));
  return outputs;
}

TransferCase classify_transfer(bool x_makeup, bool y_makeup) {
  if (x_makeup) return y_makeup ? TransferCase::swap_makeup : TransferCase::remove_makeup;
  return y_makeup ? TransferCase::add_makeup : TransferCase::keep_bare;
}

std::string_view case_name(TransferCase c) {
  switch (c) {
    case TransferCase::keep_bare: return "keep non-makeup";
    case TransferCase::add_makeup: return "add makeup";
    case TransferCase::remove_makeup: return "remove makeup";
    case TransferCase::swap_makeup: return "swap makeup";
  }
  return "?";
}

bool result_has_makeup(TransferCase c) { return c == TransferCase::add_makeup || c == TransferCase::swap_makeup; }

FaceImage pairwise_face(Model& model, const FaceImage& x, const FaceImage& y) {
  auto out = pairwise(model, x, y);
  auto pixels = first_image(out.composed).to(torch::kFloat32).contiguous();
  return make_image(pixels, x.source_id + "<" + y.source_id,
                    result_has_makeup(classify_transfer(x.has_makeup, y.has_makeup)));
}

torch::Tensor residual(const torch::Tensor& x, const torch::Tensor& x_s) {
  if (x.sizes() != x_s.sizes()) throw std::invalid_argument("residual: shape mismatch");
  return (x - x_s).abs();
}

GeneratorOutput interpolate_faces(Model& model, const FaceImage& x, const FaceImage& y, double identity_alpha,
                                  double makeup_alpha) {
  auto ex = encode(model, x);
  auto ey = encode(model, y);
  EncodedImage blended = ex;
  blended.identity.features = ex.identity.features * (1.0 - identity_alpha) + ey.identity.features * identity_alpha;
  return decode_with(model, blended, interpolate_codes(ex.makeup, ey.makeup, makeup_alpha));
}

torch::Tensor first_image(const torch::Tensor& batch) { return batch.select(0, 0); }

}  // namespace dmt
