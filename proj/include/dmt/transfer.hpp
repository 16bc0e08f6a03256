#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "dmt/image.hpp"
#include "dmt/nets.hpp"

namespace dmt {

/// A face resized to the model's working resolution, remembering its own size.
/// Sizes other than the trained one are resampled in and out bilinearly,
/// which is lossy.
struct PreparedImage {
  torch::Tensor batch;  // [1,3,S,S], S = arch.image_size
  std::int64_t height = 0;
  std::int64_t width = 0;
};

struct EncodedImage {
  PreparedImage image;
  IdentityCode identity;
  MakeupCode makeup;
};

/// Throws std::invalid_argument unless both sides are divisible by the
/// model's downsampling factor.
PreparedImage prepare(const Model& model, const FaceImage& x);
EncodedImage encode(Model& model, const FaceImage& x);

/// Decodes `code` on the identity of `source` and composes against it, then
/// returns all three images at the source's own resolution.
GeneratorOutput decode_with(Model& model, const EncodedImage& source, const MakeupCode& code);

/// (1 - alpha) * from + alpha * to.
MakeupCode interpolate_codes(const MakeupCode& from, const MakeupCode& to, double alpha);
/// sum_k weights[k] * codes[k]; weights are used as given.
MakeupCode blend_codes(std::span<const MakeupCode> codes, std::span<const double> weights);

/// Self reconstruction G(E_i(x), E_m(x)).
GeneratorOutput reconstruct(Model& model, const FaceImage& x);

/// G(E_i(x), E_m(y)) composed against x.
GeneratorOutput pairwise(Model& model, const FaceImage& x, const FaceImage& y);

/// Decodes (1 - alpha) m_x + alpha m_y. alpha must lie in [0,1] unless
/// `extrapolate` is set.
GeneratorOutput interpolated(Model& model, const FaceImage& x, const FaceImage& y, double alpha,
                             bool extrapolate = false);

inline constexpr double kWeightSumTolerance = 1e-6;

/// Throw std::invalid_argument on an out-of-contract alpha or weight vector.
void validate_alpha(double alpha, bool extrapolate = false);
void validate_weights(std::span<const double> weights);

/// Decodes sum_k alpha_k m_{y_k}. Requires K >= 1, alpha_k >= 0 and
/// |sum alpha - 1| <= 1e-6; never renormalizes.
GeneratorOutput hybrid(Model& model, const FaceImage& x, std::span<const FaceImage> references,
                       std::span<const double> weights);

/// `n` decodes with codes drawn from N(0, I) by a generator seeded with `seed`.
std::vector<GeneratorOutput> sample_multimodal(Model& model, const FaceImage& x, int n, std::uint64_t seed);

/// The codes sample_multimodal(seed) decodes, [n, code_dim].
torch::Tensor sample_codes(const Model& model, int n, std::uint64_t seed);

/// The four pair-wise cases by makeup status of x and y. The result wears
/// makeup exactly when y does.
enum class TransferCase { keep_bare, add_makeup, remove_makeup, swap_makeup };
TransferCase classify_transfer(bool x_makeup, bool y_makeup);
std::string_view case_name(TransferCase c);
bool result_has_makeup(TransferCase c);

/// pairwise() packaged as a FaceImage at x's resolution, flagged per the case.
FaceImage pairwise_face(Model& model, const FaceImage& x, const FaceImage& y);

/// Elementwise |x - x_s|.
torch::Tensor residual(const torch::Tensor& x, const torch::Tensor& x_s);

/// Library-level face interpolation: decodes the blend of two identity codes
/// and two makeup codes, composed against x.
GeneratorOutput interpolate_faces(Model& model, const FaceImage& x, const FaceImage& y, double identity_alpha,
                                  double makeup_alpha);

/// [3,H,W] view of the first image in a [B,3,H,W] batch.
torch::Tensor first_image(const torch::Tensor& batch);

}  // namespace dmt
