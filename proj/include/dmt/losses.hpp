#pragma once

#include <map>
#include <string>

#include <torch/torch.h>

#include "dmt/features.hpp"
#include "dmt/regions.hpp"

namespace dmt {

/// Loss weights. Defaults are the published full-scale settings.
struct LossWeights {
  double rec = 1.0;
  double per = 1e-4;
  double face = 50.0;
  double brow = 50.0;
  double eye = 50.0;
  double lip = 50.0;
  double identity = 1.0;  // lambda_i
  double makeup = 1.0;    // lambda_m
  double attention = 10.0;
  double kl = 0.01;
  double tv = 1e-4;

  double region(Region r) const;
  /// Throws std::invalid_argument unless every weight is finite and >= 0.
  void validate() const;

  bool operator==(const LossWeights&) const = default;
};

// All losses return 0-dim tensors and are differentiable w.r.t. their tensor
// arguments. Image batches are [B,3,H,W]; masks are [B,1,H,W] or anything
// broadcastable to it.

/// Mean absolute difference.
torch::Tensor reconstruction_loss(const torch::Tensor& x, const torch::Tensor& x_r);

/// Root-mean-square difference between extractor features of x and x_s.
torch::Tensor perceptual_loss(const torch::Tensor& x, const torch::Tensor& x_s,
                              const FeatureExtractor& extractor);

struct MakeupLoss {
  torch::Tensor face, brow, eye, lip;  // unweighted per-region RMS
  torch::Tensor total;                 // sum of lambda_c * region term

  torch::Tensor& operator[](Region r);
};

/// Per-region RMS over the masked elements (pixels x channels); a region
/// without pixels contributes 0. x_y is treated as a constant.
MakeupLoss makeup_loss(const torch::Tensor& x_s, const torch::Tensor& x_y,
                       const CosmeticRegionSet& regions, const LossWeights& weights);

struct IdentityMakeupLoss {
  torch::Tensor identity;  // mean |i_x - i_x^s|
  torch::Tensor makeup;    // mean |m_y - m_x^s|
  torch::Tensor total;     // lambda_i * identity + lambda_m * makeup
};

IdentityMakeupLoss imr_loss(const torch::Tensor& i_x, const torch::Tensor& i_x_s,
                            const torch::Tensor& m_y, const torch::Tensor& m_x_s,
                            const LossWeights& weights);

/// Mean absolute difference between the attention mask and the related mask.
torch::Tensor attention_loss(const torch::Tensor& mask, const torch::Tensor& related);

/// LSGAN discriminator objective: mean (D(x)-1)^2 + mean D(x_s)^2 + mean D(x_f)^2.
torch::Tensor adversarial_loss_d(const torch::Tensor& real, const torch::Tensor& fake_s,
                                 const torch::Tensor& fake_f);
/// LSGAN generator objective: mean (D(x_s)-1)^2 + mean (D(x_f)-1)^2.
torch::Tensor adversarial_loss_g(const torch::Tensor& fake_s, const torch::Tensor& fake_f);

/// KL of N(m, I) against N(0, I) up to a constant: (|m_x|^2 + |m_y|^2) / 2,
/// averaged over the batch.
torch::Tensor kl_loss(const torch::Tensor& m_x, const torch::Tensor& m_y);

/// mean |M[i+1,j] - M[i,j]| + mean |M[i,j+1] - M[i,j]|; an axis of extent 1
/// contributes 0.
torch::Tensor tv_loss(const torch::Tensor& mask);

/// Individual loss values of one training step.
struct LossTerms {
  torch::Tensor adv_d;
  torch::Tensor adv_g;
  torch::Tensor rec;
  torch::Tensor per;
  MakeupLoss mak;
  IdentityMakeupLoss imr;
  torch::Tensor att;
  torch::Tensor kl;
  torch::Tensor tv;
};

struct Objectives {
  torch::Tensor generator;      // L_G
  torch::Tensor discriminator;  // L_D
};

/// L_D = adv_d;
/// L_G = adv_g + l_rec rec + l_per per + mak + imr + l_a att + l_kl kl + l_tv tv
/// (region and identity/makeup weights are already inside mak and imr).
Objectives total_losses(const LossTerms& terms, const LossWeights& weights);

/// Flat name -> value view of the terms, keyed by weight symbol.
std::map<std::string, double> loss_record(const LossTerms& terms, const Objectives& objectives);

}  // namespace dmt
