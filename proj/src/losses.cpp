#include "dmt/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace dmt {

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* who) {
  if (a.sizes() != b.sizes()) {
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
  }
}

// sqrt that stays differentiable at an exact zero (the gradient there is 0).
torch::Tensor safe_sqrt(const torch::Tensor& t) {
  if (t.item<double>() > 0.0) return torch::sqrt(t);
  return t;
}

torch::Tensor zero_like_scalar(const torch::Tensor& ref) {
  return torch::zeros({}, ref.options());
}

}  // namespace

double LossWeights::region(Region r) const {
  switch (r) {
    case Region::face: return face;
    case Region::brow: return brow;
    case Region::eye: return eye;
    case Region::lip: return lip;
  }
  return 0.0;
}

void LossWeights::validate() const {
  for (double w : {rec, per, face, brow, eye, lip, identity, makeup, attention, kl, tv}) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("loss weights must be finite and >= 0");
  }
}

torch::Tensor reconstruction_loss(const torch::Tensor& x, const torch::Tensor& x_r) {
  require_same_shape(x, x_r, "reconstruction_loss");
  return (x - x_r).abs().mean();
}

torch::Tensor perceptual_loss(const torch::Tensor& x, const torch::Tensor& x_s,
                              const FeatureExtractor& extractor) {
  require_same_shape(x, x_s, "perceptual_loss");
  torch::Tensor target;
  {
    torch::NoGradGuard no_grad;
    target = extractor(x);
  }
  return safe_sqrt((extractor(x_s) - target).pow(2).mean());
}

MakeupLoss makeup_loss(const torch::Tensor& x_s, const torch::Tensor& x_y,
                       const CosmeticRegionSet& regions, const LossWeights& weights) {
  require_same_shape(x_s, x_y, "makeup_loss");
  const auto target = x_y.detach();
  const auto channels = x_s.size(1);
  MakeupLoss out;
  out.total = zero_like_scalar(x_s);
  for (Region r : kRegions) {
    auto mask = regions[r].to(x_s.scalar_type());
    while (mask.dim() < 4) mask = mask.unsqueeze(mask.dim() == 3 ? 1 : 0);
    mask = mask.expand({x_s.size(0), 1, x_s.size(2), x_s.size(3)});
    const double count = mask.sum().item<double>() * static_cast<double>(channels);
    torch::Tensor term = zero_like_scalar(x_s);
    if (count > 0.0) term = safe_sqrt(((x_s - target).pow(2) * mask).sum() / count);
    out.total = out.total + weights.region(r) * term;
    out[r] = term;
  }
  return out;
}

torch::Tensor& MakeupLoss::operator[](Region r) {
  switch (r) {
    case Region::face: return face;
    case Region::brow: return brow;
    case Region::eye: return eye;
    case Region::lip: return lip;
  }
  throw std::out_of_range("region");
}

IdentityMakeupLoss imr_loss(const torch::Tensor& i_x, const torch::Tensor& i_x_s, const torch::Tensor& m_y,
                            const torch::Tensor& m_x_s, const LossWeights& weights) {
  require_same_shape(i_x, i_x_s, "imr_loss (identity)");
  require_same_shape(m_y, m_x_s, "imr_loss (makeup)");
  IdentityMakeupLoss out;
  out.identity = (i_x - i_x_s).abs().mean();
  out.makeup = (m_y - m_x_s).abs().mean();
  out.total = weights.identity * out.identity + weights.makeup * out.makeup;
  return out;
}

torch::Tensor attention_loss(const torch::Tensor& mask, const torch::Tensor& related) {
  auto target = related.to(mask.scalar_type());
  if (target.dim() == 2) target = target.view({1, 1, target.size(0), target.size(1)});
  if (target.dim() == 3) target = target.unsqueeze(1);
  if (mask.dim() != 4 || target.size(2) != mask.size(2) || target.size(3) != mask.size(3) ||
      target.size(1) != mask.size(1) || (target.size(0) != 1 && target.size(0) != mask.size(0))) {
    throw std::invalid_argument("attention_loss: shape mismatch");
  }
  return (mask - target).abs().mean();
}

torch::Tensor adversarial_loss_d(const torch::Tensor& real, const torch::Tensor& fake_s,
                                 const torch::Tensor& fake_f) {
  return (real - 1.0).pow(2).mean() + fake_s.pow(2).mean() + fake_f.pow(2).mean();
}

torch::Tensor adversarial_loss_g(const torch::Tensor& fake_s, const torch::Tensor& fake_f) {
  return (fake_s - 1.0).pow(2).mean() + (fake_f - 1.0).pow(2).mean();
}

torch::Tensor kl_loss(const torch::Tensor& m_x, const torch::Tensor& m_y) {
  auto half_norm = [](const torch::Tensor& m) {
    auto batched = m.dim() == 1 ? m.unsqueeze(0) : m;
    return 0.5 * batched.pow(2).sum() / static_cast<double>(batched.size(0));
  };
  return half_norm(m_x) + half_norm(m_y);
}

torch::Tensor tv_loss(const torch::Tensor& mask) {
  if (mask.dim() < 2) throw std::invalid_argument("tv_loss: mask needs two spatial dimensions");
  const auto rows = mask.dim() - 2;
  const auto cols = mask.dim() - 1;
  auto total = zero_like_scalar(mask);
  if (mask.size(rows) > 1) {
    total = total + (mask.narrow(rows, 1, mask.size(rows) - 1) - mask.narrow(rows, 0, mask.size(rows) - 1))
                        .abs()
                        .mean();
  }
  if (mask.size(cols) > 1) {
    total = total + (mask.narrow(cols, 1, mask.size(cols) - 1) - mask.narrow(cols, 0, mask.size(cols) - 1))
                        .abs()
                        .mean();
  }
  return total;
}

Objectives total_losses(const LossTerms& t, const LossWeights& w) {
  Objectives o;
  o.discriminator = t.adv_d;
  o.generator = t.adv_g + w.rec * t.rec + w.per * t.per + t.mak.total + t.imr.total + w.attention * t.att +
                w.kl * t.kl + w.tv * t.tv;
  return o;
}

std::map<std::string, double> loss_record(const LossTerms& t, const Objectives& o) {
  auto v = [](const torch::Tensor& x) { return x.defined() ? x.item<double>() : 0.0; };
  return {{"adv_d", v(t.adv_d)},      {"adv_g", v(t.adv_g)},     {"rec", v(t.rec)},
          {"per", v(t.per)},          {"face", v(t.mak.face)},   {"brow", v(t.mak.brow)},
          {"eye", v(t.mak.eye)},      {"lip", v(t.mak.lip)},     {"mak", v(t.mak.total)},
          {"i", v(t.imr.identity)},   {"m", v(t.imr.makeup)},    {"imr", v(t.imr.total)},
          {"a", v(t.att)},            {"kl", v(t.kl)},           {"tv", v(t.tv)},
          {"L_G", v(o.generator)},    {"L_D", v(o.discriminator)}};
}

}  // namespace dmt
