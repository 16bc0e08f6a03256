#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include <torch/torch.h>

namespace dmt::testing {

struct GradCheck {
  double relative_error = 0.0;  // |analytic - numeric| / max(|analytic|, |numeric|), as vectors
  double max_abs_error = 0.0;
  std::int64_t checked = 0;
};

/// Central differences of a scalar function of `input` (double precision),
/// over at most `max_entries` entries chosen with `seed`.
inline GradCheck check_gradient(const std::function<torch::Tensor(const torch::Tensor&)>& f, torch::Tensor input,
                                std::int64_t max_entries = 64, double step = 1e-6, std::uint64_t seed = 0) {
  input = input.detach().to(torch::kFloat64).clone().requires_grad_(true);
  auto value = f(input);
  auto analytic = torch::autograd::grad({value}, {input}, {}, false, false, true)[0];
  if (!analytic.defined()) analytic = torch::zeros_like(input);
  analytic = analytic.detach().reshape(-1);

  std::vector<std::int64_t> entries(static_cast<std::size_t>(input.numel()));
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = static_cast<std::int64_t>(i);
  std::mt19937_64 rng(seed);
  std::shuffle(entries.begin(), entries.end(), rng);
  if (static_cast<std::int64_t>(entries.size()) > max_entries) entries.resize(static_cast<std::size_t>(max_entries));

  auto base = input.detach().clone();
  auto flat = base.view(-1);
  std::vector<double> a, n;
  torch::NoGradGuard no_grad;
  for (auto k : entries) {
    const double original = flat[k].item<double>();
    flat[k] = original + step;
    const double up = f(base).item<double>();
    flat[k] = original - step;
    const double down = f(base).item<double>();
    flat[k] = original;
    a.push_back(analytic[k].item<double>());
    n.push_back((up - down) / (2 * step));
  }
  GradCheck out;
  double diff2 = 0, a2 = 0, n2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff2 += (a[i] - n[i]) * (a[i] - n[i]);
    a2 += a[i] * a[i];
    n2 += n[i] * n[i];
    out.max_abs_error = std::max(out.max_abs_error, std::abs(a[i] - n[i]));
  }
  const double scale = std::max(std::sqrt(std::max(a2, n2)), 1e-12);
  out.relative_error = std::sqrt(diff2) / scale;
  out.checked = static_cast<std::int64_t>(a.size());
  return out;
}

/// Same check for a list of parameters of a model: perturbs `entries_per_tensor`
/// entries of each tensor in place.
inline GradCheck check_parameter_gradient(const std::function<torch::Tensor()>& f,
                                          const std::vector<torch::Tensor>& params, std::int64_t entries_per_tensor,
                                          double step = 1e-6, std::uint64_t seed = 0) {
  auto value = f();
  auto grads = torch::autograd::grad({value}, params, {}, false, false, true);
  std::mt19937_64 rng(seed);
  std::vector<double> a, n;
  torch::NoGradGuard no_grad;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto flat = params[p].view(-1);
    auto g = grads[p].defined() ? grads[p].reshape(-1) : torch::zeros_like(flat);
    for (std::int64_t e = 0; e < std::min<std::int64_t>(entries_per_tensor, flat.numel()); ++e) {
      const auto k = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(flat.numel()));
      const double original = flat[k].item<double>();
      flat[k] = original + step;
      const double up = f().item<double>();
      flat[k] = original - step;
      const double down = f().item<double>();
      flat[k] = original;
      a.push_back(g[k].item<double>());
      n.push_back((up - down) / (2 * step));
    }
  }
  GradCheck out;
  double diff2 = 0, a2 = 0, n2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff2 += (a[i] - n[i]) * (a[i] - n[i]);
    a2 += a[i] * a[i];
    n2 += n[i] * n[i];
    out.max_abs_error = std::max(out.max_abs_error, std::abs(a[i] - n[i]));
  }
  out.relative_error = std::sqrt(diff2) / std::max(std::sqrt(std::max(a2, n2)), 1e-12);
  out.checked = static_cast<std::int64_t>(a.size());
  return out;
}

}  // namespace dmt::testing
