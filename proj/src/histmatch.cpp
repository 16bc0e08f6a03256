#include "dmt/histmatch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dmt {

namespace {

std::int64_t target_rank(std::int64_t rank, std::int64_t n_src, std::int64_t n_ref) {
  if (n_src == 1) return n_ref / 2;
  // round(rank * (n_ref - 1) / (n_src - 1)), halves up, in integers.
  return (2 * rank * (n_ref - 1) + (n_src - 1)) / (2 * (n_src - 1));
}

std::vector<float> channel(const torch::Tensor& values, std::int64_t c) {
  auto col = values.select(1, c).to(torch::kFloat32).contiguous();
  return {col.data_ptr<float>(), col.data_ptr<float>() + col.numel()};
}

int to_bin(float v) { return static_cast<int>(std::clamp(std::lround(v * 255.0f), 0L, 255L)); }

void check_inputs(const PixelSet& src, const PixelSet& ref) {
  if (!src.values.defined() || src.values.dim() != 2 || src.values.size(1) != 3) {
    throw std::invalid_argument("match_histogram: src must be [N,3]");
  }
  if (!ref.values.defined() || ref.values.dim() != 2 || ref.values.size(1) != 3) {
    throw std::invalid_argument("match_histogram: ref must be [N,3]");
  }
  if (ref.size() == 0) throw std::invalid_argument("match_histogram: empty reference set");
}

PixelSet like(const PixelSet& src, torch::Tensor values) {
  return PixelSet{std::move(values), src.image_id, src.region};
}

}  // namespace

PixelSet gather_pixels(const FaceImage& image, const torch::Tensor& mask, std::string region) {
  auto hwc = image.pixels.permute({1, 2, 0});
  auto values = hwc.index({mask.to(torch::kBool)}).to(torch::kFloat32).contiguous();
  return PixelSet{values, image.source_id, std::move(region)};
}

PixelSet match_histogram(const PixelSet& src, const PixelSet& ref) {
  check_inputs(src, ref);
  const auto n_src = src.size();
  const auto n_ref = ref.size();
  auto out = torch::empty({n_src, 3}, torch::kFloat32);
  if (n_src == 0) return like(src, out);
  auto acc = out.accessor<float, 2>();

  std::vector<std::int64_t> order(static_cast<std::size_t>(n_src));
  for (std::int64_t c = 0; c < 3; ++c) {
    auto s = channel(src.values, c);
    auto r = channel(ref.values, c);
    std::sort(r.begin(), r.end());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] < s[b]; });
    for (std::int64_t rank = 0; rank < n_src; ++rank) {
      acc[order[rank]][c] = r[static_cast<std::size_t>(target_rank(rank, n_src, n_ref))];
    }
  }
  return like(src, out);
}

PixelSet match_histogram_binned(const PixelSet& src, const PixelSet& ref) {
  check_inputs(src, ref);
  const auto n_src = src.size();
  const auto n_ref = ref.size();
  auto out = torch::empty({n_src, 3}, torch::kFloat32);
  if (n_src == 0) return like(src, out);
  auto acc = out.accessor<float, 2>();

  for (std::int64_t c = 0; c < 3; ++c) {
    auto s = channel(src.values, c);
    auto r = channel(ref.values, c);

    std::array<std::int64_t, 257> ref_cum{};
    for (float v : r) ++ref_cum[to_bin(v) + 1];
    std::partial_sum(ref_cum.begin(), ref_cum.end(), ref_cum.begin());

    std::array<std::int64_t, 257> src_start{};
    for (float v : s) ++src_start[to_bin(v) + 1];
    std::partial_sum(src_start.begin(), src_start.end(), src_start.begin());

    // Counting sort: rank of each source pixel, stable in index.
    auto next = src_start;
    for (std::int64_t i = 0; i < n_src; ++i) {
      const auto rank = next[to_bin(s[i])]++;
      const auto k = target_rank(rank, n_src, n_ref);
      const auto bin = std::upper_bound(ref_cum.begin() + 1, ref_cum.end(), k) - ref_cum.begin() - 1;
      acc[i][c] = static_cast<float>(bin) / 255.0f;
    }
  }
  return like(src, out);
}

GroundTruth makeup_ground_truth(const FaceImage& x, const FaceImage& y, const CosmeticRegionSet& rx,
                                const CosmeticRegionSet& ry) {
  torch::NoGradGuard no_grad;
  validate(x);
  validate(y);
  GroundTruth result;
  auto out_hwc = x.pixels.permute({1, 2, 0}).clone();
  for (Region region : kRegions) {
    auto mask_x = rx[region].to(torch::kBool);
    auto mask_y = ry[region].to(torch::kBool);
    if (mask_x.sizes() != x.pixels.sizes().slice(1) || mask_y.sizes() != y.pixels.sizes().slice(1)) {
      throw std::invalid_argument("makeup_ground_truth: region mask does not match image size");
    }
    const auto name = std::string(region_name(region));
    if (mask_x.sum().item<std::int64_t>() == 0) continue;
    if (mask_y.sum().item<std::int64_t>() == 0) {
      result.warnings.push_back("region '" + name + "' is empty in reference " + y.source_id +
                                "; left unchanged");
      continue;
    }
    auto matched = match_histogram(gather_pixels(x, mask_x, name), gather_pixels(y, mask_y, name));
    out_hwc.index_put_({mask_x}, matched.values.to(out_hwc.scalar_type()));
  }
  result.image = FaceImage{out_hwc.permute({2, 0, 1}).contiguous(), x.source_id, x.has_makeup};
  return result;
}

}  // namespace dmt
