#include "dmt/regions.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>

namespace dmt {

namespace {

torch::Tensor any_of(const torch::Tensor& labels, std::initializer_list<Part> parts) {
  auto out = torch::zeros_like(labels, torch::kBool);
  for (Part p : parts) out.logical_or_(labels == id(p));
  return out;
}

// Grown, clipped bounding box of one label, or an empty mask when absent.
torch::Tensor eye_box(const torch::Tensor& labels, Part eye, double margin) {
  const auto height = labels.size(0);
  const auto width = labels.size(1);
  auto box = torch::zeros({height, width}, torch::kBool);
  auto hits = (labels == id(eye)).nonzero();
  if (hits.size(0) == 0) return box;

  auto rows = hits.select(1, 0);
  auto cols = hits.select(1, 1);
  const auto r0 = rows.min().item<std::int64_t>();
  const auto r1 = rows.max().item<std::int64_t>();
  const auto c0 = cols.min().item<std::int64_t>();
  const auto c1 = cols.max().item<std::int64_t>();
  const auto grow_r = static_cast<std::int64_t>(std::lround(margin * static_cast<double>(r1 - r0 + 1)));
  const auto grow_c = static_cast<std::int64_t>(std::lround(margin * static_cast<double>(c1 - c0 + 1)));

  const auto top = std::max<std::int64_t>(0, r0 - grow_r);
  const auto bottom = std::min<std::int64_t>(height - 1, r1 + grow_r);
  const auto left = std::max<std::int64_t>(0, c0 - grow_c);
  const auto right = std::min<std::int64_t>(width - 1, c1 + grow_c);
  using torch::indexing::Slice;
  box.index_put_({Slice(top, bottom + 1), Slice(left, right + 1)}, true);
  return box;
}

}  // namespace

std::string_view region_name(Region r) {
  switch (r) {
    case Region::face: return "face";
    case Region::brow: return "brow";
    case Region::eye: return "eye";
    case Region::lip: return "lip";
  }
  return "?";
}

const torch::Tensor& CosmeticRegionSet::operator[](Region r) const {
  switch (r) {
    case Region::face: return face;
    case Region::brow: return brow;
    case Region::eye: return eye;
    case Region::lip: return lip;
  }
  throw std::out_of_range("region");
}

torch::Tensor& CosmeticRegionSet::operator[](Region r) {
  return const_cast<torch::Tensor&>(std::as_const(*this)[r]);
}

CosmeticRegionSet extract_cosmetic_regions(const LabelMap& labels, double eye_margin) {
  validate(labels);
  if (!(eye_margin >= 0.0)) throw std::invalid_argument("eye_margin must be >= 0");
  const auto& l = labels.labels;

  CosmeticRegionSet set;
  set.face = any_of(l, {Part::face, Part::nose, Part::left_ear, Part::right_ear, Part::neck});
  set.brow = any_of(l, {Part::left_brow, Part::right_brow});
  set.lip = any_of(l, {Part::upper_lip, Part::lower_lip});

  auto boxes = eye_box(l, Part::left_eye, eye_margin).logical_or(eye_box(l, Part::right_eye, eye_margin));
  auto excluded = any_of(l, {Part::hair, Part::left_eye, Part::right_eye, Part::left_brow,
                             Part::right_brow, Part::upper_lip, Part::lower_lip});
  set.eye = boxes.logical_and(excluded.logical_not());

  for (Region r : kRegions) set[r] = set[r].to(torch::kUInt8);
  return set;
}

torch::Tensor related_mask(const LabelMap& labels) {
  validate(labels);
  auto excluded = any_of(labels.labels, {Part::background, Part::left_eye, Part::right_eye, Part::hair});
  return excluded.logical_not().to(torch::kUInt8);
}

}  // namespace dmt
