#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dmt/regions.hpp"

using namespace dmt;

namespace {

LabelMap blank(int h, int w) { return make_labels(torch::zeros({h, w}, torch::kUInt8)); }

void paint(LabelMap& m, int r0, int c0, int r1, int c1, Part p) {
  m.labels.slice(0, r0, r1).slice(1, c0, c1).fill_(id(p));
}

// Brute-force statement of the eye rule: for every pixel, is it inside any
// eye's grown bounding box and not hair/eye/brow/lip?
torch::Tensor eye_oracle(const LabelMap& m, double margin) {
  const int h = static_cast<int>(m.height()), w = static_cast<int>(m.width());
  auto acc = m.labels.accessor<std::uint8_t, 2>();
  auto out = torch::zeros({h, w}, torch::kUInt8);
  auto o = out.accessor<std::uint8_t, 2>();
  for (Part eye : {Part::left_eye, Part::right_eye}) {
    int rmin = h, rmax = -1, cmin = w, cmax = -1;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (acc[r][c] == id(eye)) {
          rmin = std::min(rmin, r);
          rmax = std::max(rmax, r);
          cmin = std::min(cmin, c);
          cmax = std::max(cmax, c);
        }
    if (rmax < 0) continue;
    const int dr = static_cast<int>(std::lround(margin * (rmax - rmin + 1)));
    const int dc = static_cast<int>(std::lround(margin * (cmax - cmin + 1)));
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        if (r < rmin - dr || r > rmax + dr || c < cmin - dc || c > cmax + dc) continue;
        const auto l = acc[r][c];
        if (l == id(Part::hair) || l == id(Part::left_eye) || l == id(Part::right_eye) ||
            l == id(Part::left_brow) || l == id(Part::right_brow) || l == id(Part::upper_lip) ||
            l == id(Part::lower_lip))
          continue;
        o[r][c] = 1;
      }
  }
  return out;
}

}  // namespace

TEST(Regions, SingleLipPixel) {
  auto m = blank(10, 10);
  m.labels[5][5] = id(Part::upper_lip);
  auto r = extract_cosmetic_regions(m);
  EXPECT_EQ(r.lip.sum().item<int>(), 1);
  EXPECT_EQ(r.lip[5][5].item<int>(), 1);
}

TEST(Regions, FourByFourEyeBlockGrowsToEightByEight) {
  auto m = blank(16, 16);
  paint(m, 6, 6, 10, 10, Part::left_eye);
  auto r = extract_cosmetic_regions(m, 0.5);
  auto expected = torch::zeros({16, 16}, torch::kUInt8);
  expected.slice(0, 4, 12).slice(1, 4, 12).fill_(1);
  expected.slice(0, 6, 10).slice(1, 6, 10).fill_(0);
  EXPECT_TRUE(torch::equal(r.eye, expected));
  EXPECT_EQ(r.eye.sum().item<int>(), 64 - 16);
  EXPECT_TRUE(torch::equal(r.eye, eye_oracle(m, 0.5)));
}

TEST(Regions, AllBackgroundGivesEmptyMasks) {
  auto r = extract_cosmetic_regions(blank(8, 8));
  for (auto region : kRegions) EXPECT_EQ(r[region].sum().item<int>(), 0);
  EXPECT_EQ(related_mask(blank(8, 8)).sum().item<int>(), 0);
}

TEST(Regions, EyeRuleMatchesBruteForceOnRandomMaps) {
  torch::manual_seed(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = make_labels(torch::randint(0, kNumParts, {13, 17}).to(torch::kUInt8));
    const double margin = 0.25 * (trial % 5);
    auto r = extract_cosmetic_regions(m, margin);
    ASSERT_TRUE(torch::equal(r.eye, eye_oracle(m, margin))) << "trial " << trial;
    EXPECT_EQ((r.brow & r.eye).sum().item<int>(), 0);
    EXPECT_EQ((r.lip & r.eye).sum().item<int>(), 0);
    EXPECT_EQ((r.face & r.brow).sum().item<int>(), 0);
    EXPECT_EQ((r.face & r.lip).sum().item<int>(), 0);
    auto related = related_mask(m);
    for (auto region : {Region::face, Region::brow, Region::lip}) {
      EXPECT_TRUE(torch::all(related >= r[region]).item<bool>());
    }
  }
}

TEST(Regions, EyeBoxClipsAtBorder) {
  auto m = blank(8, 8);
  paint(m, 0, 0, 2, 2, Part::right_eye);
  auto r = extract_cosmetic_regions(m, 1.0);
  EXPECT_TRUE(torch::equal(r.eye, eye_oracle(m, 1.0)));
  EXPECT_EQ(r.eye.sum().item<int>(), 16 - 4);
}

TEST(Regions, FaceMaskCarriesOnlySkinLabels) {
  torch::manual_seed(5);
  auto m = make_labels(torch::randint(0, kNumParts, {12, 12}).to(torch::kUInt8));
  auto r = extract_cosmetic_regions(m);
  auto labels = m.labels.masked_select(r.face.to(torch::kBool));
  for (int i = 0; i < labels.numel(); ++i) {
    auto l = labels[i].item<int>();
    EXPECT_TRUE(l == id(Part::face) || l == id(Part::nose) || l == id(Part::left_ear) || l == id(Part::right_ear) ||
                l == id(Part::neck));
  }
}

TEST(RelatedMask, ExcludesExactlyBackgroundEyesHair) {
  auto m = blank(4, 4);
  EXPECT_EQ(related_mask(m).sum().item<int>(), 0);
  m.labels.fill_(id(Part::face));
  EXPECT_EQ(related_mask(m).sum().item<int>(), 16);
  auto half = blank(4, 4);
  paint(half, 0, 0, 4, 2, Part::lower_lip);
  auto related = related_mask(half);
  EXPECT_TRUE(torch::equal(related, (half.labels == id(Part::lower_lip)).to(torch::kUInt8)));
  for (int v = 0; v < kNumParts; ++v) {
    auto one = make_labels(torch::full({1, 1}, v, torch::kUInt8));
    const bool excluded = v == id(Part::background) || v == id(Part::left_eye) || v == id(Part::right_eye) ||
                          v == id(Part::hair);
    EXPECT_EQ(related_mask(one).item<int>(), excluded ? 0 : 1) << part_name(static_cast<Part>(v));
  }
}
