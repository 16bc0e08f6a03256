#include <gtest/gtest.h>

#include "dmt/nets.hpp"

using namespace dmt;

TEST(Arch, FullPlanShapes) {
  auto a = ArchSpec::full();
  EXPECT_EQ(a.downsampling_factor(), 4);
  EXPECT_EQ(a.identity_size(), 64);
  EXPECT_EQ(a.identity_channels(), 256);
  // Four stride-2 layers halve 256 four times; the two stride-1 layers keep 16.
  EXPECT_EQ(a.disc_output_size(), 16);
  EXPECT_EQ(a.adain_param_count(), 4 * 4 * 256);
  EXPECT_EQ(ArchSpec::desk().disc_output_size(), 4);
}

TEST(Arch, JsonRoundTrip) {
  for (const auto& a : {ArchSpec::full(), ArchSpec::desk(), ArchSpec::tiny()}) {
    nlohmann::json j = a;
    EXPECT_EQ(j.get<ArchSpec>(), a);
  }
  auto bad = ArchSpec::desk();
  bad.image_size = 30;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Nets, FullScaleCodeShapes) {
  torch::NoGradGuard no_grad;
  Model model(ArchSpec::full(), 0);
  auto x = torch::rand({1, 3, 256, 256});
  auto i = model.encode_identity(x);
  EXPECT_EQ(i.features.sizes(), (std::vector<int64_t>{1, 256, 64, 64}));
  auto m = model.encode_makeup(x);
  EXPECT_EQ(m.values.sizes(), (std::vector<int64_t>{1, 8}));
  auto scores = model.discriminate(x);
  EXPECT_EQ(scores.sizes(), (std::vector<int64_t>{1, 1, 16, 16}));
}

TEST(Nets, DeterministicAndRanges) {
  torch::NoGradGuard no_grad;
  Model model(ArchSpec::desk(), 3);
  auto x = torch::rand({1, 3, 64, 64});
  EXPECT_TRUE(torch::equal(model.encode_identity(x).features, model.encode_identity(x).features));
  EXPECT_TRUE(torch::equal(model.encode_makeup(x).values, model.encode_makeup(x * 1.0).values));
  auto out = model.decode(model.encode_identity(x), model.encode_makeup(x), x);
  EXPECT_EQ(out.mask.sizes(), (std::vector<int64_t>{1, 1, 64, 64}));
  for (const auto& t : {out.raw_face, out.mask, out.composed}) {
    EXPECT_GE(t.min().item<float>(), 0.0f);
    EXPECT_LE(t.max().item<float>(), 1.0f);
  }
  auto x2 = x.clone();
  x2.slice(2, 0, 4).fill_(0.0);
  EXPECT_FALSE(torch::equal(model.encode_identity(x).features, model.encode_identity(x2).features));
}

TEST(Nets, CompositionIdentities) {
  torch::NoGradGuard no_grad;
  Model model(ArchSpec::desk(), 4);
  auto x = torch::rand({1, 3, 64, 64});
  auto i = model.encode_identity(x);
  auto m = model.encode_makeup(torch::rand({1, 3, 64, 64}));
  auto zero = model.decode(i, m, x, {0.0});
  EXPECT_TRUE(torch::equal(zero.composed, x));
  auto one = model.decode(i, m, x, {1.0});
  EXPECT_TRUE(torch::equal(one.composed, one.raw_face));

  auto half = compose(torch::ones({1, 3, 4, 4}), torch::full({1, 1, 4, 4}, 0.5), torch::zeros({1, 3, 4, 4}));
  EXPECT_TRUE(torch::all(half == 0.5).item<bool>());
}

TEST(Nets, ZeroFinalLayerGivesZeroScores) {
  torch::NoGradGuard no_grad;
  Model model(ArchSpec::desk(), 5);
  auto& last = model.discriminator()->final_layer();
  last->conv->weight.zero_();
  last->conv->bias.zero_();
  auto scores = model.discriminate(torch::zeros({1, 3, 64, 64}));
  EXPECT_TRUE(torch::all(scores == 0).item<bool>());
}

TEST(Nets, ShapeErrors) {
  Model model(ArchSpec::desk(), 6);
  EXPECT_THROW(model.encode_identity(torch::rand({3, 64, 64})), std::invalid_argument);
  EXPECT_THROW(model.encode_makeup(torch::rand({1, 1, 64, 64})), std::invalid_argument);
  EXPECT_THROW(model.encode_identity(torch::rand({1, 3, 30, 30})), std::invalid_argument);
}

TEST(Nets, CloneIsIndependent) {
  Model a(ArchSpec::tiny(), 1);
  auto b = a.clone();
  auto pa = a.named_parameters();
  auto pb = b.named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t k = 0; k < pa.size(); ++k) {
    EXPECT_EQ(pa[k].first, pb[k].first);
    EXPECT_TRUE(torch::equal(pa[k].second, pb[k].second));
  }
  {
    torch::NoGradGuard no_grad;
    pb.front().second.add_(1.0);
  }
  EXPECT_FALSE(torch::equal(pa.front().second, pb.front().second));
}

TEST(Nets, SeedsDetermineInitialization) {
  Model a(ArchSpec::tiny(), 9), b(ArchSpec::tiny(), 9), c(ArchSpec::tiny(), 10);
  auto pa = a.named_parameters(), pb = b.named_parameters(), pc = c.named_parameters();
  bool differs = false;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    EXPECT_TRUE(torch::equal(pa[k].second, pb[k].second));
    differs |= !torch::equal(pa[k].second, pc[k].second);
  }
  EXPECT_TRUE(differs);
}
