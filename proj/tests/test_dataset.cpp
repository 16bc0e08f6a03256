#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "dmt/augment.hpp"
#include "dmt/dataset.hpp"
#include "dmt/synth.hpp"

namespace fs = std::filesystem;
using namespace dmt;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_tiny(const fs::path& root, const std::string& cls, int n) {
  fs::create_directories(root / "images" / cls);
  fs::create_directories(root / "masks" / cls);
  for (int i = 0; i < n; ++i) {
    auto stem = cls.substr(0, 2) + std::to_string(i);
    save_image(torch::full({3, 4, 4}, i / 400.0), root / "images" / cls / (stem + ".png"));
    save_labels(make_labels(torch::zeros({4, 4}, torch::kUInt8)), root / "masks" / cls / (stem + ".png"));
  }
}

std::set<std::string> ids(const std::vector<DatasetEntry>& entries) {
  std::set<std::string> out;
  for (const auto& e : entries) out.insert(e.id());
  return out;
}

}  // namespace

TEST(Dataset, TenAndTenSplitTwoAndTwo) {
  auto root = fresh_dir("dmt_ds_small");
  write_tiny(root, "makeup", 10);
  write_tiny(root, "non-makeup", 10);
  auto a = load_dataset(root, {2, 2, 7});
  EXPECT_EQ(a.train_makeup.size(), 8u);
  EXPECT_EQ(a.train_nonmakeup.size(), 8u);
  EXPECT_EQ(a.test_makeup.size(), 2u);
  EXPECT_EQ(a.test_nonmakeup.size(), 2u);
  auto b = load_dataset(root, {2, 2, 7});
  EXPECT_EQ(ids(a.test_makeup), ids(b.test_makeup));
  EXPECT_EQ(ids(a.train_nonmakeup), ids(b.train_nonmakeup));

  std::set<std::string> all;
  for (auto* list : {&a.train_makeup, &a.train_nonmakeup, &a.test_makeup, &a.test_nonmakeup}) {
    for (const auto& e : *list) EXPECT_TRUE(all.insert(e.image.string()).second);
  }
  EXPECT_EQ(all.size(), 20u);
  fs::remove_all(root);
}

TEST(Dataset, FullScaleSplitSizes) {
  auto root = fresh_dir("dmt_ds_full");
  write_tiny(root, "makeup", 260);
  write_tiny(root, "non-makeup", 110);
  auto index = load_dataset(root, SplitSpec{});
  EXPECT_EQ(index.test_makeup.size(), 250u);
  EXPECT_EQ(index.test_nonmakeup.size(), 100u);
  EXPECT_EQ(index.train_makeup.size(), 10u);
  EXPECT_EQ(index.train_nonmakeup.size(), 10u);
  fs::remove_all(root);
}

TEST(Dataset, MissingMaskNamesTheImage) {
  auto root = fresh_dir("dmt_ds_missing");
  write_tiny(root, "makeup", 3);
  write_tiny(root, "non-makeup", 3);
  fs::remove(root / "masks" / "makeup" / "ma1.png");
  try {
    load_dataset(root, {0, 0, 0});
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("ma1"), std::string::npos) << e.what();
  }
  fs::remove_all(root);
}

TEST(Dataset, TooFewImagesForTestSplit) {
  auto root = fresh_dir("dmt_ds_few");
  write_tiny(root, "makeup", 2);
  write_tiny(root, "non-makeup", 2);
  EXPECT_THROW(load_dataset(root, {3, 0, 0}), std::invalid_argument);
  fs::remove_all(root);
}

TEST(Augment, CenterCropNoFlip) {
  auto pixels = torch::rand({3, 286, 286});
  auto labels = torch::randint(0, kNumParts, {286, 286}).to(torch::kUInt8);
  auto [img, lab] = apply_augment(make_image(pixels), make_labels(labels), AugmentParams::center(286, 256));
  EXPECT_TRUE(torch::equal(img.pixels, pixels.slice(1, 15, 271).slice(2, 15, 271)));
  EXPECT_TRUE(torch::equal(lab.labels, labels.slice(0, 15, 271).slice(1, 15, 271)));
}

TEST(Augment, FlipMirrorsBothOutputs) {
  auto pixels = torch::rand({3, 8, 8});
  auto labels = torch::randint(0, kNumParts, {8, 8}).to(torch::kUInt8);
  AugmentParams p{8, 8, 0, 0, true};
  auto [img, lab] = apply_augment(make_image(pixels), make_labels(labels), p);
  for (int j = 0; j < 8; ++j) {
    EXPECT_TRUE(torch::equal(img.pixels.select(2, j), pixels.select(2, 7 - j)));
    EXPECT_TRUE(torch::equal(lab.labels.select(1, j), labels.select(1, 7 - j)));
  }
}

TEST(Augment, SeededRunsAreBitIdenticalAndAligned) {
  auto face = synthesize_face(64, 11, true);
  AugmentConfig cfg{72, 64, 0.5};
  std::mt19937_64 r1(5), r2(5);
  for (int i = 0; i < 5; ++i) {
    auto [a, la] = augment(face.image, face.labels, cfg, r1);
    auto [b, lb] = augment(face.image, face.labels, cfg, r2);
    EXPECT_TRUE(torch::equal(a.pixels, b.pixels));
    EXPECT_TRUE(torch::equal(la.labels, lb.labels));
    EXPECT_EQ(a.height(), 64);
    EXPECT_EQ(la.height(), 64);
  }
}

TEST(Synth, SameSeedSameIdentity) {
  auto bare = synthesize_face(64, 42, false);
  auto made = synthesize_face(64, 42, true);
  EXPECT_TRUE(torch::equal(bare.labels.labels, made.labels.labels));
  EXPECT_FALSE(torch::equal(bare.image.pixels, made.image.pixels));
  EXPECT_TRUE(made.image.has_makeup);
  EXPECT_NO_THROW(validate_aligned(made.image, made.labels));
}
