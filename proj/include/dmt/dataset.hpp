#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmt/image.hpp"
#include "dmt/labels.hpp"

namespace dmt {

struct DatasetEntry {
  std::filesystem::path image;
  std::filesystem::path mask;
  bool has_makeup = false;

  std::string id() const { return image.stem().string(); }
};

/// How many images of each class to hold out, and the shuffle seed.
struct SplitSpec {
  std::size_t test_makeup = 250;
  std::size_t test_nonmakeup = 100;
  std::uint64_t seed = 0;
};

/// Seeded train/test split over
///   <root>/images/{makeup,non-makeup}/*.{png,jpg,jpeg}
///   <root>/masks/{makeup,non-makeup}/<stem>.png
struct DatasetIndex {
  std::vector<DatasetEntry> train_makeup;
  std::vector<DatasetEntry> train_nonmakeup;
  std::vector<DatasetEntry> test_makeup;
  std::vector<DatasetEntry> test_nonmakeup;
  std::uint64_t seed = 0;
};

/// Throws std::runtime_error naming the offending file when a mask is
/// missing, an image or mask is unreadable, or their sizes differ; throws
/// std::invalid_argument when a class has fewer images than requested for test.
DatasetIndex load_dataset(const std::filesystem::path& root, const SplitSpec& split);

struct LoadedSample {
  FaceImage image;
  LabelMap labels;
};

LoadedSample load_sample(const DatasetEntry& entry, const LabelMapping& mapping = {});

}  // namespace dmt
