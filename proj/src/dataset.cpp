#include "dmt/dataset.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace dmt {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<DatasetEntry> scan_class(const fs::path& root, const std::string& cls, bool has_makeup) {
  const fs::path image_dir = root / "images" / cls;
  const fs::path mask_dir = root / "masks" / cls;
  if (!fs::is_directory(image_dir)) {
    throw std::runtime_error("dataset: missing directory " + image_dir.string());
  }
  std::vector<DatasetEntry> entries;
  for (const auto& item : fs::directory_iterator(image_dir)) {
    if (!item.is_regular_file() || !is_image_file(item.path())) continue;
    fs::path mask = mask_dir / (item.path().stem().string() + ".png");
    if (!fs::exists(mask)) {
      throw std::runtime_error("dataset: no mask for image " + item.path().string() +
                               " (expected " + mask.string() + ")");
    }
    entries.push_back({item.path(), mask, has_makeup});
  }
  std::sort(entries.begin(), entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.image < b.image; });
  for (const auto& e : entries) {
    auto image_size = probe_size(e.image);
    auto mask_size = probe_size(e.mask);
    if (image_size != mask_size) {
      throw std::runtime_error("dataset: size mismatch between " + e.image.string() + " and " +
                               e.mask.string());
    }
  }
  return entries;
}

void split_class(std::vector<DatasetEntry> all, std::size_t n_test, std::mt19937_64& rng,
                 std::vector<DatasetEntry>& train, std::vector<DatasetEntry>& test) {
  if (n_test > all.size()) {
    throw std::invalid_argument("dataset: requested " + std::to_string(n_test) +
                                " test images but only " + std::to_string(all.size()) + " exist");
  }
  std::shuffle(all.begin(), all.end(), rng);
  test.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
  train.assign(all.begin() + static_cast<std::ptrdiff_t>(n_test), all.end());
}

}  // namespace

DatasetIndex load_dataset(const fs::path& root, const SplitSpec& split) {
  auto makeup = scan_class(root, "makeup", true);
  auto nonmakeup = scan_class(root, "non-makeup", false);

  DatasetIndex index;
  index.seed = split.seed;
  std::mt19937_64 rng(split.seed);
  split_class(std::move(makeup), split.test_makeup, rng, index.train_makeup, index.test_makeup);
  split_class(std::move(nonmakeup), split.test_nonmakeup, rng, index.train_nonmakeup,
              index.test_nonmakeup);
  return index;
}

LoadedSample load_sample(const DatasetEntry& entry, const LabelMapping& mapping) {
  LoadedSample sample{load_image(entry.image), load_label_map(entry.mask, mapping)};
  sample.image.has_makeup = entry.has_makeup;
  validate_aligned(sample.image, sample.labels);
  return sample;
}

}  // namespace dmt
