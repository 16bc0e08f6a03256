#pragma once

#include <cstdint>
#include <filesystem>

#include "dmt/image.hpp"

namespace dmt {

/// Procedurally drawn face with an exact parsing map. Identity (geometry,
/// skin, hair, background) and makeup (foundation, brow, eye shadow,
/// lipstick) are drawn from independent streams of the same seed, so
/// `synthesize_face(size, seed, false)` and `(size, seed, true)` show the same
/// person without and with makeup.
struct SyntheticFace {
  FaceImage image;
  LabelMap labels;
};

SyntheticFace synthesize_face(int size, std::uint64_t seed, bool makeup);

/// Writes a dataset in the on-disk layout read by load_dataset.
void write_synthetic_dataset(const std::filesystem::path& root, int n_makeup, int n_nonmakeup,
                             int size, std::uint64_t seed);

}  // namespace dmt
