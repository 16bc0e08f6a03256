#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "json.hpp"
#include "dmt/nets.hpp"

namespace dmt {

/// Named tensors plus a JSON metadata object, stored as
///
///   offset 0   8 bytes   magic "DMTCKPT\0"
///   offset 8   uint32 LE container format version (1)
///   offset 12  uint64 LE header length N
///   offset 20  N bytes   UTF-8 JSON header
///   offset 20+N          tensor data blob
///
/// The header is {"meta": {...}, "tensors": [{"name", "dtype", "shape",
/// "offset", "nbytes"}, ...]} with offsets relative to the start of the blob.
/// dtype is one of "f32", "f64", "i64", "u8"; data is little-endian,
/// row-major (C order).
struct TensorArchive {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  const torch::Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
};

inline constexpr std::uint32_t kArchiveFormatVersion = 1;

void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& path);

/// Model checkpoint: meta carries {"kind": "model", "version", "arch"} and
/// one tensor per entry of Model::named_parameters().
void save_model(const std::filesystem::path& path, const Model& model,
                const nlohmann::json& extra_meta = nlohmann::json::object());
Model load_model(const std::filesystem::path& path);

/// Adds/reads model parameters to/from an archive (used by train-state files).
void append_model(TensorArchive& archive, const Model& model);
Model model_from_archive(const TensorArchive& archive);

}  // namespace dmt
