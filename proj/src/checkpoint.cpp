#include "dmt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dmt {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'D', 'M', 'T', 'C', 'K', 'P', 'T', '\0'};

std::string dtype_tag(torch::Dtype t) {
  switch (t) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    case torch::kUInt8: return "u8";
    default: throw std::invalid_argument("archive: unsupported tensor dtype");
  }
}

torch::Dtype dtype_from_tag(const std::string& tag) {
  if (tag == "f32") return torch::kFloat32;
  if (tag == "f64") return torch::kFloat64;
  if (tag == "i64") return torch::kInt64;
  if (tag == "u8") return torch::kUInt8;
  throw std::runtime_error("archive: unknown dtype tag '" + tag + "'");
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw std::runtime_error("archive: truncated header");
  return value;
}

}  // namespace

const torch::Tensor& TensorArchive::at(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw std::out_of_range("archive: no tensor named '" + name + "'");
}

bool TensorArchive::contains(const std::string& name) const {
  for (const auto& entry : tensors) {
    if (entry.first == name) return true;
  }
  return false;
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  nlohmann::json header;
  header["meta"] = archive.meta;
  header["tensors"] = nlohmann::json::array();
  std::vector<torch::Tensor> blobs;
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : archive.tensors) {
    auto t = tensor.detach().to(torch::kCPU).contiguous();
    const auto nbytes = static_cast<std::uint64_t>(t.numel() * t.element_size());
    header["tensors"].push_back({{"name", name},
                                 {"dtype", dtype_tag(t.scalar_type())},
                                 {"shape", t.sizes().vec()},
                                 {"offset", offset},
                                 {"nbytes", nbytes}});
    offset += nbytes;
    blobs.push_back(t);
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write beside the target and rename so readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(kMagic, sizeof kMagic);
    write_pod<std::uint32_t>(out, kArchiveFormatVersion);
    write_pod<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : blobs) {
      out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.numel() * t.element_size()));
    }
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error(path.string() + " is not a DMT checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kArchiveFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("archive: truncated header");
  const auto header = nlohmann::json::parse(text);
  const auto blob_start = static_cast<std::uint64_t>(in.tellg());

  TensorArchive archive;
  archive.meta = header.at("meta");
  for (const auto& entry : header.at("tensors")) {
    auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from_tag(entry.at("dtype"))));
    const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
    if (nbytes != static_cast<std::uint64_t>(t.numel() * t.element_size())) {
      throw std::runtime_error("archive: size mismatch for tensor " + entry.at("name").get<std::string>());
    }
    in.seekg(static_cast<std::streamoff>(blob_start + entry.at("offset").get<std::uint64_t>()));
    in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    if (!in) throw std::runtime_error("archive: truncated tensor data");
    archive.tensors.emplace_back(entry.at("name").get<std::string>(), t);
  }
  return archive;
}

void append_model(TensorArchive& archive, const Model& model) {
  archive.meta["version"] = Model::kVersion;
  archive.meta["arch"] = model.arch();
  for (const auto& [name, p] : model.named_parameters()) archive.tensors.emplace_back(name, p.detach().clone());
}

Model model_from_archive(const TensorArchive& archive) {
  const auto version = archive.meta.value("version", std::string{});
  if (version != Model::kVersion) {
    throw std::runtime_error("checkpoint model version '" + version + "' is not " + Model::kVersion);
  }
  Model model(archive.meta.at("arch").get<ArchSpec>(), 0);
  auto params = model.named_parameters();
  if (!params.empty() && archive.contains(params.front().first)) {
    model.to(archive.at(params.front().first).scalar_type());
    params = model.named_parameters();
  }
  torch::NoGradGuard no_grad;
  for (auto& [name, p] : params) {
    const auto& stored = archive.at(name);
    if (stored.sizes() != p.sizes()) {
      throw std::runtime_error("checkpoint tensor '" + name + "' has the wrong shape for its architecture");
    }
    p.copy_(stored);
  }
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model, const nlohmann::json& extra_meta) {
  TensorArchive archive;
  archive.meta = extra_meta;
  archive.meta["kind"] = "model";
  append_model(archive, model);
  write_archive(path, archive);
}

Model load_model(const std::filesystem::path& path) { return model_from_archive(read_archive(path)); }

}  // namespace dmt
