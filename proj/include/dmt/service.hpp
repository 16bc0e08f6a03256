#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "dmt/image.hpp"
#include "dmt/nets.hpp"
#include "dmt/transfer.hpp"

namespace httplib {
class Server;
}

namespace dmt {

/// HTTP inference API. All bodies are JSON unless noted; every response
/// carries permissive CORS headers and errors are {"error": message}.
///
///   GET  /health    200 {"status": "ok", "model_loaded": bool}
///   GET  /model     200 {"version", "arch", "checkpoint", "generation"}; 503 before load
///   POST /model     {"checkpoint": path} loads and atomically swaps the model
///   POST /images    raw image bytes, or multipart/form-data with field "image"
///                   200 {"image_id", "makeup_code": [d], "height", "width"}
///                   413 oversize, 415 undecodable, 422 bad size, 503 no model
///   POST /transfer  {"source_id", "mode", "params"}
///     mode "reconstruction"  params {}
///          "pairwise"        params {"reference_id"}
///          "interpolated"    params {"reference_id", "alpha" in [0,1]}
///          "hybrid"          params {"reference_ids": [...], "weights": [...]}
///          "multimodal"      params {"seed": uint} or {"code": [d]}
///     200 {"source_id", "mode", "params", "image", "mask", "residual",
///          "height", "width", "generation"}
///     404 unknown id, 422 invalid params, 503 no model
///
/// Images are base64-encoded 8-bit PNGs; identical requests against the same
/// model give byte-identical payloads. Hybrid weights need only be finite,
/// non-negative and have a positive sum: the server divides by the sum and
/// echoes the normalized weights in "params". Multimodal responses echo the
/// code that was decoded. Image ids are content hashes, so re-uploading an
/// image yields the same id.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t cache_capacity = 64;
  std::size_t max_upload_bytes = 8u << 20;

  /// Applies DMT_PORT and DMT_CACHE_CAPACITY when set.
  ServiceConfig with_env_overrides() const;
};

/// A model plus where it came from. Immutable once published.
struct LoadedModel {
  std::unique_ptr<Model> model;
  std::string checkpoint;
  std::uint64_t generation = 0;
};

/// Uploaded images and their codes under one model generation, evicted
/// least-recently-used beyond `capacity`. Internally synchronized.
class SessionStore {
 public:
  struct Entry {
    FaceImage image;
    EncodedImage encoded;
    std::uint64_t generation = 0;
  };

  explicit SessionStore(std::size_t capacity);

  void put(const std::string& id, Entry entry);
  /// Marks the entry most recently used.
  std::optional<Entry> get(const std::string& id);
  bool contains(const std::string& id) const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  using Order = std::list<std::string>;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  Order order_;  // front is most recent
  std::unordered_map<std::string, std::pair<Entry, Order::iterator>> entries_;
};

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

class InferenceService {
 public:
  explicit InferenceService(ServiceConfig config = {});
  ~InferenceService();

  void load_checkpoint(const std::filesystem::path& path);
  void set_model(Model model, std::string origin = "memory");
  std::shared_ptr<const LoadedModel> current_model() const;

  HttpReply health() const;
  HttpReply model_info() const;
  HttpReply swap_model(const std::string& body);
  HttpReply upload(const std::string& bytes);
  HttpReply transfer(const std::string& body);

  SessionStore& sessions() { return sessions_; }
  const ServiceConfig& config() const { return config_; }

  /// Registers the routes on `server`.
  void attach(httplib::Server& server);
  /// Binds and serves until stop(). Returns false if binding failed.
  bool listen();
  /// Binds to an ephemeral port and serves on a background thread.
  int listen_in_background();
  void stop();

 private:
  EncodedImage encoded_for(const LoadedModel& loaded, SessionStore::Entry& entry);

  ServiceConfig config_;
  SessionStore sessions_;
  mutable std::mutex model_mutex_;
  std::shared_ptr<const LoadedModel> model_;
  std::uint64_t generations_ = 0;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<std::thread> thread_;
};

std::string base64_png(const torch::Tensor& image);

}  // namespace dmt
