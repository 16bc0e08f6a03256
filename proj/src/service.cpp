#include "dmt/service.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "httplib.h"

#include "dmt/checkpoint.hpp"

namespace dmt {

namespace {

using nlohmann::json;

struct HttpError : std::runtime_error {
  HttpError(int status, const std::string& message) : std::runtime_error(message), status(status) {}
  int status;
};

HttpReply error_reply(int status, const std::string& message) { return {status, json{{"error", message}}}; }

std::string content_id(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << "img-" << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::vector<double> code_vector(const torch::Tensor& values) {
  auto flat = values.detach().to(torch::kFloat64).contiguous().view(-1);
  return {flat.data_ptr<double>(), flat.data_ptr<double>() + flat.numel()};
}

json parse_body(const std::string& body) {
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw HttpError(422, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw HttpError(422, std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T required(const json& params, const char* key) {
  if (!params.contains(key)) throw HttpError(422, std::string("missing parameter '") + key + "'");
  try {
    return params.at(key).get<T>();
  } catch (const json::exception&) {
    throw HttpError(422, std::string("parameter '") + key + "' has the wrong type");
  }
}

void send(httplib::Response& res, const HttpReply& reply) {
  res.status = reply.status;
  res.set_content(reply.body.dump(), "application/json");
}

}  // namespace

std::string base64_png(const torch::Tensor& image) {
  auto bytes = encode_png(image);
  return httplib::detail::base64_encode(std::string(bytes.begin(), bytes.end()));
}

ServiceConfig ServiceConfig::with_env_overrides() const {
  ServiceConfig out = *this;
  if (const char* port = std::getenv("DMT_PORT"); port && *port) out.port = std::stoi(port);
  if (const char* cap = std::getenv("DMT_CACHE_CAPACITY"); cap && *cap) out.cache_capacity = std::stoul(cap);
  return out;
}

SessionStore::SessionStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("session cache capacity must be >= 1");
}

void SessionStore::put(const std::string& id, Entry entry) {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(id); it != entries_.end()) {
    order_.erase(it->second.second);
    entries_.erase(it);
  }
  order_.push_front(id);
  entries_.emplace(id, std::make_pair(std::move(entry), order_.begin()));
  while (entries_.size() > capacity_) {
    entries_.erase(order_.back());
    order_.pop_back();
  }
}

std::optional<SessionStore::Entry> SessionStore::get(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  order_.splice(order_.begin(), order_, it->second.second);
  return it->second.first;
}

bool SessionStore::contains(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return entries_.count(id) != 0;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

InferenceService::InferenceService(ServiceConfig config)
    : config_(std::move(config)), sessions_(config_.cache_capacity) {}

InferenceService::~InferenceService() { stop(); }

void InferenceService::load_checkpoint(const std::filesystem::path& path) {
  auto model = load_model(path);
  set_model(std::move(model), path.string());
}

void InferenceService::set_model(Model model, std::string origin) {
  auto loaded = std::make_shared<LoadedModel>();
  loaded->model = std::make_unique<Model>(std::move(model));
  loaded->checkpoint = std::move(origin);
  std::lock_guard lock(model_mutex_);
  loaded->generation = ++generations_;
  model_ = std::move(loaded);
}

std::shared_ptr<const LoadedModel> InferenceService::current_model() const {
  std::lock_guard lock(model_mutex_);
  return model_;
}

HttpReply InferenceService::health() const {
  return {200, json{{"status", "ok"}, {"model_loaded", current_model() != nullptr}}};
}

HttpReply InferenceService::model_info() const {
  auto loaded = current_model();
  if (!loaded) return error_reply(503, "no model loaded");
  return {200, json{{"version", Model::kVersion},
                    {"arch", loaded->model->arch()},
                    {"checkpoint", loaded->checkpoint},
                    {"generation", loaded->generation}}};
}

HttpReply InferenceService::swap_model(const std::string& body) {
  try {
    auto request = parse_body(body);
    auto path = required<std::string>(request, "checkpoint");
    try {
      load_checkpoint(path);
    } catch (const std::exception& e) {
      return error_reply(422, std::string("cannot load checkpoint: ") + e.what());
    }
    return model_info();
  } catch (const HttpError& e) {
    return error_reply(e.status, e.what());
  }
}

EncodedImage InferenceService::encoded_for(const LoadedModel& loaded, SessionStore::Entry& entry) {
  if (entry.generation == loaded.generation) return entry.encoded;
  entry.encoded = encode(*loaded.model, entry.image);
  entry.generation = loaded.generation;
  return entry.encoded;
}

HttpReply InferenceService::upload(const std::string& bytes) {
  if (bytes.size() > config_.max_upload_bytes) {
    return error_reply(413, "upload exceeds " + std::to_string(config_.max_upload_bytes) + " bytes");
  }
  auto loaded = current_model();
  if (!loaded) return error_reply(503, "no model loaded");
  torch::Tensor pixels;
  try {
    pixels = decode_image({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  } catch (const std::exception& e) {
    return error_reply(415, std::string("undecodable image: ") + e.what());
  }
  const auto id = content_id(bytes);
  SessionStore::Entry entry{make_image(pixels, id), {}, 0};
  try {
    encoded_for(*loaded, entry);
  } catch (const std::invalid_argument& e) {
    return error_reply(422, e.what());
  }
  auto code = code_vector(entry.encoded.makeup.values);
  const auto h = entry.image.height();
  const auto w = entry.image.width();
  sessions_.put(id, std::move(entry));
  return {200, json{{"image_id", id}, {"makeup_code", code}, {"height", h}, {"width", w}}};
}

HttpReply InferenceService::transfer(const std::string& body) {
  try {
    auto loaded = current_model();
    if (!loaded) return error_reply(503, "no model loaded");
    auto& model = *loaded->model;

    auto request = parse_body(body);
    const auto source_id = required<std::string>(request, "source_id");
    const auto mode = required<std::string>(request, "mode");
    json params = request.value("params", json::object());
    if (!params.is_object()) throw HttpError(422, "'params' must be an object");

    auto fetch = [&](const std::string& id) {
      auto entry = sessions_.get(id);
      if (!entry) throw HttpError(404, "unknown image id '" + id + "'");
      auto encoded = encoded_for(*loaded, *entry);
      sessions_.put(id, *entry);
      return std::make_pair(entry->image, encoded);
    };

    auto [source_image, source] = fetch(source_id);
    MakeupCode code;
    json echo = json::object();

    if (mode == "reconstruction") {
      code = source.makeup;
    } else if (mode == "pairwise") {
      const auto ref = required<std::string>(params, "reference_id");
      code = fetch(ref).second.makeup;
      echo["reference_id"] = ref;
    } else if (mode == "interpolated") {
      const auto ref = required<std::string>(params, "reference_id");
      const auto alpha = required<double>(params, "alpha");
      try {
        validate_alpha(alpha);
      } catch (const std::invalid_argument& e) {
        throw HttpError(422, e.what());
      }
      code = interpolate_codes(source.makeup, fetch(ref).second.makeup, alpha);
      echo["reference_id"] = ref;
      echo["alpha"] = alpha;
    } else if (mode == "hybrid") {
      const auto refs = required<std::vector<std::string>>(params, "reference_ids");
      auto weights = required<std::vector<double>>(params, "weights");
      if (refs.empty() || refs.size() != weights.size()) {
        throw HttpError(422, "hybrid needs one weight per reference and at least one reference");
      }
      double total = 0.0;
      for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw HttpError(422, "hybrid weights must be finite and >= 0");
        total += w;
      }
      if (!(total > 0.0)) throw HttpError(422, "hybrid weights must have a positive sum");
      for (double& w : weights) w /= total;
      std::vector<MakeupCode> codes;
      for (const auto& ref : refs) codes.push_back(fetch(ref).second.makeup);
      try {
        validate_weights(weights);
      } catch (const std::invalid_argument& e) {
        throw HttpError(422, e.what());
      }
      code = blend_codes(codes, weights);
      echo["reference_ids"] = refs;
      echo["weights"] = weights;
    } else if (mode == "multimodal") {
      if (params.contains("code")) {
        auto values = required<std::vector<double>>(params, "code");
        if (static_cast<int>(values.size()) != model.arch().code_dim) {
          throw HttpError(422, "code must have " + std::to_string(model.arch().code_dim) + " entries");
        }
        for (double v : values) {
          if (!std::isfinite(v)) throw HttpError(422, "code entries must be finite");
        }
        code = {torch::tensor(values, torch::kFloat64).view({1, -1}).to(torch::kFloat32)};
      } else {
        const auto seed = required<std::uint64_t>(params, "seed");
        code = {sample_codes(model, 1, seed)};
        echo["seed"] = seed;
      }
      echo["code"] = code_vector(code.values);
    } else {
      throw HttpError(422, "unknown mode '" + mode + "'");
    }

    auto out = decode_with(model, source, code);
    auto composed = first_image(out.composed).to(torch::kFloat32);
    auto mask = first_image(out.mask).squeeze(0).to(torch::kFloat32);
    auto diff = residual(source_image.pixels, composed);
    return {200, json{{"source_id", source_id},
                      {"mode", mode},
                      {"params", echo},
                      {"image", base64_png(composed)},
                      {"mask", base64_png(mask)},
                      {"residual", base64_png(diff)},
                      {"height", composed.size(1)},
                      {"width", composed.size(2)},
                      {"generation", loaded->generation}}};
  } catch (const HttpError& e) {
    return error_reply(e.status, e.what());
  }
}

void InferenceService::attach(httplib::Server& server) {
  server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get("/health", [this](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  server.Get("/model", [this](const httplib::Request&, httplib::Response& res) { send(res, model_info()); });
  server.Post("/model",
              [this](const httplib::Request& req, httplib::Response& res) { send(res, swap_model(req.body)); });
  server.Post("/images", [this](const httplib::Request& req, httplib::Response& res) {
    if (req.is_multipart_form_data()) {
      if (!req.has_file("image")) return send(res, error_reply(422, "multipart upload needs an 'image' field"));
      return send(res, upload(req.get_file_value("image").content));
    }
    send(res, upload(req.body));
  });
  server.Post("/transfer",
              [this](const httplib::Request& req, httplib::Response& res) { send(res, transfer(req.body)); });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send(res, error_reply(500, message));
  });
  // Oversize bodies are rejected by the handler with a JSON 413; leave room for multipart framing.
  server.set_payload_max_length(config_.max_upload_bytes + (1u << 20));
}

bool InferenceService::listen() {
  server_ = std::make_unique<httplib::Server>();
  attach(*server_);
  return server_->listen(config_.host, config_.port);
}

int InferenceService::listen_in_background() {
  server_ = std::make_unique<httplib::Server>();
  attach(*server_);
  const int port = server_->bind_to_any_port(config_.host);
  if (port < 0) throw std::runtime_error("cannot bind " + config_.host);
  thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void InferenceService::stop() {
  if (server_) server_->stop();
  if (thread_ && thread_->joinable()) thread_->join();
  thread_.reset();
}

}  // namespace dmt
