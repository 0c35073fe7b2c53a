#include "bubbleseg/service.hpp"

#include <map>
#include <mutex>

#include "httplib.h"

#include "bubbleseg/io.hpp"
#include "bubbleseg/pipeline.hpp"

namespace bubbleseg::app {

namespace {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::MissingImage:
      return 404;
    case ErrorCode::CheckpointNotFound:
      return 503;
    case ErrorCode::IoError:
    case ErrorCode::DivergenceDetected:
      return 500;
    default:
      return 400;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump() + "\n", "application/json");
}

}  // namespace

struct Service::Impl {
  std::filesystem::path root;
  Dataset data;
  PipelineConfig cfg;
  std::optional<mtnet::NetParams> params;
  httplib::Server server;
  std::mutex write_mutex;
  std::map<std::string, std::uint64_t> revisions;
  std::map<std::string, std::pair<int, int>> sizes;

  Impl(const std::filesystem::path& r, PipelineConfig c) : root(r), data(r), cfg(std::move(c)) {}

  std::pair<int, int> image_size(const synth::ManifestEntry& e) {
    {
      std::lock_guard lock(write_mutex);
      if (auto it = sizes.find(e.id); it != sizes.end()) return it->second;
    }
    const auto img = io::read_image(data.image_path(e));
    std::lock_guard lock(write_mutex);
    return sizes[e.id] = {img.width(), img.height()};
  }

  // Handlers run inside guard() so that library errors become JSON replies.
  template <typename F>
  httplib::Server::Handler guard(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "Internal", e.what());
      }
    };
  }

  void routes() {
    server.Get("/api/health", guard([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})" "\n", "application/json");
    }));

    server.Get("/api/images", guard([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& [split, entries] : {std::pair{"train", &data.manifest().train}, std::pair{"test", &data.manifest().test}})
        for (const auto& e : *entries)
          list.push_back({{"id", e.id}, {"split", split}, {"image", e.image}, {"annotation", e.annotation}, {"seed", e.seed}});
      res.set_content(list.dump() + "\n", "application/json");
    }));

    server.Get("/api/images/:id", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = data.entry(req.path_params.at("id"));
      const auto bytes = io::read_bytes(data.image_path(e));
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    }));

    server.Get("/api/annotations/:id", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = data.entry(req.path_params.at("id"));
      const auto [w, h] = image_size(e);
      std::lock_guard lock(write_mutex);
      const auto path = data.annotation_path(e);
      AnnotationSet set{e.id, w, h, false, {}};
      if (std::filesystem::exists(path)) set = io::read_annotation(path);
      res.set_header("X-Revision", std::to_string(revisions[e.id]));
      res.set_content(io::serialize_annotation(set), "application/json");
    }));

    server.Put("/api/annotations/:id", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = data.entry(req.path_params.at("id"));
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& ex) {
        return send_error(res, 400, "InvalidValue", std::string("malformed JSON: ") + ex.what());
      }
      if (!body.is_object() || !body.contains("revision") || !body["revision"].is_number_unsigned())
        return send_error(res, 400, "InvalidValue", "body must be an annotation object with a non-negative integer \"revision\"");
      const auto revision = body["revision"].get<std::uint64_t>();
      body.erase("revision");
      const AnnotationSet set = io::annotation_from_json(body);
      const auto [w, h] = image_size(e);
      if (set.image_id != e.id)
        return send_error(res, 400, "InvalidValue", "image_id '" + set.image_id + "' does not match '" + e.id + "'");
      if (set.width != w || set.height != h)
        return send_error(res, 400, "GeometryMismatch", "annotation geometry does not match the image");

      std::lock_guard lock(write_mutex);
      auto& current = revisions[e.id];
      if (revision != current) {
        res.status = 409;
        res.set_content(json{{"error", {{"code", "Conflict"}, {"message", "stale revision"}}}, {"revision", current}}.dump() + "\n",
                        "application/json");
        return;
      }
      io::write_annotation(set, data.annotation_path(e));
      ++current;
      res.set_header("X-Revision", std::to_string(current));
      res.set_content(json{{"revision", current}}.dump() + "\n", "application/json");
    }));

    server.Post("/api/segment/:id", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = data.entry(req.path_params.at("id"));
      PipelineConfig local = cfg;
      if (!req.body.empty()) {
        json overrides;
        try {
          overrides = json::parse(req.body);
        } catch (const json::exception& ex) {
          return send_error(res, 400, "ConfigInvalid", std::string("malformed JSON: ") + ex.what());
        }
        config::read(overrides, local, "overrides");
      }
      const std::string flag = req.has_param("small_only") ? req.get_param_value("small_only") : "false";
      if (flag != "true" && flag != "false")
        return send_error(res, 400, "InvalidValue", "small_only must be true or false");
      const bool small_only = flag == "true";
      const auto img = io::read_image(data.image_path(e));
      const auto out = segment(img, params ? &*params : nullptr, local, e.id, small_only);
      res.set_content(io::serialize_annotation(out), "application/json");
    }));
  }
};

Service::Service(const std::filesystem::path& root, PipelineConfig cfg,
                 const std::optional<std::filesystem::path>& checkpoint)
    : impl_(std::make_unique<Impl>(root, std::move(cfg))) {
  if (checkpoint) impl_->params = mtnet::load_checkpoint(*checkpoint);
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::IoError, "could not bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error(ErrorCode::IoError, "could not bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace bubbleseg::app
