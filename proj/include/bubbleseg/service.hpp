#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "bubbleseg/config.hpp"

namespace bubbleseg::app {

/// HTTP backend of the annotation tool, rooted at a manifest directory.
///
///   GET  /api/health
///   GET  /api/images                 manifest entries
///   GET  /api/images/{id}            PNG bytes
///   GET  /api/annotations/{id}       canonical annotation JSON, revision in X-Revision
///   PUT  /api/annotations/{id}       annotation JSON plus "revision"; 409 when stale
///   POST /api/segment/{id}           body: PipelineConfig overrides; ?small_only=true
///
/// Revisions start at 0 for every image when the service starts and grow by
/// one per accepted write. Writes are serialized and land via temp + rename.
class Service {
 public:
  Service(const std::filesystem::path& root, PipelineConfig cfg,
          const std::optional<std::filesystem::path>& checkpoint = std::nullopt);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bubbleseg::app
