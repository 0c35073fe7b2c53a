#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bubbleseg/config.hpp"

namespace bubbleseg::app {

/// Network branch (forward, extraction) plus the small-bubble detector,
/// merged. params may be null only when small_only is set.
AnnotationSet segment(const GrayImage& img, const mtnet::NetParams* params, const PipelineConfig& cfg,
                      const std::string& image_id, bool small_only = false);

AnnotationSet baseline(const GrayImage& img, const PipelineConfig& cfg, const std::string& image_id);

/// A manifest directory opened for reading.
class Dataset {
 public:
  explicit Dataset(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const synth::Manifest& manifest() const { return manifest_; }
  /// Entries of "train", "test" or "all".
  std::vector<synth::ManifestEntry> split(const std::string& name) const;
  const synth::ManifestEntry& entry(const std::string& id) const;  // NotFound
  std::filesystem::path image_path(const synth::ManifestEntry& e) const { return root_ / e.image; }
  std::filesystem::path annotation_path(const synth::ManifestEntry& e) const { return root_ / e.annotation; }

 private:
  std::filesystem::path root_;
  synth::Manifest manifest_;
};

/// Training samples from the files of the train split.
std::vector<mtnet::Sample> load_training_set(const Dataset& data);

/// Reads every <id>.json in dir keyed by image id.
std::map<std::string, std::vector<Instance>> read_predictions(const std::filesystem::path& dir);

}  // namespace bubbleseg::app
