#include "bubbleseg/pipeline.hpp"

#include "bubbleseg/io.hpp"

namespace bubbleseg::app {

AnnotationSet segment(const GrayImage& img, const mtnet::NetParams* params, const PipelineConfig& cfg,
                      const std::string& image_id, bool small_only) {
  std::vector<Instance> large;
  if (!small_only) {
    if (!params) throw Error(ErrorCode::CheckpointNotFound, "checkpoint not found: segmentation needs trained weights");
    const auto pred = mtnet::forward(*params, img);
    large = instances::extract_instances(pred.region, pred.boundary, cfg.extract);
  }
  const auto small = edge::detect_small_bubbles(img, cfg.small_bubbles);
  AnnotationSet out{image_id, img.width(), img.height(), true, instances::merge_instances(large, small, cfg.merge)};
  return out;
}

AnnotationSet baseline(const GrayImage& img, const PipelineConfig& cfg, const std::string& image_id) {
  return {image_id, img.width(), img.height(), true, instances::threshold_segment(img, cfg.baseline)};
}

Dataset::Dataset(const std::filesystem::path& root) : root_(root) {
  const auto path = root_ / "manifest.json";
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::NotFound, "no manifest.json in " + root_.string());
  manifest_ = synth::read_manifest(path);
}

std::vector<synth::ManifestEntry> Dataset::split(const std::string& name) const {
  if (name == "train") return manifest_.train;
  if (name == "test") return manifest_.test;
  if (name == "all") {
    auto all = manifest_.train;
    all.insert(all.end(), manifest_.test.begin(), manifest_.test.end());
    return all;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown split '" + name + "' (expected train, test or all)");
}

const synth::ManifestEntry& Dataset::entry(const std::string& id) const {
  const auto* e = manifest_.find(id);
  if (!e) throw Error(ErrorCode::NotFound, "unknown image '" + id + "'");
  return *e;
}

std::vector<mtnet::Sample> load_training_set(const Dataset& data) {
  std::vector<mtnet::Sample> out;
  for (const auto& e : data.manifest().train)
    out.push_back(mtnet::make_sample(io::read_image(data.image_path(e)), io::read_annotation(data.annotation_path(e))));
  return out;
}

std::map<std::string, std::vector<Instance>> read_predictions(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::NotFound, "prediction directory not found: " + dir.string());
  std::map<std::string, std::vector<Instance>> out;
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    if (f.path().extension() != ".json") continue;
    auto set = io::read_annotation(f.path());
    out[set.image_id] = std::move(set.instances);
  }
  return out;
}

}  // namespace bubbleseg::app
