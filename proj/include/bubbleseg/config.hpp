#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "bubbleseg/edge_bubbles.hpp"
#include "bubbleseg/eval.hpp"
#include "bubbleseg/instances.hpp"
#include "bubbleseg/mtnet.hpp"
#include "bubbleseg/synth.hpp"
#include "bubbleseg/train.hpp"

namespace bubbleseg {

/// Every tunable of the system. All blocks and fields are optional in JSON;
/// unknown keys are rejected.
struct PipelineConfig {
  edge::SmallBubbleConfig small_bubbles;
  instances::ExtractConfig extract;
  instances::MergePolicy merge;
  instances::ThresholdConfig baseline;
  mtnet::NetConfig net;
  mtnet::LossConfig loss;
  mtnet::TrainConfig train;
  mtnet::AugmentConfig augment;
  synth::SynthConfig synth;
  eval::MatchMode match = eval::MatchMode::Greedy;

  void validate() const;
};

namespace config {

using nlohmann::json;

json to_json(const edge::SmallBubbleConfig& c);
json to_json(const instances::ExtractConfig& c);
json to_json(const instances::MergePolicy& c);
json to_json(const instances::ThresholdConfig& c);
json to_json(const mtnet::NetConfig& c);
json to_json(const mtnet::LossConfig& c);
json to_json(const mtnet::TrainConfig& c);
json to_json(const mtnet::AugmentConfig& c);
json to_json(const synth::SynthConfig& c);
json to_json(const PipelineConfig& c);

/// Overlays the keys present in j onto cfg. context prefixes error messages.
void read(const json& j, edge::SmallBubbleConfig& cfg, const std::string& context);
void read(const json& j, instances::ExtractConfig& cfg, const std::string& context);
void read(const json& j, instances::MergePolicy& cfg, const std::string& context);
void read(const json& j, instances::ThresholdConfig& cfg, const std::string& context);
void read(const json& j, mtnet::NetConfig& cfg, const std::string& context);
void read(const json& j, mtnet::LossConfig& cfg, const std::string& context);
void read(const json& j, mtnet::TrainConfig& cfg, const std::string& context);
void read(const json& j, mtnet::AugmentConfig& cfg, const std::string& context);
void read(const json& j, synth::SynthConfig& cfg, const std::string& context);
void read(const json& j, PipelineConfig& cfg, const std::string& context = "config");

PipelineConfig parse(std::string_view text);
PipelineConfig load(const std::filesystem::path& path);

}  // namespace config
}  // namespace bubbleseg
