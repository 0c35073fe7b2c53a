#include "bubbleseg/config.hpp"

#include "bubbleseg/io.hpp"
#include "bubbleseg/json_util.hpp"

namespace bubbleseg {

void PipelineConfig::validate() const {
  small_bubbles.validate();
  extract.validate();
  baseline.validate();
  net.validate();
  loss.validate();
  train.validate();
  augment.validate();
  synth.validate();
}

namespace config {

namespace {

std::string se_name(const raster::StructuringElement& se) {
  switch (se.shape) {
    case raster::StructuringElement::Shape::Cross3: return "cross3";
    case raster::StructuringElement::Shape::Square3: return "square3";
    case raster::StructuringElement::Shape::Disk: return "disk";
  }
  return "square3";
}

raster::StructuringElement::Shape parse_se(const std::string& s, const std::string& context) {
  if (s == "cross3") return raster::StructuringElement::Shape::Cross3;
  if (s == "square3") return raster::StructuringElement::Shape::Square3;
  if (s == "disk") return raster::StructuringElement::Shape::Disk;
  throw Error(ErrorCode::ConfigInvalid, context + ": unknown structuring element '" + s + "'");
}

}  // namespace

json to_json(const edge::SmallBubbleConfig& c) {
  return {{"canny_sigma", c.canny.sigma}, {"canny_low", c.canny.low}, {"canny_high", c.canny.high},
          {"min_area", c.min_area},       {"max_area", c.max_area},   {"ring", c.ring == edge::RingPixels::All ? "all" : "intensity"}};
}

void read(const json& j, edge::SmallBubbleConfig& c, const std::string& context) {
  StrictObject o(j, context);
  o.get("canny_sigma", c.canny.sigma);
  o.get("canny_low", c.canny.low);
  o.get("canny_high", c.canny.high);
  o.get("min_area", c.min_area);
  o.get("max_area", c.max_area);
  std::string ring = c.ring == edge::RingPixels::All ? "all" : "intensity";
  o.get("ring", ring);
  if (ring == "all") c.ring = edge::RingPixels::All;
  else if (ring == "intensity") c.ring = edge::RingPixels::Intensity;
  else throw Error(ErrorCode::ConfigInvalid, o.path("ring") + ": expected all or intensity, got '" + ring + "'");
  o.finish();
}

json to_json(const instances::ExtractConfig& c) {
  return {{"region_threshold", c.region_threshold},
          {"boundary_threshold", c.boundary_threshold},
          {"dilation", se_name(c.dilation)},
          {"disk_radius", c.dilation.radius},
          {"dilation_iterations", c.dilation_iterations},
          {"clip_to_region", c.clip_to_region},
          {"min_component_area", c.min_component_area}};
}

void read(const json& j, instances::ExtractConfig& c, const std::string& context) {
  StrictObject o(j, context);
  o.get("region_threshold", c.region_threshold);
  o.get("boundary_threshold", c.boundary_threshold);
  std::string se = se_name(c.dilation);
  o.get("dilation", se);
  c.dilation.shape = parse_se(se, o.path("dilation"));
  o.get("disk_radius", c.dilation.radius);
  o.get("dilation_iterations", c.dilation_iterations);
  o.get("clip_to_region", c.clip_to_region);
  o.get("min_component_area", c.min_component_area);
  o.finish();
}

json to_json(const instances::MergePolicy&) { return {{"overlap_rule", "network_wins"}}; }

void read(const json& j, instances::MergePolicy& c, const std::string& context) {
  StrictObject o(j, context);
  std::string rule = "network_wins";
  o.get("overlap_rule", rule);
  if (rule != "network_wins") throw Error(ErrorCode::ConfigInvalid, o.path("overlap_rule") + ": unknown rule '" + rule + "'");
  c.overlap_rule = instances::OverlapRule::NetworkWins;
  o.finish();
}

json to_json(const instances::ThresholdConfig& c) {
  return {{"thresholds", c.thresholds},
          {"otsu", c.otsu},
          {"min_component_area", c.min_component_area},
          {"small_max_area", c.small_max_area}};
}

void read(const json& j, instances::ThresholdConfig& c, const std::string& context) {
  StrictObject o(j, context);
  o.get("thresholds", c.thresholds);
  o.get("otsu", c.otsu);
  o.get("min_component_area", c.min_component_area);
  o.get("small_max_area", c.small_max_area);
  o.finish();
}

json to_json(const mtnet::NetConfig& c) {
  return {{"input_size", c.input_size},
          {"encoder_levels", c.encoder_levels},
          {"base_channels", c.base_channels},
          {"kernel_size", c.kernel_size}};
}

void read(const json& j, mtnet::NetConfig& c, const std::string& context) {
  StrictObject o(j, context);
  o.get("input_size", c.input_size);
  o.get("encoder_levels", c.encoder_levels);
  o.get("base_channels", c.base_channels);
  o.get("kernel_size", c.kernel_size);
  o.finish();
}

json to_json(const mtnet::LossConfig& c) {
  return {{"w0", c.w0}, {"w1", c.w1}, {"dice_smooth", c.dice_smooth}, {"prob_clip", c.prob_clip}};
}

void read(const json& j, mtnet::LossConfig& c, const std::string& context) {
  StrictObject o(j, context);
  o.get("w0", c.w0);
  o.get("w1", c.w1);
  o.get("dice_smooth", c.dice_smooth);
  o.get("prob_clip", c.prob_clip);
  o.finish();
}

json to_json(const mtnet::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},   {"batch_size", c.batch_size},
          {"lr_decay_gamma", c.lr_decay_gamma}, {"weight_decay", c.weight_decay}, {"beta1", c.beta1},
          {"beta2", c.beta2},                 {"adam_eps", c.adam_eps}, {"augment", c.augment},
          {"seed", c.seed}};
}

void read(const json& j, mtnet::TrainConfig& c, const std::string& context) {
  StrictObject o(j, context);
  o.get("learning_rate", c.learning_rate);
  o.get("epochs", c.epochs);
  o.get("batch_size", c.batch_size);
  o.get("lr_decay_gamma", c.lr_decay_gamma);
  o.get("weight_decay", c.weight_decay);
  o.get("beta1", c.beta1);
  o.get("beta2", c.beta2);
  o.get("adam_eps", c.adam_eps);
  o.get("augment", c.augment);
  o.get("seed", c.seed);
  o.finish();
}

json to_json(const mtnet::AugmentConfig& c) {
  return {{"p_hflip", c.p_hflip},
          {"p_vflip", c.p_vflip},
          {"p_rot90", c.p_rot90},
          {"p_rotate", c.p_rotate},
          {"max_rotation_deg", c.max_rotation_deg},
          {"p_scale", c.p_scale},
          {"scale_min", c.scale_min},
          {"scale_max", c.scale_max},
          {"p_blur", c.p_blur},
          {"blur_sigma_max", c.blur_sigma_max},
          {"p_noise", c.p_noise},
          {"noise_sigma_max", c.noise_sigma_max},
          {"p_brightness", c.p_brightness},
          {"brightness_delta", c.brightness_delta},
          {"p_contrast", c.p_contrast},
          {"contrast_min", c.contrast_min},
          {"contrast_max", c.contrast_max}};
}

void read(const json& j, mtnet::AugmentConfig& c, const std::string& context) {
  StrictObject o(j, context);
  o.get("p_hflip", c.p_hflip);
  o.get("p_vflip", c.p_vflip);
  o.get("p_rot90", c.p_rot90);
  o.get("p_rotate", c.p_rotate);
  o.get("max_rotation_deg", c.max_rotation_deg);
  o.get("p_scale", c.p_scale);
  o.get("scale_min", c.scale_min);
  o.get("scale_max", c.scale_max);
  o.get("p_blur", c.p_blur);
  o.get("blur_sigma_max", c.blur_sigma_max);
  o.get("p_noise", c.p_noise);
  o.get("noise_sigma_max", c.noise_sigma_max);
  o.get("p_brightness", c.p_brightness);
  o.get("brightness_delta", c.brightness_delta);
  o.get("p_contrast", c.p_contrast);
  o.get("contrast_min", c.contrast_min);
  o.get("contrast_max", c.contrast_max);
  o.finish();
}

json to_json(const synth::SynthConfig& c) {
  return {{"width", c.width},
          {"height", c.height},
          {"n_bubbles_min", c.n_bubbles_min},
          {"n_bubbles_max", c.n_bubbles_max},
          {"radius_mu", c.radius_mu},
          {"radius_sigma", c.radius_sigma},
          {"small_fraction", c.small_fraction},
          {"small_radius_min", c.small_radius_min},
          {"small_radius_max", c.small_radius_max},
          {"max_eccentricity", c.max_eccentricity},
          {"background_level", c.background_level},
          {"bubble_level", c.bubble_level},
          {"grey_fraction", c.grey_fraction},
          {"grey_level", c.grey_level},
          {"rim_darkening", c.rim_darkening},
          {"rim_width", c.rim_width},
          {"level_jitter", c.level_jitter},
          {"touching_pairs", c.touching_pairs},
          {"noise_sigma", c.noise_sigma},
          {"texture_amplitude", c.texture_amplitude},
          {"psf_sigma", c.psf_sigma},
          {"min_gap", c.min_gap},
          {"margin", c.margin},
          {"small_max_area", c.small_max_area},
          {"seed", c.seed}};
}

void read(const json& j, synth::SynthConfig& c, const std::string& context) {
  StrictObject o(j, context);
  o.get("width", c.width);
  o.get("height", c.height);
  o.get("n_bubbles_min", c.n_bubbles_min);
  o.get("n_bubbles_max", c.n_bubbles_max);
  o.get("radius_mu", c.radius_mu);
  o.get("radius_sigma", c.radius_sigma);
  o.get("small_fraction", c.small_fraction);
  o.get("small_radius_min", c.small_radius_min);
  o.get("small_radius_max", c.small_radius_max);
  o.get("max_eccentricity", c.max_eccentricity);
  o.get("background_level", c.background_level);
  o.get("bubble_level", c.bubble_level);
  o.get("grey_fraction", c.grey_fraction);
  o.get("grey_level", c.grey_level);
  o.get("rim_darkening", c.rim_darkening);
  o.get("rim_width", c.rim_width);
  o.get("level_jitter", c.level_jitter);
  o.get("touching_pairs", c.touching_pairs);
  o.get("noise_sigma", c.noise_sigma);
  o.get("texture_amplitude", c.texture_amplitude);
  o.get("psf_sigma", c.psf_sigma);
  o.get("min_gap", c.min_gap);
  o.get("margin", c.margin);
  o.get("small_max_area", c.small_max_area);
  o.get("seed", c.seed);
  o.finish();
}

json to_json(const PipelineConfig& c) {
  return {{"small_bubbles", to_json(c.small_bubbles)},
          {"extract", to_json(c.extract)},
          {"merge", to_json(c.merge)},
          {"baseline", to_json(c.baseline)},
          {"net", to_json(c.net)},
          {"loss", to_json(c.loss)},
          {"train", to_json(c.train)},
          {"augment", to_json(c.augment)},
          {"synth", to_json(c.synth)},
          {"eval", {{"match", std::string(eval::to_string(c.match))}}}};
}

void read(const json& j, PipelineConfig& c, const std::string& context) {
  StrictObject o(j, context);
  if (const json* b = o.child("small_bubbles")) read(*b, c.small_bubbles, o.path("small_bubbles"));
  if (const json* b = o.child("extract")) read(*b, c.extract, o.path("extract"));
  if (const json* b = o.child("merge")) read(*b, c.merge, o.path("merge"));
  if (const json* b = o.child("baseline")) read(*b, c.baseline, o.path("baseline"));
  if (const json* b = o.child("net")) read(*b, c.net, o.path("net"));
  if (const json* b = o.child("loss")) read(*b, c.loss, o.path("loss"));
  if (const json* b = o.child("train")) read(*b, c.train, o.path("train"));
  if (const json* b = o.child("augment")) read(*b, c.augment, o.path("augment"));
  if (const json* b = o.child("synth")) read(*b, c.synth, o.path("synth"));
  if (const json* b = o.child("eval")) {
    StrictObject e(*b, o.path("eval"));
    std::string match(eval::to_string(c.match));
    e.get("match", match);
    try {
      c.match = eval::parse_match_mode(match);
    } catch (const Error& err) {
      throw Error(ErrorCode::ConfigInvalid, e.path("match") + ": " + err.what());
    }
    e.finish();
  }
  o.finish();
  try {
    c.validate();
  } catch (const Error& err) {
    throw Error(ErrorCode::ConfigInvalid, context + ": " + err.what());
  }
}

PipelineConfig parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("config: malformed JSON: ") + e.what());
  }
  PipelineConfig c;
  read(j, c);
  return c;
}

PipelineConfig load(const std::filesystem::path& path) { return parse(io::read_text(path)); }

}  // namespace config
}  // namespace bubbleseg
