#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bubbleseg/core.hpp"
#include "bubbleseg/mtnet.hpp"

namespace bubbleseg::mtnet {

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 8;
  double lr_decay_gamma = 0.97;  // multiplicative, applied after every epoch
  double weight_decay = 0.01;    // decoupled
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool augment = true;
  std::uint64_t seed = 1;

  void validate() const;
  double lr_at(int epoch) const;
};

/// Probabilities of each random augmentation and their ranges. Geometric
/// transforms act on image and targets alike; photometric ones on the image.
struct AugmentConfig {
  double p_hflip = 0.5;
  double p_vflip = 0.5;
  double p_rot90 = 0.75;  // quarter turns are exact on the targets
  double p_rotate = 0.3;
  double max_rotation_deg = 15.0;
  double p_scale = 0.3;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double p_blur = 0.2;
  double blur_sigma_max = 1.0;
  double p_noise = 0.3;
  double noise_sigma_max = 0.03;
  double p_brightness = 0.5;
  double brightness_delta = 0.1;
  double p_contrast = 0.5;
  double contrast_min = 0.8;
  double contrast_max = 1.2;

  void validate() const;
  static AugmentConfig none();
};

/// One realized random draw.
struct AugmentPlan {
  bool hflip = false;
  bool vflip = false;
  int quarter_turns = 0;
  double rotation_rad = 0.0;
  double scale = 1.0;
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  double brightness = 0.0;
  double contrast = 1.0;

  bool geometric() const { return hflip || vflip || quarter_turns != 0 || rotation_rad != 0.0 || scale != 1.0; }
  bool identity() const { return !geometric() && blur_sigma == 0.0 && noise_sigma == 0.0 && brightness == 0.0 && contrast == 1.0; }
};

struct Sample {
  GrayImage image;
  BinaryMask region;    // y1
  BinaryMask boundary;  // y2
};

AugmentPlan draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng);
Sample apply_augment(const AugmentPlan& plan, const Sample& in);
Sample augment(const Sample& in, const AugmentConfig& cfg, std::mt19937_64& rng);

/// Region target is the union of instances; boundary target marks instance
/// pixels removed by a 3x3 erosion of that instance alone, which includes
/// both sides of every contact line between touching instances.
Sample make_sample(const GrayImage& img, const AnnotationSet& ann);
BinaryMask boundary_target(const AnnotationSet& ann);

struct EpochLog {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double dice = 0.0;
  double wbce = 0.0;
  double total = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// AdamW with decoupled weight decay and exponential per-epoch decay.
/// Deterministic for a given seed.
NetParams train(const std::vector<Sample>& dataset, const TrainConfig& tc, const LossConfig& lc, const NetConfig& nc,
                const AugmentConfig& ac, std::vector<EpochLog>* log = nullptr, const EpochCallback& on_epoch = {});

void write_train_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path);

/// Binary checkpoint: "MTNP", u32 length + JSON config, then per tensor
/// u32 name length, name bytes, u32 rank, u32 dims, f32 data (all LE).
void save_checkpoint(const NetParams& params, const std::filesystem::path& path);
NetParams load_checkpoint(const std::filesystem::path& path);

}  // namespace bubbleseg::mtnet
