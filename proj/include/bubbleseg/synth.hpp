#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bubbleseg/core.hpp"

namespace bubbleseg::synth {

/// Parameters of the synthetic SEM-like micrograph generator. Intensities are
/// in [0,1]; radii in pixels.
struct SynthConfig {
  int width = 128;
  int height = 128;
  int n_bubbles_min = 6;   // free-standing bubbles, tangent pairs come on top
  int n_bubbles_max = 10;
  double radius_mu = 2.3979;   // log-normal location of the main mode, ln(11)
  double radius_sigma = 0.2;   // log-normal scale of the main mode
  double small_fraction = 0.35;
  double small_radius_min = 2.8;
  double small_radius_max = 4.5;
  double max_eccentricity = 0.5;
  double background_level = 0.62;
  double bubble_level = 0.12;
  double grey_fraction = 0.3;  // share of bubbles with background-like interiors and dark rims
  double grey_level = 0.52;
  double rim_darkening = 0.32;
  double rim_width = 1.5;
  double level_jitter = 0.08;  // per-image contrast variation of both levels
  int touching_pairs = 4;
  double noise_sigma = 0.02;
  double texture_amplitude = 0.05;
  double psf_sigma = 0.7;      // optical blur of the rendered scene; 0 disables
  int min_gap = 3;             // clearance between bubbles that are not a tangent pair
  int margin = 2;              // clearance to the image border
  int small_max_area = 200;    // size_class threshold, matches the edge detector default
  std::uint64_t seed = 1;

  void validate() const;
};

struct BubbleShape {
  double cx = 0, cy = 0;
  double semi_major = 0, semi_minor = 0;
  double angle = 0;   // radians
  bool grey = false;
  double level = 0;   // interior intensity before rim, texture, blur and noise
  int pair = -1;      // tangent pair index, -1 when free-standing
};

/// Pixels whose integer centers fall inside the ellipse.
BinaryMask rasterize(const BubbleShape& shape, int width, int height);

/// One draw from the main log-normal radius mode.
double sample_main_radius(const SynthConfig& cfg, std::mt19937_64& rng);

struct SynthSample {
  GrayImage image;
  AnnotationSet annotation;
  std::vector<BubbleShape> shapes;  // shapes[i] generated annotation.instances[i]
};

SynthSample generate(const SynthConfig& cfg, const std::string& image_id = "synthetic");

/// Removes every small instance and a random 20% of the rest, marking the set
/// as partially labeled.
AnnotationSet simulate_partial_labels(const AnnotationSet& full, std::uint64_t seed, double drop_fraction = 0.2);

struct ManifestEntry {
  std::string id;
  std::string image;       // relative to the manifest directory
  std::string annotation;  // relative to the manifest directory
  std::uint64_t seed = 0;
};

struct Manifest {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
  SynthConfig config;
  bool partial_train = false;

  const ManifestEntry* find(const std::string& id) const;
};

struct DatasetSpec {
  int n_train = 18;
  int n_test = 24;
  bool partial_train = false;
};

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Writes images/, annotations/ and manifest.json under out_dir.
Manifest generate_dataset(const SynthConfig& cfg, const DatasetSpec& spec, const std::filesystem::path& out_dir);

/// Renders one manifest entry in memory; matches the files generate_dataset wrote.
SynthSample regenerate_entry(const Manifest& manifest, const ManifestEntry& entry, bool train_split);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace bubbleseg::synth
