#pragma once

#include <vector>

#include "bubbleseg/core.hpp"
#include "bubbleseg/io.hpp"
#include "bubbleseg/raster.hpp"

namespace bubbleseg::instances {

struct ExtractConfig {
  double region_threshold = 0.5;
  double boundary_threshold = 0.5;
  raster::StructuringElement dilation = raster::StructuringElement::square3();
  int dilation_iterations = 1;
  bool clip_to_region = false;  // grow only into pixels of the thresholded region map
  int min_component_area = 20;

  void validate() const;
};

/// Region minus boundary, 8-connected components, area filter, then a
/// per-instance dilation in which contested pixels go to the nearest core
/// (lower id on ties), so touching instances stay apart. With clip_to_region
/// the growth is confined to the thresholded region map.
std::vector<Instance> extract_instances(const ProbMap& region, const ProbMap& boundary, const ExtractConfig& cfg = {});

enum class OverlapRule { NetworkWins };

struct MergePolicy {
  OverlapRule overlap_rule = OverlapRule::NetworkWins;
};

/// Keeps every large instance and each small one that shares no pixel with
/// them. Ids are renumbered from 1 in (min_y, min_x) bounding box order.
std::vector<Instance> merge_instances(const std::vector<Instance>& large, const std::vector<Instance>& small,
                                      const MergePolicy& policy = {});

struct ThresholdConfig {
  std::vector<double> thresholds{0.35};
  bool otsu = false;  // replaces thresholds with a single automatic level
  int min_component_area = 20;
  int small_max_area = 200;

  void validate() const;
};

/// Between-class variance maximizer over a 256-bin histogram.
double otsu_threshold(const GrayImage& img);

/// Classical comparator: dark bands img <= t for ascending t, each band's
/// components added when they do not overlap components already taken.
std::vector<Instance> threshold_segment(const GrayImage& img, const ThresholdConfig& cfg = {});

/// Gray image with instance outlines: blue for network, red for the edge
/// detector, green for anything else.
io::RgbImage render_overlay(const GrayImage& img, const std::vector<Instance>& instances);

}  // namespace bubbleseg::instances
