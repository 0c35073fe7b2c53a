#include "bubbleseg/instances.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace bubbleseg::instances {

void ExtractConfig::validate() const {
  if (!(region_threshold > 0.0 && region_threshold < 1.0) || !(boundary_threshold > 0.0 && boundary_threshold < 1.0))
    throw Error(ErrorCode::InvalidThresholds, "extract config: thresholds must be in (0,1)");
  if (dilation_iterations < 0) throw Error(ErrorCode::ConfigInvalid, "extract config: dilation_iterations must be >= 0");
  if (dilation.shape == raster::StructuringElement::Shape::Disk && dilation.radius < 1)
    throw Error(ErrorCode::ConfigInvalid, "extract config: disk radius must be >= 1");
  if (min_component_area < 1) throw Error(ErrorCode::ConfigInvalid, "extract config: min_component_area must be >= 1");
}

namespace {

std::vector<Instance> instances_from_labels(const std::vector<std::int32_t>& labels, int count, int w, int h,
                                            InstanceSource source, int small_max_area) {
  std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(count) + 1);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] > 0) members[static_cast<std::size_t>(labels[i])].push_back(static_cast<std::uint32_t>(i));
  std::vector<Instance> out;
  for (int l = 1; l <= count; ++l) {
    auto& px = members[static_cast<std::size_t>(l)];
    if (px.empty()) continue;
    const auto size = static_cast<int>(px.size()) <= small_max_area ? SizeClass::Small : SizeClass::MediumLarge;
    out.push_back(Instance::from_pixels(static_cast<int>(out.size()) + 1, w, h, std::move(px), source, size));
  }
  return out;
}

}  // namespace

std::vector<Instance> extract_instances(const ProbMap& region, const ProbMap& boundary, const ExtractConfig& cfg) {
  cfg.validate();
  require_same_shape(region, boundary, "extract_instances");
  const int w = region.width(), h = region.height();
  BinaryMask core(w, h);
  for (std::size_t i = 0; i < core.size(); ++i)
    core[i] = (region[i] >= cfg.region_threshold && !(boundary[i] >= cfg.boundary_threshold)) ? 1 : 0;

  const LabelMap comps = raster::connected_components(core);
  std::vector<int> area(static_cast<std::size_t>(comps.num_labels()) + 1, 0);
  for (auto l : comps.labels()) ++area[static_cast<std::size_t>(l)];
  std::vector<std::int32_t> remap(area.size(), 0);
  std::int32_t kept = 0;
  for (std::size_t l = 1; l < area.size(); ++l)
    if (area[l] >= cfg.min_component_area) remap[l] = ++kept;

  std::vector<std::int32_t> labels(core.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = remap[static_cast<std::size_t>(comps[i])];
  if (kept > 0 && cfg.clip_to_region) {
    for (int it = 0; it < cfg.dilation_iterations; ++it) {
      auto grown = raster::dilate_labels(labels, w, h, cfg.dilation, 1);
      for (std::size_t i = 0; i < grown.size(); ++i)
        if (!(region[i] >= cfg.region_threshold)) grown[i] = labels[i];
      labels = std::move(grown);
    }
  } else if (kept > 0 && cfg.dilation_iterations > 0) {
    labels = raster::dilate_labels(labels, w, h, cfg.dilation, cfg.dilation_iterations);
  }

  return instances_from_labels(labels, kept, w, h, InstanceSource::Network, 0);
}

std::vector<Instance> merge_instances(const std::vector<Instance>& large, const std::vector<Instance>& small,
                                      const MergePolicy& policy) {
  (void)policy;  // network_wins is the only rule
  int w = -1, h = -1;
  auto check = [&](const Instance& inst) {
    if (w < 0) {
      w = inst.width();
      h = inst.height();
    } else if (inst.width() != w || inst.height() != h) {
      throw Error(ErrorCode::GeometryMismatch, "merge_instances: instances come from different image geometries");
    }
  };
  for (const auto& i : large) check(i);
  for (const auto& i : small) check(i);

  std::vector<Instance> out(large.begin(), large.end());
  if (!small.empty()) {
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(w) * h, 0);
    for (const auto& inst : large)
      for (auto p : inst.pixels()) taken[p] = 1;
    for (const auto& inst : small) {
      const auto px = inst.pixels();
      if (std::none_of(px.begin(), px.end(), [&](std::uint32_t p) { return taken[p] != 0; })) out.push_back(inst);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Instance& a, const Instance& b) {
    if (a.bbox().min_y != b.bbox().min_y) return a.bbox().min_y < b.bbox().min_y;
    return a.bbox().min_x < b.bbox().min_x;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].set_id(static_cast<int>(i) + 1);
  return out;
}

void ThresholdConfig::validate() const {
  if (!otsu) {
    if (thresholds.empty()) throw Error(ErrorCode::InvalidThresholds, "threshold config: no thresholds given");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
        throw Error(ErrorCode::InvalidThresholds, "threshold config: thresholds must be in (0,1)");
      if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
        throw Error(ErrorCode::InvalidThresholds, "threshold config: thresholds must be strictly ascending");
    }
  }
  if (min_component_area < 1) throw Error(ErrorCode::ConfigInvalid, "threshold config: min_component_area must be >= 1");
}

double otsu_threshold(const GrayImage& img) {
  std::array<double, 256> hist{};
  for (auto v : img.data()) hist[static_cast<std::size_t>(std::min(255.0f, std::floor(v * 256.0f)))] += 1.0;
  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (int b = 0; b < 256; ++b) sum_all += b * hist[b];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_bin = 127;
  for (int b = 0; b < 255; ++b) {
    w0 += hist[b];
    sum0 += b * hist[b];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = b;
    }
  }
  return std::clamp((best_bin + 1) / 256.0, 1.0 / 256.0, 255.0 / 256.0);
}

std::vector<Instance> threshold_segment(const GrayImage& img, const ThresholdConfig& cfg) {
  cfg.validate();
  const int w = img.width(), h = img.height();
  const std::vector<double> levels = cfg.otsu ? std::vector<double>{otsu_threshold(img)} : cfg.thresholds;
  std::vector<std::int32_t> labels(img.size(), 0);
  std::int32_t count = 0;
  for (double t : levels) {
    BinaryMask band(w, h);
    for (std::size_t i = 0; i < band.size(); ++i) band[i] = img[i] <= t ? 1 : 0;
    const LabelMap comps = raster::connected_components(band);
    std::vector<int> area(static_cast<std::size_t>(comps.num_labels()) + 1, 0);
    std::vector<std::uint8_t> overlaps(area.size(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto l = static_cast<std::size_t>(comps[i]);
      ++area[l];
      if (labels[i] != 0) overlaps[l] = 1;
    }
    std::vector<std::int32_t> assign(area.size(), 0);
    for (std::size_t l = 1; l < area.size(); ++l)
      if (!overlaps[l] && area[l] >= cfg.min_component_area) assign[l] = ++count;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (const auto a = assign[static_cast<std::size_t>(comps[i])]) labels[i] = a;
  }
  return instances_from_labels(labels, count, w, h, InstanceSource::Baseline, cfg.small_max_area);
}

io::RgbImage render_overlay(const GrayImage& img, const std::vector<Instance>& instances) {
  io::RgbImage out{img.width(), img.height(), std::vector<io::Rgb>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto g = static_cast<std::uint8_t>(std::lround(img[i] * 255.0f));
    out.pixels[i] = {g, g, g};
  }
  for (const auto& inst : instances) {
    io::Rgb color{0, 200, 0};
    if (inst.source() == InstanceSource::Network) color = {0, 64, 255};
    if (inst.source() == InstanceSource::EdgeDetector) color = {255, 0, 0};
    for (auto p : inst.pixels()) {
      const int x = static_cast<int>(p % static_cast<std::uint32_t>(img.width()));
      const int y = static_cast<int>(p / static_cast<std::uint32_t>(img.width()));
      const bool outline = !inst.contains(x - 1, y) || !inst.contains(x + 1, y) || !inst.contains(x, y - 1) ||
                           !inst.contains(x, y + 1);
      if (outline) out.at(x, y) = color;
    }
  }
  return out;
}

}  // namespace bubbleseg::instances
