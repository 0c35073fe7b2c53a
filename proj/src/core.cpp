#include "bubbleseg/core.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace bubbleseg {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::InvalidSigma: return "InvalidSigma";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::InvalidThresholds: return "InvalidThresholds";
    case ErrorCode::SeedOutOfBounds: return "SeedOutOfBounds";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::CheckpointNotFound: return "CheckpointNotFound";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

LabelMap::LabelMap(int width, int height, std::vector<std::int32_t> labels, int num_labels)
    : width_(width), height_(height), labels_(std::move(labels)), num_labels_(num_labels) {
  if (width < 0 || height < 0 || labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorCode::ShapeMismatch, "LabelMap: data length does not match width x height");
  std::vector<bool> seen(static_cast<std::size_t>(std::max(num_labels, 0)) + 1, false);
  for (auto l : labels_) {
    if (l < 0 || l > num_labels) throw Error(ErrorCode::InvalidValue, "LabelMap: label out of range");
    seen[static_cast<std::size_t>(l)] = true;
  }
  for (int l = 1; l <= num_labels; ++l)
    if (!seen[static_cast<std::size_t>(l)]) throw Error(ErrorCode::InvalidValue, "LabelMap: labels are not contiguous");
}

RunLengthEncoding rle_encode(const BinaryMask& mask) {
  RunLengthEncoding rle;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (auto v : mask.data()) {
    if (v != current) {
      rle.counts.push_back(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const RunLengthEncoding& rle, int width, int height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::LengthMismatch, "rle_decode: negative dimensions");
  const std::uint64_t total = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  std::uint64_t sum = 0;
  for (auto c : rle.counts) sum += c;
  if (sum != total) throw Error(ErrorCode::LengthMismatch, "rle_decode: run lengths do not sum to width x height");
  BinaryMask mask(width, height);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (auto c : rle.counts) {
    if (value) std::fill_n(mask.data().begin() + static_cast<std::ptrdiff_t>(pos), c, std::uint8_t{1});
    pos += c;
    value ^= 1u;
  }
  return mask;
}

std::string_view to_string(InstanceSource s) {
  switch (s) {
    case InstanceSource::Network: return "network";
    case InstanceSource::EdgeDetector: return "edge_detector";
    case InstanceSource::Baseline: return "baseline";
    case InstanceSource::Human: return "human";
  }
  return "network";
}

std::string_view to_string(SizeClass s) { return s == SizeClass::Small ? "small" : "medium_large"; }

InstanceSource parse_source(std::string_view s) {
  if (s == "network") return InstanceSource::Network;
  if (s == "edge_detector") return InstanceSource::EdgeDetector;
  if (s == "baseline") return InstanceSource::Baseline;
  if (s == "human") return InstanceSource::Human;
  throw Error(ErrorCode::ConfigInvalid, "unknown instance source '" + std::string(s) + "'");
}

SizeClass parse_size_class(std::string_view s) {
  if (s == "small") return SizeClass::Small;
  if (s == "medium_large") return SizeClass::MediumLarge;
  throw Error(ErrorCode::ConfigInvalid, "unknown size class '" + std::string(s) + "'");
}

Instance Instance::from_pixels(int id, int width, int height, std::vector<std::uint32_t> pixels,
                               InstanceSource source, SizeClass size_class) {
  if (id <= 0) throw Error(ErrorCode::InvalidValue, "Instance: id must be positive");
  if (pixels.empty()) throw Error(ErrorCode::InvalidValue, "Instance: empty pixel set");
  std::sort(pixels.begin(), pixels.end());
  pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
  const auto total = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  if (pixels.back() >= total) throw Error(ErrorCode::GeometryMismatch, "Instance: pixel outside image");

  Instance inst;
  inst.id_ = id;
  inst.width_ = width;
  inst.height_ = height;
  inst.source_ = source;
  inst.size_class_ = size_class;
  BoundingBox bb{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
  for (auto p : pixels) {
    const int x = static_cast<int>(p % static_cast<std::uint32_t>(width));
    const int y = static_cast<int>(p / static_cast<std::uint32_t>(width));
    bb.min_x = std::min(bb.min_x, x);
    bb.min_y = std::min(bb.min_y, y);
    bb.max_x = std::max(bb.max_x, x);
    bb.max_y = std::max(bb.max_y, y);
  }
  inst.bbox_ = bb;
  inst.pixels_ = std::move(pixels);
  return inst;
}

Instance Instance::from_mask(int id, const BinaryMask& mask, InstanceSource source, SizeClass size_class) {
  std::vector<std::uint32_t> pixels;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) pixels.push_back(static_cast<std::uint32_t>(i));
  return from_pixels(id, mask.width(), mask.height(), std::move(pixels), source, size_class);
}

Instance Instance::from_rle(int id, int width, int height, const RunLengthEncoding& rle,
                            InstanceSource source, SizeClass size_class) {
  return from_mask(id, rle_decode(rle, width, height), source, size_class);
}

void Instance::set_id(int id) {
  if (id <= 0) throw Error(ErrorCode::InvalidValue, "Instance: id must be positive");
  id_ = id;
}

bool Instance::contains(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  const auto idx = static_cast<std::uint32_t>(y) * static_cast<std::uint32_t>(width_) + static_cast<std::uint32_t>(x);
  return std::binary_search(pixels_.begin(), pixels_.end(), idx);
}

BinaryMask Instance::to_mask() const {
  BinaryMask m(width_, height_);
  for (auto p : pixels_) m[p] = 1;
  return m;
}

RunLengthEncoding Instance::rle() const {
  RunLengthEncoding rle;
  std::uint32_t pos = 0;
  std::size_t i = 0;
  while (i < pixels_.size()) {
    const std::uint32_t start = pixels_[i];
    std::size_t j = i + 1;
    while (j < pixels_.size() && pixels_[j] == pixels_[j - 1] + 1) ++j;
    const auto len = static_cast<std::uint32_t>(j - i);
    rle.counts.push_back(start - pos);
    rle.counts.push_back(len);
    pos = start + len;
    i = j;
  }
  const auto total = static_cast<std::uint32_t>(width_) * static_cast<std::uint32_t>(height_);
  if (rle.counts.empty() || pos < total) rle.counts.push_back(total - pos);
  return rle;
}

void AnnotationSet::validate() const {
  std::set<int> ids;
  for (const auto& inst : instances) {
    if (!ids.insert(inst.id()).second)
      throw Error(ErrorCode::ConfigInvalid, "annotation '" + image_id + "': duplicate instance id " + std::to_string(inst.id()));
    if (inst.width() != width || inst.height() != height)
      throw Error(ErrorCode::GeometryMismatch, "annotation '" + image_id + "': instance geometry differs from image");
  }
}

BinaryMask union_mask(std::span<const Instance> instances, int width, int height) {
  BinaryMask m(width, height);
  for (const auto& inst : instances) {
    if (inst.width() != width || inst.height() != height)
      throw Error(ErrorCode::GeometryMismatch, "union_mask: instance geometry differs");
    for (auto p : inst.pixels()) m[p] = 1;
  }
  return m;
}

BinaryMask AnnotationSet::union_mask() const { return bubbleseg::union_mask(instances, width, height); }

}  // namespace bubbleseg
