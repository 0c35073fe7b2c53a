#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bubbleseg {

enum class ErrorCode {
  LengthMismatch,
  ShapeMismatch,
  InvalidValue,
  UnsupportedFormat,
  CorruptFile,
  InvalidSigma,
  ImageTooSmall,
  InvalidThresholds,
  SeedOutOfBounds,
  GeometryMismatch,
  EmptyGroundTruth,
  MissingImage,
  EmptyDataset,
  DivergenceDetected,
  ConfigInvalid,
  CheckpointNotFound,
  NotFound,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Per-type value checks applied when a raster is built from external data.
struct GrayTag {
  using value_type = float;
  static constexpr const char* name = "GrayImage";
  static bool valid(float v) { return v >= 0.0f && v <= 1.0f; }
};
struct ProbTag {
  using value_type = float;
  static constexpr const char* name = "ProbMap";
  static bool valid(float v) { return v >= 0.0f && v <= 1.0f; }
};
struct MaskTag {
  using value_type = std::uint8_t;
  static constexpr const char* name = "BinaryMask";
  static bool valid(std::uint8_t v) { return v <= 1; }
};

/// Row-major 2-D grid. The tag distinguishes images, probability maps and
/// masks at the type level and carries the admissible value range.
template <typename Tag>
class Raster {
 public:
  using value_type = typename Tag::value_type;

  Raster() = default;

  Raster(int width, int height, value_type fill = value_type{})
      : width_(checked_dim(width)), height_(checked_dim(height)),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (!Tag::valid(fill)) throw Error(ErrorCode::InvalidValue, std::string(Tag::name) + ": fill value out of range");
  }

  Raster(int width, int height, std::vector<value_type> data)
      : width_(checked_dim(width)), height_(checked_dim(height)), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw Error(ErrorCode::ShapeMismatch, std::string(Tag::name) + ": data length does not match width x height");
    for (auto v : data_)
      if (!Tag::valid(v)) throw Error(ErrorCode::InvalidValue, std::string(Tag::name) + ": value out of range");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  value_type& operator()(int x, int y) { return data_[index(x, y)]; }
  value_type operator()(int x, int y) const { return data_[index(x, y)]; }
  value_type& operator[](std::size_t i) { return data_[i]; }
  value_type operator[](std::size_t i) const { return data_[i]; }

  bool in_bounds(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  // Clamped read used for edge-replicated borders.
  value_type clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return data_[index(x, y)];
  }

  std::span<const value_type> data() const noexcept { return data_; }
  std::span<value_type> data() noexcept { return data_; }

  template <typename Other>
  bool same_shape(const Other& o) const noexcept {
    return width_ == o.width() && height_ == o.height();
  }

  bool operator==(const Raster&) const = default;

 private:
  static int checked_dim(int d) {
    if (d < 0) throw Error(ErrorCode::ShapeMismatch, std::string(Tag::name) + ": negative dimension");
    return d;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<value_type> data_;
};

using GrayImage = Raster<GrayTag>;
using ProbMap = Raster<ProbTag>;
using BinaryMask = Raster<MaskTag>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, std::string_view what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": shape mismatch");
}

/// Instance labels; 0 is background and labels 1..num_labels are all used.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, std::vector<std::int32_t> labels, int num_labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int num_labels() const noexcept { return num_labels_; }
  std::int32_t operator()(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::int32_t operator[](std::size_t i) const { return labels_[i]; }
  std::span<const std::int32_t> labels() const noexcept { return labels_; }

  bool operator==(const LabelMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int32_t> labels_;
  int num_labels_ = 0;
};

/// Alternating background/foreground runs in row-major order, starting with
/// a (possibly empty) background run.
struct RunLengthEncoding {
  std::vector<std::uint32_t> counts;
  bool operator==(const RunLengthEncoding&) const = default;
};

RunLengthEncoding rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const RunLengthEncoding& rle, int width, int height);

enum class InstanceSource { Network, EdgeDetector, Baseline, Human };
enum class SizeClass { Small, MediumLarge };

std::string_view to_string(InstanceSource s);
std::string_view to_string(SizeClass s);
InstanceSource parse_source(std::string_view s);
SizeClass parse_size_class(std::string_view s);

struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = -1;
  int max_y = -1;
  bool operator==(const BoundingBox&) const = default;
};

/// One segmented object. Pixels are kept as sorted row-major linear indices;
/// the RLE form is produced for serialization.
class Instance {
 public:
  Instance() = default;

  static Instance from_mask(int id, const BinaryMask& mask, InstanceSource source, SizeClass size_class);
  static Instance from_pixels(int id, int width, int height, std::vector<std::uint32_t> pixels,
                              InstanceSource source, SizeClass size_class);
  static Instance from_rle(int id, int width, int height, const RunLengthEncoding& rle,
                           InstanceSource source, SizeClass size_class);

  int id() const noexcept { return id_; }
  void set_id(int id);
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t area() const noexcept { return pixels_.size(); }
  const BoundingBox& bbox() const noexcept { return bbox_; }
  InstanceSource source() const noexcept { return source_; }
  void set_source(InstanceSource s) noexcept { source_ = s; }
  SizeClass size_class() const noexcept { return size_class_; }
  std::span<const std::uint32_t> pixels() const noexcept { return pixels_; }

  bool contains(int x, int y) const;
  BinaryMask to_mask() const;
  RunLengthEncoding rle() const;

  bool operator==(const Instance&) const = default;

 private:
  int id_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> pixels_;
  BoundingBox bbox_;
  InstanceSource source_ = InstanceSource::Network;
  SizeClass size_class_ = SizeClass::MediumLarge;
};

/// Ground truth (or predictions) for one image.
struct AnnotationSet {
  std::string image_id;
  int width = 0;
  int height = 0;
  bool fully_labeled = true;
  std::vector<Instance> instances;

  /// Throws ConfigInvalid on duplicate ids or geometry disagreement.
  void validate() const;
  BinaryMask union_mask() const;

  bool operator==(const AnnotationSet&) const = default;
};

BinaryMask union_mask(std::span<const Instance> instances, int width, int height);

}  // namespace bubbleseg
