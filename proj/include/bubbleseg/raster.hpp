#pragma once

#include <vector>

#include "bubbleseg/core.hpp"

namespace bubbleseg::raster {

/// Gradient direction sector used by non-maximum suppression. The value is
/// the sector's angle in degrees, with y pointing down the image.
enum class Sector : std::uint8_t { Deg0 = 0, Deg45 = 1, Deg90 = 2, Deg135 = 3 };

Sector quantize_direction(double radians);

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<float> magnitude;
  std::vector<float> direction;  // atan2(gy, gx), radians
  std::vector<Sector> sector;

  float mag(int x, int y) const { return magnitude[static_cast<std::size_t>(y) * width + x]; }
  Sector sec(int x, int y) const { return sector[static_cast<std::size_t>(y) * width + x]; }
  float max_magnitude() const;
};

struct StructuringElement {
  enum class Shape { Cross3, Square3, Disk };
  Shape shape = Shape::Square3;
  int radius = 1;  // Disk only

  static StructuringElement cross3() { return {Shape::Cross3, 1}; }
  static StructuringElement square3() { return {Shape::Square3, 1}; }
  static StructuringElement disk(int r) { return {Shape::Disk, r}; }

  /// Offsets (dx, dy) covered by the element, including the origin.
  std::vector<std::pair<int, int>> offsets() const;
};

enum class Connectivity { Four = 4, Eight = 8 };

std::vector<float> gaussian_kernel(double sigma);
GrayImage gaussian_blur(const GrayImage& img, double sigma);

GradientField sobel_gradients(const GrayImage& img);
GradientField non_max_suppression(const GradientField& g);
BinaryMask hysteresis_threshold(const GradientField& g, double low, double high);

struct CannyParams {
  double sigma = 1.0;
  double low = 0.10;   // fraction of the post-suppression maximum
  double high = 0.20;  // fraction of the post-suppression maximum
};

BinaryMask canny(const GrayImage& img, const CannyParams& params = {});

BinaryMask flood_fill(const BinaryMask& mask, int seed_x, int seed_y, Connectivity conn);

/// Two-pass union-find labeling with 8-adjacency; labels follow the raster
/// order of each component's first pixel.
LabelMap connected_components(const BinaryMask& mask);

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se, int iterations = 1);
/// Binary erosion; pixels outside the image count as foreground.
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se, int iterations = 1);

/// Nearest-core dilation of a label map: each iteration grows every label by
/// the element into unlabeled pixels, conflicts going to the lower label.
std::vector<std::int32_t> dilate_labels(const std::vector<std::int32_t>& labels, int width, int height,
                                        const StructuringElement& se, int iterations);

}  // namespace bubbleseg::raster
