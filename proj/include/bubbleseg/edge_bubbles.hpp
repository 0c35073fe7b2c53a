#pragma once

#include <vector>

#include "bubbleseg/core.hpp"
#include "bubbleseg/raster.hpp"

namespace bubbleseg::edge {

/// Which pixels of the bounding edge ring join an instance.
enum class RingPixels {
  All,        // the whole ring, as filled by the flood
  Intensity,  // ring pixels closer in intensity to the interior than to the surround
};

struct SmallBubbleConfig {
  raster::CannyParams canny{};
  int min_area = 5;    // speckle floor, pixels
  int max_area = 200;  // larger closed contours are discarded
  RingPixels ring = RingPixels::All;

  void validate() const;
};

/// Small-bubble detector: Canny edges, closed-contour interiors found as the
/// complement of a 4-connected flood of the background from the image border,
/// then an area filter. Each instance is a contour interior plus the edge
/// pixels bounding it.
std::vector<Instance> detect_small_bubbles(const GrayImage& img, const SmallBubbleConfig& cfg = {});

/// Same, starting from a precomputed edge mask. The intensity ring rule
/// needs the image and is skipped when img is null.
std::vector<Instance> bubbles_from_edges(const BinaryMask& edges, const SmallBubbleConfig& cfg,
                                         const GrayImage* img = nullptr);

}  // namespace bubbleseg::edge
