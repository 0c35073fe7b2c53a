#include "bubbleseg/edge_bubbles.hpp"

#include <cmath>
#include <string>

namespace bubbleseg::edge {

void SmallBubbleConfig::validate() const {
  if (!(min_area > 0 && min_area < max_area))
    throw Error(ErrorCode::ConfigInvalid, "small bubble config: require 0 < min_area < max_area");
  if (!(canny.sigma > 0.0)) throw Error(ErrorCode::InvalidSigma, "small bubble config: canny sigma must be positive");
  if (!(canny.low >= 0.0 && canny.low < canny.high))
    throw Error(ErrorCode::InvalidThresholds, "small bubble config: require 0 <= canny low < canny high");
}

namespace {

constexpr int kDx4[4] = {0, -1, 1, 0};
constexpr int kDy4[4] = {-1, 0, 0, 1};

// Non-edge pixels 4-connected to the image border.
BinaryMask border_background(const BinaryMask& edges) {
  const int w = edges.width(), h = edges.height();
  BinaryMask bg(w, h);
  std::vector<std::pair<int, int>> stack;
  auto seed = [&](int x, int y) {
    if (!edges(x, y) && !bg(x, y)) {
      bg(x, y) = 1;
      stack.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx4[k], ny = y + kDy4[k];
      if (edges.in_bounds(nx, ny) && !edges(nx, ny) && !bg(nx, ny)) {
        bg(nx, ny) = 1;
        stack.emplace_back(nx, ny);
      }
    }
  }
  return bg;
}

// Keeps interior pixels and the ring pixels whose intensity is nearer the
// interior mean than the mean of a 2-pixel band just outside the instance.
std::vector<std::uint32_t> attribute_ring(const std::vector<std::uint32_t>& px, const BinaryMask& edges,
                                          const GrayImage& img) {
  BinaryMask inst(img.width(), img.height());
  for (auto p : px) inst[p] = 1;
  const BinaryMask grown = raster::dilate(inst, raster::StructuringElement::square3(), 2);
  double inner = 0.0, outer = 0.0;
  int n_inner = 0, n_outer = 0;
  for (auto p : px)
    if (!edges[p]) {
      inner += img[p];
      ++n_inner;
    }
  for (std::size_t i = 0; i < grown.size(); ++i)
    if (grown[i] && !inst[i]) {
      outer += img[i];
      ++n_outer;
    }
  if (n_inner == 0 || n_outer == 0) return px;
  inner /= n_inner;
  outer /= n_outer;
  std::vector<std::uint32_t> out;
  for (auto p : px)
    if (!edges[p] || std::abs(img[p] - inner) <= std::abs(img[p] - outer)) out.push_back(p);
  return out;
}

}  // namespace

std::vector<Instance> bubbles_from_edges(const BinaryMask& edges, const SmallBubbleConfig& cfg, const GrayImage* img) {
  cfg.validate();
  const int w = edges.width(), h = edges.height();
  const BinaryMask bg = border_background(edges);

  // Everything the border flood could not reach: contour interiors and the
  // edges themselves. A closed structure is one 8-connected blob of it.
  BinaryMask enclosed(w, h);
  for (std::size_t i = 0; i < enclosed.size(); ++i) enclosed[i] = bg[i] ? 0 : 1;
  const LabelMap blobs = raster::connected_components(enclosed);

  std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(blobs.num_labels()) + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto l = blobs(x, y);
      if (l == 0) continue;
      const auto i = static_cast<std::uint32_t>(y * w + x);
      if (!edges[i]) {
        members[l].push_back(i);
        continue;
      }
      // Edge pixel: kept only when it shares a side with an interior pixel
      // of its blob; diagonal staircase corners are left out.
      bool bounding = false;
      for (int k = 0; k < 4 && !bounding; ++k) {
        const int nx = x + kDx4[k], ny = y + kDy4[k];
        bounding = edges.in_bounds(nx, ny) && !edges(nx, ny) && blobs(nx, ny) == l;
      }
      if (bounding) members[l].push_back(i);
    }

  std::vector<Instance> out;
  for (int l = 1; l <= blobs.num_labels(); ++l) {
    auto& px = members[static_cast<std::size_t>(l)];
    if (px.empty()) continue;
    const auto area = static_cast<int>(px.size());
    if (area < cfg.min_area || area > cfg.max_area) continue;
    bool interior = false, touches_border = false;
    for (auto p : px) {
      const int x = static_cast<int>(p) % w, y = static_cast<int>(p) / w;
      if (!edges[p]) interior = true;
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) touches_border = true;
    }
    if (!interior || touches_border) continue;
    if (img && cfg.ring == RingPixels::Intensity) px = attribute_ring(px, edges, *img);
    out.push_back(Instance::from_pixels(static_cast<int>(out.size()) + 1, w, h, std::move(px),
                                        InstanceSource::EdgeDetector, SizeClass::Small));
  }
  return out;
}

std::vector<Instance> detect_small_bubbles(const GrayImage& img, const SmallBubbleConfig& cfg) {
  cfg.validate();
  return bubbles_from_edges(raster::canny(img, cfg.canny), cfg, &img);
}

}  // namespace bubbleseg::edge
