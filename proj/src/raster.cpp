#include "bubbleseg/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace bubbleseg::raster {

namespace {

constexpr int kDx8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
constexpr int kDy8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kDx4[4] = {0, -1, 1, 0};
constexpr int kDy4[4] = {-1, 0, 0, 1};

std::pair<int, int> sector_step(Sector s) {
  switch (s) {
    case Sector::Deg0: return {1, 0};
    case Sector::Deg45: return {1, 1};
    case Sector::Deg90: return {0, 1};
    case Sector::Deg135: return {-1, 1};
  }
  return {1, 0};
}

struct UnionFind {
  std::vector<std::int32_t> parent;

  std::int32_t make() {
    parent.push_back(static_cast<std::int32_t>(parent.size()));
    return parent.back();
  }
  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;
    else parent[a] = b;
  }
};

}  // namespace

Sector quantize_direction(double radians) {
  double deg = radians * 180.0 / std::numbers::pi;
  deg = std::fmod(deg, 180.0);
  if (deg < 0.0) deg += 180.0;
  const int s = static_cast<int>(std::floor((deg + 22.5) / 45.0)) % 4;
  return static_cast<Sector>(s);
}

float GradientField::max_magnitude() const {
  return magnitude.empty() ? 0.0f : *std::max_element(magnitude.begin(), magnitude.end());
}

std::vector<std::pair<int, int>> StructuringElement::offsets() const {
  std::vector<std::pair<int, int>> out;
  switch (shape) {
    case Shape::Cross3:
      out = {{0, -1}, {-1, 0}, {0, 0}, {1, 0}, {0, 1}};
      break;
    case Shape::Square3:
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) out.emplace_back(dx, dy);
      break;
    case Shape::Disk:
      if (radius < 0) throw Error(ErrorCode::InvalidValue, "disk structuring element: negative radius");
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          if (dx * dx + dy * dy <= radius * radius) out.emplace_back(dx, dy);
      break;
  }
  return out;
}

std::vector<float> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidSigma, "gaussian_blur: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  std::vector<float> out(k.size());
  std::transform(k.begin(), k.end(), out.begin(), [sum](double v) { return static_cast<float>(v / sum); });
  return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int r = static_cast<int>(kernel.size() / 2);
  const int w = img.width(), h = img.height();
  std::vector<float> tmp(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += static_cast<double>(kernel[i + r]) * img.clamped(x + i, y);
      tmp[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
    }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int yy = std::clamp(y + i, 0, h - 1);
        acc += static_cast<double>(kernel[i + r]) * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out(x, y) = std::clamp(static_cast<float>(acc), 0.0f, 1.0f);
    }
  return out;
}

GradientField sobel_gradients(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) throw Error(ErrorCode::ImageTooSmall, "sobel_gradients: image must be at least 3x3");
  const int w = img.width(), h = img.height();
  GradientField g{w, h, std::vector<float>(img.size()), std::vector<float>(img.size()), std::vector<Sector>(img.size())};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto p = [&](int dx, int dy) { return static_cast<double>(img.clamped(x + dx, y + dy)); };
      const double gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
      const double gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.magnitude[i] = static_cast<float>(std::sqrt(gx * gx + gy * gy));
      const double theta = std::atan2(gy, gx);
      g.direction[i] = static_cast<float>(theta);
      g.sector[i] = quantize_direction(theta);
    }
  return g;
}

GradientField non_max_suppression(const GradientField& g) {
  GradientField out = g;
  auto at = [&](int x, int y) -> float {
    if (x < 0 || y < 0 || x >= g.width || y >= g.height) return 0.0f;
    return g.mag(x, y);
  };
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const float m = g.mag(x, y);
      if (m == 0.0f) continue;
      const auto [dx, dy] = sector_step(g.sec(x, y));
      if (!(m >= at(x + dx, y + dy) && m >= at(x - dx, y - dy))) out.magnitude[static_cast<std::size_t>(y) * g.width + x] = 0.0f;
    }
  return out;
}

BinaryMask hysteresis_threshold(const GradientField& g, double low, double high) {
  if (!(low >= 0.0 && low < high)) throw Error(ErrorCode::InvalidThresholds, "hysteresis_threshold: require 0 <= low < high");
  const int w = g.width, h = g.height;
  BinaryMask out(w, h);
  std::vector<std::uint32_t> stack;
  for (std::size_t i = 0; i < g.magnitude.size(); ++i)
    if (g.magnitude[i] > 0.0f && g.magnitude[i] >= high) {
      out[i] = 1;
      stack.push_back(static_cast<std::uint32_t>(i));
    }
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    for (int k = 0; k < 8; ++k) {
      const int nx = x + kDx8[k], ny = y + kDy8[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
      if (out[j] || g.magnitude[j] <= 0.0f || g.magnitude[j] < low) continue;
      out[j] = 1;
      stack.push_back(static_cast<std::uint32_t>(j));
    }
  }
  return out;
}

BinaryMask canny(const GrayImage& img, const CannyParams& params) {
  if (!(params.low >= 0.0 && params.low < params.high))
    throw Error(ErrorCode::InvalidThresholds, "canny: require 0 <= low < high");
  const auto thin = non_max_suppression(sobel_gradients(gaussian_blur(img, params.sigma)));
  const double peak = thin.max_magnitude();
  if (peak <= 0.0) return BinaryMask(img.width(), img.height());
  return hysteresis_threshold(thin, params.low * peak, params.high * peak);
}

BinaryMask flood_fill(const BinaryMask& mask, int seed_x, int seed_y, Connectivity conn) {
  if (!mask.in_bounds(seed_x, seed_y)) throw Error(ErrorCode::SeedOutOfBounds, "flood_fill: seed outside the mask");
  const int w = mask.width(), h = mask.height();
  const std::uint8_t target = mask(seed_x, seed_y);
  const int n = conn == Connectivity::Eight ? 8 : 4;
  const int* dxs = conn == Connectivity::Eight ? kDx8 : kDx4;
  const int* dys = conn == Connectivity::Eight ? kDy8 : kDy4;
  BinaryMask out(w, h);
  std::vector<std::pair<int, int>> stack{{seed_x, seed_y}};
  out(seed_x, seed_y) = 1;
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    for (int k = 0; k < n; ++k) {
      const int nx = x + dxs[k], ny = y + dys[k];
      if (!mask.in_bounds(nx, ny) || out(nx, ny) || mask(nx, ny) != target) continue;
      out(nx, ny) = 1;
      stack.emplace_back(nx, ny);
    }
  }
  return out;
}

LabelMap connected_components(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::int32_t> prov(mask.size(), -1);
  UnionFind uf;
  // First pass: provisional labels from the already-visited half of the 8-neighborhood.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!mask[i]) continue;
      std::int32_t label = -1;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx8[k], ny = y + kDy8[k];
        if (nx < 0 || ny < 0 || nx >= w) continue;
        const std::int32_t l = prov[static_cast<std::size_t>(ny) * w + nx];
        if (l < 0) continue;
        if (label < 0) label = l;
        else uf.unite(label, l);
      }
      prov[i] = label >= 0 ? label : uf.make();
    }
  std::vector<std::int32_t> final_of_root(uf.parent.size(), 0);
  std::vector<std::int32_t> labels(mask.size(), 0);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < prov.size(); ++i) {
    if (prov[i] < 0) continue;
    const auto root = uf.find(prov[i]);
    if (final_of_root[root] == 0) final_of_root[root] = ++next;
    labels[i] = final_of_root[root];
  }
  return LabelMap(w, h, std::move(labels), next);
}

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se, int iterations) {
  if (iterations < 1) throw Error(ErrorCode::InvalidValue, "dilate: iterations must be >= 1");
  const auto offs = se.offsets();
  BinaryMask cur = mask;
  for (int it = 0; it < iterations; ++it) {
    BinaryMask next(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x) {
        if (!cur(x, y)) continue;
        for (const auto& [dx, dy] : offs)
          if (next.in_bounds(x + dx, y + dy)) next(x + dx, y + dy) = 1;
      }
    cur = std::move(next);
  }
  return cur;
}

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se, int iterations) {
  if (iterations < 1) throw Error(ErrorCode::InvalidValue, "erode: iterations must be >= 1");
  const auto offs = se.offsets();
  BinaryMask cur = mask;
  for (int it = 0; it < iterations; ++it) {
    BinaryMask next(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x) {
        if (!cur(x, y)) continue;
        bool keep = true;
        for (const auto& [dx, dy] : offs)
          if (cur.in_bounds(x + dx, y + dy) && !cur(x + dx, y + dy)) {
            keep = false;
            break;
          }
        next(x, y) = keep ? 1 : 0;
      }
    cur = std::move(next);
  }
  return cur;
}

std::vector<std::int32_t> dilate_labels(const std::vector<std::int32_t>& labels, int width, int height,
                                        const StructuringElement& se, int iterations) {
  if (labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorCode::ShapeMismatch, "dilate_labels: label buffer does not match geometry");
  const auto offs = se.offsets();
  std::vector<std::int32_t> cur = labels;
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::int32_t> next = cur;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        if (cur[i] != 0) continue;
        std::int32_t best = 0;
        for (const auto& [dx, dy] : offs) {
          const int nx = x - dx, ny = y - dy;
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          const auto l = cur[static_cast<std::size_t>(ny) * width + nx];
          if (l > 0 && (best == 0 || l < best)) best = l;
        }
        next[i] = best;
      }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace bubbleseg::raster
