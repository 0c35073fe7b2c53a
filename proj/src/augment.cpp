#include <algorithm>
#include <cmath>
#include <numbers>

#include "bubbleseg/raster.hpp"
#include "bubbleseg/train.hpp"

namespace bubbleseg::mtnet {

void AugmentConfig::validate() const {
  for (double p : {p_hflip, p_vflip, p_rot90, p_rotate, p_scale, p_blur, p_noise, p_brightness, p_contrast})
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::ConfigInvalid, "augment config: probabilities must be in [0,1]");
  if (!(scale_min > 0.0 && scale_min <= scale_max)) throw Error(ErrorCode::ConfigInvalid, "augment config: invalid scale range");
  if (!(contrast_min > 0.0 && contrast_min <= contrast_max))
    throw Error(ErrorCode::ConfigInvalid, "augment config: invalid contrast range");
  if (max_rotation_deg < 0.0 || blur_sigma_max < 0.0 || noise_sigma_max < 0.0 || brightness_delta < 0.0)
    throw Error(ErrorCode::ConfigInvalid, "augment config: ranges must be non-negative");
}

AugmentConfig AugmentConfig::none() {
  AugmentConfig c;
  c.p_hflip = c.p_vflip = c.p_rot90 = c.p_rotate = c.p_scale = 0.0;
  c.p_blur = c.p_noise = c.p_brightness = c.p_contrast = 0.0;
  return c;
}

AugmentPlan draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto coin = [&](double p) { return u(rng) < p; };
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  AugmentPlan plan;
  // Every draw consumes the same number of variates so later draws do not
  // depend on which augmentations fired.
  const bool h = coin(cfg.p_hflip), v = coin(cfg.p_vflip), q = coin(cfg.p_rot90), r = coin(cfg.p_rotate),
             s = coin(cfg.p_scale), b = coin(cfg.p_blur), n = coin(cfg.p_noise), br = coin(cfg.p_brightness),
             ct = coin(cfg.p_contrast);
  const double quarter = u(rng), angle = range(-1.0, 1.0), scale = range(cfg.scale_min, cfg.scale_max),
               blur = u(rng), noise = u(rng), bright = range(-1.0, 1.0), contrast = range(cfg.contrast_min, cfg.contrast_max);
  const std::uint64_t noise_seed = rng();
  plan.hflip = h;
  plan.vflip = v;
  if (q) plan.quarter_turns = 1 + std::min(2, static_cast<int>(quarter * 3.0));
  if (r) plan.rotation_rad = angle * cfg.max_rotation_deg * std::numbers::pi / 180.0;
  if (s) plan.scale = scale;
  if (b && cfg.blur_sigma_max > 0.0) plan.blur_sigma = std::max(0.1, blur * cfg.blur_sigma_max);
  if (n) {
    plan.noise_sigma = noise * cfg.noise_sigma_max;
    plan.noise_seed = noise_seed;
  }
  if (br) plan.brightness = bright * cfg.brightness_delta;
  if (ct) plan.contrast = contrast;
  return plan;
}

namespace {

// Index permutation for flips and quarter turns; exact on all rasters.
template <typename Tag>
Raster<Tag> permute(const Raster<Tag>& in, bool hflip, bool vflip, int quarter_turns) {
  Raster<Tag> cur = in;
  if (hflip || vflip) {
    Raster<Tag> out(cur.width(), cur.height());
    for (int y = 0; y < cur.height(); ++y)
      for (int x = 0; x < cur.width(); ++x)
        out(x, y) = cur(hflip ? cur.width() - 1 - x : x, vflip ? cur.height() - 1 - y : y);
    cur = std::move(out);
  }
  for (int t = 0; t < quarter_turns; ++t) {
    // 90 degrees clockwise: (x, y) -> (H-1-y, x)
    Raster<Tag> out(cur.height(), cur.width());
    for (int y = 0; y < cur.height(); ++y)
      for (int x = 0; x < cur.width(); ++x) out(cur.height() - 1 - y, x) = cur(x, y);
    cur = std::move(out);
  }
  return cur;
}

double reflect(double c, int n) {
  if (n == 1) return 0.0;
  const double period = 2.0 * (n - 1);
  c = std::fmod(c, period);
  if (c < 0.0) c += period;
  return c > n - 1 ? period - c : c;
}

// Rotation by angle and isotropic scale about the image center, sampled
// backwards with reflected borders.
struct Affine {
  double cos_a, sin_a, inv_scale, cx, cy;

  std::pair<double, double> source(int x, int y) const {
    const double dx = x - cx, dy = y - cy;
    return {cx + inv_scale * (cos_a * dx + sin_a * dy), cy + inv_scale * (-sin_a * dx + cos_a * dy)};
  }
};

GrayImage warp_bilinear(const GrayImage& in, const Affine& a) {
  GrayImage out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      auto [sx, sy] = a.source(x, y);
      sx = reflect(sx, in.width());
      sy = reflect(sy, in.height());
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, in.width() - 1), y1 = std::min(y0 + 1, in.height() - 1);
      const double fx = sx - x0, fy = sy - y0;
      const double v = (1 - fx) * (1 - fy) * in(x0, y0) + fx * (1 - fy) * in(x1, y0) + (1 - fx) * fy * in(x0, y1) +
                       fx * fy * in(x1, y1);
      out(x, y) = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
    }
  return out;
}

BinaryMask warp_nearest(const BinaryMask& in, const Affine& a) {
  BinaryMask out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      auto [sx, sy] = a.source(x, y);
      const int ix = std::clamp(static_cast<int>(std::lround(reflect(sx, in.width()))), 0, in.width() - 1);
      const int iy = std::clamp(static_cast<int>(std::lround(reflect(sy, in.height()))), 0, in.height() - 1);
      out(x, y) = in(ix, iy);
    }
  return out;
}

}  // namespace

Sample apply_augment(const AugmentPlan& plan, const Sample& in) {
  require_same_shape(in.image, in.region, "augment");
  require_same_shape(in.image, in.boundary, "augment");
  Sample out{permute(in.image, plan.hflip, plan.vflip, plan.quarter_turns),
             permute(in.region, plan.hflip, plan.vflip, plan.quarter_turns),
             permute(in.boundary, plan.hflip, plan.vflip, plan.quarter_turns)};
  if (plan.rotation_rad != 0.0 || plan.scale != 1.0) {
    const Affine a{std::cos(plan.rotation_rad), std::sin(plan.rotation_rad), 1.0 / plan.scale,
                   (out.image.width() - 1) / 2.0, (out.image.height() - 1) / 2.0};
    out.image = warp_bilinear(out.image, a);
    out.region = warp_nearest(out.region, a);
    out.boundary = warp_nearest(out.boundary, a);
  }

  if (plan.blur_sigma > 0.0) out.image = raster::gaussian_blur(out.image, plan.blur_sigma);
  if (plan.noise_sigma > 0.0) {
    std::mt19937_64 nrng(plan.noise_seed);
    std::normal_distribution<double> nd(0.0, plan.noise_sigma);
    for (auto& v : out.image.data()) v = std::clamp(static_cast<float>(v + nd(nrng)), 0.0f, 1.0f);
  }
  if (plan.brightness != 0.0 || plan.contrast != 1.0) {
    double mean = 0.0;
    for (auto v : out.image.data()) mean += v;
    mean /= static_cast<double>(std::max<std::size_t>(out.image.size(), 1));
    for (auto& v : out.image.data())
      v = std::clamp(static_cast<float>((v - mean) * plan.contrast + mean + plan.brightness), 0.0f, 1.0f);
  }
  return out;
}

Sample augment(const Sample& in, const AugmentConfig& cfg, std::mt19937_64& rng) {
  return apply_augment(draw_augment(cfg, rng), in);
}

}  // namespace bubbleseg::mtnet
