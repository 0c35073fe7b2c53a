#include "bubbleseg/loss.hpp"

#include <algorithm>
#include <cmath>

namespace bubbleseg::mtnet {

void LossConfig::validate() const {
  if (!(w0 > 0.0 && w1 > 0.0)) throw Error(ErrorCode::ConfigInvalid, "loss config: w0 and w1 must be positive");
  if (!(dice_smooth > 0.0)) throw Error(ErrorCode::ConfigInvalid, "loss config: dice_smooth must be positive");
  if (!(prob_clip > 0.0 && prob_clip < 0.5)) throw Error(ErrorCode::ConfigInvalid, "loss config: prob_clip must be in (0, 0.5)");
}

template <typename T>
LossResult<T> dice_loss(std::span<const std::uint8_t> y, std::span<const T> p, const LossConfig& cfg) {
  if (y.size() != p.size()) throw Error(ErrorCode::ShapeMismatch, "dice_loss: target and prediction sizes differ");
  double inter = 0.0, sum_y = 0.0, sum_p = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    inter += y[i] * static_cast<double>(p[i]);
    sum_y += y[i];
    sum_p += static_cast<double>(p[i]);
  }
  const double s = cfg.dice_smooth;
  const double num = 2.0 * inter + s;
  const double den = sum_y + sum_p + s;
  LossResult<T> r;
  r.loss = 1.0 - num / den;
  r.grad.resize(y.size());
  const double inv = 1.0 / (den * den);
  for (std::size_t i = 0; i < y.size(); ++i) r.grad[i] = static_cast<T>(-(2.0 * y[i] * den - num) * inv);
  return r;
}

template <typename T>
LossResult<T> wbce_loss(std::span<const std::uint8_t> y, std::span<const T> p, const LossConfig& cfg) {
  if (y.size() != p.size()) throw Error(ErrorCode::ShapeMismatch, "wbce_loss: target and prediction sizes differ");
  if (y.empty()) return {};
  const double eps = cfg.prob_clip;
  const double n = static_cast<double>(y.size());
  double acc = 0.0;
  LossResult<T> r;
  r.grad.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double raw = static_cast<double>(p[i]);
    const double q = std::clamp(raw, eps, 1.0 - eps);
    const bool clipped = raw < eps || raw > 1.0 - eps;
    if (y[i]) {
      acc -= cfg.w1 * std::log(q);
      r.grad[i] = clipped ? T(0) : static_cast<T>(-cfg.w1 / (q * n));
    } else {
      acc -= cfg.w0 * std::log(1.0 - q);
      r.grad[i] = clipped ? T(0) : static_cast<T>(cfg.w0 / ((1.0 - q) * n));
    }
  }
  r.loss = acc / n;
  return r;
}

template LossResult<float> dice_loss(std::span<const std::uint8_t>, std::span<const float>, const LossConfig&);
template LossResult<double> dice_loss(std::span<const std::uint8_t>, std::span<const double>, const LossConfig&);
template LossResult<float> wbce_loss(std::span<const std::uint8_t>, std::span<const float>, const LossConfig&);
template LossResult<double> wbce_loss(std::span<const std::uint8_t>, std::span<const double>, const LossConfig&);

namespace {
std::vector<double> widen(const ProbMap& p) { return {p.data().begin(), p.data().end()}; }
}  // namespace

LossResult<double> dice_loss(const BinaryMask& y, const ProbMap& p, const LossConfig& cfg) {
  require_same_shape(y, p, "dice_loss");
  const auto wide = widen(p);
  return dice_loss<double>(y.data(), wide, cfg);
}

LossResult<double> wbce_loss(const BinaryMask& y, const ProbMap& p, const LossConfig& cfg) {
  require_same_shape(y, p, "wbce_loss");
  const auto wide = widen(p);
  return wbce_loss<double>(y.data(), wide, cfg);
}

}  // namespace bubbleseg::mtnet
