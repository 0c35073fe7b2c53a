#pragma once

#include <span>
#include <vector>

#include "bubbleseg/core.hpp"
#include "bubbleseg/mtnet.hpp"

namespace bubbleseg::mtnet {

template <typename T>
struct LossResult {
  double loss = 0.0;
  std::vector<T> grad;  // d loss / d p, per pixel
};

/// Soft Dice over whole maps: 1 - (2*sum(y*p) + s) / (sum(y) + sum(p) + s).
template <typename T>
LossResult<T> dice_loss(std::span<const std::uint8_t> y, std::span<const T> p, const LossConfig& cfg);

/// Weighted binary cross-entropy averaged over pixels, with p clipped to
/// [eps, 1-eps]; the gradient is zero where clipping is active.
template <typename T>
LossResult<T> wbce_loss(std::span<const std::uint8_t> y, std::span<const T> p, const LossConfig& cfg);

LossResult<double> dice_loss(const BinaryMask& y, const ProbMap& p, const LossConfig& cfg);
LossResult<double> wbce_loss(const BinaryMask& y, const ProbMap& p, const LossConfig& cfg);

}  // namespace bubbleseg::mtnet
