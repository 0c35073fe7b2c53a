#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bubbleseg/core.hpp"

namespace bubbleseg::mtnet {

/// Shared encoder with two skip-connected decoders (region and boundary).
/// Channels double per level starting at base_channels; the bottleneck sits
/// below the last pooling stage.
struct NetConfig {
  int input_size = 128;
  int encoder_levels = 3;
  int base_channels = 8;
  int kernel_size = 3;

  void validate() const;
  int channels(int level) const { return base_channels << level; }
  bool operator==(const NetConfig&) const = default;
};

struct LossConfig {
  double w0 = 0.1;  // non-boundary pixels
  double w1 = 0.9;  // boundary pixels
  double dice_smooth = 1.0;
  double prob_clip = 1e-6;

  void validate() const;
};

template <typename T>
struct Tensor {
  std::string name;
  std::vector<int> dims;
  std::vector<T> data;

  std::size_t size() const noexcept { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

/// Weights and biases in a fixed order derived from the config.
template <typename T>
struct BasicParams {
  NetConfig config;
  std::vector<Tensor<T>> tensors;

  std::size_t count() const;
  bool all_finite() const;
  void set_zero();
  const Tensor<T>* find(const std::string& name) const;

  template <typename U>
  BasicParams<U> cast() const {
    BasicParams<U> out;
    out.config = config;
    for (const auto& t : tensors) out.tensors.push_back({t.name, t.dims, std::vector<U>(t.data.begin(), t.data.end())});
    return out;
  }

  bool operator==(const BasicParams&) const = default;
};

using NetParams = BasicParams<float>;

/// Zero-filled tensors with the layout of the config.
template <typename T>
BasicParams<T> zero_params(const NetConfig& cfg);

/// He-normal weights, zero biases.
template <typename T>
BasicParams<T> init_params(const NetConfig& cfg, std::uint64_t seed);

std::size_t parameter_count(const NetConfig& cfg);

struct Prediction {
  ProbMap region;
  ProbMap boundary;
};

Prediction forward(const NetParams& params, const GrayImage& img);
Prediction forward(const BasicParams<double>& params, const GrayImage& img);

/// Logistic outputs of both heads before conversion to ProbMap.
template <typename T>
struct RawOutput {
  std::vector<T> region;
  std::vector<T> boundary;
};

template <typename T>
RawOutput<T> forward_raw(const BasicParams<T>& params, const GrayImage& img);

/// Hash of every ReLU on/off state and max-pool choice. Two parameter points
/// with equal patterns lie on the same smooth piece of the network for that
/// input, which is what makes a finite-difference comparison meaningful.
template <typename T>
std::uint64_t activation_pattern(const BasicParams<T>& params, const GrayImage& img);

struct LossBreakdown {
  double dice = 0.0;
  double wbce = 0.0;
  double total() const { return dice + wbce; }
};

/// Total loss dice(region, y1) + wbce(boundary, y2) for one sample and its
/// gradient, scaled by grad_scale and added into grads.
template <typename T>
LossBreakdown backward(const BasicParams<T>& params, const GrayImage& img, const BinaryMask& y1, const BinaryMask& y2,
                       const LossConfig& cfg, BasicParams<T>& grads, double grad_scale = 1.0);

/// Loss only, through the same path as backward.
template <typename T>
LossBreakdown evaluate_loss(const BasicParams<T>& params, const GrayImage& img, const BinaryMask& y1,
                            const BinaryMask& y2, const LossConfig& cfg);

}  // namespace bubbleseg::mtnet
