#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "image.hpp"

namespace fer {

enum class EmotionLabel {
  anger = 0,
  disgust,
  fear,
  happiness,
  sadness,
  surprise,
  neutrality,
};
inline constexpr int kEmotionCount = 7;
const char* emotion_name(EmotionLabel label);

using EmotionScores = std::array<double, kEmotionCount>;

/// Row-major CHW activation tensor.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  void set(int c, int y, int x, double v) {
    data[(static_cast<size_t>(c) * height + y) * width + x] = v;
  }
};

// Layer parameter blocks. Weight tensors are row-major; conv weights are
// [out][in][kh][kw], dense weights [out][in]. Padding is explicit symmetric
// zero padding.
struct Conv2d {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int pad = 0;
  std::vector<float> weights;
  std::vector<float> bias;
};
struct Relu {};
struct MaxPool2d {
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
};
struct Flatten {};
struct Dense {
  int out_units = 0;
  int in_units = 0;
  std::vector<float> weights;
  std::vector<float> bias;
};
struct Softmax {};

using Layer = std::variant<Conv2d, Relu, MaxPool2d, Flatten, Dense, Softmax>;

const char* layer_kind_name(const Layer& layer);

struct NetworkModel {
  int input_height = 0;
  int input_width = 0;
  int input_channels = 0;
  std::vector<Layer> layers;

  // Shape-composes every layer and requires a final 7-way softmax; throws
  // with the offending layer index.
  void validate() const;
};

// Crop, bilinear-resize to target x target (half-pixel centers, edges
// clamped), scale intensities to [0, 1].
Tensor preprocess_face(const GrayImage& img, const Rect& box, int target);

EmotionScores forward(const NetworkModel& model, const Tensor& input);

// Single-layer primitive, exposed for composition and property tests.
Tensor conv_forward(const Conv2d& conv, const Tensor& input);

std::pair<EmotionLabel, EmotionScores> classify(const GrayImage& img, const Rect& box,
                                                const NetworkModel& model);

// Binary weights format, little-endian: magic "FERW", version, input shape,
// layer records with f32 tensors. Byte layout documented in docs/formats.md.
NetworkModel load_weights(const uint8_t* bytes, size_t size);
NetworkModel load_weights(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> save_weights(const NetworkModel& model);
NetworkModel read_weights_file(const std::string& path);

inline constexpr uint32_t kWeightsFormatVersion = 1;

}  // namespace fer
