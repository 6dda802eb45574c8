#include "net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "util.hpp"

namespace fer {

const char* emotion_name(EmotionLabel label) {
  switch (label) {
    case EmotionLabel::anger: return "anger";
    case EmotionLabel::disgust: return "disgust";
    case EmotionLabel::fear: return "fear";
    case EmotionLabel::happiness: return "happiness";
    case EmotionLabel::sadness: return "sadness";
    case EmotionLabel::surprise: return "surprise";
    case EmotionLabel::neutrality: return "neutrality";
  }
  return "unknown";
}

const char* layer_kind_name(const Layer& layer) {
  struct Visitor {
    const char* operator()(const Conv2d&) const { return "conv2d"; }
    const char* operator()(const Relu&) const { return "relu"; }
    const char* operator()(const MaxPool2d&) const { return "maxpool2d"; }
    const char* operator()(const Flatten&) const { return "flatten"; }
    const char* operator()(const Dense&) const { return "dense"; }
    const char* operator()(const Softmax&) const { return "softmax"; }
  };
  return std::visit(Visitor{}, layer);
}

namespace {

// Shape tracker: spatial (c, h, w) or flat units after flatten.
struct Shape {
  bool flat = false;
  int c = 0, h = 0, w = 0;
  int units = 0;
};

[[noreturn]] void shape_fail(size_t index, const std::string& what) {
  raise(ErrorCode::shape, "layer " + std::to_string(index) + ": " + what);
}

Shape apply_shape(const Shape& in, const Layer& layer, size_t index) {
  Shape out = in;
  if (const auto* conv = std::get_if<Conv2d>(&layer)) {
    if (in.flat) shape_fail(index, "conv2d requires a spatial input");
    if (conv->in_channels != in.c)
      shape_fail(index, "conv2d expects " + std::to_string(conv->in_channels) +
                            " channels, input has " + std::to_string(in.c));
    if (conv->stride < 1 || conv->kernel_h < 1 || conv->kernel_w < 1 || conv->pad < 0)
      shape_fail(index, "invalid conv2d geometry");
    int padded_h = in.h + 2 * conv->pad;
    int padded_w = in.w + 2 * conv->pad;
    if (conv->kernel_h > padded_h || conv->kernel_w > padded_w)
      shape_fail(index, "conv2d kernel larger than the padded input");
    out.c = conv->out_channels;
    out.h = (padded_h - conv->kernel_h) / conv->stride + 1;
    out.w = (padded_w - conv->kernel_w) / conv->stride + 1;
    size_t expected = static_cast<size_t>(conv->out_channels) * conv->in_channels *
                      conv->kernel_h * conv->kernel_w;
    if (conv->weights.size() != expected ||
        conv->bias.size() != static_cast<size_t>(conv->out_channels))
      shape_fail(index, "conv2d weight tensor size mismatch");
  } else if (std::holds_alternative<Relu>(layer)) {
    // shape preserved
  } else if (const auto* pool = std::get_if<MaxPool2d>(&layer)) {
    if (in.flat) shape_fail(index, "maxpool2d requires a spatial input");
    if (pool->stride < 1 || pool->kernel_h < 1 || pool->kernel_w < 1)
      shape_fail(index, "invalid maxpool2d geometry");
    if (pool->kernel_h > in.h || pool->kernel_w > in.w)
      shape_fail(index, "maxpool2d kernel larger than the input");
    out.h = (in.h - pool->kernel_h) / pool->stride + 1;
    out.w = (in.w - pool->kernel_w) / pool->stride + 1;
  } else if (std::holds_alternative<Flatten>(layer)) {
    if (in.flat) shape_fail(index, "input is already flat");
    out.flat = true;
    out.units = in.c * in.h * in.w;
  } else if (const auto* dense = std::get_if<Dense>(&layer)) {
    if (!in.flat) shape_fail(index, "dense requires a flattened input");
    if (dense->in_units != in.units)
      shape_fail(index, "dense expects " + std::to_string(dense->in_units) +
                            " inputs, got " + std::to_string(in.units));
    if (dense->weights.size() !=
            static_cast<size_t>(dense->out_units) * dense->in_units ||
        dense->bias.size() != static_cast<size_t>(dense->out_units))
      shape_fail(index, "dense weight tensor size mismatch");
    out.units = dense->out_units;
  } else if (std::holds_alternative<Softmax>(layer)) {
    if (!in.flat) shape_fail(index, "softmax requires a flattened input");
  }
  return out;
}

}  // namespace

void NetworkModel::validate() const {
  if (input_height < 1 || input_width < 1 || input_channels < 1)
    raise(ErrorCode::shape, "invalid input shape");
  if (layers.empty()) raise(ErrorCode::shape, "network has no layers");

  Shape shape{false, input_channels, input_height, input_width, 0};
  for (size_t i = 0; i < layers.size(); ++i) shape = apply_shape(shape, layers[i], i);

  if (!std::holds_alternative<Softmax>(layers.back()))
    raise(ErrorCode::shape, "final layer must be softmax");
  if (!shape.flat || shape.units != kEmotionCount)
    raise(ErrorCode::shape, "network must end with " + std::to_string(kEmotionCount) +
                                " units, got " + std::to_string(shape.units));
}

Tensor preprocess_face(const GrayImage& img, const Rect& box, int target) {
  if (target < 1) raise(ErrorCode::invalid_argument, "target size must be >= 1");
  if (!img.contains(box))
    raise(ErrorCode::invalid_argument, "face box is degenerate or outside the image");

  Tensor out;
  out.channels = 1;
  out.height = target;
  out.width = target;
  out.data.resize(static_cast<size_t>(target) * target);

  double sx = static_cast<double>(box.w) / target;
  double sy = static_cast<double>(box.h) / target;
  for (int dy = 0; dy < target; ++dy) {
    double fy = std::clamp((dy + 0.5) * sy - 0.5, 0.0, box.h - 1.0);
    int y0 = static_cast<int>(std::floor(fy));
    int y1 = std::min(y0 + 1, box.h - 1);
    double wy = fy - y0;
    for (int dx = 0; dx < target; ++dx) {
      double fx = std::clamp((dx + 0.5) * sx - 0.5, 0.0, box.w - 1.0);
      int x0 = static_cast<int>(std::floor(fx));
      int x1 = std::min(x0 + 1, box.w - 1);
      double wx = fx - x0;
      double v = (1.0 - wy) * ((1.0 - wx) * img.at(box.x + x0, box.y + y0) +
                               wx * img.at(box.x + x1, box.y + y0)) +
                 wy * ((1.0 - wx) * img.at(box.x + x0, box.y + y1) +
                       wx * img.at(box.x + x1, box.y + y1));
      out.set(0, dy, dx, v / 255.0);
    }
  }
  return out;
}

namespace {

Tensor apply_conv(const Conv2d& conv, const Tensor& in) {
  Tensor out;
  out.channels = conv.out_channels;
  out.height = (in.height + 2 * conv.pad - conv.kernel_h) / conv.stride + 1;
  out.width = (in.width + 2 * conv.pad - conv.kernel_w) / conv.stride + 1;
  out.data.resize(static_cast<size_t>(out.channels) * out.height * out.width);
  for (int oc = 0; oc < out.channels; ++oc) {
    for (int oy = 0; oy < out.height; ++oy) {
      for (int ox = 0; ox < out.width; ++ox) {
        double acc = conv.bias[static_cast<size_t>(oc)];
        for (int ic = 0; ic < conv.in_channels; ++ic) {
          for (int ky = 0; ky < conv.kernel_h; ++ky) {
            int iy = oy * conv.stride - conv.pad + ky;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < conv.kernel_w; ++kx) {
              int ix = ox * conv.stride - conv.pad + kx;
              if (ix < 0 || ix >= in.width) continue;
              double w = conv.weights[((static_cast<size_t>(oc) * conv.in_channels + ic) *
                                           conv.kernel_h +
                                       ky) *
                                          conv.kernel_w +
                                      kx];
              acc += w * in.at(ic, iy, ix);
            }
          }
        }
        out.set(oc, oy, ox, acc);
      }
    }
  }
  return out;
}

Tensor apply_pool(const MaxPool2d& pool, const Tensor& in) {
  Tensor out;
  out.channels = in.channels;
  out.height = (in.height - pool.kernel_h) / pool.stride + 1;
  out.width = (in.width - pool.kernel_w) / pool.stride + 1;
  out.data.resize(static_cast<size_t>(out.channels) * out.height * out.width);
  for (int c = 0; c < out.channels; ++c)
    for (int oy = 0; oy < out.height; ++oy)
      for (int ox = 0; ox < out.width; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        for (int ky = 0; ky < pool.kernel_h; ++ky)
          for (int kx = 0; kx < pool.kernel_w; ++kx)
            best = std::max(best, in.at(c, oy * pool.stride + ky, ox * pool.stride + kx));
        out.set(c, oy, ox, best);
      }
  return out;
}

std::vector<double> apply_dense(const Dense& dense, const std::vector<double>& in) {
  std::vector<double> out(static_cast<size_t>(dense.out_units));
  for (int o = 0; o < dense.out_units; ++o) {
    double acc = dense.bias[static_cast<size_t>(o)];
    for (int i = 0; i < dense.in_units; ++i)
      acc += dense.weights[static_cast<size_t>(o) * dense.in_units + i] * in[static_cast<size_t>(i)];
    out[static_cast<size_t>(o)] = acc;
  }
  return out;
}

void apply_softmax(std::vector<double>& values) {
  double max_logit = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (auto& v : values) {
    v = std::exp(v - max_logit);
    total += v;
  }
  for (auto& v : values) v /= total;
}

}  // namespace

Tensor conv_forward(const Conv2d& conv, const Tensor& input) {
  if (input.channels != conv.in_channels)
    raise(ErrorCode::shape, "conv2d channel mismatch");
  return apply_conv(conv, input);
}

EmotionScores forward(const NetworkModel& model, const Tensor& input) {
  if (input.channels != model.input_channels || input.height != model.input_height ||
      input.width != model.input_width)
    raise(ErrorCode::shape, "input tensor does not match the declared input shape");
  model.validate();

  Tensor spatial = input;
  std::vector<double> flat;
  bool is_flat = false;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& layer = model.layers[i];
    if (const auto* conv = std::get_if<Conv2d>(&layer)) {
      spatial = apply_conv(*conv, spatial);
    } else if (std::holds_alternative<Relu>(layer)) {
      auto relu = [](double v) { return v > 0.0 ? v : 0.0; };
      if (is_flat)
        for (auto& v : flat) v = relu(v);
      else
        for (auto& v : spatial.data) v = relu(v);
    } else if (const auto* pool = std::get_if<MaxPool2d>(&layer)) {
      spatial = apply_pool(*pool, spatial);
    } else if (std::holds_alternative<Flatten>(layer)) {
      flat = std::move(spatial.data);
      is_flat = true;
    } else if (const auto* dense = std::get_if<Dense>(&layer)) {
      flat = apply_dense(*dense, flat);
    } else if (std::holds_alternative<Softmax>(layer)) {
      apply_softmax(flat);
    }
  }

  EmotionScores scores{};
  for (int i = 0; i < kEmotionCount; ++i) scores[static_cast<size_t>(i)] = flat[static_cast<size_t>(i)];
  return scores;
}

std::pair<EmotionLabel, EmotionScores> classify(const GrayImage& img, const Rect& box,
                                                const NetworkModel& model) {
  if (model.input_height != model.input_width)
    raise(ErrorCode::shape, "classify requires a square network input");
  Tensor input = preprocess_face(img, box, model.input_width);
  EmotionScores scores = forward(model, input);
  // ties break toward the lowest canonical index
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return {static_cast<EmotionLabel>(best), scores};
}

// ---------------------------------------------------------------------------
// weights file

namespace {

enum class LayerTag : uint32_t {
  conv2d = 0,
  relu = 1,
  maxpool2d = 2,
  flatten = 3,
  dense = 4,
  softmax = 5,
};

struct ByteWriter {
  std::vector<uint8_t> bytes;

  void u32(uint32_t v) {
    bytes.push_back(static_cast<uint8_t>(v & 0xff));
    bytes.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    bytes.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    bytes.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void f32_array(const std::vector<float>& values) {
    for (float v : values) f32(v);
  }
};

struct ByteCursor {
  const uint8_t* data;
  size_t size;
  size_t pos = 0;
  size_t layer_index = 0;
  bool in_layers = false;

  [[noreturn]] void fail(const std::string& what) {
    std::string where = in_layers ? " in layer " + std::to_string(layer_index) : "";
    raise(ErrorCode::format, "weights: " + what + where + " at byte offset " +
                                 std::to_string(pos));
  }

  uint32_t u32(const char* what) {
    if (pos + 4 > size) fail(std::string("truncated ") + what);
    uint32_t v = static_cast<uint32_t>(data[pos]) |
                 (static_cast<uint32_t>(data[pos + 1]) << 8) |
                 (static_cast<uint32_t>(data[pos + 2]) << 16) |
                 (static_cast<uint32_t>(data[pos + 3]) << 24);
    pos += 4;
    return v;
  }

  std::vector<float> f32_array(size_t count, const char* what) {
    if (pos + count * 4 > size) {
      size_t have = (size - pos) / 4;
      fail(std::string("tensor data truncated for ") + what + ": declared " +
           std::to_string(count) + " values, payload has " + std::to_string(have));
    }
    std::vector<float> out(count);
    for (size_t i = 0; i < count; ++i) {
      uint32_t v = static_cast<uint32_t>(data[pos]) |
                   (static_cast<uint32_t>(data[pos + 1]) << 8) |
                   (static_cast<uint32_t>(data[pos + 2]) << 16) |
                   (static_cast<uint32_t>(data[pos + 3]) << 24);
      pos += 4;
      out[i] = std::bit_cast<float>(v);
      if (!std::isfinite(out[i]))
        fail(std::string("non-finite weight in ") + what + ", element " + std::to_string(i));
    }
    return out;
  }
};

uint32_t checked_dim(ByteCursor& cursor, const char* what) {
  uint32_t v = cursor.u32(what);
  if (v < 1 || v > 1'000'000) cursor.fail(std::string("implausible ") + what);
  return v;
}

}  // namespace

NetworkModel load_weights(const uint8_t* bytes, size_t size) {
  ByteCursor cursor{bytes, size};
  if (size < 4 || bytes[0] != 'F' || bytes[1] != 'E' || bytes[2] != 'R' || bytes[3] != 'W')
    raise(ErrorCode::format, "weights: bad magic, expected FERW at byte offset 0");
  cursor.pos = 4;
  uint32_t version = cursor.u32("version");
  if (version != kWeightsFormatVersion)
    raise(ErrorCode::format, "weights: unsupported version " + std::to_string(version) +
                                 ", expected " + std::to_string(kWeightsFormatVersion));

  NetworkModel model;
  model.input_height = static_cast<int>(checked_dim(cursor, "input height"));
  model.input_width = static_cast<int>(checked_dim(cursor, "input width"));
  model.input_channels = static_cast<int>(checked_dim(cursor, "input channels"));
  uint32_t layer_count = cursor.u32("layer count");
  if (layer_count == 0 || layer_count > 1024) cursor.fail("implausible layer count");

  cursor.in_layers = true;
  for (uint32_t i = 0; i < layer_count; ++i) {
    cursor.layer_index = i;
    uint32_t tag = cursor.u32("layer tag");
    switch (static_cast<LayerTag>(tag)) {
      case LayerTag::conv2d: {
        Conv2d conv;
        conv.out_channels = static_cast<int>(checked_dim(cursor, "out channels"));
        conv.in_channels = static_cast<int>(checked_dim(cursor, "in channels"));
        conv.kernel_h = static_cast<int>(checked_dim(cursor, "kernel height"));
        conv.kernel_w = static_cast<int>(checked_dim(cursor, "kernel width"));
        conv.stride = static_cast<int>(checked_dim(cursor, "stride"));
        conv.pad = static_cast<int>(cursor.u32("padding"));
        size_t n = static_cast<size_t>(conv.out_channels) * conv.in_channels *
                   conv.kernel_h * conv.kernel_w;
        conv.weights = cursor.f32_array(n, "conv2d weights");
        conv.bias = cursor.f32_array(static_cast<size_t>(conv.out_channels), "conv2d bias");
        model.layers.emplace_back(std::move(conv));
        break;
      }
      case LayerTag::relu:
        model.layers.emplace_back(Relu{});
        break;
      case LayerTag::maxpool2d: {
        MaxPool2d pool;
        pool.kernel_h = static_cast<int>(checked_dim(cursor, "kernel height"));
        pool.kernel_w = static_cast<int>(checked_dim(cursor, "kernel width"));
        pool.stride = static_cast<int>(checked_dim(cursor, "stride"));
        model.layers.emplace_back(pool);
        break;
      }
      case LayerTag::flatten:
        model.layers.emplace_back(Flatten{});
        break;
      case LayerTag::dense: {
        Dense dense;
        dense.out_units = static_cast<int>(checked_dim(cursor, "out units"));
        dense.in_units = static_cast<int>(checked_dim(cursor, "in units"));
        dense.weights = cursor.f32_array(
            static_cast<size_t>(dense.out_units) * dense.in_units, "dense weights");
        dense.bias = cursor.f32_array(static_cast<size_t>(dense.out_units), "dense bias");
        model.layers.emplace_back(std::move(dense));
        break;
      }
      case LayerTag::softmax:
        model.layers.emplace_back(Softmax{});
        break;
      default:
        cursor.fail("unknown layer tag " + std::to_string(tag));
    }
  }
  if (cursor.pos != size) cursor.fail("trailing bytes after the last layer");

  model.validate();
  return model;
}

NetworkModel load_weights(const std::vector<uint8_t>& bytes) {
  return load_weights(bytes.data(), bytes.size());
}

std::vector<uint8_t> save_weights(const NetworkModel& model) {
  model.validate();
  ByteWriter writer;
  writer.bytes = {'F', 'E', 'R', 'W'};
  writer.u32(kWeightsFormatVersion);
  writer.u32(static_cast<uint32_t>(model.input_height));
  writer.u32(static_cast<uint32_t>(model.input_width));
  writer.u32(static_cast<uint32_t>(model.input_channels));
  writer.u32(static_cast<uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    if (const auto* conv = std::get_if<Conv2d>(&layer)) {
      writer.u32(static_cast<uint32_t>(LayerTag::conv2d));
      writer.u32(static_cast<uint32_t>(conv->out_channels));
      writer.u32(static_cast<uint32_t>(conv->in_channels));
      writer.u32(static_cast<uint32_t>(conv->kernel_h));
      writer.u32(static_cast<uint32_t>(conv->kernel_w));
      writer.u32(static_cast<uint32_t>(conv->stride));
      writer.u32(static_cast<uint32_t>(conv->pad));
      writer.f32_array(conv->weights);
      writer.f32_array(conv->bias);
    } else if (std::holds_alternative<Relu>(layer)) {
      writer.u32(static_cast<uint32_t>(LayerTag::relu));
    } else if (const auto* pool = std::get_if<MaxPool2d>(&layer)) {
      writer.u32(static_cast<uint32_t>(LayerTag::maxpool2d));
      writer.u32(static_cast<uint32_t>(pool->kernel_h));
      writer.u32(static_cast<uint32_t>(pool->kernel_w));
      writer.u32(static_cast<uint32_t>(pool->stride));
    } else if (std::holds_alternative<Flatten>(layer)) {
      writer.u32(static_cast<uint32_t>(LayerTag::flatten));
    } else if (const auto* dense = std::get_if<Dense>(&layer)) {
      writer.u32(static_cast<uint32_t>(LayerTag::dense));
      writer.u32(static_cast<uint32_t>(dense->out_units));
      writer.u32(static_cast<uint32_t>(dense->in_units));
      writer.f32_array(dense->weights);
      writer.f32_array(dense->bias);
    } else if (std::holds_alternative<Softmax>(layer)) {
      writer.u32(static_cast<uint32_t>(LayerTag::softmax));
    }
  }
  return std::move(writer.bytes);
}

NetworkModel read_weights_file(const std::string& path) {
  return load_weights(read_binary_file(path));
}

}  // namespace fer
