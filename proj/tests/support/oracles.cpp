#include "support/oracles.hpp"

#include <cmath>
#include <deque>

#include "util.hpp"

namespace fer::oracle {

int64_t rect_sum(const GrayImage& img, const Rect& r) {
  int64_t sum = 0;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) sum += img.at(x, y);
  return sum;
}

int64_t rect_sq_sum(const GrayImage& img, const Rect& r) {
  int64_t sum = 0;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) {
      int64_t v = img.at(x, y);
      sum += v * v;
    }
  return sum;
}

WindowStats window_stats(const GrayImage& img, const Rect& r) {
  double area = static_cast<double>(r.area());
  double mean = static_cast<double>(rect_sum(img, r)) / area;
  double var = static_cast<double>(rect_sq_sum(img, r)) / area - mean * mean;
  return {mean, std::sqrt(var > 0.0 ? var : 0.0)};
}

WindowStats window_stats_two_pass(const GrayImage& img, const Rect& r) {
  double area = static_cast<double>(r.area());
  double mean = 0.0;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) mean += img.at(x, y);
  mean /= area;
  double var = 0.0;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) {
      double d = img.at(x, y) - mean;
      var += d * d;
    }
  var /= area;
  return {mean, std::sqrt(var)};
}

double feature_raw(const GrayImage& img, const ScaledFeature& f, int win_x, int win_y) {
  Rect b{f.balance.x + win_x, f.balance.y + win_y, f.balance.w, f.balance.h};
  int64_t s0 = rect_sum(img, b);
  double raw = 0.0;
  for (const auto& t : f.tail) {
    Rect r{t.rect.x + win_x, t.rect.y + win_y, t.rect.w, t.rect.h};
    int64_t s = rect_sum(img, r);
    raw += t.weight * (static_cast<double>(s) -
                       static_cast<double>(t.area * s0) / static_cast<double>(f.balance_area));
  }
  return raw;
}

int64_t count_features(int base_w, int base_h) {
  // (cells_x, cells_y) per kind: 2x1, 1x2, 3x1, 1x3, 2x2.
  const int grids[5][2] = {{2, 1}, {1, 2}, {3, 1}, {1, 3}, {2, 2}};
  int64_t total = 0;
  for (const auto& g : grids)
    for (int fw = g[0]; fw <= base_w; fw += g[0])
      for (int fh = g[1]; fh <= base_h; fh += g[1])
        total += static_cast<int64_t>(base_w - fw + 1) * (base_h - fh + 1);
  return total;
}

WindowDecision evaluate_window_full(const GrayImage& img, const CascadeModel& model,
                                    const Rect& window, double scale) {
  WindowDecision out;
  double area = static_cast<double>(window.area());
  double mean = static_cast<double>(rect_sum(img, window)) / area;
  double var = static_cast<double>(rect_sq_sum(img, window)) / area - mean * mean;
  double stddev = std::sqrt(var > 0.0 ? var : 0.0);
  if (stddev < 1.0) {
    out.low_variance = true;
    return out;
  }
  double inv_norm = 1.0 / (area * stddev);

  bool all_passed = true;
  for (const auto& stage : model.stages) {
    double score = 0.0;
    for (const auto& wc : stage.weak) {
      ScaledFeature sf = scale_feature(wc.feature, scale, window.w, window.h);
      double value = feature_raw(img, sf, window.x, window.y) * inv_norm;
      bool vote = wc.polarity > 0 ? value < wc.threshold : value > wc.threshold;
      if (vote) score += wc.alpha;
    }
    if (score < stage.threshold) all_passed = false;
    out.final_score = score;
  }
  out.accepted = all_passed;
  return out;
}

std::vector<std::vector<int>> similarity_components(const std::vector<Rect>& rects,
                                                    double eps) {
  size_t n = rects.size();
  auto similar = [&](const Rect& a, const Rect& b) {
    double mean_size = (a.w + a.h + b.w + b.h) / 4.0;
    double d = eps * mean_size;
    return std::abs(a.x - b.x) <= d && std::abs(a.y - b.y) <= d &&
           std::abs(a.w - b.w) <= d && std::abs(a.h - b.h) <= d;
  };
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) adj[i][j] = similar(rects[i], rects[j]);

  std::vector<std::vector<int>> components;
  std::vector<bool> seen(n, false);
  for (size_t i = 0; i < n; ++i) {
    if (seen[i]) continue;
    std::vector<int> comp;
    std::deque<size_t> queue{i};
    seen[i] = true;
    while (!queue.empty()) {
      size_t cur = queue.front();
      queue.pop_front();
      comp.push_back(static_cast<int>(cur));
      for (size_t j = 0; j < n; ++j) {
        if (!seen[j] && adj[cur][j]) {
          seen[j] = true;
          queue.push_back(j);
        }
      }
    }
    components.push_back(std::move(comp));
  }
  return components;
}

GrayImage random_image(Rng& rng, int w, int h) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set(x, y, static_cast<uint8_t>(rng.next_int(0, 255)));
  return img;
}

namespace {

// channel-major planes with explicit padding
using Planes = std::vector<std::vector<std::vector<double>>>;  // [c][y][x]

Planes to_planes(const Tensor& t) {
  Planes planes(static_cast<size_t>(t.channels));
  for (int c = 0; c < t.channels; ++c) {
    planes[static_cast<size_t>(c)].resize(static_cast<size_t>(t.height));
    for (int y = 0; y < t.height; ++y) {
      auto& row = planes[static_cast<size_t>(c)][static_cast<size_t>(y)];
      row.resize(static_cast<size_t>(t.width));
      for (int x = 0; x < t.width; ++x) row[static_cast<size_t>(x)] = t.at(c, y, x);
    }
  }
  return planes;
}

Planes pad_planes(const Planes& in, int pad) {
  if (pad == 0) return in;
  Planes out(in.size());
  size_t h = in[0].size();
  size_t w = in[0][0].size();
  for (size_t c = 0; c < in.size(); ++c) {
    out[c].assign(h + 2 * static_cast<size_t>(pad),
                  std::vector<double>(w + 2 * static_cast<size_t>(pad), 0.0));
    for (size_t y = 0; y < h; ++y)
      for (size_t x = 0; x < w; ++x)
        out[c][y + static_cast<size_t>(pad)][x + static_cast<size_t>(pad)] = in[c][y][x];
  }
  return out;
}

}  // namespace

EmotionScores naive_forward(const NetworkModel& model, const Tensor& input) {
  Planes planes = to_planes(input);
  std::vector<double> flat;
  bool is_flat = false;

  for (const auto& layer : model.layers) {
    if (const auto* conv = std::get_if<Conv2d>(&layer)) {
      Planes padded = pad_planes(planes, conv->pad);
      size_t in_h = padded[0].size();
      size_t in_w = padded[0][0].size();
      size_t out_h = (in_h - static_cast<size_t>(conv->kernel_h)) /
                         static_cast<size_t>(conv->stride) + 1;
      size_t out_w = (in_w - static_cast<size_t>(conv->kernel_w)) /
                         static_cast<size_t>(conv->stride) + 1;
      Planes next(static_cast<size_t>(conv->out_channels));
      for (size_t oc = 0; oc < next.size(); ++oc) {
        next[oc].assign(out_h, std::vector<double>(out_w, 0.0));
        for (size_t oy = 0; oy < out_h; ++oy)
          for (size_t ox = 0; ox < out_w; ++ox) {
            double acc = conv->bias[oc];
            for (size_t ic = 0; ic < padded.size(); ++ic)
              for (size_t ky = 0; ky < static_cast<size_t>(conv->kernel_h); ++ky)
                for (size_t kx = 0; kx < static_cast<size_t>(conv->kernel_w); ++kx) {
                  double w = conv->weights[((oc * padded.size() + ic) *
                                                static_cast<size_t>(conv->kernel_h) +
                                            ky) *
                                               static_cast<size_t>(conv->kernel_w) +
                                           kx];
                  acc += w * padded[ic][oy * static_cast<size_t>(conv->stride) + ky]
                                   [ox * static_cast<size_t>(conv->stride) + kx];
                }
            next[oc][oy][ox] = acc;
          }
      }
      planes = std::move(next);
    } else if (std::holds_alternative<Relu>(layer)) {
      if (is_flat) {
        for (auto& v : flat) v = std::max(0.0, v);
      } else {
        for (auto& plane : planes)
          for (auto& row : plane)
            for (auto& v : row) v = std::max(0.0, v);
      }
    } else if (const auto* pool = std::get_if<MaxPool2d>(&layer)) {
      size_t out_h = (planes[0].size() - static_cast<size_t>(pool->kernel_h)) /
                         static_cast<size_t>(pool->stride) + 1;
      size_t out_w = (planes[0][0].size() - static_cast<size_t>(pool->kernel_w)) /
                         static_cast<size_t>(pool->stride) + 1;
      Planes next(planes.size());
      for (size_t c = 0; c < planes.size(); ++c) {
        next[c].assign(out_h, std::vector<double>(out_w, 0.0));
        for (size_t oy = 0; oy < out_h; ++oy)
          for (size_t ox = 0; ox < out_w; ++ox) {
            double best = planes[c][oy * static_cast<size_t>(pool->stride)]
                                [ox * static_cast<size_t>(pool->stride)];
            for (size_t ky = 0; ky < static_cast<size_t>(pool->kernel_h); ++ky)
              for (size_t kx = 0; kx < static_cast<size_t>(pool->kernel_w); ++kx)
                best = std::max(best,
                                planes[c][oy * static_cast<size_t>(pool->stride) + ky]
                                      [ox * static_cast<size_t>(pool->stride) + kx]);
            next[c][oy][ox] = best;
          }
      }
      planes = std::move(next);
    } else if (std::holds_alternative<Flatten>(layer)) {
      flat.clear();
      for (const auto& plane : planes)
        for (const auto& row : plane)
          for (double v : row) flat.push_back(v);
      is_flat = true;
    } else if (const auto* dense = std::get_if<Dense>(&layer)) {
      std::vector<double> next(static_cast<size_t>(dense->out_units), 0.0);
      for (size_t o = 0; o < next.size(); ++o) {
        next[o] = dense->bias[o];
        for (size_t i = 0; i < static_cast<size_t>(dense->in_units); ++i)
          next[o] += dense->weights[o * static_cast<size_t>(dense->in_units) + i] * flat[i];
      }
      flat = std::move(next);
    } else if (std::holds_alternative<Softmax>(layer)) {
      double max_logit = flat[0];
      for (double v : flat) max_logit = std::max(max_logit, v);
      double total = 0.0;
      for (auto& v : flat) {
        v = std::exp(v - max_logit);
        total += v;
      }
      for (auto& v : flat) v /= total;
    }
  }

  EmotionScores scores{};
  for (size_t i = 0; i < scores.size(); ++i) scores[i] = flat[i];
  return scores;
}

}  // namespace fer::oracle
