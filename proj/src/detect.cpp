#include "detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fer {

namespace {

void validate_params(const ScanParams& params) {
  if (params.scale_factor <= 1.0)
    raise(ErrorCode::invalid_argument, "scale_factor must be > 1");
  if (params.step_fraction <= 0.0 || params.step_fraction > 1.0)
    raise(ErrorCode::invalid_argument, "step_fraction must be in (0, 1]");
  if (params.min_neighbors < 1)
    raise(ErrorCode::invalid_argument, "min_neighbors must be >= 1");
  if (params.overlap_eps < 0.0)
    raise(ErrorCode::invalid_argument, "overlap_eps must be >= 0");
}

}  // namespace

std::vector<RawHit> detect_raw(const IntegralImage& ii, const CascadeModel& model,
                               const ScanParams& params) {
  validate_params(params);
  int min_window = params.min_window > 0 ? params.min_window : model.base_width;
  if (min_window < model.base_width)
    raise(ErrorCode::invalid_argument, "min_window smaller than the cascade base window");
  int image_cap = std::min(ii.width(), ii.height());
  int max_window = params.max_window > 0 ? std::min(params.max_window, image_cap) : image_cap;

  std::vector<RawHit> hits;
  int prev_w = 0;
  int prev_h = 0;
  for (double scale = static_cast<double>(min_window) / model.base_width;;
       scale *= params.scale_factor) {
    int win_w = static_cast<int>(std::lround(model.base_width * scale));
    int win_h = static_cast<int>(std::lround(model.base_height * scale));
    if (win_w > max_window || win_h > std::min(ii.height(), max_window)) break;
    if (win_w > ii.width() || win_h > ii.height()) break;
    if (win_w == prev_w && win_h == prev_h) continue;  // rounding collision
    prev_w = win_w;
    prev_h = win_h;

    auto stages = scale_cascade(model, scale, win_w, win_h);
    int stride_x = std::max(1, static_cast<int>(std::lround(params.step_fraction * win_w)));
    int stride_y = std::max(1, static_cast<int>(std::lround(params.step_fraction * win_h)));
    double area = static_cast<double>(win_w) * win_h;

    for (int y = 0; y + win_h <= ii.height(); y += stride_y) {
      for (int x = 0; x + win_w <= ii.width(); x += stride_x) {
        Rect window{x, y, win_w, win_h};
        auto stats = ii.window_stats(window);
        if (stats.stddev < 1.0) continue;  // a face needs contrast
        double inv_norm = 1.0 / (area * stats.stddev);

        bool rejected = false;
        double score = 0.0;
        for (const auto& stage : stages) {
          auto eval = eval_scaled_stage(stage, ii, x, y, inv_norm);
          score = eval.score;
          if (!eval.passed) {
            rejected = true;
            break;
          }
        }
        if (!rejected) hits.push_back({window, score});
      }
    }
  }
  return hits;
}

std::vector<std::vector<int>> similarity_classes(const std::vector<Rect>& rects,
                                                 double eps) {
  size_t n = rects.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  auto similar = [&](const Rect& a, const Rect& b) {
    double mean_size = (a.w + a.h + b.w + b.h) / 4.0;
    double d = eps * mean_size;
    return std::abs(a.x - b.x) <= d && std::abs(a.y - b.y) <= d &&
           std::abs(a.w - b.w) <= d && std::abs(a.h - b.h) <= d;
  };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (similar(rects[i], rects[j])) {
        int ri = find(static_cast<int>(i));
        int rj = find(static_cast<int>(j));
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }

  std::vector<std::vector<int>> classes;
  std::vector<int> class_of(n, -1);
  for (size_t i = 0; i < n; ++i) {
    int root = find(static_cast<int>(i));
    if (class_of[root] < 0) {
      class_of[root] = static_cast<int>(classes.size());
      classes.emplace_back();
    }
    classes[static_cast<size_t>(class_of[root])].push_back(static_cast<int>(i));
  }
  return classes;
}

namespace {

Rect average_rect(const std::vector<Rect>& rects, const std::vector<int>& members) {
  double x = 0, y = 0, w = 0, h = 0;
  for (int i : members) {
    x += rects[static_cast<size_t>(i)].x;
    y += rects[static_cast<size_t>(i)].y;
    w += rects[static_cast<size_t>(i)].w;
    h += rects[static_cast<size_t>(i)].h;
  }
  double n = static_cast<double>(members.size());
  return Rect{static_cast<int>(std::lround(x / n)), static_cast<int>(std::lround(y / n)),
              static_cast<int>(std::lround(w / n)), static_cast<int>(std::lround(h / n))};
}

void sort_boxes(std::vector<DetectionBox>& boxes) {
  std::sort(boxes.begin(), boxes.end(), [](const DetectionBox& a, const DetectionBox& b) {
    if (a.rect.x != b.rect.x) return a.rect.x < b.rect.x;
    if (a.rect.y != b.rect.y) return a.rect.y < b.rect.y;
    if (a.rect.w != b.rect.w) return a.rect.w < b.rect.w;
    return a.rect.h < b.rect.h;
  });
}

}  // namespace

std::vector<DetectionBox> group_detections(const std::vector<Rect>& raw,
                                           int min_neighbors, double overlap_eps) {
  std::vector<DetectionBox> out;
  for (const auto& members : similarity_classes(raw, overlap_eps)) {
    if (static_cast<int>(members.size()) < min_neighbors) continue;
    out.push_back({average_rect(raw, members), static_cast<int>(members.size()), 0.0});
  }
  sort_boxes(out);
  return out;
}

std::vector<DetectionBox> detect_faces(const GrayImage& img, const CascadeModel& model,
                                       const ScanParams& params) {
  validate_params(params);
  int min_window = params.min_window > 0 ? params.min_window : model.base_width;
  if (img.width() < min_window || img.height() < min_window) return {};

  IntegralImage ii(img);
  auto hits = detect_raw(ii, model, params);

  std::vector<Rect> rects;
  rects.reserve(hits.size());
  for (const auto& hit : hits) rects.push_back(hit.rect);

  std::vector<DetectionBox> out;
  for (const auto& members : similarity_classes(rects, params.overlap_eps)) {
    if (static_cast<int>(members.size()) < params.min_neighbors) continue;
    DetectionBox box;
    box.rect = average_rect(rects, members);
    box.neighbors = static_cast<int>(members.size());
    double best = -std::numeric_limits<double>::infinity();
    for (int i : members) best = std::max(best, hits[static_cast<size_t>(i)].score);
    box.stage_score = best;
    // rounding the average can push an edge one pixel out
    box.rect.x = std::clamp(box.rect.x, 0, img.width() - 1);
    box.rect.y = std::clamp(box.rect.y, 0, img.height() - 1);
    box.rect.w = std::min(box.rect.w, img.width() - box.rect.x);
    box.rect.h = std::min(box.rect.h, img.height() - box.rect.y);
    out.push_back(box);
  }
  sort_boxes(out);
  return out;
}

}  // namespace fer
