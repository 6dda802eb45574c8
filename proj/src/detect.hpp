#pragma once

#include <vector>

#include "cascade.hpp"

namespace fer {

struct ScanParams {
  double scale_factor = 1.1;        // pyramid step, > 1
  double step_fraction = 1.0 / 24;  // stride as a fraction of the window side
  int min_window = 0;               // 0 = cascade base window
  int max_window = 0;               // 0 = image min dimension
  int min_neighbors = 3;
  double overlap_eps = 0.2;
};

struct DetectionBox {
  Rect rect;
  int neighbors = 0;
  double stage_score = 0.0;  // final-stage score; max over merged raw hits
  bool operator==(const DetectionBox&) const = default;
};

struct RawHit {
  Rect rect;
  double score = 0.0;  // final stage score
};

// All accepted windows of the scan grid, before grouping. Windows whose
// intensity stddev is below 1 are rejected without stage evaluation.
std::vector<RawHit> detect_raw(const IntegralImage& ii, const CascadeModel& model,
                               const ScanParams& params);

// Full detection: scan, group similar raw hits, drop sparse clusters, sort
// by (x, y, w, h).
std::vector<DetectionBox> detect_faces(const GrayImage& img, const CascadeModel& model,
                                       const ScanParams& params);

// Partitions rects into transitive similarity classes (two rects are similar
// when each coordinate differs by at most eps times their mean side length),
// averages classes with at least min_neighbors members.
std::vector<DetectionBox> group_detections(const std::vector<Rect>& raw,
                                           int min_neighbors, double overlap_eps);

// Union-find partition indices, exposed for detect_faces and tests.
std::vector<std::vector<int>> similarity_classes(const std::vector<Rect>& rects,
                                                 double eps);

}  // namespace fer
