#pragma once

#include <vector>

#include "image.hpp"

namespace fer {

enum class FeatureKind {
  two_horizontal,
  two_vertical,
  three_horizontal,
  three_vertical,
  four_diagonal,
};

const char* feature_kind_name(FeatureKind kind);
bool feature_kind_from_name(const std::string& name, FeatureKind& out);

struct WeightedRect {
  Rect rect;
  double weight = 0.0;
  bool operator==(const WeightedRect&) const = default;
};

/// A signed weighted sum of rectangle sums inside a base window. rects[0] is
/// the balance rect: its weight is chosen so that sum(weight_i * area_i) = 0,
/// which makes every uniform window evaluate to exactly 0.
struct HaarFeature {
  FeatureKind kind = FeatureKind::two_horizontal;
  std::vector<WeightedRect> rects;  // 2 or 3 entries
  bool operator==(const HaarFeature&) const = default;
};

// Feature built from a cell grid at (x, y) with cell size cell_w x cell_h.
HaarFeature make_feature(FeatureKind kind, int x, int y, int cell_w, int cell_h);

// Every position and size of the five kinds inside the base window, in a
// fixed deterministic order. 24x24 yields 162,336 features.
std::vector<HaarFeature> enumerate_features(int base_w, int base_h);

/// A feature mapped to a concrete window size. Coordinates are window-local;
/// rounding the scaled rects changes their areas, so the balance rect's
/// weight is re-derived from the tail rects to keep the zero-sum invariant.
struct ScaledFeature {
  Rect balance;            // rects[0] after scaling
  int64_t balance_area = 0;
  struct Tail {
    Rect rect;
    double weight = 0.0;
    int64_t area = 0;
  };
  std::vector<Tail> tail;  // rects[1..] with their original weights
};

ScaledFeature scale_feature(const HaarFeature& f, double scale, int win_w, int win_h);

// Raw weighted sum for a window whose top-left corner is (win_x, win_y).
// Evaluates sum_i w_i * (S_i - area_i * S_0 / area_0), which is exactly zero
// on uniform windows regardless of rounding.
double eval_scaled_raw(const ScaledFeature& f, const IntegralImage& ii, int win_x,
                       int win_y);

// Spec'd entry point: scale + evaluate + normalize in one call. inv_norm is
// 1 / (window_area * window_std) and must be positive.
double eval_feature(const HaarFeature& f, const IntegralImage& ii, const Rect& window,
                    double scale, double inv_norm);

}  // namespace fer
