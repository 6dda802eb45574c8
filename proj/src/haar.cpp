#include "haar.hpp"

#include <cmath>
#include <string>

namespace fer {

const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::two_horizontal: return "two-horizontal";
    case FeatureKind::two_vertical: return "two-vertical";
    case FeatureKind::three_horizontal: return "three-horizontal";
    case FeatureKind::three_vertical: return "three-vertical";
    case FeatureKind::four_diagonal: return "four-diagonal";
  }
  return "unknown";
}

bool feature_kind_from_name(const std::string& name, FeatureKind& out) {
  for (FeatureKind k : {FeatureKind::two_horizontal, FeatureKind::two_vertical,
                        FeatureKind::three_horizontal, FeatureKind::three_vertical,
                        FeatureKind::four_diagonal}) {
    if (name == feature_kind_name(k)) {
      out = k;
      return true;
    }
  }
  return false;
}

HaarFeature make_feature(FeatureKind kind, int x, int y, int cw, int ch) {
  HaarFeature f;
  f.kind = kind;
  switch (kind) {
    case FeatureKind::two_horizontal:
      // left minus right
      f.rects = {{{x, y, cw, ch}, 1.0}, {{x + cw, y, cw, ch}, -1.0}};
      break;
    case FeatureKind::two_vertical:
      // top minus bottom
      f.rects = {{{x, y, cw, ch}, 1.0}, {{x, y + ch, cw, ch}, -1.0}};
      break;
    case FeatureKind::three_horizontal:
      // whole minus 3x middle: outer bands minus twice the center band
      f.rects = {{{x, y, 3 * cw, ch}, 1.0}, {{x + cw, y, cw, ch}, -3.0}};
      break;
    case FeatureKind::three_vertical:
      f.rects = {{{x, y, cw, 3 * ch}, 1.0}, {{x, y + ch, cw, ch}, -3.0}};
      break;
    case FeatureKind::four_diagonal:
      // whole minus 2x top-right minus 2x bottom-left: (TL+BR) - (TR+BL)
      f.rects = {{{x, y, 2 * cw, 2 * ch}, 1.0},
                 {{x + cw, y, cw, ch}, -2.0},
                 {{x, y + ch, cw, ch}, -2.0}};
      break;
  }
  return f;
}

std::vector<HaarFeature> enumerate_features(int base_w, int base_h) {
  if (base_w < 4 || base_h < 4)
    raise(ErrorCode::invalid_argument, "base window must be at least 4x4");

  struct KindCells {
    FeatureKind kind;
    int sx, sy;  // cells per axis
  };
  static const KindCells kinds[] = {
      {FeatureKind::two_horizontal, 2, 1}, {FeatureKind::two_vertical, 1, 2},
      {FeatureKind::three_horizontal, 3, 1}, {FeatureKind::three_vertical, 1, 3},
      {FeatureKind::four_diagonal, 2, 2},
  };

  std::vector<HaarFeature> out;
  for (const auto& k : kinds) {
    for (int ch = 1; ch * k.sy <= base_h; ++ch) {
      for (int cw = 1; cw * k.sx <= base_w; ++cw) {
        int fw = cw * k.sx;
        int fh = ch * k.sy;
        for (int y = 0; y + fh <= base_h; ++y)
          for (int x = 0; x + fw <= base_w; ++x)
            out.push_back(make_feature(k.kind, x, y, cw, ch));
      }
    }
  }
  return out;
}

ScaledFeature scale_feature(const HaarFeature& f, double scale, int win_w, int win_h) {
  if (f.rects.size() < 2 || f.rects.size() > 3)
    raise(ErrorCode::invalid_argument, "feature must have 2 or 3 rects");
  if (scale <= 0.0) raise(ErrorCode::invalid_argument, "scale must be positive");

  ScaledFeature out;
  bool first = true;
  for (const auto& wr : f.rects) {
    Rect r;
    r.x = static_cast<int>(std::lround(wr.rect.x * scale));
    r.y = static_cast<int>(std::lround(wr.rect.y * scale));
    r.w = static_cast<int>(std::lround(wr.rect.w * scale));
    r.h = static_cast<int>(std::lround(wr.rect.h * scale));
    if (r.w < 1) r.w = 1;
    if (r.h < 1) r.h = 1;
    if (r.x < 0) r.x = 0;
    if (r.y < 0) r.y = 0;
    // Rounding can push an edge one pixel past the window; clamp the extent.
    if (r.x + r.w > win_w) r.w = win_w - r.x;
    if (r.y + r.h > win_h) r.h = win_h - r.y;
    if (r.w < 1 || r.h < 1)
      raise(ErrorCode::bounds, "scaled feature rect collapses outside window");
    if (first) {
      out.balance = r;
      out.balance_area = r.area();
      first = false;
    } else {
      out.tail.push_back({r, wr.weight, r.area()});
    }
  }
  return out;
}

double eval_scaled_raw(const ScaledFeature& f, const IntegralImage& ii, int win_x,
                       int win_y) {
  Rect b{f.balance.x + win_x, f.balance.y + win_y, f.balance.w, f.balance.h};
  int64_t s0 = ii.rect_sum(b);
  double raw = 0.0;
  for (const auto& t : f.tail) {
    Rect r{t.rect.x + win_x, t.rect.y + win_y, t.rect.w, t.rect.h};
    int64_t s = ii.rect_sum(r);
    raw += t.weight * (static_cast<double>(s) -
                       static_cast<double>(t.area * s0) / static_cast<double>(f.balance_area));
  }
  return raw;
}

double eval_feature(const HaarFeature& f, const IntegralImage& ii, const Rect& window,
                    double scale, double inv_norm) {
  if (inv_norm <= 0.0) raise(ErrorCode::invalid_argument, "inv_norm must be positive");
  ScaledFeature sf = scale_feature(f, scale, window.w, window.h);
  return eval_scaled_raw(sf, ii, window.x, window.y) * inv_norm;
}

}  // namespace fer
