#include "synth.hpp"

#include <algorithm>
#include <cmath>

namespace fer {

namespace {

void fill_noise(GrayImage& img, Rng& rng, int lo, int hi) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      img.set(x, y, static_cast<uint8_t>(rng.next_int(lo, hi)));
}

void draw_disc(GrayImage& img, Rng& rng, double cx, double cy, double radius) {
  int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
  int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(cx + radius + 1)));
  int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
  int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(cy + radius + 1)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      double dx = x - cx;
      double dy = y - cy;
      if (dx * dx + dy * dy <= radius * radius)
        img.set(x, y, static_cast<uint8_t>(rng.next_int(200, 255)));
    }
}

}  // namespace

GrayImage synth_positive(Rng& rng, int base) {
  GrayImage img(base, base);
  fill_noise(img, rng, 20, 100);
  // one pixel of center jitter keeps the detector tolerant to grid offsets
  double cx = base / 2.0 + rng.next_int(-1, 1);
  double cy = base / 2.0 + rng.next_int(-1, 1);
  double radius = base * (0.26 + rng.next_double() * 0.12);
  draw_disc(img, rng, cx, cy, radius);
  return img;
}

GrayImage synth_negative(Rng& rng, int base) {
  GrayImage img(base, base);
  int variant = rng.next_int(0, 9);
  if (variant < 3) {
    // what the detector actually scans between faces: dark scene noise
    fill_noise(img, rng, 0, 120);
  } else if (variant == 3) {
    fill_noise(img, rng, 0, 255);
  } else if (variant == 4) {
    // smooth gradient: structure without a bright center
    int slope = rng.next_int(4, 12);
    bool horizontal = rng.next_int(0, 1) == 1;
    for (int y = 0; y < base; ++y)
      for (int x = 0; x < base; ++x) {
        int v = (horizontal ? x : y) * slope + rng.next_int(0, 30);
        img.set(x, y, static_cast<uint8_t>(std::clamp(v, 0, 255)));
      }
  } else if (variant < 8) {
    // near miss: the disc pattern displaced off center
    fill_noise(img, rng, 20, 100);
    double offset = base * (0.16 + rng.next_double() * 0.18);
    double angle = rng.next_double() * 6.283185307179586;
    draw_disc(img, rng, base / 2.0 + offset * std::cos(angle),
              base / 2.0 + offset * std::sin(angle),
              base * (0.22 + rng.next_double() * 0.10));
  } else if (variant == 8) {
    // bright ring with a dark core
    fill_noise(img, rng, 20, 100);
    double outer = base * 0.40;
    double inner = base * 0.22;
    double c = base / 2.0;
    for (int y = 0; y < base; ++y)
      for (int x = 0; x < base; ++x) {
        double dx = x - c;
        double dy = y - c;
        double d2 = dx * dx + dy * dy;
        if (d2 <= outer * outer && d2 >= inner * inner)
          img.set(x, y, static_cast<uint8_t>(rng.next_int(200, 255)));
      }
  } else {
    // bright patch in a corner
    fill_noise(img, rng, 20, 100);
    double cx = rng.next_int(0, 1) ? base * 0.15 : base * 0.85;
    double cy = rng.next_int(0, 1) ? base * 0.15 : base * 0.85;
    draw_disc(img, rng, cx, cy, base * 0.22);
  }
  return img;
}

std::vector<GrayImage> synth_positives(int count, int base, uint64_t seed) {
  Rng rng(seed);
  std::vector<GrayImage> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synth_positive(rng, base));
  return out;
}

std::vector<GrayImage> synth_negatives(int count, int base, uint64_t seed) {
  Rng rng(seed);
  std::vector<GrayImage> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synth_negative(rng, base));
  return out;
}

void plant_blob(GrayImage& img, Rng& rng, int cx, int cy, int size) {
  // reproduce the positive-class pattern inside a size x size window
  int x0 = cx - size / 2;
  int y0 = cy - size / 2;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      int ix = x0 + x;
      int iy = y0 + y;
      if (ix >= 0 && iy >= 0 && ix < img.width() && iy < img.height())
        img.set(ix, iy, static_cast<uint8_t>(rng.next_int(20, 100)));
    }
  double radius = size * 0.32;
  draw_disc(img, rng, cx, cy, radius);
}

GrayImage synth_scene(int w, int h, uint64_t seed) {
  Rng rng(seed);
  GrayImage img(w, h);
  fill_noise(img, rng, 0, 120);
  return img;
}

}  // namespace fer
