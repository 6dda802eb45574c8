#include "annotate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

namespace fer {

const std::array<Rgb, kEmotionCount>& emotion_colors() {
  static const std::array<Rgb, kEmotionCount> colors = {{
      {204, 0, 0},     // anger
      {0, 153, 0},     // disgust
      {128, 0, 204},   // fear
      {230, 190, 0},   // happiness
      {40, 90, 200},   // sadness
      {240, 130, 20},  // surprise
      {150, 150, 150}, // neutrality
  }};
  return colors;
}

namespace {

// classic 5x7 uppercase bitmap font, row-major, bit 4 = leftmost pixel
constexpr uint8_t kFont[26][7] = {
    {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11},  // A
    {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e},  // B
    {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e},  // C
    {0x1e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1e},  // D
    {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f},  // E
    {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10},  // F
    {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f},  // G
    {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11},  // H
    {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e},  // I
    {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c},  // J
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // K
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f},  // L
    {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11},  // M
    {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11},  // N
    {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e},  // O
    {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10},  // P
    {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d},  // Q
    {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11},  // R
    {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e},  // S
    {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // T
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e},  // U
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04},  // V
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x1b, 0x11},  // W
    {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11},  // X
    {0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04},  // Y
    {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f},  // Z
};

constexpr int kStripHeight = 8;
constexpr int kBarWidth = 5;
constexpr int kBarGap = 1;

void put(RgbImage& img, int x, int y, Rgb color) {
  if (x >= 0 && y >= 0 && x < img.width() && y < img.height())
    img.set(x, y, color.r, color.g, color.b);
}

void fill_rect(RgbImage& img, int x, int y, int w, int h, Rgb color) {
  for (int yy = y; yy < y + h; ++yy)
    for (int xx = x; xx < x + w; ++xx) put(img, xx, yy, color);
}

void draw_outline(RgbImage& img, const Rect& r, Rgb color) {
  fill_rect(img, r.x, r.y, r.w, 2, color);              // top
  fill_rect(img, r.x, r.y + r.h - 2, r.w, 2, color);    // bottom
  fill_rect(img, r.x, r.y, 2, r.h, color);              // left
  fill_rect(img, r.x + r.w - 2, r.y, 2, r.h, color);    // right
}

void draw_text(RgbImage& img, int x, int y, const char* text, Rgb color) {
  for (const char* p = text; *p; ++p) {
    const uint8_t* glyph = glyph5x7(*p);
    if (glyph) {
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if (glyph[row] & (1 << (4 - col))) put(img, x + col, y + row, color);
    }
    x += 6;
  }
}

void draw_score_strip(RgbImage& img, const Rect& box, const EmotionScores& scores) {
  int x0 = box.x;
  int y0 = box.y + box.h + 2;
  int total_width = kEmotionCount * kBarWidth + (kEmotionCount - 1) * kBarGap;
  fill_rect(img, x0, y0, total_width, kStripHeight, Rgb{40, 40, 40});
  const auto& colors = emotion_colors();
  for (int i = 0; i < kEmotionCount; ++i) {
    int bar_x = x0 + i * (kBarWidth + kBarGap);
    int fill = static_cast<int>(std::lround(scores[static_cast<size_t>(i)] * kStripHeight));
    fill = std::clamp(fill, 0, kStripHeight);
    if (fill > 0)
      fill_rect(img, bar_x, y0 + kStripHeight - fill, kBarWidth, fill,
                colors[static_cast<size_t>(i)]);
  }
}

}  // namespace

const uint8_t* glyph5x7(char c) {
  unsigned char upper = static_cast<unsigned char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper < 'A' || upper > 'Z') return nullptr;
  return kFont[upper - 'A'];
}

RgbImage annotate_frame(const GrayImage& img,
                        const std::vector<ClassifiedDetection>& detections) {
  RgbImage out(img);
  const auto& colors = emotion_colors();
  for (const auto& det : detections) {
    Rgb color = colors[static_cast<size_t>(det.label)];
    draw_outline(out, det.box.rect, color);

    const char* name = emotion_name(det.label);
    int text_y = det.box.rect.y >= 9 ? det.box.rect.y - 9 : det.box.rect.y + 3;
    int text_x = det.box.rect.y >= 9 ? det.box.rect.x : det.box.rect.x + 3;
    draw_text(out, text_x, text_y, name, Rgb{255, 255, 255});

    draw_score_strip(out, det.box.rect, det.scores);
  }
  return out;
}

}  // namespace fer
