#pragma once

#include <array>
#include <vector>

#include "detect.hpp"
#include "net.hpp"

namespace fer {

struct ClassifiedDetection {
  DetectionBox box;
  EmotionLabel label = EmotionLabel::anger;
  EmotionScores scores{};
};

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
};

// Fixed per-class color table, index = canonical label order.
const std::array<Rgb, kEmotionCount>& emotion_colors();

// Deterministic rendering: grayscale lifted to RGB, a 2-px outline per box in
// the label's color, the label name in a 5x7 bitmap font above the box, and a
// seven-bar score strip of fixed geometry below it. Everything is clipped to
// the image; byte-stable output for golden tests.
RgbImage annotate_frame(const GrayImage& img,
                        const std::vector<ClassifiedDetection>& detections);

// 5x7 glyph rows for 'A'..'Z' (bit 4 = leftmost column); '\0' for others.
const uint8_t* glyph5x7(char c);

}  // namespace fer
