#pragma once

#include <vector>

#include "image.hpp"
#include "util.hpp"

namespace fer {

// Deterministic synthetic corpus: a bright centered disc on dark noise is the
// positive class, assorted noise and distractor patterns the negative class.
// Fixed seeds make every derived artifact reproducible bit-for-bit.

GrayImage synth_positive(Rng& rng, int base);
GrayImage synth_negative(Rng& rng, int base);

std::vector<GrayImage> synth_positives(int count, int base, uint64_t seed);
std::vector<GrayImage> synth_negatives(int count, int base, uint64_t seed);

// Draws the positive-class disc pattern with its center at (cx, cy) and the
// window side given by size, over whatever the image already contains.
void plant_blob(GrayImage& img, Rng& rng, int cx, int cy, int size);

// Dark noise background for scene frames.
GrayImage synth_scene(int w, int h, uint64_t seed);

}  // namespace fer
