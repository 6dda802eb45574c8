#pragma once

#include <cstdint>
#include <vector>

#include "error.hpp"

namespace fer {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int64_t area() const { return static_cast<int64_t>(w) * h; }
  bool operator==(const Rect&) const = default;
};

/// 8-bit grayscale raster, row-major.
class GrayImage {
public:
  GrayImage() = default;
  GrayImage(int width, int height, uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  uint8_t at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  void set(int x, int y, uint8_t v) { data_[static_cast<size_t>(y) * width_ + x] = v; }
  const std::vector<uint8_t>& data() const { return data_; }
  bool contains(const Rect& r) const {
    return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 && r.x + r.w <= width_ &&
           r.y + r.h <= height_;
  }
  bool operator==(const GrayImage&) const = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> data_;
};

/// Interleaved 8-bit RGB raster, row-major.
class RgbImage {
public:
  RgbImage() = default;
  RgbImage(int width, int height);
  explicit RgbImage(const GrayImage& gray);  // replicate the gray channel

  int width() const { return width_; }
  int height() const { return height_; }
  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
  const uint8_t* at(int x, int y) const {
    return data_.data() + (static_cast<size_t>(y) * width_ + x) * 3;
  }
  const std::vector<uint8_t>& data() const { return data_; }
  bool operator==(const RgbImage&) const = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> data_;
};

// Binary PGM (P5) / PPM (P6), maxval 255. PPM input is reduced to grayscale
// with BT.601 luma weights (0.299, 0.587, 0.114), rounded to nearest.
GrayImage decode_image(const uint8_t* bytes, size_t size);
GrayImage decode_image(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> encode_pgm(const GrayImage& img);
std::vector<uint8_t> encode_ppm(const RgbImage& img);
GrayImage read_image_file(const std::string& path);

struct WindowStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Summed-area tables of intensities and squared intensities. The table is
/// (width+1) x (height+1); entry (x, y) holds the sum of all pixels strictly
/// above and left of (x, y). 64-bit accumulators keep sums exact up to a
/// 4096 x 4096 all-255 image and beyond.
class IntegralImage {
public:
  explicit IntegralImage(const GrayImage& img);

  int width() const { return width_; }
  int height() const { return height_; }

  int64_t table_at(int x, int y) const { return table_[idx(x, y)]; }
  int64_t sq_table_at(int x, int y) const { return sq_table_[idx(x, y)]; }

  // Four lookups each.
  int64_t rect_sum(const Rect& r) const;
  int64_t rect_sq_sum(const Rect& r) const;

  WindowStats window_stats(const Rect& r) const;

private:
  size_t idx(int x, int y) const { return static_cast<size_t>(y) * (width_ + 1) + x; }
  void check_rect(const Rect& r) const;

  int width_ = 0;
  int height_ = 0;
  std::vector<int64_t> table_;
  std::vector<int64_t> sq_table_;
};

}  // namespace fer
