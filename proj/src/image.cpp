#include "image.hpp"

#include <cmath>
#include <string>

#include "util.hpp"

namespace fer {

GrayImage::GrayImage(int width, int height, uint8_t fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1)
    raise(ErrorCode::invalid_argument, "image dimensions must be >= 1");
  data_.assign(static_cast<size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1)
    raise(ErrorCode::invalid_argument, "image dimensions must be >= 1");
  if (data_.size() != static_cast<size_t>(width) * height)
    raise(ErrorCode::invalid_argument, "pixel buffer size does not match dimensions");
}

RgbImage::RgbImage(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1)
    raise(ErrorCode::invalid_argument, "image dimensions must be >= 1");
  data_.assign(static_cast<size_t>(width) * height * 3, 0);
}

RgbImage::RgbImage(const GrayImage& gray) : RgbImage(gray.width(), gray.height()) {
  const auto& src = gray.data();
  for (size_t i = 0; i < src.size(); ++i) {
    data_[i * 3 + 0] = src[i];
    data_[i * 3 + 1] = src[i];
    data_[i * 3 + 2] = src[i];
  }
}

void RgbImage::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
  size_t i = (static_cast<size_t>(y) * width_ + x) * 3;
  data_[i] = r;
  data_[i + 1] = g;
  data_[i + 2] = b;
}

namespace {

struct PnmReader {
  const uint8_t* data;
  size_t size;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& what, size_t offset) {
    raise(ErrorCode::format, "pnm: " + what + " at byte offset " + std::to_string(offset));
  }

  bool eof() const { return pos >= size; }
  uint8_t peek() const { return data[pos]; }

  static bool is_space(uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  // Whitespace and '#' comment lines between header tokens.
  void skip_separators() {
    while (!eof()) {
      if (is_space(peek())) {
        ++pos;
      } else if (peek() == '#') {
        while (!eof() && peek() != '\n') ++pos;
      } else {
        return;
      }
    }
  }

  unsigned parse_uint(const char* what) {
    skip_separators();
    if (eof()) fail(std::string("truncated header, expected ") + what, pos);
    size_t start = pos;
    if (peek() < '0' || peek() > '9')
      fail(std::string("expected digit for ") + what, pos);
    uint64_t value = 0;
    while (!eof() && peek() >= '0' && peek() <= '9') {
      value = value * 10 + (peek() - '0');
      if (value > 1'000'000'000ull) fail(std::string(what) + " out of range", start);
      ++pos;
    }
    return static_cast<unsigned>(value);
  }
};

}  // namespace

GrayImage decode_image(const uint8_t* bytes, size_t size) {
  PnmReader r{bytes, size};
  if (size < 2) r.fail("missing magic", 0);
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    r.fail("bad magic, expected P5 or P6", 0);
  bool color = bytes[1] == '6';
  r.pos = 2;

  unsigned width = r.parse_uint("width");
  unsigned height = r.parse_uint("height");
  if (width < 1 || height < 1) r.fail("dimensions must be >= 1", 2);
  size_t maxval_offset = r.pos;
  unsigned maxval = r.parse_uint("maxval");
  if (maxval != 255) r.fail("unsupported maxval " + std::to_string(maxval), maxval_offset);

  // Exactly one whitespace byte separates the maxval from the payload.
  if (r.eof()) r.fail("truncated after maxval", r.pos);
  if (!PnmReader::is_space(r.peek())) r.fail("expected single whitespace after maxval", r.pos);
  ++r.pos;

  size_t pixels = static_cast<size_t>(width) * height;
  size_t need = color ? pixels * 3 : pixels;
  size_t have = size - r.pos;
  if (have < need)
    r.fail("truncated payload, need " + std::to_string(need) + " bytes, have " +
               std::to_string(have),
           r.pos);

  std::vector<uint8_t> out(pixels);
  const uint8_t* p = bytes + r.pos;
  if (!color) {
    out.assign(p, p + pixels);
  } else {
    for (size_t i = 0; i < pixels; ++i) {
      double luma = 0.299 * p[i * 3] + 0.587 * p[i * 3 + 1] + 0.114 * p[i * 3 + 2];
      out[i] = static_cast<uint8_t>(std::lround(luma));
    }
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(out));
}

GrayImage decode_image(const std::vector<uint8_t>& bytes) {
  return decode_image(bytes.data(), bytes.size());
}

GrayImage read_image_file(const std::string& path) {
  return decode_image(read_binary_file(path));
}

static void append_header(std::vector<uint8_t>& out, const char* magic, int w, int h) {
  std::string header = std::string(magic) + "\n" + std::to_string(w) + " " +
                       std::to_string(h) + "\n255\n";
  out.insert(out.end(), header.begin(), header.end());
}

std::vector<uint8_t> encode_pgm(const GrayImage& img) {
  std::vector<uint8_t> out;
  out.reserve(img.data().size() + 32);
  append_header(out, "P5", img.width(), img.height());
  out.insert(out.end(), img.data().begin(), img.data().end());
  return out;
}

std::vector<uint8_t> encode_ppm(const RgbImage& img) {
  std::vector<uint8_t> out;
  out.reserve(img.data().size() + 32);
  append_header(out, "P6", img.width(), img.height());
  out.insert(out.end(), img.data().begin(), img.data().end());
  return out;
}

IntegralImage::IntegralImage(const GrayImage& img)
    : width_(img.width()), height_(img.height()) {
  table_.assign(static_cast<size_t>(width_ + 1) * (height_ + 1), 0);
  sq_table_.assign(static_cast<size_t>(width_ + 1) * (height_ + 1), 0);
  for (int y = 1; y <= height_; ++y) {
    int64_t row_sum = 0;
    int64_t row_sq = 0;
    for (int x = 1; x <= width_; ++x) {
      int64_t v = img.at(x - 1, y - 1);
      row_sum += v;
      row_sq += v * v;
      table_[idx(x, y)] = table_[idx(x, y - 1)] + row_sum;
      sq_table_[idx(x, y)] = sq_table_[idx(x, y - 1)] + row_sq;
    }
  }
}

void IntegralImage::check_rect(const Rect& r) const {
  if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > width_ || r.y + r.h > height_)
    raise(ErrorCode::bounds, "rect (" + std::to_string(r.x) + "," + std::to_string(r.y) +
                                 "," + std::to_string(r.w) + "," + std::to_string(r.h) +
                                 ") outside " + std::to_string(width_) + "x" +
                                 std::to_string(height_) + " image");
}

int64_t IntegralImage::rect_sum(const Rect& r) const {
  check_rect(r);
  return table_at(r.x + r.w, r.y + r.h) - table_at(r.x, r.y + r.h) -
         table_at(r.x + r.w, r.y) + table_at(r.x, r.y);
}

int64_t IntegralImage::rect_sq_sum(const Rect& r) const {
  check_rect(r);
  return sq_table_at(r.x + r.w, r.y + r.h) - sq_table_at(r.x, r.y + r.h) -
         sq_table_at(r.x + r.w, r.y) + sq_table_at(r.x, r.y);
}

WindowStats IntegralImage::window_stats(const Rect& r) const {
  double area = static_cast<double>(r.area());
  double mean = static_cast<double>(rect_sum(r)) / area;
  double var = static_cast<double>(rect_sq_sum(r)) / area - mean * mean;
  return {mean, std::sqrt(var > 0.0 ? var : 0.0)};
}

}  // namespace fer
