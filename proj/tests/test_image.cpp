#include <cstring>

#include "doctest.h"
#include "image.hpp"
#include "support/oracles.hpp"
#include "util.hpp"

using namespace fer;

namespace {

std::vector<uint8_t> bytes_of(const std::string& header, std::initializer_list<uint8_t> payload) {
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

}  // namespace

TEST_CASE("decode P5 passes grayscale through") {
  auto img = decode_image(bytes_of("P5\n2 2\n255\n", {0, 255, 255, 0}));
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  CHECK(img.data() == std::vector<uint8_t>{0, 255, 255, 0});
}

TEST_CASE("decode P6 white maps to 255") {
  auto img = decode_image(bytes_of("P6\n1 1\n255\n", {255, 255, 255}));
  CHECK(img.width() == 1);
  CHECK(img.data() == std::vector<uint8_t>{255});
}

TEST_CASE("decode P6 luma weights") {
  // 0.299*100 + 0.587*200 + 0.114*50 = 153.0
  auto img = decode_image(bytes_of("P6\n1 1\n255\n", {100, 200, 50}));
  CHECK(img.data() == std::vector<uint8_t>{153});
}

TEST_CASE("decode header comments are skipped") {
  auto img = decode_image(bytes_of("P5\n# a comment\n1 1\n255\n", {42}));
  CHECK(img.data() == std::vector<uint8_t>{42});
}

TEST_CASE("decode errors carry byte offsets") {
  auto expect_error = [](const std::vector<uint8_t>& bytes, const char* fragment) {
    try {
      decode_image(bytes);
      FAIL_CHECK("expected format error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::format);
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
      CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
  };
  expect_error(bytes_of("P7\n1 1\n255\n", {0}), "bad magic");
  expect_error(bytes_of("P5\n2 2\n255\n", {0, 0, 0}), "truncated payload");
  expect_error(bytes_of("P5\n1 1\n65535\n", {0, 0}), "maxval 65535");
  expect_error(bytes_of("P5\n1 x\n255\n", {0}), "height");
}

TEST_CASE("encode P5 exact bytes") {
  auto bytes = encode_pgm(GrayImage(1, 1, std::vector<uint8_t>{0}));
  const char expected[] = "P5\n1 1\n255\n";
  REQUIRE(bytes.size() == sizeof(expected) - 1 + 1);
  CHECK(std::memcmp(bytes.data(), expected, sizeof(expected) - 1) == 0);
  CHECK(bytes.back() == 0);
}

TEST_CASE("decode after encode is the identity on grayscale") {
  Rng rng(101);
  for (int i = 0; i < 100; ++i) {
    int w = rng.next_int(1, 32);
    int h = rng.next_int(1, 32);
    GrayImage img = oracle::random_image(rng, w, h);
    CHECK(decode_image(encode_pgm(img)) == img);
  }
}

TEST_CASE("encode annotated RGB raster as P6") {
  RgbImage img(3, 2);
  img.set(0, 0, 10, 20, 30);
  img.set(2, 1, 1, 2, 3);
  auto bytes = encode_ppm(img);
  const char expected[] = "P6\n3 2\n255\n";
  CHECK(std::memcmp(bytes.data(), expected, sizeof(expected) - 1) == 0);
  CHECK(bytes.size() == sizeof(expected) - 1 + 3u * 2u * 3u);
  // decoding it yields the luma reduction, dimension-consistent
  auto gray = decode_image(bytes);
  CHECK(gray.width() == 3);
  CHECK(gray.height() == 2);
}

TEST_CASE("integral image totals") {
  GrayImage ones(2, 2, std::vector<uint8_t>{1, 1, 1, 1});
  IntegralImage ii(ones);
  CHECK(ii.table_at(2, 2) == 4);
  CHECK(ii.rect_sum({0, 0, 2, 2}) == 4);

  Rng rng(7);
  GrayImage img = oracle::random_image(rng, 13, 9);
  IntegralImage full(img);
  CHECK(full.rect_sum({0, 0, 13, 9}) == oracle::rect_sum(img, {0, 0, 13, 9}));
}

TEST_CASE("integral first row and column are zero and tables are monotone") {
  Rng rng(8);
  GrayImage img = oracle::random_image(rng, 17, 11);
  IntegralImage ii(img);
  for (int x = 0; x <= 17; ++x) CHECK(ii.table_at(x, 0) == 0);
  for (int y = 0; y <= 11; ++y) CHECK(ii.table_at(0, y) == 0);
  for (int y = 1; y <= 11; ++y)
    for (int x = 1; x <= 17; ++x) {
      CHECK(ii.table_at(x, y) >= ii.table_at(x - 1, y));
      CHECK(ii.table_at(x, y) >= ii.table_at(x, y - 1));
    }
}

TEST_CASE("rect sums match the naive double loop exactly") {
  Rng rng(42);
  for (int i = 0; i < 50; ++i) {
    GrayImage img = oracle::random_image(rng, 32, 32);
    IntegralImage ii(img);
    for (int k = 0; k < 200; ++k) {
      Rect r;
      r.x = rng.next_int(0, 31);
      r.y = rng.next_int(0, 31);
      r.w = rng.next_int(1, 32 - r.x);
      r.h = rng.next_int(1, 32 - r.y);
      CHECK(ii.rect_sum(r) == oracle::rect_sum(img, r));
      CHECK(ii.rect_sq_sum(r) == oracle::rect_sq_sum(img, r));
    }
  }
}

TEST_CASE("uniform rect sum is value times area") {
  GrayImage img(8, 8, uint8_t{37});
  IntegralImage ii(img);
  CHECK(ii.rect_sum({2, 3, 4, 2}) == 37 * 8);
  GrayImage zero(8, 8, uint8_t{0});
  CHECK(IntegralImage(zero).rect_sum({1, 1, 5, 5}) == 0);
}

TEST_CASE("out of bounds rect raises") {
  GrayImage img(4, 4, uint8_t{0});
  IntegralImage ii(img);
  CHECK_THROWS_AS(ii.rect_sum({2, 2, 3, 1}), Error);
  CHECK_THROWS_AS(ii.rect_sum({0, 0, 0, 1}), Error);
  CHECK_THROWS_AS(ii.rect_sum({-1, 0, 2, 2}), Error);
}

TEST_CASE("window stats: uniform window has zero stddev") {
  GrayImage img(6, 6, uint8_t{90});
  IntegralImage ii(img);
  auto stats = ii.window_stats({1, 1, 4, 4});
  CHECK(stats.mean == doctest::Approx(90.0));
  CHECK(stats.stddev == 0.0);
}

TEST_CASE("window stats: alternating 0/255 has mean 127.5") {
  GrayImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.set(x, y, (x + y) % 2 ? 255 : 0);
  auto stats = IntegralImage(img).window_stats({0, 0, 4, 4});
  CHECK(stats.mean == doctest::Approx(127.5));
}

TEST_CASE("window stats match the two-pass oracle") {
  Rng rng(55);
  for (int i = 0; i < 30; ++i) {
    GrayImage img = oracle::random_image(rng, 24, 24);
    IntegralImage ii(img);
    Rect r;
    r.x = rng.next_int(0, 20);
    r.y = rng.next_int(0, 20);
    r.w = rng.next_int(1, 24 - r.x);
    r.h = rng.next_int(1, 24 - r.y);
    auto got = ii.window_stats(r);
    auto expected = oracle::window_stats_two_pass(img, r);
    CHECK(got.mean == doctest::Approx(expected.mean).epsilon(1e-9));
    if (expected.stddev > 0)
      CHECK(got.stddev == doctest::Approx(expected.stddev).epsilon(1e-6));
    else
      CHECK(got.stddev == 0.0);
  }
}

TEST_CASE("window stddev is zero iff the window is uniform") {
  Rng rng(56);
  GrayImage img = oracle::random_image(rng, 10, 10);
  img.set(3, 3, 10);
  img.set(4, 3, 11);
  auto stats = IntegralImage(img).window_stats({3, 3, 2, 1});
  CHECK(stats.stddev > 0.0);
}
