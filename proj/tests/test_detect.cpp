#include <algorithm>
#include <cmath>
#include <set>

#include "detect.hpp"
#include "doctest.h"
#include "support/oracles.hpp"
#include "synth.hpp"
#include "train.hpp"
#include "util.hpp"

using namespace fer;

namespace {

// Small deterministic cascade shared by the detector tests.
const CascadeModel& test_cascade() {
  static CascadeModel model = [] {
    auto positives = synth_positives(120, 16, 8001);
    auto negatives = synth_negatives(360, 16, 8002);
    TrainOptions options;
    options.base_width = options.base_height = 16;
    options.threads = 2;
    std::vector<StageGoal> goals = {{0.995, 0.45, 6}, {0.995, 0.4, 8}, {0.995, 0.35, 10}};
    return train_cascade(positives, negatives, goals, options).model;
  }();
  return model;
}

std::multiset<std::tuple<int, int, int, int>> rect_set(const std::vector<RawHit>& hits) {
  std::multiset<std::tuple<int, int, int, int>> out;
  for (const auto& hit : hits) out.insert({hit.rect.x, hit.rect.y, hit.rect.w, hit.rect.h});
  return out;
}

}  // namespace

TEST_CASE("uniform image yields no detections") {
  GrayImage img(64, 64, uint8_t{128});
  auto boxes = detect_faces(img, test_cascade(), ScanParams{});
  CHECK(boxes.empty());
}

TEST_CASE("image smaller than the minimum window yields empty, not an error") {
  GrayImage img(8, 8, uint8_t{50});
  CHECK(detect_faces(img, test_cascade(), ScanParams{}).empty());
}

TEST_CASE("a planted blob is found within two pixels") {
  Rng rng(4242);
  GrayImage scene = synth_scene(64, 64, 999);
  int cx = 30;
  int cy = 27;
  plant_blob(scene, rng, cx, cy, 16);

  ScanParams params;
  params.min_neighbors = 3;
  auto boxes = detect_faces(scene, test_cascade(), params);
  REQUIRE(boxes.size() == 1);
  int box_cx = boxes[0].rect.x + boxes[0].rect.w / 2;
  int box_cy = boxes[0].rect.y + boxes[0].rect.h / 2;
  CHECK(std::abs(box_cx - cx) <= 2);
  CHECK(std::abs(box_cy - cy) <= 2);
  CHECK(boxes[0].neighbors >= params.min_neighbors);
}

TEST_CASE("early-exit scanning accepts exactly the brute-force window set") {
  Rng rng(606);
  const auto& model = test_cascade();
  ScanParams params;
  for (int trial = 0; trial < 5; ++trial) {
    GrayImage img = oracle::random_image(rng, 48, 48);
    IntegralImage ii(img);
    auto got = rect_set(detect_raw(ii, model, params));

    // same scan grid, every window fully evaluated from pixel loops
    std::multiset<std::tuple<int, int, int, int>> expected;
    int prev_w = 0;
    for (double scale = 1.0;; scale *= params.scale_factor) {
      int win = static_cast<int>(std::lround(16 * scale));
      if (win > 48) break;
      if (win == prev_w) continue;
      prev_w = win;
      int stride = std::max(1, static_cast<int>(std::lround(params.step_fraction * win)));
      for (int y = 0; y + win <= 48; y += stride)
        for (int x = 0; x + win <= 48; x += stride) {
          auto decision = oracle::evaluate_window_full(img, model, {x, y, win, win}, scale);
          if (decision.accepted) expected.insert({x, y, win, win});
        }
    }
    CHECK(got == expected);
  }
}

TEST_CASE("detection is translation consistent at a fixed scale") {
  Rng rng(55);
  GrayImage scene = synth_scene(96, 64, 3001);
  plant_blob(scene, rng, 40, 32, 16);

  ScanParams params;
  params.min_window = 16;
  params.max_window = 16;       // single scale
  params.step_fraction = 0.25;  // stride 4
  const auto& model = test_cascade();

  auto hits_at = [&](const GrayImage& img) {
    IntegralImage ii(img);
    return detect_raw(ii, model, params);
  };
  auto base = hits_at(scene);

  GrayImage shifted(96, 64, uint8_t{0});
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 96; ++x) {
      int sx = x - 4;  // shift right by one stride
      shifted.set(x, y, sx >= 0 ? scene.at(sx, y) : scene.at(0, y));
    }
  auto moved = hits_at(shifted);

  // every hit away from the seam must reappear shifted by one stride
  for (const auto& hit : base) {
    if (hit.rect.x + 4 + hit.rect.w > 96 - 4) continue;
    if (hit.rect.x < 4) continue;
    bool found = std::any_of(moved.begin(), moved.end(), [&](const RawHit& m) {
      return m.rect.x == hit.rect.x + 4 && m.rect.y == hit.rect.y &&
             m.rect.w == hit.rect.w && m.rect.h == hit.rect.h;
    });
    CHECK(found);
  }
}

TEST_CASE("group_detections basics") {
  CHECK(group_detections({}, 3, 0.2).empty());

  std::vector<Rect> same(5, Rect{10, 10, 20, 20});
  auto boxes = group_detections(same, 3, 0.2);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].neighbors == 5);
  CHECK(boxes[0].rect == Rect{10, 10, 20, 20});

  // sparse clusters are dropped
  CHECK(group_detections({{0, 0, 10, 10}}, 2, 0.2).empty());
}

TEST_CASE("grouping matches the transitive-closure oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Rect> rects;
    int clusters = rng.next_int(1, 4);
    for (int c = 0; c < clusters; ++c) {
      int cx = rng.next_int(0, 60);
      int cy = rng.next_int(0, 60);
      int size = rng.next_int(16, 30);
      int members = rng.next_int(1, 6);
      for (int m = 0; m < members; ++m)
        rects.push_back({cx + rng.next_int(-2, 2), cy + rng.next_int(-2, 2),
                         size + rng.next_int(-2, 2), size + rng.next_int(-2, 2)});
    }

    auto got = similarity_classes(rects, 0.2);
    auto expected = oracle::similarity_components(rects, 0.2);

    auto canonical = [](std::vector<std::vector<int>> classes) {
      for (auto& c : classes) std::sort(c.begin(), c.end());
      std::sort(classes.begin(), classes.end());
      return classes;
    };
    CHECK(canonical(got) == canonical(expected));
  }
}

TEST_CASE("detected boxes are sorted, deterministic, and inside the image") {
  Rng rng(31);
  GrayImage scene = synth_scene(96, 72, 5005);
  plant_blob(scene, rng, 24, 24, 16);
  plant_blob(scene, rng, 70, 44, 20);

  auto a = detect_faces(scene, test_cascade(), ScanParams{});
  auto b = detect_faces(scene, test_cascade(), ScanParams{});
  CHECK(a == b);
  for (size_t i = 0; i + 1 < a.size(); ++i) {
    auto key = [](const DetectionBox& box) {
      return std::tuple{box.rect.x, box.rect.y, box.rect.w, box.rect.h};
    };
    CHECK(key(a[i]) <= key(a[i + 1]));
  }
  for (const auto& box : a) {
    CHECK(box.rect.x >= 0);
    CHECK(box.rect.y >= 0);
    CHECK(box.rect.x + box.rect.w <= 96);
    CHECK(box.rect.y + box.rect.h <= 72);
  }
}
