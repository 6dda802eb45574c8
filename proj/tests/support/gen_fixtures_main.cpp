// Regenerates every committed fixture under data/ from fixed seeds:
//   gen_fixtures <data-dir>
// Deterministic end to end; rerunning must reproduce identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pipeline.hpp"
#include "support/oracles.hpp"
#include "synth.hpp"
#include "train.hpp"
#include "util.hpp"

using namespace fer;
namespace fs = std::filesystem;

namespace {

constexpr int kBase = 16;
constexpr uint64_t kPositiveSeed = 101;
constexpr uint64_t kNegativeSeed = 202;
constexpr int kPositiveCount = 300;
constexpr int kNegativeCount = 1200;

const std::vector<StageGoal> kGoals = {
    {0.997, 0.40, 6},
    {0.997, 0.30, 8},
    {0.997, 0.25, 10},
};

CascadeModel train_fixture_cascade() {
  auto positives = synth_positives(kPositiveCount, kBase, kPositiveSeed);
  auto negatives = synth_negatives(kNegativeCount, kBase, kNegativeSeed);
  TrainOptions options;
  options.base_width = options.base_height = kBase;
  options.threads = 0;
  auto result = train_cascade(positives, negatives, kGoals, options);
  std::printf("cascade: %zu stages\n", result.model.stages.size());
  for (const auto& stage : result.stages)
    std::printf("  stumps=%zu det=%.4f fp=%.4f\n", stage.stage.weak.size(),
                stage.detection_rate, stage.false_positive_rate);
  return result.model;
}

NetworkModel build_reference_net() {
  Rng rng(424242);
  auto uniform = [&](std::vector<float>& values, double lo, double hi) {
    for (auto& v : values) v = static_cast<float>(lo + rng.next_double() * (hi - lo));
  };

  NetworkModel net;
  net.input_height = net.input_width = 48;
  net.input_channels = 1;

  Conv2d conv1;
  conv1.in_channels = 1;
  conv1.out_channels = 8;
  conv1.kernel_h = conv1.kernel_w = 3;
  conv1.stride = 1;
  conv1.pad = 1;
  conv1.weights.resize(8 * 1 * 3 * 3);
  conv1.bias.resize(8);
  uniform(conv1.weights, -0.3, 0.3);
  uniform(conv1.bias, -0.05, 0.05);

  Conv2d conv2;
  conv2.in_channels = 8;
  conv2.out_channels = 16;
  conv2.kernel_h = conv2.kernel_w = 3;
  conv2.stride = 1;
  conv2.pad = 1;
  conv2.weights.resize(16 * 8 * 3 * 3);
  conv2.bias.resize(16);
  uniform(conv2.weights, -0.1, 0.1);
  uniform(conv2.bias, -0.05, 0.05);

  Dense head;
  head.in_units = 16 * 12 * 12;
  head.out_units = kEmotionCount;
  head.weights.resize(static_cast<size_t>(head.out_units) * head.in_units);
  head.bias.resize(static_cast<size_t>(head.out_units));
  uniform(head.weights, -0.05, 0.05);
  uniform(head.bias, -0.01, 0.01);

  net.layers = {conv1, Relu{}, MaxPool2d{2, 2, 2}, conv2, Relu{}, MaxPool2d{2, 2, 2},
                Flatten{}, head, Softmax{}};
  net.validate();
  return net;
}

struct Plant {
  int cx, cy, size;
};

GrayImage make_frame(uint64_t seed, const std::vector<Plant>& plants, bool uniform_frame) {
  if (uniform_frame) return GrayImage(96, 72, uint8_t{77});
  GrayImage frame = synth_scene(96, 72, seed);
  Rng rng(seed ^ 0xabcdef);
  for (const auto& p : plants) plant_blob(frame, rng, p.cx, p.cy, p.size);
  return frame;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: gen_fixtures <data-dir>\n");
    return 2;
  }
  fs::path data_dir = argv[1];
  fs::create_directories(data_dir);
  fs::create_directories(data_dir / "crops");
  fs::create_directories(data_dir / "frames");
  fs::create_directories(data_dir / "golden");

  // 1. detector cascade
  CascadeModel cascade = train_fixture_cascade();
  write_cascade_file((data_dir / "cascade_blob.json").string(), cascade);

  // 2. reference classifier weights
  NetworkModel net = build_reference_net();
  auto weight_bytes = save_weights(net);
  write_binary_file((data_dir / "net_reference.ferw").string(), weight_bytes.data(),
                    weight_bytes.size());
  std::printf("weights: %zu bytes\n", weight_bytes.size());

  // 3. classifier crops with labels from the independent forward pass
  nlohmann::ordered_json golden_labels;
  golden_labels["crops"] = nlohmann::ordered_json::array();
  Rng crop_rng(3030);
  for (int i = 0; i < 10; ++i) {
    GrayImage crop = i < 5 ? synth_positive(crop_rng, 48) : synth_negative(crop_rng, 48);
    char name[24];
    std::snprintf(name, sizeof(name), "crop_%02d.pgm", i);
    auto bytes = encode_pgm(crop);
    write_binary_file((data_dir / "crops" / name).string(), bytes.data(), bytes.size());

    Tensor input = preprocess_face(crop, {0, 0, 48, 48}, 48);
    EmotionScores scores = oracle::naive_forward(net, input);
    size_t best = 0;
    for (size_t k = 1; k < scores.size(); ++k)
      if (scores[k] > scores[best]) best = k;
    nlohmann::ordered_json entry;
    entry["file"] = name;
    entry["label"] = emotion_name(static_cast<EmotionLabel>(best));
    entry["label_index"] = static_cast<int>(best);
    golden_labels["crops"].push_back(std::move(entry));
  }
  write_text_file((data_dir / "golden" / "crop_labels.json").string(),
                  golden_labels.dump(2) + "\n");

  // 4. the ten-frame scene fixture
  const std::vector<std::pair<uint64_t, std::vector<Plant>>> frames = {
      {9100, {}},
      {9101, {{30, 36, 18}}},
      {9102, {{22, 22, 16}, {68, 44, 20}}},
      {9103, {}},  // uniform frame, see below
      {9104, {{78, 30, 16}}},
      {9105, {{18, 50, 16}, {70, 16, 16}}},
      {9106, {{48, 36, 28}}},
      {9107, {}},
      {9108, {{26, 48, 20}, {72, 30, 16}}},
      {9109, {{70, 58, 18}}},
  };
  for (size_t i = 0; i < frames.size(); ++i) {
    GrayImage frame = make_frame(frames[i].first, frames[i].second, i == 3);
    char name[24];
    std::snprintf(name, sizeof(name), "frame_%04zu.pgm", i);
    auto bytes = encode_pgm(frame);
    write_binary_file((data_dir / "frames" / name).string(), bytes.data(), bytes.size());
  }

  // 5. golden pipeline outputs from a single-worker reference run
  fs::path work = fs::temp_directory_path() / "fer_gen_fixtures";
  fs::remove_all(work);
  fs::create_directories(work);

  PipelineConfig config;
  config.cascade_path = (data_dir / "cascade_blob.json").string();
  config.weights_path = (data_dir / "net_reference.ferw").string();
  config.input = (data_dir / "frames").string();
  config.output_dir = work.string();
  config.events_path = (work / "events.ndjson").string();
  config.workers = 1;
  config.emit_annotated = true;
  std::ostringstream unused;
  auto result = run_pipeline(config, unused);
  std::printf("pipeline: %ld frames, exit %d, %zu command lines\n", result.frames,
              result.exit_code, result.sink.log_lines().size());

  fs::copy_file(work / "events.ndjson", data_dir / "golden" / "events.ndjson",
                fs::copy_options::overwrite_existing);
  fs::copy_file(work / "annotated_0001.ppm", data_dir / "golden" / "annotated_0001.ppm",
                fs::copy_options::overwrite_existing);
  fs::copy_file(work / "annotated_0002.ppm", data_dir / "golden" / "annotated_0002.ppm",
                fs::copy_options::overwrite_existing);
  fs::copy_file(work / "commands.ndjson", data_dir / "golden" / "commands.ndjson",
                fs::copy_options::overwrite_existing);

  // summary of what the reference run saw, as a sanity report
  std::ifstream events(data_dir / "golden" / "events.ndjson");
  std::string line;
  while (std::getline(events, line)) {
    auto j = nlohmann::json::parse(line);
    std::printf("frame %d: %zu detections\n", j["frame"].get<int>(),
                j.contains("detections") ? j["detections"].size() : 0);
  }
  return 0;
}
