#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "util.hpp"

namespace fer {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

ScanParams scan_from_json(const nlohmann::json& j) {
  ScanParams scan;
  if (j.contains("scale_factor")) scan.scale_factor = j["scale_factor"].get<double>();
  if (j.contains("step_fraction")) scan.step_fraction = j["step_fraction"].get<double>();
  if (j.contains("min_window")) scan.min_window = j["min_window"].get<int>();
  if (j.contains("max_window")) scan.max_window = j["max_window"].get<int>();
  if (j.contains("min_neighbors")) scan.min_neighbors = j["min_neighbors"].get<int>();
  if (j.contains("overlap_eps")) scan.overlap_eps = j["overlap_eps"].get<double>();
  return scan;
}

TrackParams track_from_json(const nlohmann::json& j) {
  TrackParams track;
  if (j.contains("gain_yaw")) track.gain_yaw = j["gain_yaw"].get<double>();
  if (j.contains("gain_pitch")) track.gain_pitch = j["gain_pitch"].get<double>();
  if (j.contains("deadzone")) track.deadzone = j["deadzone"].get<double>();
  if (j.contains("max_increment")) track.max_increment = j["max_increment"].get<double>();
  if (j.contains("torso_threshold")) track.torso_threshold = j["torso_threshold"].get<double>();
  if (j.contains("torso_gain")) track.torso_gain = j["torso_gain"].get<double>();
  if (j.contains("torso_max")) track.torso_max = j["torso_max"].get<double>();
  if (j.contains("policy")) {
    std::string policy = j["policy"].get<std::string>();
    if (policy == "largest-box") track.policy = TargetPolicy::largest_box;
    else if (policy == "nearest-center") track.policy = TargetPolicy::nearest_center;
    else raise(ErrorCode::format, "config: unknown tracking policy '" + policy + "'");
  }
  return track;
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::format, std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) raise(ErrorCode::format, "config: document must be an object");

  PipelineConfig config;
  if (doc.contains("cascade")) config.cascade_path = doc["cascade"].get<std::string>();
  if (doc.contains("weights")) config.weights_path = doc["weights"].get<std::string>();
  if (doc.contains("input")) config.input = doc["input"].get<std::string>();
  if (doc.contains("input_mode")) config.input_mode = doc["input_mode"].get<std::string>();
  if (doc.contains("out")) config.output_dir = doc["out"].get<std::string>();
  if (doc.contains("events")) config.events_path = doc["events"].get<std::string>();
  if (doc.contains("workers")) config.workers = doc["workers"].get<int>();
  if (doc.contains("emit_annotated")) config.emit_annotated = doc["emit_annotated"].get<bool>();
  if (doc.contains("emit_timing")) config.emit_timing = doc["emit_timing"].get<bool>();
  if (doc.contains("scan")) config.scan = scan_from_json(doc["scan"]);
  if (doc.contains("track")) config.track = track_from_json(doc["track"]);
  return config;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  return from_json_text(read_text_file(path));
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  auto as_int = [&] {
    try {
      return std::stoi(value);
    } catch (const std::exception&) {
      raise(ErrorCode::invalid_argument, "config: '" + key + "' expects an integer");
    }
  };
  auto as_double = [&] {
    try {
      return std::stod(value);
    } catch (const std::exception&) {
      raise(ErrorCode::invalid_argument, "config: '" + key + "' expects a number");
    }
  };
  auto as_bool = [&] {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    raise(ErrorCode::invalid_argument, "config: '" + key + "' expects true or false");
  };

  if (key == "cascade") cascade_path = value;
  else if (key == "weights") weights_path = value;
  else if (key == "input") input = value;
  else if (key == "input_mode") input_mode = value;
  else if (key == "out") output_dir = value;
  else if (key == "events") events_path = value;
  else if (key == "workers") workers = as_int();
  else if (key == "emit_annotated") emit_annotated = as_bool();
  else if (key == "emit_timing") emit_timing = as_bool();
  else if (key == "scan.scale_factor") scan.scale_factor = as_double();
  else if (key == "scan.step_fraction") scan.step_fraction = as_double();
  else if (key == "scan.min_window") scan.min_window = as_int();
  else if (key == "scan.max_window") scan.max_window = as_int();
  else if (key == "scan.min_neighbors") scan.min_neighbors = as_int();
  else if (key == "scan.overlap_eps") scan.overlap_eps = as_double();
  else if (key == "track.gain_yaw") track.gain_yaw = as_double();
  else if (key == "track.gain_pitch") track.gain_pitch = as_double();
  else if (key == "track.deadzone") track.deadzone = as_double();
  else if (key == "track.max_increment") track.max_increment = as_double();
  else if (key == "track.torso_threshold") track.torso_threshold = as_double();
  else if (key == "track.torso_gain") track.torso_gain = as_double();
  else if (key == "track.torso_max") track.torso_max = as_double();
  else if (key == "track.policy") {
    if (value == "largest-box") track.policy = TargetPolicy::largest_box;
    else if (value == "nearest-center") track.policy = TargetPolicy::nearest_center;
    else raise(ErrorCode::invalid_argument, "config: unknown tracking policy '" + value + "'");
  } else {
    raise(ErrorCode::invalid_argument, "config: unknown key '" + key + "'");
  }
}

std::string event_to_ndjson(const FrameEvent& event, bool with_timing) {
  ordered_json j;
  j["frame"] = event.frame_index;
  j["source"] = event.source;
  if (!event.error.empty()) {
    j["error"] = event.error;
    return j.dump();
  }
  j["detections"] = ordered_json::array();
  for (const auto& det : event.detections) {
    ordered_json d;
    d["box"] = {{"x", det.box.rect.x},
                {"y", det.box.rect.y},
                {"w", det.box.rect.w},
                {"h", det.box.rect.h}};
    d["label"] = emotion_name(det.label);
    d["label_index"] = static_cast<int>(det.label);
    d["scores"] = det.scores;
    d["neighbors"] = det.box.neighbors;
    d["stage_score"] = det.box.stage_score;
    j["detections"].push_back(std::move(d));
  }
  if (event.head) {
    j["head_cmd"] = {{"topic", kHeadTopic}, {"yaw", event.head->yaw},
                     {"pitch", event.head->pitch}};
  } else {
    j["head_cmd"] = nullptr;
  }
  if (event.torso) {
    j["torso_cmd"] = {{"topic", kTorsoTopic}, {"increment", event.torso->increment}};
  } else {
    j["torso_cmd"] = nullptr;
  }
  if (with_timing) {
    j["timing"] = {{"decode_ms", event.timing.decode_ms},
                   {"detect_ms", event.timing.detect_ms},
                   {"classify_ms", event.timing.classify_ms},
                   {"annotate_ms", event.timing.annotate_ms}};
  }
  return j.dump();
}

void RobotSink::consume(const FrameEvent& event) {
  if (!event.head && !event.torso) return;
  if (event.head) {
    pose_yaw_ += event.head->yaw;
    pose_pitch_ += event.head->pitch;
  }
  if (event.torso) pose_lift_ += event.torso->increment;

  ordered_json j;
  j["frame"] = event.frame_index;
  if (event.head)
    j["head"] = {{"topic", kHeadTopic}, {"yaw", event.head->yaw},
                 {"pitch", event.head->pitch}};
  else
    j["head"] = nullptr;
  if (event.torso)
    j["torso"] = {{"topic", kTorsoTopic}, {"increment", event.torso->increment}};
  else
    j["torso"] = nullptr;
  j["pose"] = {{"yaw", pose_yaw_}, {"pitch", pose_pitch_}, {"lift", pose_lift_}};
  lines_.push_back(j.dump());
}

std::string BenchReport::to_json() const {
  auto stage = [](const BenchStage& s) {
    ordered_json j;
    j["count"] = s.count;
    j["total_ms"] = s.total_ms;
    j["mean_ms"] = s.count > 0 ? s.total_ms / static_cast<double>(s.count) : 0.0;
    j["min_ms"] = s.min_ms;
    j["max_ms"] = s.max_ms;
    return j;
  };
  ordered_json j;
  j["frames"] = frames;
  j["wall_ms"] = wall_ms;
  j["fps"] = wall_ms > 0.0 ? frames * 1000.0 / wall_ms : 0.0;
  j["stages"] = {{"decode", stage(decode)},
                 {"detect", stage(detect)},
                 {"classify", stage(classify)},
                 {"annotate", stage(annotate)}};
  return j.dump();
}

// ---------------------------------------------------------------------------

std::optional<std::vector<uint8_t>> read_pnm_frame(std::istream& in) {
  int first = in.get();
  if (first == std::char_traits<char>::eof()) return std::nullopt;

  std::vector<uint8_t> bytes;
  bytes.push_back(static_cast<uint8_t>(first));
  auto take = [&]() -> int {
    int c = in.get();
    if (c == std::char_traits<char>::eof())
      raise(ErrorCode::format, "stream: truncated frame header");
    bytes.push_back(static_cast<uint8_t>(c));
    return c;
  };

  int magic = take();
  if (first != 'P' || (magic != '5' && magic != '6'))
    raise(ErrorCode::format, "stream: expected a P5 or P6 frame");
  bool color = magic == '6';

  // width, height, maxval separated by whitespace/comments, then one
  // whitespace byte before the payload
  long dims[3];
  for (int d = 0; d < 3; ++d) {
    int c = take();
    while (std::isspace(c) || c == '#') {
      if (c == '#')
        while (c != '\n') c = take();
      c = take();
    }
    long value = 0;
    if (!std::isdigit(c)) raise(ErrorCode::format, "stream: malformed frame header");
    while (std::isdigit(c)) {
      value = value * 10 + (c - '0');
      if (value > 1'000'000'000) raise(ErrorCode::format, "stream: header value out of range");
      if (d == 2) break;  // the byte after maxval is the single separator
      c = take();
      if (!std::isdigit(c)) {
        in.putback(static_cast<char>(c));
        bytes.pop_back();
        break;
      }
    }
    if (d == 2) {
      // consume maxval digits fully
      int next = take();
      while (std::isdigit(next)) {
        value = value * 10 + (next - '0');
        next = take();
      }
      if (!std::isspace(next))
        raise(ErrorCode::format, "stream: expected whitespace after maxval");
    }
    dims[d] = value;
  }
  if (dims[0] < 1 || dims[1] < 1)
    raise(ErrorCode::format, "stream: invalid frame dimensions");

  size_t payload = static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]) *
                   (color ? 3 : 1);
  size_t header_size = bytes.size();
  bytes.resize(header_size + payload);
  in.read(reinterpret_cast<char*>(bytes.data() + header_size),
          static_cast<std::streamsize>(payload));
  if (static_cast<size_t>(in.gcount()) != payload)
    raise(ErrorCode::format, "stream: truncated frame payload");
  return bytes;
}

namespace {

struct FrameJob {
  int index = 0;
  std::string source;
  std::vector<uint8_t> bytes;
  std::string read_error;
};

struct FrameOutput {
  FrameEvent event;
  std::vector<uint8_t> annotated_ppm;  // empty unless emit_annotated
};

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

FrameOutput process_frame(const FrameJob& job, const CascadeModel& cascade,
                          const NetworkModel& net, const PipelineConfig& config) {
  FrameOutput out;
  out.event.frame_index = job.index;
  out.event.source = job.source;
  if (!job.read_error.empty()) {
    out.event.error = job.read_error;
    return out;
  }
  try {
    auto t0 = std::chrono::steady_clock::now();
    GrayImage frame = decode_image(job.bytes);
    out.event.timing.decode_ms = ms_since(t0);

    auto t1 = std::chrono::steady_clock::now();
    auto boxes = detect_faces(frame, cascade, config.scan);
    out.event.timing.detect_ms = ms_since(t1);

    auto t2 = std::chrono::steady_clock::now();
    for (const auto& box : boxes) {
      auto [label, scores] = classify(frame, box.rect, net);
      out.event.detections.push_back({box, label, scores});
    }
    out.event.timing.classify_ms = ms_since(t2);

    TrackParams track = config.track;
    track.frame_width = frame.width();
    track.frame_height = frame.height();
    auto target = select_target(boxes, track);
    if (target) {
      out.event.head = compute_command(*target, track);
      out.event.torso = torso_command(*target, track);
    }

    if (config.emit_annotated) {
      auto t3 = std::chrono::steady_clock::now();
      out.annotated_ppm = encode_ppm(annotate_frame(frame, out.event.detections));
      out.event.timing.annotate_ms = ms_since(t3);
    }
  } catch (const Error& e) {
    out.event.detections.clear();
    out.event.head.reset();
    out.event.torso.reset();
    out.event.error = e.what();
  }
  return out;
}

// Sequential producer feeding a pool of workers through a bounded queue,
// with results released strictly in frame order.
class OrderedPipeline {
public:
  OrderedPipeline(const PipelineConfig& config, const CascadeModel& cascade,
                  const NetworkModel& net)
      : config_(config), cascade_(cascade), net_(net),
        capacity_(static_cast<size_t>(std::max(1, config.workers)) * 2) {}

  template <typename Produce, typename Emit>
  void run(Produce produce, Emit emit) {
    int n_workers = std::max(1, config_.workers);
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i)
      workers.emplace_back([this] { worker_loop(); });

    std::thread producer([this, &produce] {
      int index = 0;
      while (true) {
        std::optional<FrameJob> job = produce(index);
        if (!job) break;
        job->index = index++;
        {
          std::unique_lock lock(mutex_);
          queue_space_.wait(lock, [this] { return queue_.size() < capacity_; });
          queue_.push_back(std::move(*job));
        }
        queue_ready_.notify_one();
      }
      {
        std::lock_guard lock(mutex_);
        done_producing_ = true;
        total_jobs_ = index;
      }
      queue_ready_.notify_all();
      results_ready_.notify_all();
    });

    // emit in input order from the caller's thread
    int next = 0;
    while (true) {
      FrameOutput output;
      {
        std::unique_lock lock(mutex_);
        results_ready_.wait(lock, [&] {
          return results_.count(next) > 0 || (done_producing_ && next >= total_jobs_);
        });
        if (results_.count(next) == 0) break;
        output = std::move(results_[next]);
        results_.erase(next);
      }
      emit(std::move(output));
      ++next;
    }

    producer.join();
    for (auto& w : workers) w.join();
  }

private:
  void worker_loop() {
    while (true) {
      FrameJob job;
      {
        std::unique_lock lock(mutex_);
        queue_ready_.wait(lock, [this] { return !queue_.empty() || done_producing_; });
        if (queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.erase(queue_.begin());
      }
      queue_space_.notify_one();
      FrameOutput output = process_frame(job, cascade_, net_, config_);
      {
        std::lock_guard lock(mutex_);
        results_[job.index] = std::move(output);
      }
      results_ready_.notify_all();
    }
  }

  const PipelineConfig& config_;
  const CascadeModel& cascade_;
  const NetworkModel& net_;
  size_t capacity_;

  std::mutex mutex_;
  std::condition_variable queue_ready_;
  std::condition_variable queue_space_;
  std::condition_variable results_ready_;
  std::vector<FrameJob> queue_;
  std::map<int, FrameOutput> results_;
  bool done_producing_ = false;
  int total_jobs_ = std::numeric_limits<int>::max();
};

void accumulate(BenchStage& stage, double ms) {
  if (stage.count == 0) {
    stage.min_ms = ms;
    stage.max_ms = ms;
  } else {
    stage.min_ms = std::min(stage.min_ms, ms);
    stage.max_ms = std::max(stage.max_ms, ms);
  }
  stage.total_ms += ms;
  ++stage.count;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, std::ostream& events_out) {
  if (config.workers < 1) raise(ErrorCode::invalid_argument, "workers must be >= 1");
  if (config.input.empty()) raise(ErrorCode::invalid_argument, "no input given");
  if (config.emit_annotated && config.output_dir.empty())
    raise(ErrorCode::invalid_argument, "emit_annotated requires an output directory");

  CascadeModel cascade = read_cascade_file(config.cascade_path);
  NetworkModel net = read_weights_file(config.weights_path);
  if (net.input_height != net.input_width)
    raise(ErrorCode::shape, "pipeline requires a square classifier input");
  if (net.input_channels != 1)
    raise(ErrorCode::shape, "pipeline requires a single-channel classifier");

  std::string mode = config.input_mode;
  if (mode == "auto") {
    if (config.input == "-") mode = "stream";
    else if (fs::is_directory(config.input)) mode = "dir";
    else mode = "image";
  }

  if (!config.output_dir.empty()) fs::create_directories(config.output_dir);

  std::ofstream events_file;
  std::ostream* events = &events_out;
  if (!config.events_path.empty()) {
    events_file.open(config.events_path, std::ios::trunc);
    if (!events_file)
      raise(ErrorCode::io, "cannot open events file: " + config.events_path);
    events = &events_file;
  }

  PipelineResult result;
  auto wall_start = std::chrono::steady_clock::now();

  // frame producers per input mode
  std::vector<fs::path> files;
  if (mode == "dir") {
    if (!fs::is_directory(config.input))
      raise(ErrorCode::io, "input directory not found: " + config.input);
    files = list_frames(config.input);
  } else if (mode == "image") {
    files = {fs::path(config.input)};
  } else if (mode != "stream") {
    raise(ErrorCode::invalid_argument, "config: unknown input mode '" + mode + "'");
  }

  auto produce_file = [&](int index) -> std::optional<FrameJob> {
    if (static_cast<size_t>(index) >= files.size()) return std::nullopt;
    FrameJob job;
    job.source = files[static_cast<size_t>(index)].filename().string();
    try {
      job.bytes = read_binary_file(files[static_cast<size_t>(index)].string());
    } catch (const Error& e) {
      job.read_error = e.what();
    }
    return job;
  };
  // a malformed stream frame cannot be resynchronized; report it and stop
  bool stream_poisoned = false;
  auto produce_stream = [&](int index) -> std::optional<FrameJob> {
    if (stream_poisoned) return std::nullopt;
    FrameJob job;
    char name[32];
    std::snprintf(name, sizeof(name), "stream:%04d", index);
    job.source = name;
    try {
      auto bytes = read_pnm_frame(std::cin);
      if (!bytes) return std::nullopt;
      job.bytes = std::move(*bytes);
    } catch (const Error& e) {
      job.read_error = e.what();
      stream_poisoned = true;
    }
    return job;
  };

  OrderedPipeline pool(config, cascade, net);
  auto emit = [&](FrameOutput output) {
    if (!output.event.error.empty()) result.exit_code = 1;
    *events << event_to_ndjson(output.event, config.emit_timing) << "\n";
    result.sink.consume(output.event);
    if (!output.annotated_ppm.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "annotated_%04d.ppm", output.event.frame_index);
      write_binary_file((fs::path(config.output_dir) / name).string(),
                        output.annotated_ppm.data(), output.annotated_ppm.size());
    }
    accumulate(result.bench.decode, output.event.timing.decode_ms);
    accumulate(result.bench.detect, output.event.timing.detect_ms);
    accumulate(result.bench.classify, output.event.timing.classify_ms);
    accumulate(result.bench.annotate, output.event.timing.annotate_ms);
    ++result.frames;
  };

  if (mode == "stream") {
    pool.run(produce_stream, emit);
  } else {
    pool.run(produce_file, emit);
  }

  result.bench.frames = result.frames;
  result.bench.wall_ms = ms_since(wall_start);

  if (!config.output_dir.empty()) {
    std::string log;
    for (const auto& line : result.sink.log_lines()) log += line + "\n";
    write_text_file((fs::path(config.output_dir) / "commands.ndjson").string(), log);
  }
  events->flush();
  return result;
}

}  // namespace fer
