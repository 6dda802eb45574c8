#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "annotate.hpp"
#include "cascade.hpp"
#include "detect.hpp"
#include "net.hpp"
#include "track.hpp"

namespace fer {

struct PipelineConfig {
  std::string cascade_path;
  std::string weights_path;
  std::string input;              // image file, directory, or "-" for stdin
  std::string input_mode = "auto";  // auto | image | dir | stream
  std::string output_dir;         // annotated frames + command log land here
  std::string events_path;        // empty: events go to the caller's stream
  int workers = 1;
  bool emit_annotated = false;
  bool emit_timing = false;
  ScanParams scan;
  TrackParams track;  // frame dimensions are filled in per frame

  static PipelineConfig from_json_text(const std::string& text);
  static PipelineConfig from_json_file(const std::string& path);
  // Dotted-key override, e.g. set("scan.scale_factor", "1.2"). Every CLI flag
  // routes through here.
  void set(const std::string& key, const std::string& value);
};

struct StageTiming {
  double decode_ms = 0.0;
  double detect_ms = 0.0;
  double classify_ms = 0.0;
  double annotate_ms = 0.0;
};

struct FrameEvent {
  int frame_index = 0;
  std::string source;
  std::string error;  // non-empty marks a per-frame failure
  std::vector<ClassifiedDetection> detections;
  std::optional<HeadCommand> head;
  std::optional<TorsoCommand> torso;
  StageTiming timing;
};

// One NDJSON line, no trailing newline.
std::string event_to_ndjson(const FrameEvent& event, bool with_timing);

/// Stand-in for the robot transport: collects every command with its topic
/// tag and integrates the pose a real head would reach.
class RobotSink {
public:
  void consume(const FrameEvent& event);

  const std::vector<std::string>& log_lines() const { return lines_; }
  double pose_yaw() const { return pose_yaw_; }
  double pose_pitch() const { return pose_pitch_; }
  double pose_lift() const { return pose_lift_; }

private:
  std::vector<std::string> lines_;
  double pose_yaw_ = 0.0;
  double pose_pitch_ = 0.0;
  double pose_lift_ = 0.0;
};

struct BenchStage {
  long count = 0;
  double total_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

struct BenchReport {
  long frames = 0;
  double wall_ms = 0.0;
  BenchStage decode, detect, classify, annotate;

  std::string to_json() const;
};

struct PipelineResult {
  int exit_code = 0;     // nonzero when any frame failed
  long frames = 0;
  RobotSink sink;
  BenchReport bench;
};

// Runs the pipeline; events are written as NDJSON to events_out (or to
// config.events_path when set), strictly in input order regardless of the
// worker count. Startup failures (unloadable models, bad config) throw;
// unreadable frames produce error events and processing continues.
PipelineResult run_pipeline(const PipelineConfig& config, std::ostream& events_out);

// Reads one concatenated netpbm frame (raw bytes) from a stream; nullopt at
// a clean end-of-stream.
std::optional<std::vector<uint8_t>> read_pnm_frame(std::istream& in);

}  // namespace fer
