#pragma once

#include <optional>
#include <span>
#include <string>

#include "detect.hpp"

namespace fer {

enum class TargetPolicy {
  largest_box,
  nearest_center,
};

/// Head/torso servo parameters. Offsets are normalized to [-1, 1] with the
/// frame center at 0; gains are radians (or meters for the torso) per
/// normalized unit. Sign conventions: a face toward image-left yields a
/// positive yaw increment, a face toward image-top a positive pitch
/// increment, a face toward image-bottom a negative torso increment.
struct TrackParams {
  int frame_width = 0;
  int frame_height = 0;
  double gain_yaw = 0.3;
  double gain_pitch = 0.3;
  double deadzone = 0.05;
  double max_increment = 0.1;
  TargetPolicy policy = TargetPolicy::largest_box;
  double torso_threshold = 0.5;
  double torso_gain = 0.1;    // meters per normalized unit
  double torso_max = 0.02;    // meters per command
};

inline constexpr const char* kHeadTopic = "head_controller/increment/goal";
inline constexpr const char* kTorsoTopic = "/torso_controller/safe_command";

struct HeadCommand {
  double yaw = 0.0;    // radians, positive turns toward image-left
  double pitch = 0.0;  // radians, positive looks up
};

struct TorsoCommand {
  double increment = 0.0;  // meters, positive lifts
};

std::optional<DetectionBox> select_target(std::span<const DetectionBox> detections,
                                          const TrackParams& params);

// Proportional command with deadzone and clamp; offsets inside the deadzone
// map to zero, outside it the increment is
// clamp(-gain * (offset - sign(offset) * deadzone), +/- max_increment).
HeadCommand compute_command(const DetectionBox& target, const TrackParams& params);

std::optional<TorsoCommand> torso_command(const DetectionBox& target,
                                          const TrackParams& params);

// Closed-loop plant for convergence tests: the head pose absorbs each
// command, and the target's normalized offset shrinks accordingly.
struct TrackSimulation {
  double offset_x = 0.0;
  double offset_y = 0.0;
  int ticks = 0;
  bool converged = false;  // |offset| within deadzone (+1e-5 slack) per axis
};
TrackSimulation simulate_tracking(double start_u, double start_v,
                                  const TrackParams& params, int max_ticks);

}  // namespace fer
