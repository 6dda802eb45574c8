#include "track.hpp"

#include <algorithm>
#include <cmath>

namespace fer {

namespace {

void validate_params(const TrackParams& params) {
  if (params.frame_width < 1 || params.frame_height < 1)
    raise(ErrorCode::invalid_argument, "frame dimensions must be >= 1");
  if (params.gain_yaw <= 0.0 || params.gain_pitch <= 0.0)
    raise(ErrorCode::invalid_argument, "gains must be positive");
  if (params.deadzone < 0.0 || params.deadzone >= 1.0)
    raise(ErrorCode::invalid_argument, "deadzone must be in [0, 1)");
  if (params.max_increment <= 0.0)
    raise(ErrorCode::invalid_argument, "max_increment must be positive");
}

double center_x(const DetectionBox& box) { return box.rect.x + box.rect.w / 2.0; }
double center_y(const DetectionBox& box) { return box.rect.y + box.rect.h / 2.0; }

// clamp(-gain * (offset - sign * deadzone), +/- max), zero inside the deadzone
double axis_command(double offset, double deadzone, double gain, double max_increment) {
  if (std::abs(offset) <= deadzone) return 0.0;
  double sign = offset > 0.0 ? 1.0 : -1.0;
  double raw = -gain * (offset - sign * deadzone);
  return std::clamp(raw, -max_increment, max_increment);
}

}  // namespace

std::optional<DetectionBox> select_target(std::span<const DetectionBox> detections,
                                          const TrackParams& params) {
  if (detections.empty()) return std::nullopt;
  validate_params(params);

  double cx = params.frame_width / 2.0;
  double cy = params.frame_height / 2.0;
  auto dist2 = [&](const DetectionBox& box) {
    double dx = center_x(box) - cx;
    double dy = center_y(box) - cy;
    return dx * dx + dy * dy;
  };
  auto position_key = [](const DetectionBox& box) {
    return std::tuple{box.rect.x, box.rect.y, box.rect.w, box.rect.h};
  };

  size_t best = 0;
  for (size_t i = 1; i < detections.size(); ++i) {
    const auto& a = detections[i];
    const auto& b = detections[best];
    bool take;
    if (params.policy == TargetPolicy::largest_box) {
      take = a.rect.area() > b.rect.area() ||
             (a.rect.area() == b.rect.area() &&
              (dist2(a) < dist2(b) ||
               (dist2(a) == dist2(b) && position_key(a) < position_key(b))));
    } else {
      take = dist2(a) < dist2(b) ||
             (dist2(a) == dist2(b) &&
              (a.rect.area() > b.rect.area() ||
               (a.rect.area() == b.rect.area() && position_key(a) < position_key(b))));
    }
    if (take) best = i;
  }
  return detections[best];
}

HeadCommand compute_command(const DetectionBox& target, const TrackParams& params) {
  validate_params(params);
  double u = (center_x(target) - params.frame_width / 2.0) / (params.frame_width / 2.0);
  double v = (center_y(target) - params.frame_height / 2.0) / (params.frame_height / 2.0);
  HeadCommand out;
  out.yaw = axis_command(u, params.deadzone, params.gain_yaw, params.max_increment);
  out.pitch = axis_command(v, params.deadzone, params.gain_pitch, params.max_increment);
  return out;
}

std::optional<TorsoCommand> torso_command(const DetectionBox& target,
                                          const TrackParams& params) {
  validate_params(params);
  double v = (center_y(target) - params.frame_height / 2.0) / (params.frame_height / 2.0);
  if (std::abs(v) <= params.torso_threshold) return std::nullopt;
  double command = axis_command(v, params.torso_threshold, params.torso_gain, params.torso_max);
  return TorsoCommand{command};
}

TrackSimulation simulate_tracking(double start_u, double start_v,
                                  const TrackParams& params, int max_ticks) {
  // A fine virtual frame keeps the pixel quantization of the synthesized
  // detection below the convergence band.
  TrackParams sim_params = params;
  sim_params.frame_width = 2'000'000;
  sim_params.frame_height = 2'000'000;
  validate_params(sim_params);

  TrackSimulation sim{start_u, start_v, 0, false};
  // the offset approaches the deadzone boundary asymptotically for gain < 1
  double band = params.deadzone + 1e-5;
  for (int t = 0; t < max_ticks; ++t) {
    if (std::abs(sim.offset_x) <= band && std::abs(sim.offset_y) <= band) {
      sim.converged = true;
      return sim;
    }
    // a 2x2 detection whose center sits at the current offset
    DetectionBox box;
    box.rect.w = 2;
    box.rect.h = 2;
    box.rect.x = static_cast<int>(std::lround(
                     (sim.offset_x + 1.0) * sim_params.frame_width / 2.0)) - 1;
    box.rect.y = static_cast<int>(std::lround(
                     (sim.offset_y + 1.0) * sim_params.frame_height / 2.0)) - 1;
    HeadCommand cmd = compute_command(box, sim_params);
    // plant: the head absorbs the increment, shrinking the apparent offset
    sim.offset_x += cmd.yaw;
    sim.offset_y += cmd.pitch;
    ++sim.ticks;
  }
  sim.converged = std::abs(sim.offset_x) <= band && std::abs(sim.offset_y) <= band;
  return sim;
}

}  // namespace fer
