#pragma once

#include <string>
#include <vector>

#include "haar.hpp"

namespace fer {

/// One-feature threshold rule. Votes 1 iff polarity * value < polarity *
/// threshold, where value is the variance-normalized feature value.
struct WeakClassifier {
  HaarFeature feature;
  double threshold = 0.0;
  int polarity = 1;  // +1 or -1
  double alpha = 0.0;
  bool operator==(const WeakClassifier&) const = default;
};

struct CascadeStage {
  std::vector<WeakClassifier> weak;
  double threshold = 0.0;  // stage passes iff sum(alpha_i * vote_i) >= threshold
  bool operator==(const CascadeStage&) const = default;
};

struct CascadeModel {
  int format_version = 1;
  int base_width = 24;
  int base_height = 24;
  std::vector<CascadeStage> stages;
  bool operator==(const CascadeModel&) const = default;

  // Structural invariants; throws with a path to the offending element.
  void validate() const;
};

struct StageEval {
  bool passed = false;
  double score = 0.0;
};

StageEval eval_stage(const CascadeStage& stage, const IntegralImage& ii,
                     const Rect& window, double scale, double inv_norm);

// Pre-scaled cascade for one pyramid level; shared by all windows of that size.
struct ScaledWeak {
  ScaledFeature feature;
  double threshold = 0.0;
  int polarity = 1;
  double alpha = 0.0;
};
struct ScaledStage {
  std::vector<ScaledWeak> weak;
  double threshold = 0.0;
};
std::vector<ScaledStage> scale_cascade(const CascadeModel& model, double scale,
                                       int win_w, int win_h);
StageEval eval_scaled_stage(const ScaledStage& stage, const IntegralImage& ii,
                            int win_x, int win_y, double inv_norm);

// Versioned JSON document; field order is canonical in serialized form, and
// parse(serialize(m)) == m.
CascadeModel parse_cascade(const std::string& text);
std::string serialize_cascade(const CascadeModel& model);
CascadeModel read_cascade_file(const std::string& path);
void write_cascade_file(const std::string& path, const CascadeModel& model);

inline constexpr int kCascadeFormatVersion = 1;

}  // namespace fer
