#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cascade.hpp"

namespace fer {

struct StageGoal {
  double min_detection_rate = 0.995;    // fraction of positives the stage must keep
  double max_false_positive_rate = 0.5; // fraction of negatives it may pass
  int max_weak_classifiers = 10;
};

struct TrainOptions {
  int base_width = 24;
  int base_height = 24;
  uint64_t memory_budget_mb = 2048;  // cap for the samples x features value matrix
  int threads = 0;                   // 0 = hardware concurrency
};

/// Integral image plus the variance normalizer for a base-window sample.
struct PreparedSample {
  IntegralImage ii;
  double inv_norm = 0.0;
};

PreparedSample prepare_sample(const GrayImage& img, int base_w, int base_h);

/// Labeled prepared samples: positives first, then negatives.
struct SampleSet {
  std::vector<PreparedSample> samples;
  std::vector<uint8_t> labels;  // 1 = positive
  size_t n_pos = 0;
  size_t n_neg = 0;

  static SampleSet build(const std::vector<GrayImage>& positives,
                         const std::vector<GrayImage>& negatives, int base_w, int base_h);
};

/// Per-feature sample values, either cached as a features-major matrix (with
/// presorted index rows) or recomputed on demand when the matrix would
/// exceed the memory budget.
class FeatureValues {
public:
  FeatureValues(const std::vector<HaarFeature>& features, const SampleSet& set,
                const TrainOptions& options);
  // Matrix-backed view for tests; rows are features.
  FeatureValues(std::vector<double> matrix, size_t n_features, size_t n_samples);

  size_t feature_count() const { return n_features_; }
  size_t sample_count() const { return n_samples_; }
  bool cached() const { return cached_; }

  // Values of one feature for all samples. scratch is used in streaming mode.
  const double* row(size_t f, std::vector<double>& scratch) const;
  // Sample indices ordered by (value, index) ascending.
  const uint32_t* order(size_t f, const double* values, std::vector<uint32_t>& scratch) const;

private:
  void fill_matrix();

  const std::vector<HaarFeature>* features_ = nullptr;
  const SampleSet* set_ = nullptr;
  std::vector<ScaledFeature> scaled_;
  size_t n_features_ = 0;
  size_t n_samples_ = 0;
  bool cached_ = false;
  int threads_ = 1;
  std::vector<double> matrix_;
  std::vector<uint32_t> order_;
};

struct StumpChoice {
  size_t feature_index = 0;
  double threshold = 0.0;
  int polarity = 1;
  double error = 0.0;
  double alpha = 0.0;
  bool beats_chance = false;  // weighted error < 0.5
};

// Minimizes the weighted error over every (feature, midpoint threshold,
// polarity) triple; candidate thresholds are midpoints between consecutive
// sorted values plus one sentinel on each side for constant votes.
StumpChoice train_stump(const FeatureValues& values, std::span<const uint8_t> labels,
                        std::span<const double> weights, int threads = 1);

// Vote weight from the clamped error: ln((1 - e) / e), e in [1e-10, 1 - 1e-10].
double alpha_from_error(double error);

struct RoundLog {
  double epsilon = 0.0;
  double alpha = 0.0;
  size_t feature_index = 0;
  double threshold = 0.0;
  int polarity = 1;
};

struct StageTrainResult {
  CascadeStage stage;
  bool goal_met = false;
  std::vector<RoundLog> rounds;
  double detection_rate = 0.0;
  double false_positive_rate = 0.0;
};

StageTrainResult train_stage(const std::vector<HaarFeature>& features,
                             const SampleSet& set, const StageGoal& goal,
                             const TrainOptions& options);

struct CascadeTrainResult {
  CascadeModel model;
  std::vector<StageTrainResult> stages;
  bool ran_out_of_negatives = false;  // pool exhausted before the goal list
};

CascadeTrainResult train_cascade(const std::vector<GrayImage>& positives,
                                 const std::vector<GrayImage>& negative_pool,
                                 const std::vector<StageGoal>& goals,
                                 const TrainOptions& options);

// Whole-sample cascade decision (early exit), as used for bootstrapping.
bool cascade_accepts(const CascadeModel& model, const PreparedSample& sample);

}  // namespace fer
