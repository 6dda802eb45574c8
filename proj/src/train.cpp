#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace fer {

namespace {

constexpr double kErrorClamp = 1e-10;

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(first, last) over [0, count) split across threads. Results must not
// depend on the partitioning.
void parallel_ranges(size_t count, int threads, const auto& fn) {
  if (threads <= 1 || count < 2) {
    fn(size_t{0}, count, 0);
    return;
  }
  size_t n_threads = std::min<size_t>(static_cast<size_t>(threads), count);
  size_t chunk = (count + n_threads - 1) / n_threads;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < n_threads; ++t) {
    size_t first = t * chunk;
    size_t last = std::min(count, first + chunk);
    if (first >= last) break;
    pool.emplace_back([&fn, first, last, t] { fn(first, last, static_cast<int>(t)); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

PreparedSample prepare_sample(const GrayImage& img, int base_w, int base_h) {
  if (img.width() != base_w || img.height() != base_h)
    raise(ErrorCode::train, "sample is " + std::to_string(img.width()) + "x" +
                                std::to_string(img.height()) + ", expected " +
                                std::to_string(base_w) + "x" + std::to_string(base_h));
  PreparedSample out{IntegralImage(img), 0.0};
  Rect window{0, 0, base_w, base_h};
  auto stats = out.ii.window_stats(window);
  double stddev = stats.stddev < 1.0 ? 1.0 : stats.stddev;
  out.inv_norm = 1.0 / (static_cast<double>(window.area()) * stddev);
  return out;
}

SampleSet SampleSet::build(const std::vector<GrayImage>& positives,
                           const std::vector<GrayImage>& negatives, int base_w,
                           int base_h) {
  if (positives.empty() || negatives.empty())
    raise(ErrorCode::train, "need at least one positive and one negative sample");
  SampleSet set;
  set.n_pos = positives.size();
  set.n_neg = negatives.size();
  set.samples.reserve(set.n_pos + set.n_neg);
  set.labels.reserve(set.n_pos + set.n_neg);
  for (const auto& img : positives) {
    set.samples.push_back(prepare_sample(img, base_w, base_h));
    set.labels.push_back(1);
  }
  for (const auto& img : negatives) {
    set.samples.push_back(prepare_sample(img, base_w, base_h));
    set.labels.push_back(0);
  }
  return set;
}

FeatureValues::FeatureValues(const std::vector<HaarFeature>& features,
                             const SampleSet& set, const TrainOptions& options)
    : features_(&features),
      set_(&set),
      n_features_(features.size()),
      n_samples_(set.samples.size()),
      threads_(resolve_threads(options.threads)) {
  scaled_.reserve(n_features_);
  for (const auto& f : features)
    scaled_.push_back(scale_feature(f, 1.0, options.base_width, options.base_height));

  uint64_t matrix_bytes = static_cast<uint64_t>(n_features_) * n_samples_ * sizeof(double);
  uint64_t order_bytes = static_cast<uint64_t>(n_features_) * n_samples_ * sizeof(uint32_t);
  cached_ = matrix_bytes + order_bytes <= options.memory_budget_mb * 1024ull * 1024ull;
  if (cached_) fill_matrix();
}

FeatureValues::FeatureValues(std::vector<double> matrix, size_t n_features,
                             size_t n_samples)
    : n_features_(n_features), n_samples_(n_samples), cached_(true),
      matrix_(std::move(matrix)) {
  if (matrix_.size() != n_features * n_samples)
    raise(ErrorCode::invalid_argument, "matrix size does not match dimensions");
  order_.resize(matrix_.size());
  for (size_t f = 0; f < n_features_; ++f) {
    const double* row = matrix_.data() + f * n_samples_;
    uint32_t* ord = order_.data() + f * n_samples_;
    std::iota(ord, ord + n_samples_, 0u);
    std::sort(ord, ord + n_samples_, [row](uint32_t a, uint32_t b) {
      return row[a] != row[b] ? row[a] < row[b] : a < b;
    });
  }
}

void FeatureValues::fill_matrix() {
  matrix_.resize(n_features_ * n_samples_);
  order_.resize(n_features_ * n_samples_);
  parallel_ranges(n_features_, threads_, [this](size_t first, size_t last, int) {
    for (size_t f = first; f < last; ++f) {
      double* row = matrix_.data() + f * n_samples_;
      for (size_t s = 0; s < n_samples_; ++s) {
        const auto& sample = set_->samples[s];
        row[s] = eval_scaled_raw(scaled_[f], sample.ii, 0, 0) * sample.inv_norm;
      }
      uint32_t* ord = order_.data() + f * n_samples_;
      std::iota(ord, ord + n_samples_, 0u);
      std::sort(ord, ord + n_samples_, [row](uint32_t a, uint32_t b) {
        return row[a] != row[b] ? row[a] < row[b] : a < b;
      });
    }
  });
}

const double* FeatureValues::row(size_t f, std::vector<double>& scratch) const {
  if (cached_) return matrix_.data() + f * n_samples_;
  scratch.resize(n_samples_);
  for (size_t s = 0; s < n_samples_; ++s) {
    const auto& sample = set_->samples[s];
    scratch[s] = eval_scaled_raw(scaled_[f], sample.ii, 0, 0) * sample.inv_norm;
  }
  return scratch.data();
}

const uint32_t* FeatureValues::order(size_t f, const double* values,
                                     std::vector<uint32_t>& scratch) const {
  if (cached_ && !order_.empty()) return order_.data() + f * n_samples_;
  scratch.resize(n_samples_);
  std::iota(scratch.begin(), scratch.end(), 0u);
  std::sort(scratch.begin(), scratch.end(), [values](uint32_t a, uint32_t b) {
    return values[a] != values[b] ? values[a] < values[b] : a < b;
  });
  return scratch.data();
}

double alpha_from_error(double error) {
  double e = std::clamp(error, kErrorClamp, 1.0 - kErrorClamp);
  return std::log((1.0 - e) / e);
}

namespace {

struct Candidate {
  double error = 2.0;
  size_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;

  // Total order so that the parallel reduction matches a sequential scan.
  bool better_than(const Candidate& other) const {
    if (error != other.error) return error < other.error;
    if (feature != other.feature) return feature < other.feature;
    if (threshold != other.threshold) return threshold < other.threshold;
    return polarity > other.polarity;
  }
};

// Sweep one feature's sorted values; thresholds halfway between neighbors
// plus one sentinel on each side.
void sweep_feature(size_t f, const double* values, const uint32_t* order,
                   std::span<const uint8_t> labels, std::span<const double> weights,
                   double total_pos, double total_neg, Candidate& best) {
  size_t n = labels.size();
  auto consider = [&](double err, double threshold, int polarity) {
    Candidate c{err, f, threshold, polarity};
    if (c.better_than(best)) best = c;
  };

  double lo = values[order[0]] - 1.0;
  consider(total_pos, lo, 1);   // nothing below: every sample votes 0
  consider(total_neg, lo, -1);  // everything above: every sample votes 1

  double below_pos = 0.0;
  double below_neg = 0.0;
  for (size_t i = 0; i < n; ++i) {
    uint32_t s = order[i];
    if (labels[s]) below_pos += weights[s];
    else below_neg += weights[s];
    double v = values[s];
    if (i + 1 < n && values[order[i + 1]] == v) continue;
    double threshold = i + 1 < n ? v + (values[order[i + 1]] - v) / 2.0 : v + 1.0;
    // polarity +1 votes 1 iff value < threshold
    consider(below_neg + (total_pos - below_pos), threshold, 1);
    // polarity -1 votes 1 iff value > threshold
    consider(below_pos + (total_neg - below_neg), threshold, -1);
  }
}

}  // namespace

StumpChoice train_stump(const FeatureValues& values, std::span<const uint8_t> labels,
                        std::span<const double> weights, int threads) {
  size_t n = labels.size();
  if (n != values.sample_count() || n != weights.size())
    raise(ErrorCode::invalid_argument, "labels/weights size mismatch");
  double total_pos = 0.0;
  double total_neg = 0.0;
  for (size_t s = 0; s < n; ++s) (labels[s] ? total_pos : total_neg) += weights[s];
  if (total_pos <= 0.0 || total_neg <= 0.0)
    raise(ErrorCode::train, "both classes need positive total weight");

  int n_threads = resolve_threads(threads);
  std::vector<Candidate> bests(static_cast<size_t>(n_threads) + 1);
  parallel_ranges(values.feature_count(), n_threads,
                  [&](size_t first, size_t last, int t) {
                    std::vector<double> value_scratch;
                    std::vector<uint32_t> order_scratch;
                    Candidate local;
                    for (size_t f = first; f < last; ++f) {
                      const double* row = values.row(f, value_scratch);
                      const uint32_t* ord = values.order(f, row, order_scratch);
                      sweep_feature(f, row, ord, labels, weights, total_pos, total_neg,
                                    local);
                    }
                    bests[static_cast<size_t>(t)] = local;
                  });

  Candidate best;
  for (const auto& c : bests)
    if (c.error <= 1.0 && c.better_than(best)) best = c;
  if (best.error > 1.0) raise(ErrorCode::train, "stump search found no candidate");

  StumpChoice out;
  out.feature_index = best.feature;
  out.threshold = best.threshold;
  out.polarity = best.polarity;
  out.error = best.error;
  out.alpha = alpha_from_error(best.error);
  out.beats_chance = best.error < 0.5;
  return out;
}

namespace {

// Largest threshold keeping at least ceil(rate * n_pos) positives.
double tune_stage_threshold(const std::vector<double>& scores,
                            std::span<const uint8_t> labels, size_t n_pos, double rate) {
  std::vector<double> pos_scores;
  pos_scores.reserve(n_pos);
  for (size_t s = 0; s < labels.size(); ++s)
    if (labels[s]) pos_scores.push_back(scores[s]);
  size_t keep = static_cast<size_t>(std::ceil(rate * static_cast<double>(pos_scores.size())));
  keep = std::clamp<size_t>(keep, 1, pos_scores.size());
  std::nth_element(pos_scores.begin(), pos_scores.begin() + (keep - 1), pos_scores.end(),
                   std::greater<double>());
  return pos_scores[keep - 1];
}

}  // namespace

StageTrainResult train_stage(const std::vector<HaarFeature>& features,
                             const SampleSet& set, const StageGoal& goal,
                             const TrainOptions& options) {
  if (goal.max_weak_classifiers < 1 || goal.min_detection_rate <= 0.0 ||
      goal.min_detection_rate > 1.0 || goal.max_false_positive_rate <= 0.0 ||
      goal.max_false_positive_rate > 1.0)
    raise(ErrorCode::invalid_argument, "invalid stage goal");

  size_t n = set.samples.size();
  FeatureValues values(features, set, options);
  int threads = resolve_threads(options.threads);

  // initial weights: half the mass on each class
  std::vector<double> weights(n);
  for (size_t s = 0; s < n; ++s)
    weights[s] = set.labels[s] ? 0.5 / static_cast<double>(set.n_pos)
                               : 0.5 / static_cast<double>(set.n_neg);

  StageTrainResult result;
  std::vector<double> scores(n, 0.0);
  std::vector<double> scratch;
  std::vector<uint32_t> order_scratch;

  for (int round = 0; round < goal.max_weak_classifiers; ++round) {
    StumpChoice choice = train_stump(values, set.labels, weights, threads);
    if (!choice.beats_chance) break;

    WeakClassifier wc;
    wc.feature = features[choice.feature_index];
    wc.threshold = choice.threshold;
    wc.polarity = choice.polarity;
    wc.alpha = choice.alpha;
    result.stage.weak.push_back(wc);
    result.rounds.push_back(
        {choice.error, choice.alpha, choice.feature_index, choice.threshold, choice.polarity});

    // votes of the new stump, reused for the reweighting and the stage score
    const double* row = values.row(choice.feature_index, scratch);
    double factor = (1.0 - std::clamp(choice.error, kErrorClamp, 1.0 - kErrorClamp)) /
                    std::clamp(choice.error, kErrorClamp, 1.0 - kErrorClamp);
    double total = 0.0;
    for (size_t s = 0; s < n; ++s) {
      bool vote = choice.polarity > 0 ? row[s] < choice.threshold
                                      : row[s] > choice.threshold;
      if (vote) scores[s] += choice.alpha;
      if (vote != static_cast<bool>(set.labels[s])) weights[s] *= factor;
      total += weights[s];
    }
    for (auto& w : weights) w /= total;

    result.stage.threshold =
        tune_stage_threshold(scores, set.labels, set.n_pos, goal.min_detection_rate);

    size_t pos_kept = 0;
    size_t neg_kept = 0;
    for (size_t s = 0; s < n; ++s) {
      if (scores[s] >= result.stage.threshold) (set.labels[s] ? pos_kept : neg_kept)++;
    }
    result.detection_rate = static_cast<double>(pos_kept) / static_cast<double>(set.n_pos);
    result.false_positive_rate =
        static_cast<double>(neg_kept) / static_cast<double>(set.n_neg);
    if (result.false_positive_rate <= goal.max_false_positive_rate) {
      result.goal_met = true;
      break;
    }
  }
  (void)order_scratch;

  if (result.stage.weak.empty())
    raise(ErrorCode::train, "no weak classifier beats chance on this set");
  return result;
}

bool cascade_accepts(const CascadeModel& model, const PreparedSample& sample) {
  Rect window{0, 0, model.base_width, model.base_height};
  for (const auto& stage : model.stages) {
    auto eval = eval_stage(stage, sample.ii, window, 1.0, sample.inv_norm);
    if (!eval.passed) return false;
  }
  return true;
}

CascadeTrainResult train_cascade(const std::vector<GrayImage>& positives,
                                 const std::vector<GrayImage>& negative_pool,
                                 const std::vector<StageGoal>& goals,
                                 const TrainOptions& options) {
  if (goals.empty()) raise(ErrorCode::invalid_argument, "no stage goals given");
  if (positives.empty() || negative_pool.empty())
    raise(ErrorCode::train, "positive and negative pools must be non-empty");

  auto features = enumerate_features(options.base_width, options.base_height);

  CascadeTrainResult result;
  result.model.base_width = options.base_width;
  result.model.base_height = options.base_height;

  std::vector<GrayImage> working_negatives = negative_pool;
  for (const auto& goal : goals) {
    if (working_negatives.empty()) {
      // no false positives left to mine: the cascade is already strict enough
      result.ran_out_of_negatives = true;
      break;
    }
    SampleSet set = SampleSet::build(positives, working_negatives, options.base_width,
                                     options.base_height);
    StageTrainResult stage = train_stage(features, set, goal, options);
    result.model.stages.push_back(stage.stage);
    result.stages.push_back(std::move(stage));

    // bootstrap: keep only negatives that the cascade so far still accepts
    std::vector<GrayImage> survivors;
    for (const auto& img : working_negatives) {
      if (cascade_accepts(result.model,
                          prepare_sample(img, options.base_width, options.base_height)))
        survivors.push_back(img);
    }
    working_negatives = std::move(survivors);
  }

  result.model.validate();
  return result;
}

}  // namespace fer
