#pragma once

#include <string>
#include <vector>

#include "error.hpp"

namespace fer {

struct ModelRecord {
  std::string name;
  double accuracy = 0.0;  // fraction in [0, 1]
  double size_mb = 0.0;
  long n_tests = 0;
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double z = 0.0;
  std::string level;  // "95%", "98%" or "custom"
};

enum class IntervalMethod {
  wald,    // P +/- z * sqrt(P(1-P)/N), the default
  wilson,  // score interval, offered behind a flag
};

inline constexpr double kZ95 = 1.96;
inline constexpr double kZ98 = 2.33;

ConfidenceInterval confidence_interval(double p, long n, double z,
                                       IntervalMethod method = IntervalMethod::wald);

// Closed intervals intersect.
bool intervals_overlap(const ConfidenceInterval& a, const ConfidenceInterval& b);

ConfidenceInterval record_interval(const ModelRecord& record, double z,
                                   IntervalMethod method = IntervalMethod::wald);

// Symmetric, reflexive pairwise overlap relation.
std::vector<std::vector<bool>> overlap_matrix(const std::vector<ModelRecord>& records,
                                              double z,
                                              IntervalMethod method = IntervalMethod::wald);

struct Selection {
  size_t index = 0;
  bool budget_exceeded = false;
};

// Among the records whose interval overlaps the top-accuracy record's
// interval, picks the smallest one that fits the memory budget; ties break
// by higher accuracy, then name. With nothing inside the budget, returns the
// smallest overlapping record flagged budget_exceeded.
Selection select_model(const std::vector<ModelRecord>& records, double z,
                       double memory_budget_mb,
                       IntervalMethod method = IntervalMethod::wald);

// Tab-separated records document with a header line:
// name <tab> accuracy_percent <tab> size_mb
std::vector<ModelRecord> parse_records_tsv(const std::string& text, long n_tests);
std::vector<ModelRecord> load_records_file(const std::string& path, long n_tests);

}  // namespace fer
