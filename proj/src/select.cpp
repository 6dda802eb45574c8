#include "select.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "util.hpp"

namespace fer {

ConfidenceInterval confidence_interval(double p, long n, double z, IntervalMethod method) {
  if (n < 1) raise(ErrorCode::invalid_argument, "n must be >= 1");
  if (p < 0.0 || p > 1.0) raise(ErrorCode::invalid_argument, "p must be in [0, 1]");
  if (z <= 0.0) raise(ErrorCode::invalid_argument, "z must be positive");

  ConfidenceInterval out;
  out.z = z;
  if (z == kZ95) out.level = "95%";
  else if (z == kZ98) out.level = "98%";
  else out.level = "custom";

  double nn = static_cast<double>(n);
  if (method == IntervalMethod::wald) {
    double half = z * std::sqrt(p * (1.0 - p) / nn);
    out.lower = p - half;
    out.upper = p + half;
  } else {
    double z2 = z * z;
    double denom = 1.0 + z2 / nn;
    double center = (p + z2 / (2.0 * nn)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    out.lower = center - half;
    out.upper = center + half;
  }
  out.lower = std::clamp(out.lower, 0.0, 1.0);
  out.upper = std::clamp(out.upper, 0.0, 1.0);
  return out;
}

bool intervals_overlap(const ConfidenceInterval& a, const ConfidenceInterval& b) {
  return a.lower <= b.upper && b.lower <= a.upper;
}

ConfidenceInterval record_interval(const ModelRecord& record, double z,
                                   IntervalMethod method) {
  return confidence_interval(record.accuracy, record.n_tests, z, method);
}

std::vector<std::vector<bool>> overlap_matrix(const std::vector<ModelRecord>& records,
                                              double z, IntervalMethod method) {
  if (records.empty()) raise(ErrorCode::invalid_argument, "no records");
  std::vector<ConfidenceInterval> intervals;
  intervals.reserve(records.size());
  for (const auto& r : records) intervals.push_back(record_interval(r, z, method));

  std::vector<std::vector<bool>> out(records.size(),
                                     std::vector<bool>(records.size(), false));
  for (size_t i = 0; i < records.size(); ++i)
    for (size_t j = 0; j < records.size(); ++j)
      out[i][j] = intervals_overlap(intervals[i], intervals[j]);
  return out;
}

Selection select_model(const std::vector<ModelRecord>& records, double z,
                       double memory_budget_mb, IntervalMethod method) {
  if (records.empty()) raise(ErrorCode::invalid_argument, "no records");

  // the reference record: highest accuracy, ties broken by name order
  size_t top = 0;
  for (size_t i = 1; i < records.size(); ++i) {
    if (records[i].accuracy > records[top].accuracy ||
        (records[i].accuracy == records[top].accuracy &&
         records[i].name < records[top].name))
      top = i;
  }
  ConfidenceInterval top_interval = record_interval(records[top], z, method);

  std::vector<size_t> candidates;
  for (size_t i = 0; i < records.size(); ++i)
    if (intervals_overlap(record_interval(records[i], z, method), top_interval))
      candidates.push_back(i);

  auto better = [&](size_t a, size_t b) {
    if (records[a].size_mb != records[b].size_mb)
      return records[a].size_mb < records[b].size_mb;
    if (records[a].accuracy != records[b].accuracy)
      return records[a].accuracy > records[b].accuracy;
    return records[a].name < records[b].name;
  };

  Selection out;
  bool found = false;
  for (size_t i : candidates) {
    if (records[i].size_mb > memory_budget_mb) continue;
    if (!found || better(i, out.index)) {
      out.index = i;
      found = true;
    }
  }
  if (found) return out;

  // nothing fits: fall back to the smallest overlapping record
  out.budget_exceeded = true;
  out.index = candidates.front();
  for (size_t i : candidates)
    if (better(i, out.index)) out.index = i;
  return out;
}

std::vector<ModelRecord> parse_records_tsv(const std::string& text, long n_tests) {
  if (n_tests < 1) raise(ErrorCode::invalid_argument, "n_tests must be >= 1");
  std::vector<ModelRecord> records;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.find("name") == std::string::npos)
        raise(ErrorCode::format, "records: missing header line");
      header_seen = true;
      continue;
    }
    size_t tab1 = line.find('\t');
    size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos)
      raise(ErrorCode::format,
            "records: expected 3 tab-separated columns at line " + std::to_string(line_no));
    ModelRecord record;
    record.name = line.substr(0, tab1);
    try {
      record.accuracy = std::stod(line.substr(tab1 + 1, tab2 - tab1 - 1)) / 100.0;
      record.size_mb = std::stod(line.substr(tab2 + 1));
    } catch (const std::exception&) {
      raise(ErrorCode::format, "records: bad number at line " + std::to_string(line_no));
    }
    if (record.name.empty() || record.accuracy < 0.0 || record.accuracy > 1.0 ||
        record.size_mb <= 0.0)
      raise(ErrorCode::format, "records: invalid values at line " + std::to_string(line_no));
    record.n_tests = n_tests;
    records.push_back(std::move(record));
  }
  if (records.empty()) raise(ErrorCode::format, "records: no data rows");
  return records;
}

std::vector<ModelRecord> load_records_file(const std::string& path, long n_tests) {
  return parse_records_tsv(read_text_file(path), n_tests);
}

}  // namespace fer
