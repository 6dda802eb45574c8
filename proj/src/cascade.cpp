#include "cascade.hpp"

#include <cmath>

#include "json.hpp"
#include "util.hpp"

namespace fer {

namespace {

std::string stage_path(size_t s) { return "stages[" + std::to_string(s) + "]"; }
std::string weak_path(size_t s, size_t w) {
  return stage_path(s) + ".weak[" + std::to_string(w) + "]";
}

}  // namespace

void CascadeModel::validate() const {
  if (format_version != kCascadeFormatVersion)
    raise(ErrorCode::format, "cascade: unsupported version " + std::to_string(format_version));
  if (base_width < 4 || base_height < 4)
    raise(ErrorCode::format, "cascade: base window must be at least 4x4");
  if (stages.empty()) raise(ErrorCode::format, "cascade: no stages");
  for (size_t s = 0; s < stages.size(); ++s) {
    const auto& stage = stages[s];
    if (stage.weak.empty())
      raise(ErrorCode::format, "cascade: empty stage at " + stage_path(s));
    for (size_t w = 0; w < stage.weak.size(); ++w) {
      const auto& wc = stage.weak[w];
      if (wc.polarity != 1 && wc.polarity != -1)
        raise(ErrorCode::format, "cascade: polarity must be +1 or -1 at " + weak_path(s, w));
      if (!(wc.alpha >= 0.0))
        raise(ErrorCode::format, "cascade: alpha must be >= 0 at " + weak_path(s, w));
      if (wc.feature.rects.size() < 2 || wc.feature.rects.size() > 3)
        raise(ErrorCode::format, "cascade: feature needs 2 or 3 rects at " + weak_path(s, w));
      double weighted_area = 0.0;
      for (size_t r = 0; r < wc.feature.rects.size(); ++r) {
        const auto& wr = wc.feature.rects[r];
        if (wr.rect.w < 1 || wr.rect.h < 1 || wr.rect.x < 0 || wr.rect.y < 0 ||
            wr.rect.x + wr.rect.w > base_width || wr.rect.y + wr.rect.h > base_height)
          raise(ErrorCode::format, "cascade: rect outside base window at " +
                                       weak_path(s, w) + ".rects[" + std::to_string(r) + "]");
        weighted_area += wr.weight * static_cast<double>(wr.rect.area());
      }
      if (std::abs(weighted_area) > 1e-9)
        raise(ErrorCode::format,
              "cascade: feature weights do not cancel over a uniform window at " +
                  weak_path(s, w));
    }
  }
}

StageEval eval_stage(const CascadeStage& stage, const IntegralImage& ii,
                     const Rect& window, double scale, double inv_norm) {
  double score = 0.0;
  for (const auto& wc : stage.weak) {
    double value = eval_feature(wc.feature, ii, window, scale, inv_norm);
    bool vote = wc.polarity > 0 ? value < wc.threshold : value > wc.threshold;
    if (vote) score += wc.alpha;
  }
  return {score >= stage.threshold, score};
}

std::vector<ScaledStage> scale_cascade(const CascadeModel& model, double scale,
                                       int win_w, int win_h) {
  std::vector<ScaledStage> out;
  out.reserve(model.stages.size());
  for (const auto& stage : model.stages) {
    ScaledStage ss;
    ss.threshold = stage.threshold;
    ss.weak.reserve(stage.weak.size());
    for (const auto& wc : stage.weak)
      ss.weak.push_back({scale_feature(wc.feature, scale, win_w, win_h), wc.threshold,
                         wc.polarity, wc.alpha});
    out.push_back(std::move(ss));
  }
  return out;
}

StageEval eval_scaled_stage(const ScaledStage& stage, const IntegralImage& ii,
                            int win_x, int win_y, double inv_norm) {
  double score = 0.0;
  for (const auto& wc : stage.weak) {
    double value = eval_scaled_raw(wc.feature, ii, win_x, win_y) * inv_norm;
    bool vote = wc.polarity > 0 ? value < wc.threshold : value > wc.threshold;
    if (vote) score += wc.alpha;
  }
  return {score >= stage.threshold, score};
}

using ordered_json = nlohmann::ordered_json;

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key,
                              const std::string& path) {
  auto it = j.find(key);
  if (it == j.end())
    raise(ErrorCode::format, "cascade: missing field '" + std::string(key) + "' at " + path);
  return *it;
}

double require_number(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_number())
    raise(ErrorCode::format, "cascade: field '" + std::string(key) + "' must be a number at " + path);
  return v.get<double>();
}

int require_int(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_number_integer())
    raise(ErrorCode::format, "cascade: field '" + std::string(key) + "' must be an integer at " + path);
  return v.get<int>();
}

}  // namespace

CascadeModel parse_cascade(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::format, std::string("cascade: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) raise(ErrorCode::format, "cascade: document must be an object");

  CascadeModel model;
  model.format_version = require_int(doc, "version", "$");
  if (model.format_version != kCascadeFormatVersion)
    raise(ErrorCode::format,
          "cascade: unsupported version " + std::to_string(model.format_version) +
              ", expected " + std::to_string(kCascadeFormatVersion));
  model.base_width = require_int(doc, "base_width", "$");
  model.base_height = require_int(doc, "base_height", "$");

  const auto& stages = require(doc, "stages", "$");
  if (!stages.is_array()) raise(ErrorCode::format, "cascade: 'stages' must be an array");
  for (size_t s = 0; s < stages.size(); ++s) {
    const auto& jstage = stages[s];
    CascadeStage stage;
    stage.threshold = require_number(jstage, "threshold", stage_path(s));
    const auto& weak = require(jstage, "weak", stage_path(s));
    if (!weak.is_array())
      raise(ErrorCode::format, "cascade: 'weak' must be an array at " + stage_path(s));
    for (size_t w = 0; w < weak.size(); ++w) {
      const auto& jweak = weak[w];
      const std::string path = weak_path(s, w);
      WeakClassifier wc;
      const auto& jkind = require(jweak, "kind", path);
      if (!jkind.is_string() ||
          !feature_kind_from_name(jkind.get<std::string>(), wc.feature.kind))
        raise(ErrorCode::format, "cascade: unknown feature kind at " + path);
      const auto& jrects = require(jweak, "rects", path);
      if (!jrects.is_array())
        raise(ErrorCode::format, "cascade: 'rects' must be an array at " + path);
      for (size_t r = 0; r < jrects.size(); ++r) {
        const std::string rpath = path + ".rects[" + std::to_string(r) + "]";
        const auto& jr = jrects[r];
        WeightedRect wr;
        wr.rect.x = require_int(jr, "x", rpath);
        wr.rect.y = require_int(jr, "y", rpath);
        wr.rect.w = require_int(jr, "w", rpath);
        wr.rect.h = require_int(jr, "h", rpath);
        wr.weight = require_number(jr, "weight", rpath);
        wc.feature.rects.push_back(wr);
      }
      wc.threshold = require_number(jweak, "threshold", path);
      wc.polarity = require_int(jweak, "polarity", path);
      wc.alpha = require_number(jweak, "alpha", path);
      stage.weak.push_back(std::move(wc));
    }
    model.stages.push_back(std::move(stage));
  }

  model.validate();
  return model;
}

std::string serialize_cascade(const CascadeModel& model) {
  model.validate();
  ordered_json doc;
  doc["version"] = model.format_version;
  doc["base_width"] = model.base_width;
  doc["base_height"] = model.base_height;
  doc["stages"] = ordered_json::array();
  for (const auto& stage : model.stages) {
    ordered_json jstage;
    jstage["threshold"] = stage.threshold;
    jstage["weak"] = ordered_json::array();
    for (const auto& wc : stage.weak) {
      ordered_json jweak;
      jweak["kind"] = feature_kind_name(wc.feature.kind);
      jweak["rects"] = ordered_json::array();
      for (const auto& wr : wc.feature.rects) {
        ordered_json jr;
        jr["x"] = wr.rect.x;
        jr["y"] = wr.rect.y;
        jr["w"] = wr.rect.w;
        jr["h"] = wr.rect.h;
        jr["weight"] = wr.weight;
        jweak["rects"].push_back(std::move(jr));
      }
      jweak["threshold"] = wc.threshold;
      jweak["polarity"] = wc.polarity;
      jweak["alpha"] = wc.alpha;
      jstage["weak"].push_back(std::move(jweak));
    }
    doc["stages"].push_back(std::move(jstage));
  }
  return doc.dump(2) + "\n";
}

CascadeModel read_cascade_file(const std::string& path) {
  return parse_cascade(read_text_file(path));
}

void write_cascade_file(const std::string& path, const CascadeModel& model) {
  write_text_file(path, serialize_cascade(model));
}

}  // namespace fer
