#pragma once

#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "obdaml/dataset.hpp"
#include "obdaml/detail/csv.hpp"
#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"

namespace obdaml {

struct Prediction {
  std::string record_key;
  ClassCode predicted;
  double confidence = 0.0;
  std::string model_id;
  bool operator==(const Prediction&) const = default;
};

struct ExternalPredictions {
  std::vector<Prediction> predictions;
  std::vector<std::string> unknown_keys;
};

inline std::string format_predictions_csv(const std::vector<Prediction>& preds) {
  std::ostringstream os;
  csv::write_row(os, {"record_key", "predicted_code", "confidence", "model_id"});
  for (const auto& p : preds) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", p.confidence);
    csv::write_row(os, {p.record_key, p.predicted.str(), buf, p.model_id});
  }
  return os.str();
}

/// Parses `record_key,predicted_code,confidence,model_id`. When `known` is
/// non-empty, keys outside it are listed in `unknown_keys` and dropped.
inline ExternalPredictions parse_external_predictions(const std::string& text, const std::set<std::string>& known = {}) {
  auto rows = csv::parse(text);
  if (rows.empty()) throw Error(Errc::MalformedCsv, "missing header row");
  csv::Header header(rows.front());
  std::size_t c_key, c_code, c_conf, c_model;
  try {
    c_key = header.require("record_key");
    c_code = header.require("predicted_code");
    c_conf = header.require("confidence");
    c_model = header.require("model_id");
  } catch (const Error& e) {
    throw Error(Errc::MalformedCsv, e.what());
  }
  const std::size_t width = rows.front().fields.size();
  ExternalPredictions out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto where = "row " + std::to_string(row.number);
    if (row.fields.size() != width) throw Error(Errc::MalformedCsv, where + ": wrong number of columns");
    Prediction p;
    p.record_key = row.fields[c_key];
    p.model_id = row.fields[c_model];
    try {
      p.predicted = ClassCode::parse(row.fields[c_code]);
    } catch (const Error& e) {
      throw Error(Errc::MalformedCsv, where + ", column predicted_code: " + e.what());
    }
    const std::string& conf = row.fields[c_conf];
    char* end = nullptr;
    p.confidence = std::strtod(conf.c_str(), &end);
    if (conf.empty() || end != conf.c_str() + conf.size()) {
      throw Error(Errc::MalformedCsv, where + ", column confidence: not a number");
    }
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      throw Error(Errc::MalformedCsv, where + ", column confidence: " + conf + " outside [0,1]");
    }
    if (!known.empty() && !known.count(p.record_key)) {
      out.unknown_keys.push_back(p.record_key);
      continue;
    }
    out.predictions.push_back(std::move(p));
  }
  return out;
}

inline ExternalPredictions load_external_predictions(const std::string& path, const std::set<std::string>& known = {}) {
  return parse_external_predictions(csv::read_file(path), known);
}

}  // namespace obdaml
