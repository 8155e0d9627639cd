#pragma once

// Confusion matrices and precision/recall/F1 reports with weighted and macro
// averages, plus flat-vs-dynamic comparison tables.
//
// Zero-division convention: a ratio with a zero denominator is 0. Macro
// averages run over the classes seen in either the ground truth or the
// predictions of the evaluated records.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"

namespace obdaml {

template <class Label>
struct ConfusionMatrix {
  std::vector<Label> classes;  // sorted
  std::vector<std::vector<std::size_t>> matrix;  // [true][predicted]
  std::size_t n_excluded = 0;

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : matrix)
      for (auto v : row) t += v;
    return t;
  }
};

template <class Label>
ConfusionMatrix<Label> confusion(const std::vector<Label>& y_true, const std::vector<Label>& y_pred,
                                 std::size_t n_excluded = 0) {
  if (y_true.size() != y_pred.size()) {
    throw Error(Errc::ShapeMismatch, std::to_string(y_true.size()) + " true labels but " +
                                         std::to_string(y_pred.size()) + " predictions");
  }
  std::set<Label> all(y_true.begin(), y_true.end());
  all.insert(y_pred.begin(), y_pred.end());
  ConfusionMatrix<Label> cm;
  cm.classes.assign(all.begin(), all.end());
  cm.n_excluded = n_excluded;
  cm.matrix.assign(cm.classes.size(), std::vector<std::size_t>(cm.classes.size(), 0));
  auto idx = [&](const Label& l) {
    return static_cast<std::size_t>(std::lower_bound(cm.classes.begin(), cm.classes.end(), l) - cm.classes.begin());
  };
  for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.matrix[idx(y_true[i])][idx(y_pred[i])];
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class EvalMode { Flat, Dynamic };

inline std::string to_string(EvalMode m) { return m == EvalMode::Flat ? "flat" : "dynamic"; }

inline EvalMode parse_mode(std::string_view s) {
  if (s == "flat") return EvalMode::Flat;
  if (s == "dynamic") return EvalMode::Dynamic;
  throw Error(Errc::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

template <class Label>
struct BasicEvalReport {
  std::map<Label, ClassMetrics> per_class;
  Averages macro;
  Averages weighted;
  double accuracy = 0.0;
  std::size_t n_evaluated = 0;
  std::size_t n_excluded = 0;
  EvalMode mode = EvalMode::Flat;
  std::string model_id;
  BreakdownLevel level = BreakdownLevel::BL0;
};

using EvalReport = BasicEvalReport<ClassCode>;

namespace detail {
inline double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
inline double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }
}  // namespace detail

template <class Label>
BasicEvalReport<Label> report(const ConfusionMatrix<Label>& cm) {
  const std::size_t k = cm.classes.size();
  const std::size_t total = cm.total();
  if (total == 0) throw Error(Errc::EmptyMatrix, "no evaluated records");
  BasicEvalReport<Label> r;
  r.n_evaluated = total;
  r.n_excluded = cm.n_excluded;
  std::size_t trace = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t tp = cm.matrix[i][i], row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += cm.matrix[i][j];
      col += cm.matrix[j][i];
    }
    trace += tp;
    ClassMetrics m;
    m.precision = detail::safe_div(static_cast<double>(tp), static_cast<double>(col));
    m.recall = detail::safe_div(static_cast<double>(tp), static_cast<double>(row));
    m.f1 = detail::harmonic(m.precision, m.recall);
    m.support = row;
    r.per_class[cm.classes[i]] = m;
  }
  for (const auto& [_, m] : r.per_class) {
    r.macro.precision += m.precision;
    r.macro.recall += m.recall;
    r.macro.f1 += m.f1;
    const double w = static_cast<double>(m.support);
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
  }
  const double kd = static_cast<double>(k), td = static_cast<double>(total);
  r.macro = {r.macro.precision / kd, r.macro.recall / kd, r.macro.f1 / kd};
  r.weighted = {r.weighted.precision / td, r.weighted.recall / td, r.weighted.f1 / td};
  r.accuracy = static_cast<double>(trace) / td;
  return r;
}

struct MetricDelta {
  std::string name;
  double flat = 0.0;
  double dynamic = 0.0;
  double delta = 0.0;
  std::optional<double> relative;  // none when the flat value is 0
};

struct Comparison {
  BreakdownLevel level = BreakdownLevel::BL0;
  std::string model_id;
  std::vector<MetricDelta> rows;

  const MetricDelta& row(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return r;
    throw Error(Errc::InvalidArgument, "no comparison row '" + name + "'");
  }
};

inline Comparison compare(const EvalReport& flat, const EvalReport& dynamic) {
  if (flat.level != dynamic.level) throw Error(Errc::MismatchedReports, "reports are for different levels");
  if (flat.model_id != dynamic.model_id) throw Error(Errc::MismatchedReports, "reports are for different models");
  Comparison c{flat.level, flat.model_id, {}};
  auto add = [&](std::string name, double f, double d) {
    MetricDelta m{std::move(name), f, d, d - f, std::nullopt};
    if (f != 0.0) m.relative = (d - f) / f;
    c.rows.push_back(std::move(m));
  };
  add("weighted_precision", flat.weighted.precision, dynamic.weighted.precision);
  add("weighted_recall", flat.weighted.recall, dynamic.weighted.recall);
  add("weighted_f1", flat.weighted.f1, dynamic.weighted.f1);
  add("macro_precision", flat.macro.precision, dynamic.macro.precision);
  add("macro_recall", flat.macro.recall, dynamic.macro.recall);
  add("macro_f1", flat.macro.f1, dynamic.macro.f1);
  add("accuracy", flat.accuracy, dynamic.accuracy);
  return c;
}

namespace detail {
inline std::string fixed(double v, int prec = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}
}  // namespace detail

/// Weighted/Macro rows with one sub-row per report, P/R/F1 columns, then accuracy.
inline std::string format_report_table(const std::vector<const EvalReport*>& reports) {
  std::ostringstream os;
  if (reports.empty()) return {};
  os << "Level " << to_string(reports.front()->level) << ", model " << reports.front()->model_id << "\n";
  os << std::left << std::setw(10) << "" << std::setw(9) << "" << std::right << std::setw(7) << "P" << std::setw(7)
     << "R" << std::setw(7) << "F1" << "\n";
  auto block = [&](const char* name, auto get) {
    bool first = true;
    for (const auto* r : reports) {
      Averages a = get(*r);
      std::string mode = to_string(r->mode);
      mode[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(mode[0])));
      os << std::left << std::setw(10) << (first ? name : "") << std::setw(9) << mode << std::right << std::setw(7)
         << detail::fixed(a.precision) << std::setw(7) << detail::fixed(a.recall) << std::setw(7)
         << detail::fixed(a.f1) << "\n";
      first = false;
    }
  };
  block("Weighted", [](const EvalReport& r) { return r.weighted; });
  block("Macro", [](const EvalReport& r) { return r.macro; });
  bool first = true;
  for (const auto* r : reports) {
    std::string mode = to_string(r->mode);
    mode[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(mode[0])));
    os << std::left << std::setw(10) << (first ? "Accuracy" : "") << std::setw(9) << mode << std::right
       << std::setw(21) << detail::fixed(r->accuracy) << "  (n=" << r->n_evaluated << ", excluded=" << r->n_excluded
       << ", classes=" << r->per_class.size() << ")\n";
    first = false;
  }
  return os.str();
}

inline std::string format_comparison(const Comparison& c) {
  std::ostringstream os;
  os << "Flat vs dynamic, level " << to_string(c.level) << ", model " << c.model_id << "\n";
  os << std::left << std::setw(20) << "metric" << std::right << std::setw(9) << "flat" << std::setw(9) << "dynamic"
     << std::setw(9) << "delta" << std::setw(11) << "relative" << "\n";
  for (const auto& r : c.rows) {
    os << std::left << std::setw(20) << r.name << std::right << std::setw(9) << detail::fixed(r.flat, 3)
       << std::setw(9) << detail::fixed(r.dynamic, 3) << std::setw(9) << detail::fixed(r.delta, 3) << std::setw(11)
       << (r.relative ? detail::fixed(*r.relative * 100.0, 1) + "%" : std::string("n/a")) << "\n";
  }
  return os.str();
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["level"] = to_string(r.level);
  j["model_id"] = r.model_id;
  j["mode"] = to_string(r.mode);
  j["accuracy"] = r.accuracy;
  j["n_evaluated"] = r.n_evaluated;
  j["n_excluded"] = r.n_excluded;
  j["macro"] = {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}};
  j["weighted"] = {{"precision", r.weighted.precision}, {"recall", r.weighted.recall}, {"f1", r.weighted.f1}};
  nlohmann::json pc = nlohmann::json::object();
  for (const auto& [c, m] : r.per_class) {
    pc[c.str()] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  j["per_class"] = pc;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.level = parse_level(j.at("level").get<std::string>());
    r.model_id = j.at("model_id").get<std::string>();
    r.mode = parse_mode(j.at("mode").get<std::string>());
    r.accuracy = j.at("accuracy").get<double>();
    r.n_evaluated = j.at("n_evaluated").get<std::size_t>();
    r.n_excluded = j.at("n_excluded").get<std::size_t>();
    auto avg = [](const nlohmann::json& a) {
      return Averages{a.at("precision").get<double>(), a.at("recall").get<double>(), a.at("f1").get<double>()};
    };
    r.macro = avg(j.at("macro"));
    r.weighted = avg(j.at("weighted"));
    for (auto& [code, m] : j.at("per_class").items()) {
      r.per_class[ClassCode::parse(code)] = {m.at("precision").get<double>(), m.at("recall").get<double>(),
                                             m.at("f1").get<double>(), m.at("support").get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("report JSON: ") + e.what());
  }
  return r;
}

inline nlohmann::json comparison_to_json(const Comparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows) {
    rows.push_back({{"metric", r.name},
                    {"flat", r.flat},
                    {"dynamic", r.dynamic},
                    {"delta", r.delta},
                    {"relative", r.relative ? nlohmann::json(*r.relative) : nlohmann::json(nullptr)}});
  }
  return {{"level", to_string(c.level)}, {"model_id", c.model_id}, {"rows", rows}};
}

}  // namespace obdaml
