#pragma once

// Threshold sweep: macro-F1 on the validation split as a function of the
// rollup threshold v, with one fixed split reused for every grid point.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "obdaml/pipeline.hpp"

namespace obdaml {

struct SweepConfig {
  BreakdownLevel level = BreakdownLevel::BL1;
  ModelConfig model;
  std::vector<std::size_t> grid = default_grid();
  double t = 0.85;
  double epsilon = 0.01;
  std::uint64_t seed = 42;
  std::size_t min_support = 10;
  RootPolicy root_policy = RootPolicy::KeepIfMinSupport;

  static std::vector<std::size_t> default_grid() {
    std::vector<std::size_t> g;
    for (std::size_t v = 0; v <= 200; v += 10) g.push_back(v);
    return g;
  }

  void validate() const {
    if (grid.empty()) throw Error(Errc::InvalidArgument, "sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (grid[i] <= grid[i - 1]) throw Error(Errc::InvalidArgument, "sweep grid must be strictly increasing");
    if (!(t > 0.0 && t <= 1.0)) throw Error(Errc::InvalidArgument, "target t must lie in (0,1]");
    if (!(epsilon >= 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be non-negative");
  }
};

/// `start:end:step`, inclusive of `end` when it falls on the step.
inline std::vector<std::size_t> parse_grid(const std::string& spec) {
  std::size_t a = 0, b = 0, s = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%zu:%zu:%zu%c", &a, &b, &s, &tail) != 3 || s == 0 || b < a) {
    throw Error(Errc::InvalidArgument, "grid must look like start:end:step, got '" + spec + "'");
  }
  std::vector<std::size_t> g;
  for (std::size_t v = a; v <= b; v += s) g.push_back(v);
  return g;
}

struct SweepPoint {
  std::size_t v = 0;
  double macro_f1 = 0.0;
  std::size_t n_retained_classes = 0;
  std::size_t n_excluded_validation = 0;
  bool operator==(const SweepPoint&) const = default;
};

inline std::vector<SweepPoint> run_sweep(const Dataset& ds, const Hierarchy& h, const SweepConfig& cfg,
                                         const ExternalPredictions* external = nullptr) {
  cfg.validate();
  ExperimentConfig ec;
  ec.level = cfg.level;
  ec.mode = EvalMode::Dynamic;
  ec.model = cfg.model;
  ec.model.rf.seed = cfg.seed;
  ec.rollup.min_support = cfg.min_support;
  ec.rollup.root_policy = cfg.root_policy;
  FeatureSet features = build_features(ds, ec.model.vocabulary_cap(), ec.model.cleaning);

  std::vector<SweepPoint> points;
  for (auto v : cfg.grid) {
    ec.rollup.v = v;
    auto r = run_experiment(ds, h, ec, features, external);
    points.push_back({v, r.report.macro.f1, r.rollup.mapping.retained.counts.size(), r.n_excluded_validation});
  }
  return points;
}

/// Smallest v reaching `t` after which macro-F1 never drops below t - epsilon.
inline std::optional<std::size_t> select_threshold(const std::vector<SweepPoint>& points, double t, double epsilon) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].macro_f1 < t) continue;
    bool stable = true;
    for (std::size_t j = i + 1; j < points.size() && stable; ++j) stable = points[j].macro_f1 >= t - epsilon;
    if (stable) return points[i].v;
  }
  return std::nullopt;
}

/// Grid point with the highest macro-F1; earliest on ties.
inline std::optional<SweepPoint> best_point(const std::vector<SweepPoint>& points) {
  if (points.empty()) return std::nullopt;
  return *std::max_element(points.begin(), points.end(),
                           [](const SweepPoint& a, const SweepPoint& b) { return a.macro_f1 < b.macro_f1; });
}

inline std::string format_sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << "v,macro_f1,n_retained_classes,n_excluded_validation\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f", p.macro_f1);
    os << p.v << ',' << buf << ',' << p.n_retained_classes << ',' << p.n_excluded_validation << '\n';
  }
  return os.str();
}

/// Line chart of macro-F1 against v.
inline std::string sweep_svg(const std::vector<SweepPoint>& points, const std::string& title,
                             std::optional<std::size_t> selected = {}) {
  const double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
  std::size_t vmax = 1;
  for (const auto& p : points) vmax = std::max(vmax, p.v);
  auto sx = [&](double v) { return L + (W - L - R) * v / static_cast<double>(vmax); };
  auto sy = [&](double f) { return T + (H - T - B) * (1.0 - f); };
  std::ostringstream os;
  char buf[160];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", L, H - B, W - R, H - B);
  os << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", L, T, L, H - B);
  os << buf;
  for (int k = 0; k <= 10; k += 2) {
    double f = k / 10.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.1f</text>\n", L - 6, sy(f) + 4, f);
    os << buf;
  }
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%zu</text>\n", sx(static_cast<double>(p.v)), H - B + 16, p.v);
    os << buf;
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">v</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.1f,%.1f ", sx(static_cast<double>(p.v)), sy(p.macro_f1));
    os << buf;
  }
  os << "\"/>\n";
  for (const auto& p : points) {
    bool sel = selected && *selected == p.v;
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"%d\" fill=\"%s\"/>\n", sx(static_cast<double>(p.v)),
                  sy(p.macro_f1), sel ? 5 : 3, sel ? "crimson" : "steelblue");
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace obdaml
