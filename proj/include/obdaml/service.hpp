#pragma once

// Domain-expert feedback loop: browse low-confidence validation predictions,
// record label corrections, and retrain with corrections folded into the
// training data.
//
// Snapshots are immutable and swapped under a mutex, so a reader holding a
// shared_ptr sees one consistent version for the whole request. Corrections
// go through a single-writer append-only log; only one retrain runs at a time.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "obdaml/dataset.hpp"
#include "obdaml/pipeline.hpp"
#include "obdaml/sweep.hpp"

namespace obdaml {

struct Correction {
  std::string record_key;
  BreakdownLevel level = BreakdownLevel::BL1;
  ClassCode corrected_code;
  std::string annotator;
  std::int64_t timestamp = 0;  // UTC seconds
  std::uint64_t sequence = 0;  // assigned by the log
  bool operator==(const Correction&) const = default;
};

inline nlohmann::json correction_to_json(const Correction& c) {
  return {{"record", c.record_key},
          {"level", to_string(c.level)},
          {"corrected_code", c.corrected_code.str()},
          {"annotator", c.annotator},
          {"timestamp", c.timestamp},
          {"sequence", c.sequence}};
}

inline Correction correction_from_json(const nlohmann::json& j) {
  Correction c;
  try {
    c.record_key = j.at("record").get<std::string>();
    c.level = parse_level(j.at("level").get<std::string>());
    c.corrected_code = ClassCode::parse(j.at("corrected_code").get<std::string>());
    c.annotator = j.value("annotator", std::string());
    c.timestamp = j.value("timestamp", std::int64_t{0});
    c.sequence = j.value("sequence", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("correction: ") + e.what());
  }
  return c;
}

/// Append-only correction history, optionally mirrored to a JSON-lines file.
class CorrectionLog {
 public:
  CorrectionLog() = default;
  explicit CorrectionLog(std::optional<std::string> path) : path_(std::move(path)) {
    if (!path_) return;
    std::ifstream in(*path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        entries_.push_back(correction_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::ParseError, *path_ + ": " + e.what());
      }
      next_ = std::max(next_, entries_.back().sequence + 1);
    }
  }

  std::uint64_t append(Correction c) {
    std::lock_guard lock(mu_);
    c.sequence = next_++;
    if (path_) {
      std::ofstream out(*path_, std::ios::app);
      if (!out) throw Error(Errc::IoError, "cannot append to '" + *path_ + "'");
      out << correction_to_json(c).dump() << '\n';
    }
    entries_.push_back(std::move(c));
    return entries_.back().sequence;
  }

  std::vector<Correction> history() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

  /// Newest correction per (record, level).
  std::map<std::pair<std::string, BreakdownLevel>, Correction> active() const {
    std::map<std::pair<std::string, BreakdownLevel>, Correction> out;
    for (const auto& c : history()) {
      auto& slot = out[{c.record_key, c.level}];
      if (slot.record_key.empty() || c.sequence > slot.sequence) slot = c;
    }
    return out;
  }

 private:
  std::optional<std::string> path_;
  mutable std::mutex mu_;
  std::vector<Correction> entries_;
  std::uint64_t next_ = 1;
};

/// Replays active corrections onto the original labels.
inline Dataset apply_corrections(Dataset ds, const std::map<std::pair<std::string, BreakdownLevel>, Correction>& active) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.size(); ++i) index.emplace(ds.records[i].key(), i);
  for (const auto& [key, c] : active) {
    auto it = index.find(c.record_key);
    if (it != index.end()) ds.records[it->second].label(c.level) = c.corrected_code;
  }
  return ds;
}

struct Snapshot {
  std::uint64_t version = 0;
  BreakdownLevel level = BreakdownLevel::BL1;
  ModelKind kind = ModelKind::NaiveBayes;
  std::size_t v = 0;
  ExperimentResult dynamic;
  EvalReport flat;
  std::vector<SweepPoint> sweep;
  std::optional<std::size_t> selected_v;
};

struct ServiceOptions {
  ModelConfig model;
  RollupConfig rollup;
  SweepConfig sweep;  // grid/t/epsilon used when retrain has no explicit v
  std::optional<std::string> corrections_path;
  std::optional<std::string> static_dir;
  std::optional<ExternalPredictions> external;
  std::function<void()> on_retrain_started;  // test hook, runs while Busy is held
};

struct PredictionItem {
  const Record* record = nullptr;
  Prediction prediction;
  std::vector<ClassCode> path;  // root first, ends with the predicted code
};

struct PredictionPage {
  std::uint64_t version = 0;
  std::size_t total = 0;
  std::size_t offset = 0;
  std::size_t limit = 0;
  std::vector<PredictionItem> items;
  std::shared_ptr<const Snapshot> pinned;  // keeps `items` valid
};

struct RetrainSummary {
  std::uint64_t version = 0;
  std::optional<double> before_macro_f1;
  double after_macro_f1 = 0.0;
  std::size_t v = 0;
  std::size_t n_retained_classes = 0;
  std::size_t corrections_applied = 0;
};

class Service {
 public:
  Service(Dataset ds, HierarchySet hierarchies, ServiceOptions opts = {})
      : base_(std::move(ds)), hierarchies_(std::move(hierarchies)), opts_(std::move(opts)), log_(opts_.corrections_path) {
    if (base_.split.size() != base_.records.size()) throw Error(Errc::InvalidArgument, "dataset has no split");
    for (std::size_t i = 0; i < base_.size(); ++i) index_.emplace(base_.records[i].key(), i);
  }

  const Dataset& dataset() const noexcept { return base_; }
  const ServiceOptions& options() const noexcept { return opts_; }
  const CorrectionLog& corrections_log() const noexcept { return log_; }

  const Hierarchy& hierarchy(BreakdownLevel level) const {
    const auto& h = hierarchies_[index_of(level)];
    if (!h) throw Error(Errc::UnknownClass, "no hierarchy loaded for " + to_string(level));
    return *h;
  }

  std::shared_ptr<const Snapshot> snapshot(BreakdownLevel level, ModelKind kind) const {
    std::lock_guard lock(snap_mu_);
    auto it = snapshots_.find({level, kind});
    if (it == snapshots_.end()) {
      throw Error(Errc::NoModel, "no trained " + to_string(kind) + " model for " + to_string(level));
    }
    return it->second;
  }

  std::vector<std::shared_ptr<const Snapshot>> snapshots() const {
    std::lock_guard lock(snap_mu_);
    std::vector<std::shared_ptr<const Snapshot>> out;
    for (const auto& [_, s] : snapshots_) out.push_back(s);
    return out;
  }

  const Record* record(const std::string& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &base_.records[it->second];
  }

  PredictionPage list_low_confidence(BreakdownLevel level, ModelKind kind, double max_confidence, std::size_t limit,
                                     std::size_t offset) const {
    PredictionPage page;
    page.pinned = snapshot(level, kind);
    page.version = page.pinned->version;
    page.offset = offset;
    page.limit = limit;
    std::vector<const Prediction*> matches;
    for (const auto& p : page.pinned->dynamic.predictions)
      if (p.confidence <= max_confidence) matches.push_back(&p);
    std::stable_sort(matches.begin(), matches.end(), [](const Prediction* a, const Prediction* b) {
      return a->confidence != b->confidence ? a->confidence < b->confidence : a->record_key < b->record_key;
    });
    page.total = matches.size();
    for (std::size_t i = offset; i < matches.size() && i < offset + limit; ++i) {
      PredictionItem item;
      item.record = record(matches[i]->record_key);
      item.prediction = *matches[i];
      auto anc = ancestors(item.prediction.predicted);
      item.path.assign(anc.rbegin(), anc.rend());
      item.path.push_back(item.prediction.predicted);
      page.items.push_back(std::move(item));
    }
    return page;
  }

  std::uint64_t submit_correction(Correction c) {
    if (!record(c.record_key)) throw Error(Errc::UnknownRecord, "no record '" + c.record_key + "'");
    if (!hierarchy(c.level).contains(c.corrected_code)) {
      throw Error(Errc::InvalidCode, "'" + c.corrected_code.str() + "' is not a " + to_string(c.level) + " class");
    }
    if (c.timestamp == 0) {
      c.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    }
    return log_.append(std::move(c));
  }

  std::vector<Correction> active_corrections(const std::optional<std::string>& record_key = {}) const {
    std::vector<Correction> out;
    for (const auto& [_, c] : log_.active())
      if (!record_key || c.record_key == *record_key) out.push_back(c);
    return out;
  }

  /// Rebuilds the (level, kind) snapshot. Without `v`, runs the sweep and
  /// takes the selected threshold, or the best grid point when none qualifies.
  RetrainSummary retrain(BreakdownLevel level, ModelKind kind, std::optional<std::size_t> v = {}) {
    bool expected = false;
    if (!retraining_.compare_exchange_strong(expected, true)) throw Error(Errc::Busy, "a retrain is already running");
    struct Release {
      std::atomic<bool>& flag;
      ~Release() { flag = false; }
    } release{retraining_};
    if (opts_.on_retrain_started) opts_.on_retrain_started();

    const Hierarchy& h = hierarchy(level);
    auto active = log_.active();
    Dataset ds = apply_corrections(base_, active);

    ExperimentConfig ec;
    ec.level = level;
    ec.model = opts_.model;
    ec.model.kind = kind;
    ec.rollup = opts_.rollup;
    const ExternalPredictions* ext = opts_.external ? &*opts_.external : nullptr;
    if (kind == ModelKind::External && !ext) throw Error(Errc::NoModel, "no external predictions loaded");

    auto snap = std::make_shared<Snapshot>();
    snap->level = level;
    snap->kind = kind;
    if (!v) {
      SweepConfig sc = opts_.sweep;
      sc.level = level;
      sc.model = ec.model;
      sc.min_support = ec.rollup.min_support;
      sc.root_policy = ec.rollup.root_policy;
      sc.seed = ec.model.rf.seed;
      snap->sweep = run_sweep(ds, h, sc, ext);
      snap->selected_v = select_threshold(snap->sweep, sc.t, sc.epsilon);
      v = snap->selected_v ? *snap->selected_v : best_point(snap->sweep)->v;
    }
    const FeatureSet& features = features_for(ec.model);
    snap->v = *v;
    ec.rollup.v = *v;
    ec.mode = EvalMode::Dynamic;
    snap->dynamic = run_experiment(ds, h, ec, features, ext);
    ec.mode = EvalMode::Flat;
    snap->flat = run_experiment(ds, h, ec, features, ext).report;

    RetrainSummary summary;
    summary.v = *v;
    summary.after_macro_f1 = snap->dynamic.report.macro.f1;
    summary.n_retained_classes = snap->dynamic.rollup.mapping.retained.counts.size();
    for (const auto& [key, _] : active)
      if (key.second == level) ++summary.corrections_applied;
    {
      std::lock_guard lock(snap_mu_);
      auto it = snapshots_.find({level, kind});
      if (it != snapshots_.end()) summary.before_macro_f1 = it->second->dynamic.report.macro.f1;
      snap->version = ++version_;
      summary.version = snap->version;
      snapshots_[{level, kind}] = std::move(snap);
    }
    return summary;
  }

  bool retraining() const noexcept { return retraining_; }

 private:
  // Features depend only on descriptions and the split, never on labels.
  const FeatureSet& features_for(const ModelConfig& m) {
    auto cap = m.vocabulary_cap();
    std::lock_guard lock(feature_mu_);
    auto it = features_.find(cap);
    if (it == features_.end()) it = features_.emplace(cap, build_features(base_, cap, m.cleaning)).first;
    return it->second;
  }

  Dataset base_;
  HierarchySet hierarchies_;
  ServiceOptions opts_;
  CorrectionLog log_;
  std::map<std::string, std::size_t> index_;

  mutable std::mutex snap_mu_;
  std::map<std::pair<BreakdownLevel, ModelKind>, std::shared_ptr<const Snapshot>> snapshots_;
  std::uint64_t version_ = 0;
  std::atomic<bool> retraining_{false};
  std::mutex feature_mu_;
  std::map<std::optional<std::size_t>, FeatureSet> features_;
};

}  // namespace obdaml
