#pragma once

// One evaluation run for a (level, model, v) triple: roll up the training
// counts, relabel both splits, train on TRAIN, score VALIDATION.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "obdaml/dataset.hpp"
#include "obdaml/metrics.hpp"
#include "obdaml/naive_bayes.hpp"
#include "obdaml/prediction.hpp"
#include "obdaml/random_forest.hpp"
#include "obdaml/rollup.hpp"
#include "obdaml/text.hpp"
#include "obdaml/vectorize.hpp"

namespace obdaml {

enum class ModelKind { NaiveBayes, RandomForest, External };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::NaiveBayes: return "nb";
    case ModelKind::RandomForest: return "rf";
    case ModelKind::External: return "external";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "nb") return ModelKind::NaiveBayes;
  if (s == "rf") return ModelKind::RandomForest;
  if (s == "external") return ModelKind::External;
  throw Error(Errc::InvalidArgument, "unknown model '" + std::string(s) + "' (expected nb, rf or external)");
}

inline constexpr std::size_t kDefaultRfVocabularyCap = 5000;

struct ModelConfig {
  ModelKind kind = ModelKind::NaiveBayes;
  double alpha = kDefaultAlpha;
  RfParams rf;
  std::optional<std::size_t> rf_vocabulary_cap = kDefaultRfVocabularyCap;
  CleaningOptions cleaning;

  std::optional<std::size_t> vocabulary_cap() const {
    return kind == ModelKind::RandomForest ? rf_vocabulary_cap : std::nullopt;
  }
};

using Model = std::variant<NbModel, RfModel>;

inline Prediction predict(const Model& m, const CountVector& x, std::string key, std::string model_id) {
  return std::visit(
      [&](const auto& model) {
        if constexpr (std::is_same_v<std::decay_t<decltype(model)>, NbModel>)
          return predict_nb(model, x, std::move(key), std::move(model_id));
        else
          return predict_rf(model, x, std::move(key), std::move(model_id));
      },
      m);
}

/// Vocabulary built from TRAIN records and count vectors for every record.
struct FeatureSet {
  Vocabulary vocabulary;
  std::vector<CountVector> vectors;
};

inline FeatureSet build_features(const Dataset& ds, std::optional<std::size_t> cap = {},
                                 const CleaningOptions& cleaning = {}) {
  std::vector<TokenizedText> all;
  all.reserve(ds.size());
  std::vector<TokenizedText> train;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    all.push_back(preprocess(ds.records[i].description, cleaning));
    if (ds.split[i] == Split::Train) train.push_back(all.back());
  }
  FeatureSet fs;
  fs.vocabulary = build_vocabulary(train, cap);
  fs.vectors.reserve(all.size());
  for (const auto& t : all) fs.vectors.push_back(vectorize(t, fs.vocabulary));
  return fs;
}

inline Model train_model(const ModelConfig& cfg, const std::vector<CountVector>& X, const std::vector<ClassCode>& y,
                         std::size_t vocab_size) {
  switch (cfg.kind) {
    case ModelKind::NaiveBayes: return train_nb(X, y, vocab_size, cfg.alpha);
    case ModelKind::RandomForest: return train_rf(X, y, vocab_size, cfg.rf);
    case ModelKind::External: break;
  }
  throw Error(Errc::InvalidArgument, "external predictions cannot be trained in-process");
}

struct ExperimentConfig {
  BreakdownLevel level = BreakdownLevel::BL1;
  EvalMode mode = EvalMode::Dynamic;
  ModelConfig model;
  RollupConfig rollup;
};

struct ExperimentResult {
  RollupResult rollup;
  std::optional<Model> model;
  std::vector<Prediction> predictions;  // validation records, dataset order
  EvalReport report;
  std::size_t n_train = 0;
  std::size_t n_excluded_validation = 0;
};

/// With ModelKind::External the predictions come from `external`; their codes
/// are passed through the same label mapping as the ground truth.
inline ExperimentResult run_experiment(const Dataset& ds, const Hierarchy& h, const ExperimentConfig& cfg,
                                       const FeatureSet& features, const ExternalPredictions* external = nullptr) {
  if (ds.split.size() != ds.records.size()) throw Error(Errc::InvalidArgument, "dataset has no split assigned");
  ExperimentResult out;
  RollupConfig rc = cfg.rollup;
  if (cfg.mode == EvalMode::Flat) rc.v = 0;
  out.rollup = compute_rollup(class_counts(ds, cfg.level, Split::Train), h, rc);
  auto mapped = apply_mapping(ds, cfg.level, out.rollup.mapping);
  const Dataset& md = mapped.dataset;
  const std::size_t li = index_of(cfg.level);

  std::string model_id = to_string(cfg.model.kind);
  if (cfg.model.kind != ModelKind::External) {
    std::vector<CountVector> X;
    std::vector<ClassCode> y;
    for (std::size_t i = 0; i < md.size(); ++i) {
      if (md.split[i] != Split::Train || !md.records[i].labels[li]) continue;
      X.push_back(features.vectors[i]);
      y.push_back(*md.records[i].labels[li]);
    }
    out.n_train = X.size();
    if (X.empty()) throw Error(Errc::EmptyCorpus, "no labeled training records remain at " + to_string(cfg.level));
    out.model = train_model(cfg.model, X, y, features.vocabulary.size());
  }

  std::map<std::string, const Prediction*> ext_index;
  if (external) {
    for (const auto& p : external->predictions) ext_index[p.record_key] = &p;
    if (!external->predictions.empty()) model_id = external->predictions.front().model_id;
  }

  std::vector<ClassCode> y_true, y_pred;
  for (std::size_t i = 0; i < md.size(); ++i) {
    if (md.split[i] != Split::Validation) continue;
    const auto& rec = md.records[i];
    if (!rec.labels[li]) {
      if (rec.excluded[li]) ++out.n_excluded_validation;
      continue;
    }
    Prediction p;
    if (out.model) {
      p = predict(*out.model, features.vectors[i], rec.key(), model_id);
    } else {
      auto it = ext_index.find(rec.key());
      if (it == ext_index.end()) {
        ++out.n_excluded_validation;
        continue;
      }
      p = *it->second;
      if (auto t = out.rollup.mapping.resolve(p.predicted); t && *t) p.predicted = **t;
    }
    y_true.push_back(*rec.labels[li]);
    y_pred.push_back(p.predicted);
    out.predictions.push_back(std::move(p));
  }
  out.report = report(confusion(y_true, y_pred, out.n_excluded_validation));
  out.report.mode = cfg.mode;
  out.report.level = cfg.level;
  out.report.model_id = model_id;
  return out;
}

}  // namespace obdaml
