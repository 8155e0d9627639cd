#pragma once

// JSON model artifacts. Each artifact embeds its vocabulary, the label
// mapping it was trained under and a fingerprint of its configuration.

#include <fstream>
#include <string>

#include <json.hpp>

#include "obdaml/detail/hash.hpp"
#include "obdaml/pipeline.hpp"

namespace obdaml {

inline constexpr int kArtifactVersion = 1;

struct ModelArtifact {
  BreakdownLevel level = BreakdownLevel::BL1;
  EvalMode mode = EvalMode::Flat;
  RollupConfig rollup;
  ModelConfig config;
  Vocabulary vocabulary;
  LabelMapping mapping;
  Model model;
};

inline nlohmann::json config_to_json(const ModelArtifact& a) {
  nlohmann::json j{{"level", to_string(a.level)},
                   {"mode", to_string(a.mode)},
                   {"model", to_string(a.config.kind)},
                   {"v", a.rollup.v},
                   {"min_support", a.rollup.min_support},
                   {"root_policy", to_string(a.rollup.root_policy)},
                   {"stop_patterns", a.config.cleaning.stop_patterns}};
  if (a.config.kind == ModelKind::NaiveBayes) j["alpha"] = a.config.alpha;
  if (a.config.kind == ModelKind::RandomForest) {
    j["n_trees"] = a.config.rf.n_trees;
    j["seed"] = a.config.rf.seed;
    j["min_leaf"] = a.config.rf.min_leaf;
    j["max_depth"] = a.config.rf.max_depth ? nlohmann::json(*a.config.rf.max_depth) : nlohmann::json(nullptr);
    j["vocabulary_cap"] =
        a.config.rf_vocabulary_cap ? nlohmann::json(*a.config.rf_vocabulary_cap) : nlohmann::json(nullptr);
  }
  return j;
}

inline std::string config_hash(const nlohmann::json& config) { return detail::hex64(detail::fnv1a64(config.dump())); }

inline nlohmann::json artifact_to_json(const ModelArtifact& a) {
  nlohmann::json j;
  j["version"] = kArtifactVersion;
  j["config"] = config_to_json(a);
  j["config_hash"] = config_hash(j["config"]);
  j["vocabulary"] = {{"tokens", a.vocabulary.tokens()}, {"df", a.vocabulary.document_frequencies()}};
  nlohmann::json map = nlohmann::json::object();
  for (const auto& [src, tgt] : a.mapping.map) map[src.str()] = target_string(tgt);
  j["mapping"] = map;
  nlohmann::json retained = nlohmann::json::object();
  for (const auto& [c, n] : a.mapping.retained.counts) retained[c.str()] = n;
  j["retained"] = retained;

  auto class_list = [](const std::vector<ClassCode>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.str());
    return out;
  };
  if (const auto* nb = std::get_if<NbModel>(&a.model)) {
    j["nb"] = {{"classes", class_list(nb->classes)},
               {"log_priors", nb->log_priors},
               {"log_likelihoods", nb->log_likelihoods},
               {"vocab_size", nb->vocab_size},
               {"alpha", nb->alpha}};
  } else {
    const auto& rf = std::get<RfModel>(a.model);
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : rf.trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) {
          nodes.push_back({{"leaf", n.histogram}, {"majority", n.majority}});
        } else {
          nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
        }
      }
      trees.push_back(std::move(nodes));
    }
    j["rf"] = {{"classes", class_list(rf.classes)},
               {"vocab_size", rf.vocab_size},
               {"features_per_split", rf.features_per_split},
               {"seed", rf.seed},
               {"trees", trees}};
  }
  return j;
}

inline ModelArtifact artifact_from_json(const nlohmann::json& j) {
  ModelArtifact a;
  try {
    if (j.at("version").get<int>() != kArtifactVersion) throw Error(Errc::ParseError, "unsupported artifact version");
    const auto& c = j.at("config");
    a.level = parse_level(c.at("level").get<std::string>());
    a.mode = parse_mode(c.at("mode").get<std::string>());
    a.config.kind = parse_model_kind(c.at("model").get<std::string>());
    a.rollup.v = c.at("v").get<std::size_t>();
    a.rollup.min_support = c.at("min_support").get<std::size_t>();
    a.rollup.root_policy = parse_root_policy(c.at("root_policy").get<std::string>());
    a.config.cleaning.stop_patterns = c.at("stop_patterns").get<std::vector<std::string>>();
    a.vocabulary = Vocabulary(j.at("vocabulary").at("tokens").get<std::vector<std::string>>(),
                              j.at("vocabulary").at("df").get<std::vector<std::size_t>>());
    a.mapping.level = a.level;
    a.mapping.retained.level = a.level;
    for (auto& [src, tgt] : j.at("mapping").items()) {
      auto t = tgt.get<std::string>();
      a.mapping.map[ClassCode::parse(src)] = t == "DISCARDED" ? MappingTarget() : MappingTarget(ClassCode::parse(t));
    }
    for (auto& [code, n] : j.at("retained").items()) a.mapping.retained.counts[ClassCode::parse(code)] = n.get<std::size_t>();

    auto classes = [](const nlohmann::json& arr) {
      std::vector<ClassCode> out;
      for (const auto& s : arr) out.push_back(ClassCode::parse(s.get<std::string>()));
      return out;
    };
    if (j.contains("nb")) {
      const auto& m = j.at("nb");
      NbModel nb;
      nb.classes = classes(m.at("classes"));
      nb.log_priors = m.at("log_priors").get<std::vector<double>>();
      nb.log_likelihoods = m.at("log_likelihoods").get<std::vector<double>>();
      nb.vocab_size = m.at("vocab_size").get<std::size_t>();
      nb.alpha = m.at("alpha").get<double>();
      a.config.alpha = nb.alpha;
      a.model = std::move(nb);
    } else {
      const auto& m = j.at("rf");
      RfModel rf;
      rf.classes = classes(m.at("classes"));
      rf.vocab_size = m.at("vocab_size").get<std::size_t>();
      rf.features_per_split = m.at("features_per_split").get<std::size_t>();
      rf.seed = m.at("seed").get<std::uint64_t>();
      for (const auto& t : m.at("trees")) {
        DecisionTree tree;
        for (const auto& n : t) {
          TreeNode node;
          if (n.contains("leaf")) {
            node.histogram = n.at("leaf").get<std::vector<std::pair<std::uint32_t, std::uint32_t>>>();
            node.majority = n.at("majority").get<std::uint32_t>();
          } else {
            node.feature = n.at("f").get<std::int32_t>();
            node.threshold = n.at("t").get<std::uint32_t>();
            node.left = n.at("l").get<std::int32_t>();
            node.right = n.at("r").get<std::int32_t>();
          }
          tree.nodes.push_back(std::move(node));
        }
        rf.trees.push_back(std::move(tree));
      }
      a.config.rf.n_trees = rf.trees.size();
      a.config.rf.seed = rf.seed;
      a.model = std::move(rf);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("model artifact: ") + e.what());
  }
  return a;
}

inline void save_artifact(const ModelArtifact& a, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path + "'");
  out << artifact_to_json(a).dump() << '\n';
}

inline ModelArtifact load_artifact(const std::string& path) {
  auto text = csv::read_file(path);
  try {
    return artifact_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

/// Predicts every record of `ds` selected by `only` (all when unset).
inline std::vector<Prediction> classify_records(const ModelArtifact& a, const Dataset& ds,
                                                std::optional<Split> only = {}) {
  std::vector<Prediction> out;
  const std::string id = to_string(a.config.kind);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (only && ds.split[i] != *only) continue;
    auto x = vectorize(preprocess(ds.records[i].description, a.config.cleaning), a.vocabulary);
    out.push_back(predict(a.model, x, ds.records[i].key(), id));
  }
  return out;
}

}  // namespace obdaml
