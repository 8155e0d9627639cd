#include <cmath>
#include <filesystem>
#include <random>

#include "common/checks.hpp"
#include "helpers.hpp"
#include "obdaml/model_io.hpp"
#include "obdaml/pipeline.hpp"
#include "obdaml/prediction.hpp"
#include "obdaml/random_forest.hpp"
#include "obdaml/vectorize.hpp"

using namespace obdaml;

namespace {
TokenizedText doc(std::initializer_list<const char*> toks) {
  TokenizedText t;
  for (auto s : toks) t.tokens.emplace_back(s);
  return t;
}
CountVector cv(std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> e) {
  CountVector v;
  v.entries.assign(e.begin(), e.end());
  return v;
}
}  // namespace

TEST(Vocabulary, DocumentFrequencies) {
  auto v = build_vocabulary({doc({"a", "b"}), doc({"b"})});
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.df("a"), 1u);
  EXPECT_EQ(v.df("b"), 2u);
}

TEST(Vocabulary, CapKeepsMostFrequent) {
  auto v = build_vocabulary({doc({"a", "b"}), doc({"b"})}, 1);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"b"}));
}

TEST(Vocabulary, EmptyCorpus) { EXPECT_ERRC(build_vocabulary({}), Errc::EmptyCorpus); }

TEST(Vectorize, CountsKnownTokens) {
  Vocabulary v({"pump", "motor"}, {1, 1});
  EXPECT_EQ(vectorize(doc({"pump", "pump", "motor"}), v).entries,
            (std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 2}, {1, 1}}));
  EXPECT_TRUE(vectorize(doc({"unseen"}), v).entries.empty());
  EXPECT_TRUE(vectorize(doc({}), v).entries.empty());
}

namespace {
// docs A:"pump pump", B:"motor" over V={pump:0, motor:1}
NbModel pump_motor() { return train_nb({cv({{0, 2}}), cv({{1, 1}})}, {"A"_c, "B"_c}, 2, 0.01); }
}  // namespace

TEST(NaiveBayes, SmoothedLikelihood) {
  auto m = pump_motor();
  EXPECT_NEAR(std::exp(m.log_likelihood(0, 0)), 2.01 / 2.02, 1e-12);
  EXPECT_NEAR(std::exp(m.log_likelihood(1, 0)), 0.01 / 1.02, 1e-12);
}

TEST(NaiveBayes, PumpDocumentConfidence) {
  auto p = predict_nb(pump_motor(), cv({{0, 1}}));
  EXPECT_EQ(p.predicted, "A"_c);
  EXPECT_NEAR(p.confidence, 0.990, 0.001);
}

TEST(NaiveBayes, SingleClassAlwaysCertain) {
  auto m = train_nb({cv({{0, 1}}), cv({})}, {"Q"_c, "Q"_c}, 1);
  auto p = predict_nb(m, cv({{0, 3}}));
  EXPECT_EQ(p.predicted, "Q"_c);
  EXPECT_DOUBLE_EQ(p.confidence, 1.0);
}

TEST(NaiveBayes, EmptyVectorFollowsPriors) {
  auto m = train_nb({cv({{0, 1}}), cv({{0, 1}}), cv({{1, 1}})}, {"B"_c, "B"_c, "A"_c}, 2);
  auto p = predict_nb(m, cv({}));
  EXPECT_EQ(p.predicted, "B"_c);
  EXPECT_NEAR(p.confidence, 2.0 / 3.0, 1e-12);
}

TEST(NaiveBayes, TieGoesToSmallerCode) {
  auto m = train_nb({cv({{0, 1}}), cv({{0, 1}})}, {"QB"_c, "QA"_c}, 1);
  auto p = predict_nb(m, cv({{0, 1}}));
  EXPECT_EQ(p.predicted, "QA"_c);
  EXPECT_DOUBLE_EQ(p.confidence, 0.5);
}

TEST(NaiveBayes, ShapeErrors) {
  EXPECT_ERRC(train_nb({cv({})}, {}, 1), Errc::ShapeMismatch);
  EXPECT_ERRC(predict_nb(NbModel{}, cv({})), Errc::ModelUnusable);
}

TEST(NaiveBayes, AgreesWithProbabilitySpaceOracle) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(checks::nb_random_instance(rng), "");
}

namespace {
// Class P docs mention "pump" (feature 0); class Q docs mention "motor" (1).
std::pair<std::vector<CountVector>, std::vector<ClassCode>> toy() {
  std::vector<CountVector> X;
  std::vector<ClassCode> y;
  for (std::uint32_t i = 0; i < 10; ++i) {
    X.push_back(cv({{0, 1 + i % 2}, {2 + i % 3, 1}}));
    y.push_back("P"_c);
    X.push_back(cv({{1, 1}, {2 + (i + 1) % 3, 1}}));
    y.push_back("Q"_c);
  }
  return {X, y};
}
}  // namespace

TEST(RandomForest, SeparatesDisjointVocabularies) {
  auto [X, y] = toy();
  RfParams p;
  p.n_trees = 10;
  auto m = train_rf(X, y, 5, p);
  for (std::size_t i = 0; i < X.size(); ++i) EXPECT_EQ(predict_rf(m, X[i]).predicted, y[i]);
}

TEST(RandomForest, FixedSeedReproducesForest) {
  auto [X, y] = toy();
  RfParams p;
  p.n_trees = 1;
  p.seed = 9;
  EXPECT_EQ(train_rf(X, y, 5, p), train_rf(X, y, 5, p));
  p.n_trees = 6;
  auto serial = train_rf(X, y, 5, p);
  p.threads = 3;
  EXPECT_EQ(serial, train_rf(X, y, 5, p));
}

TEST(RandomForest, VoteShareIsConfidence) {
  RfModel m;
  m.classes = {"C"_c, "D"_c};
  auto leaf = [](std::uint32_t cls) {
    DecisionTree t;
    TreeNode n;
    n.majority = cls;
    n.histogram = {{cls, 1}};
    t.nodes.push_back(n);
    return t;
  };
  m.trees = {leaf(0), leaf(0), leaf(1)};
  auto p = predict_rf(m, cv({}));
  EXPECT_EQ(p.predicted, "C"_c);
  EXPECT_NEAR(p.confidence, 2.0 / 3.0, 1e-12);
  m.trees = {leaf(1), leaf(1)};
  EXPECT_DOUBLE_EQ(predict_rf(m, cv({})).confidence, 1.0);
}

TEST(RandomForest, Errors) {
  EXPECT_ERRC(train_rf({cv({})}, {}, 1), Errc::ShapeMismatch);
  EXPECT_ERRC(predict_rf(RfModel{}, cv({})), Errc::ModelUnusable);
}

TEST(RandomForest, DepthLimitRespected) {
  auto [X, y] = toy();
  RfParams p;
  p.n_trees = 4;
  p.max_depth = 1;
  auto m = train_rf(X, y, 5, p);
  for (const auto& t : m.trees) EXPECT_LE(t.nodes.size(), 3u);
}

TEST(ExternalPredictions, ParsesRows) {
  auto e = parse_external_predictions("record_key,predicted_code,confidence,model_id\np1/100,QA,0.97,bert\n");
  ASSERT_EQ(e.predictions.size(), 1u);
  EXPECT_EQ(e.predictions[0], (Prediction{"p1/100", "QA"_c, 0.97, "bert"}));
  EXPECT_TRUE(parse_external_predictions("record_key,predicted_code,confidence,model_id\n").predictions.empty());
}

TEST(ExternalPredictions, RejectsBadValues) {
  EXPECT_ERRC(parse_external_predictions("record_key,predicted_code,confidence,model_id\np,QA,1.5,b\n"),
              Errc::MalformedCsv);
  EXPECT_ERRC(parse_external_predictions("record_key,predicted_code,confidence,model_id\np,Q1,0.5,b\n"),
              Errc::MalformedCsv);
  EXPECT_ERRC(parse_external_predictions("record_key,confidence\n"), Errc::MalformedCsv);
}

TEST(ExternalPredictions, UnknownKeysSetAside) {
  auto e = parse_external_predictions("record_key,predicted_code,confidence,model_id\na,Q,0.5,b\nz,Q,0.5,b\n", {"a"});
  EXPECT_EQ(e.predictions.size(), 1u);
  EXPECT_EQ(e.unknown_keys, (std::vector<std::string>{"z"}));
}

TEST(ModelArtifact, JsonRoundTripPredictsIdentically) {
  auto [X, y] = toy();
  for (auto kind : {ModelKind::NaiveBayes, ModelKind::RandomForest}) {
    ModelArtifact a;
    a.config.kind = kind;
    a.config.rf.n_trees = 3;
    a.vocabulary = Vocabulary({"pump", "motor", "x", "y", "z"}, {10, 10, 7, 7, 6});
    a.mapping.level = BreakdownLevel::BL1;
    a.mapping.map = {{"P"_c, "P"_c}, {"Q"_c, "Q"_c}};
    a.mapping.retained = {BreakdownLevel::BL1, {{"P"_c, 10}, {"Q"_c, 10}}};
    a.model = train_model(a.config, X, y, 5);
    auto b = artifact_from_json(nlohmann::json::parse(artifact_to_json(a).dump()));
    EXPECT_EQ(b.vocabulary, a.vocabulary);
    EXPECT_EQ(b.mapping, a.mapping);
    for (const auto& x : X) EXPECT_EQ(predict(b.model, x, "", ""), predict(a.model, x, "", ""));
  }
}

TEST(ModelArtifact, RejectsGarbage) {
  EXPECT_ERRC(artifact_from_json(nlohmann::json{{"version", 99}}), Errc::ParseError);
  EXPECT_ERRC(load_artifact("/nonexistent/model.json"), Errc::IoError);
}
