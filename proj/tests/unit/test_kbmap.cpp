#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "obdaml/kbmap.hpp"
#include "oracles/kbmap_oracle.hpp"
#include "oracles/random_instances.hpp"

using namespace obdaml;

namespace {

Record rec(std::string id, std::string plant) {
  Record r;
  r.record_id = std::move(id);
  r.plant_id = std::move(plant);
  r.description = "First Engine Circuit Breaker";
  return r;
}

const MappingContext kCtx;

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("obdaml_kb_" + name)).string();
}

}  // namespace

TEST(Iri, Validation) {
  EXPECT_TRUE(Iri::valid("http://example.org/a"));
  EXPECT_FALSE(Iri::valid("no-scheme"));
  EXPECT_FALSE(Iri::valid("http://a b"));
  EXPECT_FALSE(Iri::valid(""));
  EXPECT_ERRC(Iri::parse("x y"), Errc::InvalidArgument);
}

TEST(Slug, Rules) {
  EXPECT_EQ(slug("Power plant 1"), "power-plant-1");
  EXPECT_EQ(slug("  A/B  c "), "ab-c");
  EXPECT_EQ(slug("100"), "100");
}

TEST(RecordToTriples, CircuitBreakerRow) {
  auto ts = record_to_triples(rec("100", "Power plant 1"), {{BreakdownLevel::BL2, "QA"_c}}, kCtx);
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].to_ntriples(),
            "<http://example.org/plant/power-plant-1/100> <http://example.org/iec-81346#ClassifiedAs> "
            "<http://example.org/iec-81346#PowerPlantComponentQA> .");
}

TEST(RecordToTriples, NoneOrSeveralLevels) {
  EXPECT_TRUE(record_to_triples(rec("1", "p"), {}, kCtx).empty());
  auto ts = record_to_triples(rec("1", "p"), {{BreakdownLevel::BL1, "LN"_c}, {BreakdownLevel::BL2, "QA"_c}}, kCtx);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[0].subject, ts[1].subject);
}

TEST(RecordToTriples, BadContext) {
  MappingContext bad;
  bad.base_iri = "not an iri";
  EXPECT_ERRC(record_to_triples(rec("1", "p"), {{BreakdownLevel::BL1, "L"_c}}, bad), Errc::InvalidContext);
  EXPECT_ERRC(context_from_json(nlohmann::json{{"vocab_prefix", "bad prefix"}}), Errc::InvalidContext);
}

TEST(MapRecords, ReportsSlugCollisions) {
  Dataset ds;
  ds.records = {rec("A-1", "p"), rec("a1", "p")};
  ds.split.assign(2, Split::Train);
  auto m = map_records(ds, {{"p/A-1", {{BreakdownLevel::BL1, "L"_c}}}, {"p/a1", {{BreakdownLevel::BL1, "L"_c}}}}, kCtx);
  EXPECT_EQ(m.collisions.size(), 1u);
  EXPECT_EQ(m.store.size(), 1u);
}

TEST(TripleStore, InsertIsIdempotent) {
  TripleStore ts;
  auto t = record_to_triples(rec("1", "p"), {{BreakdownLevel::BL1, "L"_c}}, kCtx)[0];
  EXPECT_TRUE(ts.insert(t));
  EXPECT_FALSE(ts.insert(t));
  EXPECT_EQ(ts.size(), 1u);
}

TEST(TripleStore, PatternMatching) {
  TripleStore ts;
  for (auto* id : {"100", "101", "102"}) {
    for (auto& t : record_to_triples(rec(id, "Power plant 1"),
                                     {{BreakdownLevel::BL2, std::string(id) == "102" ? "M"_c : "QA"_c}}, kCtx))
      ts.insert(t);
  }
  EXPECT_EQ(match_pattern(ts).size(), 3u);
  EXPECT_TRUE(match_pattern(ts, Iri::parse("http://absent.org/x")).empty());
  auto qa = match_pattern(ts, std::nullopt, kCtx.classified_as(), kCtx.class_iri("QA"_c));
  ASSERT_EQ(qa.size(), 2u);
  EXPECT_EQ(qa[0].subject.str(), "http://example.org/plant/power-plant-1/100");
  EXPECT_EQ(qa[1].subject.str(), "http://example.org/plant/power-plant-1/101");
  for (const auto& t : ts.triples()) EXPECT_EQ(match_pattern(ts, t.subject, t.predicate, t.object).size(), 1u);
}

TEST(NTriples, SerializeParseSerialize) {
  TripleStore ts;
  for (auto* id : {"7", "8"}) ts.insert(record_to_triples(rec(id, "x"), {{BreakdownLevel::BL1, "LN"_c}}, kCtx)[0]);
  auto a = tmp_path("a.nt"), b = tmp_path("b.nt");
  EXPECT_EQ(serialize_ntriples(ts, a), 2u);
  auto back = parse_ntriples(a);
  EXPECT_EQ(back, ts);
  serialize_ntriples(back, b);
  EXPECT_EQ(csv::read_file(a), csv::read_file(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(NTriples, EmptyAndSingle) {
  EXPECT_EQ(format_ntriples(TripleStore{}), "");
  EXPECT_EQ(parse_ntriples_text("").size(), 0u);
  TripleStore one;
  one.insert(record_to_triples(rec("1", "p"), {{BreakdownLevel::BL1, "L"_c}}, kCtx)[0]);
  auto text = format_ntriples(one);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_EQ(text.substr(text.size() - 3), " .\n");
}

TEST(NTriples, ParseErrors) {
  EXPECT_ERRC(parse_ntriples_text("<http://a/b> <http://a/c> <http://a/d>\n"), Errc::ParseError);
  EXPECT_ERRC(parse_ntriples_text("<http://a/b> <http://a/c>\n"), Errc::ParseError);
  EXPECT_ERRC(parse_ntriples_text("<http://a/b> <http://a/c> \"lit\" .\n"), Errc::ParseError);
  EXPECT_EQ(parse_ntriples_text("# comment\n\n").size(), 0u);
}

namespace {
TripleStore subclass_store() {
  TripleStore ts;
  ts.insert(record_to_triples(rec("x1", "p"), {{BreakdownLevel::BL1, "LNA"_c}}, kCtx)[0]);
  ts.insert(record_to_triples(rec("x2", "p"), {{BreakdownLevel::BL1, "LA"_c}}, kCtx)[0]);
  return ts;
}
std::vector<std::string> subjects(const std::vector<Iri>& v) {
  std::vector<std::string> out;
  for (const auto& i : v) out.push_back(i.str().substr(i.str().rfind('/') + 1));
  return out;
}
}  // namespace

TEST(QueryClassifiedAs, SubclassClosure) {
  auto ts = subclass_store();
  auto h = Hierarchy::from_codes(BreakdownLevel::BL1, {"LNA"_c, "LA"_c});
  EXPECT_EQ(subjects(query_classified_as(ts, "L"_c, true, h, kCtx)), (std::vector<std::string>{"x1", "x2"}));
  EXPECT_EQ(subjects(query_classified_as(ts, "LN"_c, true, h, kCtx)), (std::vector<std::string>{"x1"}));
  EXPECT_EQ(subjects(query_classified_as(ts, "LNA"_c, false, h, kCtx)), (std::vector<std::string>{"x1"}));
  EXPECT_TRUE(query_classified_as(ts, "L"_c, false, h, kCtx).empty());
  EXPECT_ERRC(query_classified_as(ts, "Q"_c, true, h, kCtx), Errc::UnknownClass);
}

TEST(QueryClassifiedAs, AgreesWithPrefixScanOnRandomStores) {
  std::mt19937_64 rng(41);
  for (int round = 0; round < 50; ++round) {
    auto raw = oracle::random_codes(rng);
    std::vector<ClassCode> codes;
    for (const auto& s : raw) codes.push_back(ClassCode::parse(s));
    auto h = Hierarchy::from_codes(BreakdownLevel::BL1, codes);
    TripleStore ts;
    for (int i = 0; i < 30; ++i) {
      auto r = rec(std::to_string(rng() % 20), "p" + std::to_string(rng() % 2));
      for (auto& t : record_to_triples(r, {{BreakdownLevel::BL1, codes[rng() % codes.size()]}}, kCtx)) ts.insert(t);
    }
    for (const auto& c : codes) {
      for (bool sub : {false, true}) {
        std::set<std::string> got;
        for (const auto& i : query_classified_as(ts, c, sub, h, kCtx)) got.insert(i.str());
        EXPECT_EQ(got, oracle::classified_subjects(ts.triples(), kCtx.classified_as().str(),
                                                   kCtx.vocab_prefix + kCtx.class_prefix, c.str(), sub));
      }
    }
  }
}

TEST(MappingContext, CodeOfInvertsClassIri) {
  EXPECT_EQ(kCtx.code_of(kCtx.class_iri("QA"_c)), "QA"_c);
  EXPECT_FALSE(kCtx.code_of(Iri::parse("http://other.org/QA")));
}
