#include <random>

#include "helpers.hpp"
#include "obdaml/hierarchy.hpp"
#include "oracles/random_instances.hpp"

using namespace obdaml;

TEST(ClassCode, ParsesAndUppercases) {
  EXPECT_EQ(ClassCode::parse("LNA").str(), "LNA");
  EXPECT_EQ(ClassCode::parse("qa").str(), "QA");
  EXPECT_EQ(ClassCode::parse("LNA").level(), 3u);
  EXPECT_TRUE(ClassCode::parse("M").is_root());
}

TEST(ClassCode, RejectsBadInput) {
  EXPECT_ERRC(ClassCode::parse("L4"), Errc::InvalidCode);
  EXPECT_ERRC(ClassCode::parse(""), Errc::InvalidCode);
  EXPECT_ERRC(ClassCode::parse("ABCD"), Errc::InvalidCode);
  EXPECT_ERRC(ClassCode::parse("L-"), Errc::InvalidCode);
  EXPECT_ERRC(ClassCode::parse("\xc3\x84"), Errc::InvalidCode);
}

TEST(ClassCode, ParentAndAncestors) {
  EXPECT_EQ(parent_of("LNA"_c), "LN"_c);
  EXPECT_EQ(parent_of("LN"_c), "L"_c);
  EXPECT_FALSE(parent_of("M"_c).has_value());
  EXPECT_EQ(ancestors("LNA"_c), (std::vector<ClassCode>{"LN"_c, "L"_c}));
  EXPECT_EQ(ancestors("QA"_c), (std::vector<ClassCode>{"Q"_c}));
  EXPECT_TRUE(ancestors("L"_c).empty());
}

TEST(ClassCode, DescendantOrSelf) {
  EXPECT_TRUE(is_descendant_or_self("LNA"_c, "L"_c));
  EXPECT_TRUE(is_descendant_or_self("LNA"_c, "LNA"_c));
  EXPECT_FALSE(is_descendant_or_self("LA"_c, "LN"_c));
  EXPECT_FALSE(is_descendant_or_self("L"_c, "LN"_c));
}

TEST(ClassCode, RandomizedStructuralProperties) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 50; ++round) {
    auto raw = oracle::random_codes(rng);
    std::vector<ClassCode> codes;
    for (const auto& s : raw) codes.push_back(ClassCode::parse(s));
    for (const auto& c : codes) {
      EXPECT_EQ(ancestors(c).size(), c.level() - 1);
      if (auto p = parent_of(c)) {
        EXPECT_EQ(p->level(), c.level() - 1);
        EXPECT_EQ(c.str().rfind(p->str(), 0), 0u);
      }
      EXPECT_TRUE(is_descendant_or_self(c, c));
      for (const auto& d : codes) {
        if (c != d && is_descendant_or_self(c, d)) {
          EXPECT_FALSE(is_descendant_or_self(d, c));
        }
        for (const auto& e : codes) {
          if (is_descendant_or_self(c, d) && is_descendant_or_self(d, e)) {
            EXPECT_TRUE(is_descendant_or_self(c, e));
          }
        }
      }
    }
  }
}

TEST(Hierarchy, LoadsPlainFile) {
  auto h = parse_hierarchy("L\nLN\nLNA\n", BreakdownLevel::BL1);
  EXPECT_EQ(h.size(), 3u);
  EXPECT_TRUE(h.warnings().empty());
}

TEST(Hierarchy, InsertsMissingParentsWithWarnings) {
  auto h = parse_hierarchy("LNA\n", BreakdownLevel::BL1);
  EXPECT_EQ(h.codes(), (std::set<ClassCode>{"L"_c, "LN"_c, "LNA"_c}));
  EXPECT_EQ(h.warnings().size(), 2u);
}

TEST(Hierarchy, DepthLimits) {
  EXPECT_ERRC(parse_hierarchy("LNAB\n", BreakdownLevel::BL1), Errc::InvalidCode);
  EXPECT_ERRC(Hierarchy::from_codes(BreakdownLevel::BL0, {"LN"_c}), Errc::DepthExceeded);
  EXPECT_NO_THROW(Hierarchy::from_codes(BreakdownLevel::BL2, {"LNA"_c}));
}

TEST(Hierarchy, ParsesLabelsCommentsAndBlankLines) {
  auto h = parse_hierarchy("# header\n\nQ,Controlling flow\nqa, Circuit breaker\n", BreakdownLevel::BL2);
  EXPECT_EQ(h.size(), 2u);
  ASSERT_TRUE(h.label("QA"_c));
  EXPECT_EQ(*h.label("QA"_c), "Circuit breaker");
  EXPECT_EQ(*h.label("Q"_c), "Controlling flow");
}

TEST(Hierarchy, ReportsLineNumberOfBadCode) {
  try {
    parse_hierarchy("L\nL4\n", BreakdownLevel::BL1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidCode);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Hierarchy, NavigationQueries) {
  auto h = Hierarchy::from_codes(BreakdownLevel::BL1, {"L"_c, "LN"_c, "LNA"_c, "LA"_c, "M"_c, "Q"_c, "QA"_c});
  EXPECT_EQ(h.roots(), (std::vector<ClassCode>{"L"_c, "M"_c, "Q"_c}));
  EXPECT_EQ(h.children("L"_c), (std::vector<ClassCode>{"LA"_c, "LN"_c}));
  EXPECT_EQ(h.descendants_or_self("L"_c), (std::vector<ClassCode>{"L"_c, "LA"_c, "LN"_c, "LNA"_c}));
  EXPECT_TRUE(h.is_leaf("LNA"_c));
  EXPECT_FALSE(h.is_leaf("LN"_c));
}

TEST(Hierarchy, AlwaysClosedUnderParents) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 100; ++round) {
    auto raw = oracle::random_codes(rng);
    std::string text;
    for (const auto& s : raw)
      if (s.size() == 3 || rng() % 2) text += s + "\n";
    if (text.empty()) text = *raw.begin() + "\n";
    auto h = parse_hierarchy(text, BreakdownLevel::BL1);
    for (const auto& c : h.codes()) {
      if (auto p = parent_of(c)) {
        EXPECT_TRUE(h.contains(*p)) << c;
      }
    }
  }
}

TEST(Hierarchy, FormatRoundTrips) {
  auto h = parse_hierarchy("L,Storing\nLN\n", BreakdownLevel::BL1);
  auto again = parse_hierarchy(format_hierarchy(h), BreakdownLevel::BL1);
  EXPECT_EQ(again.codes(), h.codes());
  EXPECT_EQ(again.labels(), h.labels());
}

TEST(BreakdownLevel, ParseAndDepth) {
  EXPECT_EQ(parse_level("bl2"), BreakdownLevel::BL2);
  EXPECT_EQ(max_depth(BreakdownLevel::BL0), 1u);
  EXPECT_EQ(max_depth(BreakdownLevel::BL1), 3u);
  EXPECT_EQ(max_depth(BreakdownLevel::BL2), 3u);
  EXPECT_ERRC(parse_level("BL7"), Errc::InvalidArgument);
}
