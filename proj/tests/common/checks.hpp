#pragma once

// Glue between the library and the independent oracles: conversions plus
// property checks that return an empty string on success and a description
// of the first violation otherwise.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "obdaml/metrics.hpp"
#include "obdaml/naive_bayes.hpp"
#include "obdaml/rollup.hpp"
#include "oracles/metrics_oracle.hpp"
#include "oracles/nb_oracle.hpp"
#include "oracles/rollup_oracle.hpp"

namespace checks {

inline std::string describe(const std::map<std::string, std::size_t>& counts) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [c, n] : counts) {
    os << (first ? "" : ", ") << c << ':' << n;
    first = false;
  }
  os << '}';
  return os.str();
}

inline obdaml::ClassCounts to_counts(const std::map<std::string, std::size_t>& raw,
                                     obdaml::BreakdownLevel level = obdaml::BreakdownLevel::BL1) {
  obdaml::ClassCounts cc;
  cc.level = level;
  for (const auto& [c, n] : raw) cc.counts[obdaml::ClassCode::parse(c)] = n;
  return cc;
}

inline obdaml::Hierarchy hierarchy_for(const std::set<std::string>& codes,
                                       obdaml::BreakdownLevel level = obdaml::BreakdownLevel::BL1) {
  std::vector<obdaml::ClassCode> cs;
  for (const auto& c : codes) cs.push_back(obdaml::ClassCode::parse(c));
  return obdaml::Hierarchy::from_codes(level, cs);
}

struct RollupCase {
  std::set<std::string> codes;
  std::map<std::string, std::size_t> counts;
  std::size_t v = 0;
  std::size_t min_support = 10;
  obdaml::RootPolicy policy = obdaml::RootPolicy::KeepIfMinSupport;

  std::string str() const {
    std::ostringstream os;
    os << "counts " << describe(counts) << " v=" << v << " min_support=" << min_support << ' '
       << obdaml::to_string(policy);
    return os.str();
  }
};

inline obdaml::RollupResult run(const RollupCase& c) {
  obdaml::RollupConfig cfg{c.v, c.min_support, c.policy};
  return obdaml::compute_rollup(to_counts(c.counts), hierarchy_for(c.codes), cfg);
}

/// Agreement with the literal while-loop oracle on mapping and retained counts.
inline std::string rollup_matches_oracle(const RollupCase& c, const obdaml::RollupResult& r) {
  auto o = oracle::rollup(c.counts, c.v, c.min_support, c.policy == obdaml::RootPolicy::DiscardBelowV);
  std::map<std::string, std::size_t> retained;
  for (const auto& [code, n] : r.mapping.retained.counts) retained[code.str()] = n;
  if (retained != o.retained) {
    return c.str() + ": retained " + describe(retained) + " but oracle retained " + describe(o.retained);
  }
  for (const auto& [src, tgt] : o.map) {
    auto got = r.mapping.map.find(obdaml::ClassCode::parse(src));
    if (got == r.mapping.map.end()) return c.str() + ": no mapping for " + src;
    std::string g = obdaml::target_string(got->second), w = tgt ? *tgt : "DISCARDED";
    if (g != w) return c.str() + ": " + src + " -> " + g + ", oracle says " + w;
  }
  return {};
}

/// Conservation, ancestor-or-self targets, and the two retention floors.
inline std::string rollup_invariants(const RollupCase& c, const obdaml::RollupResult& r) {
  std::size_t in = 0, kept = 0, dropped = 0;
  for (const auto& [_, n] : c.counts) in += n;
  for (const auto& [_, n] : r.mapping.retained.counts) kept += n;
  for (const auto& [_, n] : r.audit.discarded) dropped += n;
  if (in != kept + dropped) {
    return c.str() + ": " + std::to_string(in) + " samples in, " + std::to_string(kept) + " retained + " +
           std::to_string(dropped) + " discarded";
  }
  for (const auto& [src, tgt] : r.mapping.map) {
    if (tgt && !obdaml::is_descendant_or_self(src, *tgt)) {
      return c.str() + ": " + src.str() + " mapped to non-ancestor " + tgt->str();
    }
    if (tgt && !r.mapping.retained.counts.count(*tgt)) {
      return c.str() + ": " + src.str() + " mapped to unretained " + tgt->str();
    }
  }
  for (const auto& [code, n] : r.mapping.retained.counts) {
    if (!code.is_root() && n < c.v) return c.str() + ": non-root " + code.str() + " retained with " + std::to_string(n);
    if (n < c.min_support) return c.str() + ": " + code.str() + " retained below min_support";
  }
  return {};
}

/// Same result when the hierarchy and counts are assembled in shuffled order.
inline std::string rollup_order_independent(const RollupCase& c, const obdaml::RollupResult& r, std::mt19937_64& rng) {
  std::vector<obdaml::ClassCode> codes;
  for (const auto& s : c.codes) codes.push_back(obdaml::ClassCode::parse(s));
  std::shuffle(codes.begin(), codes.end(), rng);
  std::vector<std::pair<std::string, std::size_t>> entries(c.counts.begin(), c.counts.end());
  std::shuffle(entries.begin(), entries.end(), rng);
  obdaml::ClassCounts cc;
  cc.level = obdaml::BreakdownLevel::BL1;
  for (const auto& [s, n] : entries) cc.counts.emplace(obdaml::ClassCode::parse(s), n);
  auto again = obdaml::compute_rollup(cc, obdaml::Hierarchy::from_codes(obdaml::BreakdownLevel::BL1, codes),
                                      {c.v, c.min_support, c.policy});
  if (!(again.mapping == r.mapping) || !(again.audit == r.audit)) return c.str() + ": result depends on input order";
  return {};
}

/// Dense row for the oracle from a sparse vector.
inline std::vector<int> dense(const obdaml::CountVector& x, std::size_t vocab) {
  std::vector<int> d(vocab, 0);
  for (const auto& [f, n] : x.entries) d[f] = static_cast<int>(n);
  return d;
}

inline obdaml::CountVector sparse(const std::vector<int>& d) {
  obdaml::CountVector x;
  for (std::size_t f = 0; f < d.size(); ++f)
    if (d[f] > 0) x.entries.emplace_back(static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(d[f]));
  return x;
}

/// Compares a metrics report against the brute-force oracle; exact up to
/// floating-point summation order (1e-12).
inline std::string metrics_match(const std::vector<std::string>& truth, const std::vector<std::string>& pred) {
  auto o = oracle::metrics(truth, pred);
  auto r = obdaml::report(obdaml::confusion(truth, pred));
  constexpr double tol = 1e-12;
  auto bad = [&](const char* what, double got, double want) {
    std::ostringstream os;
    os << what << ": got " << got << " oracle " << want;
    return os.str();
  };
  if (r.per_class.size() != o.per_class.size()) return "class sets differ";
  for (const auto& [c, m] : r.per_class) {
    const auto& w = o.per_class.at(c);
    if (m.support != w.support) return "support of " + c;
    if (std::abs(m.precision - w.precision) > tol) return bad("precision", m.precision, w.precision);
    if (std::abs(m.recall - w.recall) > tol) return bad("recall", m.recall, w.recall);
    if (std::abs(m.f1 - w.f1) > tol) return bad("f1", m.f1, w.f1);
  }
  const std::pair<double, double> pairs[] = {{r.macro.precision, o.macro_p},    {r.macro.recall, o.macro_r},
                                             {r.macro.f1, o.macro_f1},          {r.weighted.precision, o.weighted_p},
                                             {r.weighted.recall, o.weighted_r}, {r.weighted.f1, o.weighted_f1},
                                             {r.accuracy, o.accuracy}};
  const char* names[] = {"macro P", "macro R", "macro F1", "weighted P", "weighted R", "weighted F1", "accuracy"};
  for (std::size_t i = 0; i < 7; ++i)
    if (std::abs(pairs[i].first - pairs[i].second) > tol) return bad(names[i], pairs[i].first, pairs[i].second);
  return {};
}

/// Random small NB instance checked against the probability-space oracle.
inline std::string nb_random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> nv(1, 6), nd(1, 12), nc(1, 4);
  std::uniform_int_distribution<int> cnt(0, 3);
  const std::size_t V = nv(rng), D = nd(rng), C = nc(rng);
  const char* names[] = {"A", "B", "C", "D"};
  std::vector<std::vector<int>> docs(D, std::vector<int>(V));
  std::vector<std::string> labels(D);
  std::vector<obdaml::CountVector> X;
  std::vector<obdaml::ClassCode> y;
  for (std::size_t i = 0; i < D; ++i) {
    for (auto& v : docs[i]) v = cnt(rng);
    labels[i] = names[rng() % C];
    X.push_back(sparse(docs[i]));
    y.push_back(obdaml::ClassCode::parse(labels[i]));
  }
  std::vector<int> q(V);
  for (auto& v : q) v = cnt(rng);
  auto model = obdaml::train_nb(X, y, V, 0.01);
  auto got = obdaml::predict_nb(model, sparse(q));
  auto want = oracle::naive_bayes(docs, labels, 0.01, q);
  if (got.predicted.str() != want.label || std::abs(got.confidence - want.confidence) > 1e-9) {
    std::ostringstream os;
    os.precision(12);
    os << "V=" << V << " D=" << D << ": got " << got.predicted.str() << '@' << got.confidence << ", oracle "
       << want.label << '@' << want.confidence;
    return os.str();
  }
  return {};
}

}  // namespace checks
