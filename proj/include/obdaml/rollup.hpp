#pragma once

// Dynamic class management: classes with fewer than `v` training samples are
// merged into their hierarchy parent, repeatedly, so that under-represented
// detail is traded for a class the model can learn.
//
// The sweep runs deepest-first, lexicographic within a depth. A parent is only
// judged once every child has had the chance to merge into it, so children
// reinforce parents before the parent's own decision and a single pass
// reaches the fixed point of "while some class has fewer than v samples".
// Roots have nowhere to go and are exempt from merging; they are disposed of
// by RootPolicy. Finally every class below `min_support` is discarded.

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "obdaml/dataset.hpp"
#include "obdaml/detail/csv.hpp"
#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"

namespace obdaml {

enum class RootPolicy { KeepIfMinSupport, DiscardBelowV };

inline std::string to_string(RootPolicy p) {
  return p == RootPolicy::KeepIfMinSupport ? "keep-if-min-support" : "discard-below-v";
}

inline RootPolicy parse_root_policy(std::string_view s) {
  if (s == "keep" || s == "keep-if-min-support") return RootPolicy::KeepIfMinSupport;
  if (s == "discard" || s == "discard-below-v") return RootPolicy::DiscardBelowV;
  throw Error(Errc::InvalidArgument, "unknown root policy '" + std::string(s) + "'");
}

struct RollupConfig {
  std::size_t v = 0;
  std::size_t min_support = 10;
  RootPolicy root_policy = RootPolicy::KeepIfMinSupport;

  void validate() const {
    if (root_policy == RootPolicy::DiscardBelowV && min_support == 0) {
      throw Error(Errc::InvalidArgument, "min_support must be at least 1 when roots may be discarded");
    }
  }
};

/// nullopt stands for DISCARDED.
using MappingTarget = std::optional<ClassCode>;

inline std::string target_string(const MappingTarget& t) { return t ? t->str() : "DISCARDED"; }

struct LabelMapping {
  BreakdownLevel level = BreakdownLevel::BL0;
  std::map<ClassCode, MappingTarget> map;
  ClassCounts retained;

  /// Target for `code`, walking up its ancestors when the code itself is not
  /// mapped. nullopt when neither the code nor any ancestor is mapped.
  std::optional<MappingTarget> resolve(const ClassCode& code) const {
    if (auto it = map.find(code); it != map.end()) return it->second;
    for (const auto& a : ancestors(code))
      if (auto it = map.find(a); it != map.end()) return it->second;
    return std::nullopt;
  }

  bool operator==(const LabelMapping&) const = default;
};

struct RollupStep {
  ClassCode merged;
  ClassCode target;
  std::size_t samples_moved = 0;
  bool operator==(const RollupStep&) const = default;
};

struct RollupAudit {
  std::vector<RollupStep> steps;
  std::vector<std::pair<ClassCode, std::size_t>> discarded;
  bool operator==(const RollupAudit&) const = default;
};

struct RollupResult {
  LabelMapping mapping;
  RollupAudit audit;
};

inline RollupResult compute_rollup(const ClassCounts& counts, const Hierarchy& h, const RollupConfig& cfg) {
  cfg.validate();
  for (const auto& [code, _] : counts.counts) {
    if (!h.contains(code)) throw Error(Errc::UnknownClass, "class '" + code.str() + "' is not in the hierarchy");
  }

  std::map<ClassCode, std::size_t> acc(counts.counts.begin(), counts.counts.end());
  std::map<ClassCode, ClassCode> merged_into;
  RollupResult out;
  out.mapping.level = counts.level;
  out.mapping.retained.level = counts.level;

  for (std::size_t depth = kMaxCodeLength; depth >= 2; --depth) {
    // acc only gains shallower keys while this depth is processed.
    for (auto& [code, n] : acc) {
      if (code.level() != depth || n == 0 || n >= cfg.v) continue;
      ClassCode parent = *parent_of(code);
      acc[parent] += n;
      out.audit.steps.push_back({code, parent, n});
      merged_into.emplace(code, parent);
      n = 0;
    }
  }

  auto final_of = [&](ClassCode c) {
    for (auto it = merged_into.find(c); it != merged_into.end(); it = merged_into.find(c)) c = it->second;
    return c;
  };

  std::map<ClassCode, bool> kept;
  for (const auto& [code, n] : acc) {
    if (merged_into.count(code)) continue;
    bool keep = n > 0 && n >= cfg.min_support;
    if (code.is_root() && n < cfg.v && cfg.root_policy == RootPolicy::DiscardBelowV) keep = false;
    kept[code] = keep;
    if (keep) {
      out.mapping.retained.counts[code] = n;
    } else {
      out.audit.discarded.emplace_back(code, n);
    }
  }

  for (const auto& [code, _] : counts.counts) {
    ClassCode f = final_of(code);
    out.mapping.map[code] = kept.at(f) ? MappingTarget(f) : std::nullopt;
  }
  for (const auto& [code, _] : out.mapping.retained.counts) out.mapping.map.try_emplace(code, code);
  return out;
}

struct MappingApplication {
  Dataset dataset;
  std::size_t rewritten = 0;
  std::size_t excluded = 0;
};

/// Rewrites every record's label at `level`. Labels missing from the mapping
/// resolve through their ancestors; unresolvable or discarded labels are
/// cleared and the record is marked excluded at that level.
inline MappingApplication apply_mapping(Dataset ds, BreakdownLevel level, const LabelMapping& m) {
  if (m.level != level) throw Error(Errc::InvalidArgument, "mapping level does not match requested level");
  MappingApplication out;
  const std::size_t li = index_of(level);
  for (auto& r : ds.records) {
    auto& label = r.labels[li];
    if (!label) continue;
    auto target = m.resolve(*label);
    if (!target || !*target) {
      label.reset();
      r.excluded[li] = true;
      ++out.excluded;
    } else if (**target != *label) {
      label = **target;
      ++out.rewritten;
    }
  }
  out.dataset = std::move(ds);
  return out;
}

struct MappingSummary {
  std::size_t retained = 0;
  std::size_t merged = 0;
  std::size_t merged_one_level = 0;
  std::size_t merged_two_levels = 0;
  std::size_t discarded = 0;
  std::size_t samples_moved = 0;
  std::size_t samples_discarded = 0;
};

inline MappingSummary mapping_summary(const LabelMapping& m, const RollupAudit& a) {
  MappingSummary s;
  s.retained = m.retained.counts.size();
  for (const auto& [src, tgt] : m.map) {
    if (!tgt) {
      ++s.discarded;
    } else if (*tgt != src) {
      ++s.merged;
      auto up = src.level() - tgt->level();
      if (up == 1) ++s.merged_one_level;
      if (up == 2) ++s.merged_two_levels;
    }
  }
  for (const auto& st : a.steps) s.samples_moved += st.samples_moved;
  for (const auto& [_, n] : a.discarded) s.samples_discarded += n;
  return s;
}

inline std::string format_summary(const MappingSummary& s) {
  std::ostringstream os;
  auto row = [&](const char* name, std::size_t v) { os << std::left << std::setw(22) << name << v << '\n'; };
  row("retained classes", s.retained);
  row("merged classes", s.merged);
  row("  one level up", s.merged_one_level);
  row("  two levels up", s.merged_two_levels);
  row("discarded classes", s.discarded);
  row("samples moved", s.samples_moved);
  row("samples discarded", s.samples_discarded);
  return os.str();
}

inline std::string format_mapping_csv(const LabelMapping& m) {
  std::ostringstream os;
  csv::write_row(os, {"source_code", "target_code"});
  for (const auto& [src, tgt] : m.map) csv::write_row(os, {src.str(), target_string(tgt)});
  return os.str();
}

inline std::string format_audit_csv(const RollupAudit& a) {
  std::ostringstream os;
  csv::write_row(os, {"merged_class", "target_class", "samples_moved"});
  for (const auto& s : a.steps) csv::write_row(os, {s.merged.str(), s.target.str(), std::to_string(s.samples_moved)});
  return os.str();
}

}  // namespace obdaml
