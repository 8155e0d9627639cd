#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "obdaml/detail/csv.hpp"
#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"

namespace obdaml {

struct Record {
  std::string record_id;
  std::string plant_id;
  std::string description;
  std::array<std::optional<ClassCode>, 3> labels;
  // Set by apply_mapping when the level's label resolves to a discarded class.
  std::array<bool, 3> excluded{};

  const std::optional<ClassCode>& label(BreakdownLevel l) const { return labels[index_of(l)]; }
  std::optional<ClassCode>& label(BreakdownLevel l) { return labels[index_of(l)]; }

  /// `plant_id/record_id`, the key used by predictions and corrections.
  std::string key() const { return plant_id + "/" + record_id; }

  bool operator==(const Record&) const = default;
};

enum class Split : std::uint8_t { Train, Validation };

inline std::string to_string(Split s) { return s == Split::Train ? "train" : "validation"; }

/// Records plus a parallel split tag per record. Ingestion tags everything
/// as Train; split_dataset assigns the validation tail.
struct Dataset {
  std::vector<Record> records;
  std::vector<Split> split;

  std::size_t size() const { return records.size(); }
  std::size_t count(Split s) const { return static_cast<std::size_t>(std::count(split.begin(), split.end(), s)); }

  std::optional<std::size_t> find(const std::string& key) const {
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].key() == key) return i;
    return std::nullopt;
  }

  bool operator==(const Dataset&) const = default;
};

struct Reject {
  std::size_t row = 0;
  std::string reason;
};

struct IngestResult {
  Dataset dataset;
  std::vector<Reject> rejects;
};

namespace detail {
inline constexpr std::array<const char*, 3> kLabelColumns{"bl0", "bl1", "bl2"};
}

/// Parses the record CSV. Rows whose labels are invalid or absent from the
/// level's hierarchy go to `rejects`; structural CSV problems throw.
inline IngestResult ingest_csv_text(const std::string& text, const HierarchySet& hierarchies) {
  auto rows = csv::parse(text);
  if (rows.empty()) throw Error(Errc::MissingColumn, "empty file: header row missing");
  csv::Header header(rows.front());
  const std::size_t c_id = header.require("record_id");
  const std::size_t c_plant = header.require("plant_id");
  const std::size_t c_desc = header.require("description");
  std::array<std::optional<std::size_t>, 3> c_label;
  for (std::size_t l = 0; l < 3; ++l) c_label[l] = header.find(detail::kLabelColumns[l]);

  const std::size_t width = rows.front().fields.size();
  IngestResult out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != width) {
      throw Error(Errc::MalformedCsv, "row " + std::to_string(row.number) + ": expected " + std::to_string(width) +
                                          " columns, found " + std::to_string(row.fields.size()));
    }
    Record rec;
    rec.record_id = row.fields[c_id];
    rec.plant_id = row.fields[c_plant];
    rec.description = row.fields[c_desc];
    if (rec.record_id.empty()) {
      out.rejects.push_back({row.number, "empty record_id"});
      continue;
    }
    std::string reason;
    for (std::size_t l = 0; l < 3 && reason.empty(); ++l) {
      if (!c_label[l]) continue;
      const std::string& cell = row.fields[*c_label[l]];
      if (cell.empty()) continue;
      auto level = kAllLevels[l];
      try {
        auto code = ClassCode::parse(cell);
        const auto& h = hierarchies[l];
        if (h && !h->contains(code)) {
          reason = to_string(level) + " code '" + code.str() + "' not in hierarchy";
        } else if (code.level() > max_depth(level)) {
          reason = to_string(level) + " code '" + code.str() + "' too deep";
        } else {
          rec.labels[l] = code;
        }
      } catch (const Error&) {
        reason = to_string(level) + " code '" + cell + "' is not a valid class code";
      }
    }
    if (reason.empty() && !seen.emplace(rec.plant_id, rec.record_id).second) {
      reason = "duplicate (plant_id, record_id)";
    }
    if (!reason.empty()) {
      out.rejects.push_back({row.number, reason});
      continue;
    }
    out.dataset.records.push_back(std::move(rec));
    out.dataset.split.push_back(Split::Train);
  }
  return out;
}

inline IngestResult ingest_csv(const std::string& path, const HierarchySet& hierarchies) {
  return ingest_csv_text(csv::read_file(path), hierarchies);
}

inline std::string format_dataset_csv(const Dataset& ds) {
  std::ostringstream os;
  csv::write_row(os, {"record_id", "plant_id", "description", "bl0", "bl1", "bl2"});
  for (const auto& r : ds.records) {
    std::vector<std::string> f{r.record_id, r.plant_id, r.description};
    for (const auto& l : r.labels) f.push_back(l ? l->str() : "");
    csv::write_row(os, f);
  }
  return os.str();
}

inline std::string format_rejects_csv(const std::vector<Reject>& rejects) {
  std::ostringstream os;
  csv::write_row(os, {"row", "reason"});
  for (const auto& r : rejects) csv::write_row(os, {std::to_string(r.row), r.reason});
  return os.str();
}

struct SplitOptions {
  double validation_fraction = 0.20;
  std::uint64_t seed = 42;
  // When set, each class at this level is split separately.
  std::optional<BreakdownLevel> stratify_by;
};

namespace detail {
inline std::size_t validation_size(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  return std::clamp<std::size_t>(k, 1, n - 1);
}
}  // namespace detail

/// Seeded shuffle, then the tail `fraction` of the order becomes validation.
inline Dataset split_dataset(Dataset ds, const SplitOptions& opts) {
  if (!(opts.validation_fraction > 0.0 && opts.validation_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "validation fraction must lie strictly between 0 and 1");
  }
  if (ds.size() < 2) throw Error(Errc::TooFewRecords, "need at least 2 records to split");

  std::mt19937_64 rng(opts.seed);
  ds.split.assign(ds.size(), Split::Train);
  auto assign = [&](std::vector<std::size_t> idx) {
    std::shuffle(idx.begin(), idx.end(), rng);
    if (idx.size() < 2) return;
    std::size_t k = detail::validation_size(idx.size(), opts.validation_fraction);
    for (std::size_t i = idx.size() - k; i < idx.size(); ++i) ds.split[idx[i]] = Split::Validation;
  };

  if (!opts.stratify_by) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    assign(std::move(idx));
    return ds;
  }
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& l = ds.records[i].label(*opts.stratify_by);
    strata[l ? l->str() : std::string()].push_back(i);
  }
  for (auto& [_, idx] : strata) assign(std::move(idx));
  return ds;
}

struct ClassCounts {
  BreakdownLevel level = BreakdownLevel::BL0;
  std::map<ClassCode, std::size_t> counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& [_, n] : counts) t += n;
    return t;
  }
  bool operator==(const ClassCounts&) const = default;
};

inline ClassCounts class_counts(const Dataset& ds, BreakdownLevel level, Split split = Split::Train) {
  ClassCounts cc;
  cc.level = level;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.split[i] != split) continue;
    if (const auto& l = ds.records[i].label(level)) ++cc.counts[*l];
  }
  return cc;
}

}  // namespace obdaml
