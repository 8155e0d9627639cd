#pragma once

// Classified records as subject-predicate-object statements.
//
//   <base/plant-slug/record-slug> <vocab#ClassifiedAs> <vocab#PowerPlantComponentQA>
//
// The store answers single triple patterns and "classified as C or any
// subclass of C", where subclasses are the codes extending C.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "obdaml/dataset.hpp"
#include "obdaml/detail/csv.hpp"
#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"

namespace obdaml {

class Iri {
 public:
  Iri() = default;

  static bool valid(std::string_view s) {
    auto colon = s.find(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    for (std::size_t i = 1; i < colon; ++i) {
      auto c = static_cast<unsigned char>(s[i]);
      if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') return false;
    }
    for (char ch : s) {
      auto c = static_cast<unsigned char>(ch);
      if (c <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' || c == '\\' ||
          c == '^' || c == '`')
        return false;
    }
    return true;
  }

  static Iri parse(std::string_view s) {
    if (!valid(s)) throw Error(Errc::InvalidArgument, "invalid IRI '" + std::string(s) + "'");
    Iri i;
    i.value_ = std::string(s);
    return i;
  }

  const std::string& str() const noexcept { return value_; }
  auto operator<=>(const Iri&) const = default;

 private:
  std::string value_;
};

struct Triple {
  Iri subject;
  Iri predicate;
  Iri object;

  std::string to_ntriples() const {
    return "<" + subject.str() + "> <" + predicate.str() + "> <" + object.str() + "> .";
  }
  auto operator<=>(const Triple&) const = default;
};

/// Set of triples with subject/predicate/object indexes. Const member
/// functions may run concurrently; writers must be serialized by the caller.
class TripleStore {
 public:
  TripleStore() = default;
  // Indexes point into triples_, so copies rebuild them.
  TripleStore(const TripleStore& o) {
    for (const auto& t : o.triples_) insert(t);
  }
  TripleStore& operator=(const TripleStore& o) {
    if (this != &o) {
      TripleStore tmp(o);
      *this = std::move(tmp);
    }
    return *this;
  }
  TripleStore(TripleStore&&) noexcept = default;
  TripleStore& operator=(TripleStore&&) noexcept = default;

  /// Returns false when the triple was already present.
  bool insert(const Triple& t) {
    auto [it, added] = triples_.insert(t);
    if (added) {
      const Triple* p = &*it;
      by_subject_[t.subject].push_back(p);
      by_predicate_[t.predicate].push_back(p);
      by_object_[t.object].push_back(p);
    }
    return added;
  }

  std::size_t size() const noexcept { return triples_.size(); }
  const std::set<Triple>& triples() const noexcept { return triples_; }

  /// Triples matching every bound component; unbound components match anything.
  std::vector<Triple> match(const std::optional<Iri>& s, const std::optional<Iri>& p,
                            const std::optional<Iri>& o) const {
    auto ok = [&](const Triple& t) {
      return (!s || t.subject == *s) && (!p || t.predicate == *p) && (!o || t.object == *o);
    };
    std::vector<Triple> out;
    const std::vector<const Triple*>* candidates = nullptr;
    auto narrow = [&](const auto& index, const std::optional<Iri>& key) {
      if (!key) return true;
      auto it = index.find(*key);
      if (it == index.end()) return false;
      if (!candidates || it->second.size() < candidates->size()) candidates = &it->second;
      return true;
    };
    if (!narrow(by_subject_, s) || !narrow(by_predicate_, p) || !narrow(by_object_, o)) return out;
    if (!candidates) return {triples_.begin(), triples_.end()};
    for (const Triple* t : *candidates)
      if (ok(*t)) out.push_back(*t);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool operator==(const TripleStore& o) const { return triples_ == o.triples_; }

 private:
  std::set<Triple> triples_;
  std::map<Iri, std::vector<const Triple*>> by_subject_, by_predicate_, by_object_;
};

inline std::vector<Triple> match_pattern(const TripleStore& ts, const std::optional<Iri>& s = {},
                                         const std::optional<Iri>& p = {}, const std::optional<Iri>& o = {}) {
  return ts.match(s, p, o);
}

struct MappingContext {
  std::string base_iri = "http://example.org/plant/";
  std::string vocab_prefix = "http://example.org/iec-81346#";
  std::string class_prefix = "PowerPlantComponent";

  void validate() const {
    if (!Iri::valid(base_iri)) throw Error(Errc::InvalidContext, "base_iri '" + base_iri + "' is not an IRI");
    if (!Iri::valid(vocab_prefix + "ClassifiedAs")) {
      throw Error(Errc::InvalidContext, "vocab_prefix '" + vocab_prefix + "' does not expand to IRIs");
    }
    if (!Iri::valid(vocab_prefix + class_prefix + "A")) {
      throw Error(Errc::InvalidContext, "class template does not expand to IRIs");
    }
  }

  Iri classified_as() const { return Iri::parse(vocab_prefix + "ClassifiedAs"); }
  Iri class_iri(const ClassCode& c) const { return Iri::parse(vocab_prefix + class_prefix + c.str()); }

  /// Inverse of class_iri; none for IRIs outside the template.
  std::optional<ClassCode> code_of(const Iri& iri) const {
    const std::string prefix = vocab_prefix + class_prefix;
    if (iri.str().rfind(prefix, 0) != 0) return std::nullopt;
    try {
      return ClassCode::parse(std::string_view(iri.str()).substr(prefix.size()));
    } catch (const Error&) {
      return std::nullopt;
    }
  }
};

inline MappingContext context_from_json(const nlohmann::json& j) {
  MappingContext c;
  try {
    c.base_iri = j.value("base_iri", c.base_iri);
    c.vocab_prefix = j.value("vocab_prefix", c.vocab_prefix);
    c.class_prefix = j.value("class_prefix", c.class_prefix);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidContext, e.what());
  }
  c.validate();
  return c;
}

/// Lowercase, spaces to hyphens, everything else non-alphanumeric dropped.
inline std::string slug(std::string_view text) {
  std::string out;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) && c < 0x80) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      if (!out.empty() && out.back() != '-') out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

inline Iri subject_iri(const Record& r, const MappingContext& ctx) {
  auto plant = slug(r.plant_id), id = slug(r.record_id);
  if (plant.empty() || id.empty()) {
    throw Error(Errc::InvalidContext, "record '" + r.key() + "' has an empty plant or record slug");
  }
  return Iri::parse(ctx.base_iri + plant + "/" + id);
}

using LevelCodes = std::map<BreakdownLevel, ClassCode>;

inline std::vector<Triple> record_to_triples(const Record& r, const LevelCodes& predictions,
                                             const MappingContext& ctx) {
  ctx.validate();
  std::vector<Triple> out;
  if (predictions.empty()) return out;
  Iri s = subject_iri(r, ctx);
  for (const auto& [_, code] : predictions) out.push_back({s, ctx.classified_as(), ctx.class_iri(code)});
  return out;
}

struct MappedStore {
  TripleStore store;
  std::vector<std::string> collisions;  // "key-a and key-b share <iri>"
};

/// Maps every record that has at least one code in `codes` (keyed by record key).
inline MappedStore map_records(const Dataset& ds, const std::map<std::string, LevelCodes>& codes,
                               const MappingContext& ctx) {
  ctx.validate();
  MappedStore out;
  std::map<Iri, std::string> owner;
  for (const auto& r : ds.records) {
    auto it = codes.find(r.key());
    if (it == codes.end() || it->second.empty()) continue;
    Iri s = subject_iri(r, ctx);
    auto [o, fresh] = owner.emplace(s, r.key());
    if (!fresh && o->second != r.key()) {
      out.collisions.push_back(o->second + " and " + r.key() + " share <" + s.str() + ">");
    }
    for (const auto& t : record_to_triples(r, it->second, ctx)) out.store.insert(t);
  }
  return out;
}

inline std::string format_ntriples(const TripleStore& ts) {
  std::vector<std::string> lines;
  lines.reserve(ts.size());
  for (const auto& t : ts.triples()) lines.push_back(t.to_ntriples());
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

inline std::size_t serialize_ntriples(const TripleStore& ts, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path + "'");
  out << format_ntriples(ts);
  if (!out) throw Error(Errc::IoError, "write to '" + path + "' failed");
  return ts.size();
}

inline TripleStore parse_ntriples_text(std::string_view text) {
  TripleStore ts;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    auto fail = [&](const std::string& why) {
      return Error(Errc::ParseError, "line " + std::to_string(line_no) + ": " + why);
    };
    std::size_t i = 0;
    auto skip_ws = [&] {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    };
    skip_ws();
    if (i == line.size() || line[i] == '#') continue;
    Iri parts[3];
    for (auto& part : parts) {
      skip_ws();
      if (i >= line.size() || line[i] != '<') throw fail("expected '<'");
      auto close = line.find('>', i);
      if (close == std::string_view::npos) throw fail("unterminated IRI");
      auto body = line.substr(i + 1, close - i - 1);
      if (!Iri::valid(body)) throw fail("invalid IRI '" + std::string(body) + "'");
      part = Iri::parse(body);
      i = close + 1;
    }
    skip_ws();
    if (i >= line.size() || line[i] != '.') throw fail("missing terminating '.'");
    ++i;
    skip_ws();
    if (i != line.size() && line[i] != '#') throw fail("trailing characters after '.'");
    ts.insert({parts[0], parts[1], parts[2]});
  }
  return ts;
}

inline TripleStore parse_ntriples(const std::string& path) { return parse_ntriples_text(csv::read_file(path)); }

/// Subjects classified as `code`, or as any code extending it when
/// `include_subclasses` is set. Sorted, without duplicates.
inline std::vector<Iri> query_classified_as(const TripleStore& ts, const ClassCode& code, bool include_subclasses,
                                            const Hierarchy& h, const MappingContext& ctx) {
  if (!h.contains(code)) throw Error(Errc::UnknownClass, "class '" + code.str() + "' is not in the hierarchy");
  std::vector<ClassCode> classes = include_subclasses ? h.descendants_or_self(code) : std::vector<ClassCode>{code};
  std::set<Iri> subjects;
  const Iri pred = ctx.classified_as();
  for (const auto& c : classes)
    for (const auto& t : ts.match(std::nullopt, pred, ctx.class_iri(c))) subjects.insert(t.subject);
  return {subjects.begin(), subjects.end()};
}

}  // namespace obdaml
