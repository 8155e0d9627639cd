#pragma once

// IEC-81346-style classification codes and per-breakdown-level hierarchies.
// A code is 1-3 uppercase letters; each extra letter refines the class named
// by the shorter prefix, so the parent of a code is the code minus its last
// letter.

#include <algorithm>
#include <array>
#include <cctype>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "obdaml/detail/csv.hpp"
#include "obdaml/error.hpp"

namespace obdaml {

enum class BreakdownLevel { BL0 = 0, BL1 = 1, BL2 = 2 };

inline constexpr std::array<BreakdownLevel, 3> kAllLevels{BreakdownLevel::BL0, BreakdownLevel::BL1,
                                                          BreakdownLevel::BL2};

inline constexpr std::size_t index_of(BreakdownLevel l) { return static_cast<std::size_t>(l); }

inline std::string to_string(BreakdownLevel l) {
  switch (l) {
    case BreakdownLevel::BL0: return "BL0";
    case BreakdownLevel::BL1: return "BL1";
    case BreakdownLevel::BL2: return "BL2";
  }
  return "?";
}

inline BreakdownLevel parse_level(std::string_view text) {
  std::string up;
  for (char c : text) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "BL0") return BreakdownLevel::BL0;
  if (up == "BL1") return BreakdownLevel::BL1;
  if (up == "BL2") return BreakdownLevel::BL2;
  throw Error(Errc::InvalidArgument, "unknown breakdown level '" + std::string(text) + "'");
}

/// Deepest code length permitted at a breakdown level. BL0 is a flat pool.
inline constexpr std::size_t max_depth(BreakdownLevel l) { return l == BreakdownLevel::BL0 ? 1 : 3; }

inline constexpr std::size_t kMaxCodeLength = 3;

class ClassCode {
 public:
  ClassCode() = default;

  /// Uppercases and validates; throws InvalidCode.
  static ClassCode parse(std::string_view text) {
    if (text.empty()) throw Error(Errc::InvalidCode, "empty class code");
    if (text.size() > kMaxCodeLength) {
      throw Error(Errc::InvalidCode, "class code '" + std::string(text) + "' longer than 3 letters");
    }
    ClassCode code;
    for (char c : text) {
      auto u = static_cast<unsigned char>(c);
      if (!std::isalpha(u) || u > 0x7f) {
        throw Error(Errc::InvalidCode, "class code '" + std::string(text) + "' contains non-letter characters");
      }
      code.letters_.push_back(static_cast<char>(std::toupper(u)));
    }
    return code;
  }

  const std::string& str() const noexcept { return letters_; }
  std::size_t level() const noexcept { return letters_.size(); }
  bool is_root() const noexcept { return letters_.size() == 1; }

  auto operator<=>(const ClassCode&) const = default;

 private:
  std::string letters_;
};

inline std::ostream& operator<<(std::ostream& os, const ClassCode& c) { return os << c.str(); }

inline std::optional<ClassCode> parent_of(const ClassCode& code) {
  if (code.level() <= 1) return std::nullopt;
  return ClassCode::parse(std::string_view(code.str()).substr(0, code.level() - 1));
}

/// Proper ancestors, nearest first.
inline std::vector<ClassCode> ancestors(const ClassCode& code) {
  std::vector<ClassCode> out;
  for (auto p = parent_of(code); p; p = parent_of(*p)) out.push_back(*p);
  return out;
}

/// True iff `b` is a prefix of `a`.
inline bool is_descendant_or_self(const ClassCode& a, const ClassCode& b) {
  return a.str().size() >= b.str().size() && a.str().compare(0, b.str().size(), b.str()) == 0;
}

/// Immutable set of codes for one breakdown level, closed under parents.
class Hierarchy {
 public:
  Hierarchy() = default;

  /// Builds a hierarchy, inserting any missing intermediate prefixes. Each
  /// insertion is recorded in warnings(). Throws DepthExceeded.
  static Hierarchy from_codes(BreakdownLevel level, const std::vector<ClassCode>& codes,
                              std::map<ClassCode, std::string> labels = {}) {
    Hierarchy h;
    h.level_ = level;
    h.labels_ = std::move(labels);
    for (const auto& c : codes) {
      if (c.level() > max_depth(level)) {
        throw Error(Errc::DepthExceeded, "code '" + c.str() + "' deeper than " +
                                             std::to_string(max_depth(level)) + " at " + to_string(level));
      }
      h.codes_.insert(c);
    }
    std::vector<ClassCode> listed(h.codes_.begin(), h.codes_.end());
    for (const auto& c : listed) {
      for (const auto& a : ancestors(c)) {
        if (h.codes_.insert(a).second) {
          h.warnings_.push_back("inserted missing parent '" + a.str() + "' of '" + c.str() + "'");
        }
      }
    }
    return h;
  }

  BreakdownLevel level() const noexcept { return level_; }
  const std::set<ClassCode>& codes() const noexcept { return codes_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::size_t size() const noexcept { return codes_.size(); }
  bool contains(const ClassCode& c) const { return codes_.count(c) > 0; }

  std::optional<std::string> label(const ClassCode& c) const {
    auto it = labels_.find(c);
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }
  const std::map<ClassCode, std::string>& labels() const noexcept { return labels_; }

  std::vector<ClassCode> roots() const {
    std::vector<ClassCode> out;
    for (const auto& c : codes_)
      if (c.is_root()) out.push_back(c);
    return out;
  }

  std::vector<ClassCode> children(const ClassCode& c) const {
    std::vector<ClassCode> out;
    for (const auto& d : descendants_or_self(c))
      if (d.level() == c.level() + 1) out.push_back(d);
    return out;
  }

  /// Codes having `c` as prefix, in lexicographic order (includes `c`).
  std::vector<ClassCode> descendants_or_self(const ClassCode& c) const {
    std::vector<ClassCode> out;
    for (auto it = codes_.lower_bound(c); it != codes_.end() && is_descendant_or_self(*it, c); ++it) {
      out.push_back(*it);
    }
    return out;
  }

  bool is_leaf(const ClassCode& c) const { return children(c).empty(); }

 private:
  BreakdownLevel level_ = BreakdownLevel::BL0;
  std::set<ClassCode> codes_;
  std::map<ClassCode, std::string> labels_;
  std::vector<std::string> warnings_;
};

/// Parses the `CODE[,label]` line format. `#` lines and blank lines are skipped.
inline Hierarchy parse_hierarchy(std::string_view text, BreakdownLevel level) {
  std::vector<ClassCode> codes;
  std::map<ClassCode, std::string> labels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    line.remove_prefix(first);
    auto comma = line.find(',');
    std::string_view code_text = line.substr(0, comma);
    while (!code_text.empty() && (code_text.back() == ' ' || code_text.back() == '\t')) code_text.remove_suffix(1);
    ClassCode code;
    try {
      code = ClassCode::parse(code_text);
    } catch (const Error& e) {
      throw Error(Errc::InvalidCode, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (code.level() > max_depth(level)) {
      throw Error(Errc::DepthExceeded, "line " + std::to_string(line_no) + ": code '" + code.str() +
                                           "' deeper than " + std::to_string(max_depth(level)) + " at " +
                                           to_string(level));
    }
    codes.push_back(code);
    if (comma != std::string_view::npos) {
      std::string label(line.substr(comma + 1));
      auto b = label.find_first_not_of(" \t");
      auto e = label.find_last_not_of(" \t");
      if (b != std::string::npos) labels[code] = label.substr(b, e - b + 1);
    }
  }
  return Hierarchy::from_codes(level, codes, std::move(labels));
}

inline Hierarchy load_hierarchy(const std::string& path, BreakdownLevel level) {
  return parse_hierarchy(csv::read_file(path), level);
}

inline std::string format_hierarchy(const Hierarchy& h) {
  std::ostringstream os;
  for (const auto& c : h.codes()) {
    os << c.str();
    if (auto l = h.label(c)) os << ',' << *l;
    os << '\n';
  }
  return os.str();
}

/// One optional hierarchy per breakdown level.
using HierarchySet = std::array<std::optional<Hierarchy>, 3>;

}  // namespace obdaml
