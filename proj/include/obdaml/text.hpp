#pragma once

#include <cctype>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace obdaml {

/// Extra removal patterns applied to lowercased text before symbol stripping.
struct CleaningOptions {
  std::vector<std::string> stop_patterns;
};

/// Lowercases, turns every non-letter byte (symbols and digits) into a space,
/// and collapses whitespace. Enumerations such as "Engine 2" lose their
/// number. Non-ASCII bytes are kept so UTF-8 letters survive.
inline std::string clean_text(std::string_view raw, const CleaningOptions& opts = {}) {
  std::string lowered;
  lowered.reserve(raw.size());
  for (char c : raw) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

  for (const auto& pattern : opts.stop_patterns) {
    lowered = std::regex_replace(lowered, std::regex(pattern), " ");
  }

  std::string out;
  out.reserve(lowered.size());
  bool pending_space = false;
  for (char c : lowered) {
    auto u = static_cast<unsigned char>(c);
    bool keep = (u >= 'a' && u <= 'z') || u >= 0x80;
    if (!keep) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

struct TokenizedText {
  std::vector<std::string> tokens;
  bool operator==(const TokenizedText&) const = default;
};

inline TokenizedText tokenize(std::string_view cleaned) {
  TokenizedText t;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
    std::size_t start = i;
    while (i < cleaned.size() && !std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
    if (i > start) t.tokens.emplace_back(cleaned.substr(start, i - start));
  }
  return t;
}

inline TokenizedText preprocess(std::string_view raw, const CleaningOptions& opts = {}) {
  return tokenize(clean_text(raw, opts));
}

}  // namespace obdaml
