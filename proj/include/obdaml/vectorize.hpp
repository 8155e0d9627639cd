#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "obdaml/error.hpp"
#include "obdaml/text.hpp"

namespace obdaml {

/// Sparse token-count vector, sorted by feature index, all counts positive.
struct CountVector {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;

  std::uint32_t get(std::uint32_t feature) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), feature,
                               [](const auto& e, std::uint32_t f) { return e.first < f; });
    return it != entries.end() && it->first == feature ? it->second : 0;
  }
  bool operator==(const CountVector&) const = default;
};

/// Token → dense index, ordered by descending document frequency with
/// lexicographic tie-break.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> df) : tokens_(std::move(tokens)), df_(std::move(df)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<std::uint32_t>(i));
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::size_t>& document_frequencies() const noexcept { return df_; }

  std::optional<std::uint32_t> index(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t df(const std::string& token) const {
    auto i = index(token);
    return i ? df_[*i] : 0;
  }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_ && df_ == o.df_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

inline Vocabulary build_vocabulary(const std::vector<TokenizedText>& train_docs, std::optional<std::size_t> cap = {}) {
  if (train_docs.empty()) throw Error(Errc::EmptyCorpus, "cannot build a vocabulary from zero documents");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : train_docs) {
    std::set<std::string_view> seen(doc.tokens.begin(), doc.tokens.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  // map order is lexicographic, so a stable sort on df keeps the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (cap && ranked.size() > *cap) ranked.resize(*cap);
  std::vector<std::string> tokens;
  std::vector<std::size_t> freqs;
  for (auto& [t, n] : ranked) {
    tokens.push_back(std::move(t));
    freqs.push_back(n);
  }
  return Vocabulary(std::move(tokens), std::move(freqs));
}

inline CountVector vectorize(const TokenizedText& doc, const Vocabulary& vocab) {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (const auto& t : doc.tokens)
    if (auto i = vocab.index(t)) ++counts[*i];
  CountVector v;
  v.entries.assign(counts.begin(), counts.end());
  return v;
}

}  // namespace obdaml
