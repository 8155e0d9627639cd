#pragma once

// Seeded generator of labeled device-description corpora with the shape of
// real plant exports: one dominant class, a Zipf-distributed tail, short
// abbreviated descriptions, symbol noise and enumeration suffixes.
//
// Each class owns a small pool of pseudo-words. A description word is drawn
// from one of the record's labeled levels, then from a node on the path from
// the label up to its root (the label's own pool with `specific_rate`, an
// ancestor's pool otherwise), or from a generic pool shared by all classes.
// Deep classes are therefore only separable through their rarer own tokens,
// while their ancestors are well identified.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "obdaml/dataset.hpp"
#include "obdaml/detail/hash.hpp"
#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"

namespace obdaml {

struct SynthConfig {
  std::uint64_t seed = 1;
  HierarchySet hierarchy;
  std::size_t n_records = 1000;
  double head_class_share = 0.7218;
  double zipf_exponent = 1.0;
  double mean_words = 6.71;
  double noise_rate = 0.05;
  double enumeration_rate = 0.15;

  std::array<std::optional<ClassCode>, 3> head_class;  // default: first root
  std::size_t plants = 5;
  std::size_t tokens_per_class = 4;
  std::size_t generic_tokens = 40;
  double generic_rate = 0.25;
  double specific_rate = 0.35;

  void validate() const {
    auto bad = [](const std::string& m) { throw Error(Errc::ConfigInvalid, m); };
    if (!(head_class_share >= 0.0 && head_class_share < 1.0)) bad("head_class_share must be in [0,1)");
    if (!(mean_words > 0.0)) bad("mean_words must be positive");
    if (!(zipf_exponent > 0.0)) bad("zipf_exponent must be positive");
    for (double r : {noise_rate, enumeration_rate, generic_rate, specific_rate})
      if (!(r >= 0.0 && r <= 1.0)) bad("rates must lie in [0,1]");
    if (n_records == 0) bad("n_records must be positive");
    if (plants == 0 || tokens_per_class == 0) bad("plants and tokens_per_class must be positive");
    bool any = false;
    for (std::size_t l = 0; l < 3; ++l) {
      if (!hierarchy[l]) continue;
      any = true;
      if (hierarchy[l]->size() == 0) bad("hierarchy for " + to_string(kAllLevels[l]) + " is empty");
      if (head_class[l] && !hierarchy[l]->contains(*head_class[l])) {
        bad("head class '" + head_class[l]->str() + "' not in " + to_string(kAllLevels[l]) + " hierarchy");
      }
    }
    if (!any) bad("at least one hierarchy is required");
  }
};

/// Reads a config object. Hierarchies are either arrays of codes or paths,
/// the latter resolved against `base_dir`.
inline SynthConfig synth_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".") {
  SynthConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.n_records = j.value("n_records", c.n_records);
    c.head_class_share = j.value("head_class_share", c.head_class_share);
    c.zipf_exponent = j.value("zipf_exponent", c.zipf_exponent);
    c.mean_words = j.value("mean_words", c.mean_words);
    c.noise_rate = j.value("noise_rate", c.noise_rate);
    c.enumeration_rate = j.value("enumeration_rate", c.enumeration_rate);
    c.plants = j.value("plants", c.plants);
    c.tokens_per_class = j.value("tokens_per_class", c.tokens_per_class);
    c.generic_tokens = j.value("generic_tokens", c.generic_tokens);
    c.generic_rate = j.value("generic_rate", c.generic_rate);
    c.specific_rate = j.value("specific_rate", c.specific_rate);
    if (!j.contains("hierarchy")) throw Error(Errc::ConfigInvalid, "missing 'hierarchy'");
    for (auto& [name, value] : j.at("hierarchy").items()) {
      auto level = parse_level(name);
      if (value.is_string()) {
        std::string path = value.get<std::string>();
        if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
        c.hierarchy[index_of(level)] = load_hierarchy(path, level);
      } else {
        std::vector<ClassCode> codes;
        for (const auto& s : value) codes.push_back(ClassCode::parse(s.get<std::string>()));
        c.hierarchy[index_of(level)] = Hierarchy::from_codes(level, codes);
      }
    }
    if (j.contains("head_class")) {
      for (auto& [name, value] : j.at("head_class").items()) {
        c.head_class[index_of(parse_level(name))] = ClassCode::parse(value.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  }
  c.validate();
  return c;
}

namespace detail {

inline std::string make_pseudo_word(std::mt19937_64& rng) {
  static constexpr std::string_view consonants = "bcdfghklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::uniform_int_distribution<int> syllables(2, 3);
  std::uniform_int_distribution<std::size_t> pc(0, consonants.size() - 1), pv(0, vowels.size() - 1);
  std::bernoulli_distribution closing(0.4);
  std::string w;
  for (int s = syllables(rng); s > 0; --s) {
    w.push_back(consonants[pc(rng)]);
    w.push_back(vowels[pv(rng)]);
  }
  if (closing(rng)) w.push_back(consonants[pc(rng)]);
  return w;
}

/// Exact counts summing to n via largest remainder.
inline std::vector<std::size_t> allocate(const std::vector<double>& probs, std::size_t n) {
  std::vector<std::size_t> out(probs.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    double exact = probs[i] * static_cast<double>(n);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

}  // namespace detail

/// Per-class target frequencies for one level: head share on the head class,
/// Zipf(rank^-s) over the remaining codes in a seeded random rank order.
inline std::map<ClassCode, double> class_distribution(const Hierarchy& h, const std::optional<ClassCode>& head,
                                                      double head_share, double zipf_exponent, std::uint64_t seed) {
  std::vector<ClassCode> codes(h.codes().begin(), h.codes().end());
  ClassCode head_code = head ? *head : h.roots().front();
  std::vector<ClassCode> tail;
  for (const auto& c : codes)
    if (c != head_code) tail.push_back(c);
  std::mt19937_64 rng(seed);
  std::shuffle(tail.begin(), tail.end(), rng);

  std::map<ClassCode, double> dist;
  if (tail.empty()) {
    dist[head_code] = 1.0;
    return dist;
  }
  dist[head_code] = head_share;
  double z = 0.0;
  for (std::size_t k = 0; k < tail.size(); ++k) z += std::pow(static_cast<double>(k + 1), -zipf_exponent);
  for (std::size_t k = 0; k < tail.size(); ++k) {
    dist[tail[k]] = (1.0 - head_share) * std::pow(static_cast<double>(k + 1), -zipf_exponent) / z;
  }
  return dist;
}

inline Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  using detail::derive_seed;

  // Token pools.
  std::mt19937_64 word_rng(derive_seed(cfg.seed, 0));
  std::set<std::string> used;
  auto fresh_word = [&] {
    for (;;) {
      auto w = detail::make_pseudo_word(word_rng);
      if (used.insert(w).second) return w;
    }
  };
  std::vector<std::string> generic;
  for (std::size_t i = 0; i < cfg.generic_tokens; ++i) generic.push_back(fresh_word());
  std::array<std::map<ClassCode, std::vector<std::string>>, 3> pools;
  for (std::size_t l = 0; l < 3; ++l) {
    if (!cfg.hierarchy[l]) continue;
    for (const auto& c : cfg.hierarchy[l]->codes()) {
      auto& p = pools[l][c];
      for (std::size_t i = 0; i < cfg.tokens_per_class; ++i) p.push_back(fresh_word());
    }
  }

  // Label assignment per level.
  const std::size_t n = cfg.n_records;
  std::array<std::vector<ClassCode>, 3> assigned;
  for (std::size_t l = 0; l < 3; ++l) {
    if (!cfg.hierarchy[l]) continue;
    auto dist = class_distribution(*cfg.hierarchy[l], cfg.head_class[l], cfg.head_class_share, cfg.zipf_exponent,
                                   derive_seed(cfg.seed, 1 + l));
    std::vector<ClassCode> classes;
    std::vector<double> probs;
    for (const auto& [c, p] : dist) {
      classes.push_back(c);
      probs.push_back(p);
    }
    auto counts = detail::allocate(probs, n);
    for (std::size_t k = 0; k < classes.size(); ++k) assigned[l].insert(assigned[l].end(), counts[k], classes[k]);
    std::mt19937_64 rng(derive_seed(cfg.seed, 4 + l));
    std::shuffle(assigned[l].begin(), assigned[l].end(), rng);
  }

  static const std::vector<std::string> noise{"-", "#", "/", "--", "*", "(spare)", "N/A", "...", "tbd", "&"};
  std::mt19937_64 rng(derive_seed(cfg.seed, 7));
  std::poisson_distribution<int> extra_words(std::max(cfg.mean_words - 1.0, 0.0));
  std::bernoulli_distribution is_noise(cfg.noise_rate), is_enum(cfg.enumeration_rate), is_generic(cfg.generic_rate),
      is_specific(cfg.specific_rate), cap(0.5), upper(0.1);
  std::uniform_int_distribution<std::size_t> plant_pick(1, cfg.plants), enum_pick(1, 12);

  Dataset ds;
  ds.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Record r;
    r.record_id = std::to_string(i + 1);
    r.plant_id = "Power plant " + std::to_string(plant_pick(rng));
    std::vector<std::size_t> levels;
    for (std::size_t l = 0; l < 3; ++l) {
      if (!cfg.hierarchy[l]) continue;
      r.labels[l] = assigned[l][i];
      levels.push_back(l);
    }
    std::size_t words = 1 + static_cast<std::size_t>(extra_words(rng));
    bool enumerate = words >= 2 && is_enum(rng);
    std::size_t content = enumerate ? words - 1 : words;
    std::string desc;
    auto append = [&](const std::string& w) {
      if (!desc.empty()) desc.push_back(' ');
      desc += w;
    };
    for (std::size_t w = 0; w < content; ++w) {
      if (is_noise(rng)) {
        append(noise[std::uniform_int_distribution<std::size_t>(0, noise.size() - 1)(rng)]);
        continue;
      }
      std::string token;
      if (is_generic(rng)) {
        token = generic[std::uniform_int_distribution<std::size_t>(0, generic.size() - 1)(rng)];
      } else {
        std::size_t l = levels[std::uniform_int_distribution<std::size_t>(0, levels.size() - 1)(rng)];
        const ClassCode& label = *r.labels[l];
        ClassCode node = label;
        auto anc = ancestors(label);
        if (!anc.empty() && !is_specific(rng)) {
          node = anc[std::uniform_int_distribution<std::size_t>(0, anc.size() - 1)(rng)];
        }
        const auto& pool = pools[l].at(node);
        token = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      }
      if (upper(rng)) {
        for (auto& ch : token) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      } else if (cap(rng)) {
        token[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(token[0])));
      }
      append(token);
    }
    if (enumerate) append(std::to_string(enum_pick(rng)));
    r.description = std::move(desc);
    ds.records.push_back(std::move(r));
    ds.split.push_back(Split::Train);
  }
  return ds;
}

}  // namespace obdaml
