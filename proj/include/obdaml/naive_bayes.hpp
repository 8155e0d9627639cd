#pragma once

// Multinomial Naive Bayes over token counts with additive smoothing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"
#include "obdaml/prediction.hpp"
#include "obdaml/vectorize.hpp"

namespace obdaml {

inline constexpr double kDefaultAlpha = 0.01;
inline constexpr double kTieTolerance = 1e-12;

struct NbModel {
  std::vector<ClassCode> classes;  // lexicographic
  std::vector<double> log_priors;
  // Row-major, classes x vocab_size.
  std::vector<double> log_likelihoods;
  std::size_t vocab_size = 0;
  double alpha = kDefaultAlpha;

  double log_likelihood(std::size_t cls, std::size_t feature) const { return log_likelihoods[cls * vocab_size + feature]; }

  bool operator==(const NbModel&) const = default;
};

inline NbModel train_nb(const std::vector<CountVector>& X, const std::vector<ClassCode>& y, std::size_t vocab_size,
                        double alpha = kDefaultAlpha) {
  if (X.size() != y.size()) {
    throw Error(Errc::ShapeMismatch, std::to_string(X.size()) + " vectors but " + std::to_string(y.size()) + " labels");
  }
  if (X.empty()) throw Error(Errc::ShapeMismatch, "no training samples");
  if (!(alpha > 0.0)) throw Error(Errc::InvalidArgument, "alpha must be positive");

  std::map<ClassCode, std::size_t> class_index;
  for (const auto& c : y) class_index.emplace(c, 0);
  NbModel m;
  m.alpha = alpha;
  m.vocab_size = vocab_size;
  for (auto& [c, idx] : class_index) {
    idx = m.classes.size();
    m.classes.push_back(c);
  }
  const std::size_t k = m.classes.size();
  std::vector<double> docs(k, 0.0), totals(k, 0.0), counts(k * vocab_size, 0.0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    std::size_t c = class_index.at(y[i]);
    docs[c] += 1.0;
    for (const auto& [f, n] : X[i].entries) {
      if (f >= vocab_size) throw Error(Errc::ShapeMismatch, "feature index beyond vocabulary size");
      counts[c * vocab_size + f] += n;
      totals[c] += n;
    }
  }
  const double n = static_cast<double>(X.size());
  m.log_priors.resize(k);
  m.log_likelihoods.resize(k * vocab_size);
  for (std::size_t c = 0; c < k; ++c) {
    m.log_priors[c] = std::log(docs[c] / n);
    const double denom = std::log(totals[c] + alpha * static_cast<double>(vocab_size));
    for (std::size_t f = 0; f < vocab_size; ++f) {
      m.log_likelihoods[c * vocab_size + f] = std::log(counts[c * vocab_size + f] + alpha) - denom;
    }
  }
  return m;
}

/// Unnormalised log posterior per class.
inline std::vector<double> nb_log_posteriors(const NbModel& m, const CountVector& x) {
  std::vector<double> lp = m.log_priors;
  for (std::size_t c = 0; c < m.classes.size(); ++c) {
    for (const auto& [f, n] : x.entries) {
      if (f < m.vocab_size) lp[c] += static_cast<double>(n) * m.log_likelihood(c, f);
    }
  }
  return lp;
}

inline Prediction predict_nb(const NbModel& m, const CountVector& x, std::string record_key = {},
                             std::string model_id = "nb") {
  if (m.classes.empty()) throw Error(Errc::ModelUnusable, "naive Bayes model has no classes");
  auto lp = nb_log_posteriors(m, x);
  // Scores equal up to summation rounding count as a tie, which the earlier class wins.
  std::size_t best = 0;
  for (std::size_t c = 1; c < lp.size(); ++c)
    if (lp[c] - lp[best] > kTieTolerance * std::max(1.0, std::abs(lp[best]))) best = c;
  double z = 0.0;
  for (double v : lp) z += std::exp(v - lp[best]);
  return {std::move(record_key), m.classes[best], 1.0 / z, std::move(model_id)};
}

}  // namespace obdaml
