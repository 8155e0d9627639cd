#pragma once

// Random forest of Gini-impurity decision trees over sparse token counts.
//
// Each tree sees a bootstrap sample drawn with a seed derived from
// (forest seed, tree index), so a forest is reproducible regardless of how
// trees are scheduled across threads. Splits test `count(feature) <= k` for
// integer k. At each node floor(sqrt(|V|)) candidate features are drawn
// without replacement from the features that occur in the node; features
// absent from every sample of the node cannot split it and are skipped, as
// in the usual "skip constant features" rule.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "obdaml/detail/hash.hpp"
#include "obdaml/error.hpp"
#include "obdaml/hierarchy.hpp"
#include "obdaml/prediction.hpp"
#include "obdaml/vectorize.hpp"

namespace obdaml {

inline constexpr std::size_t kDefaultTrees = 600;

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::uint32_t threshold = 0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t majority = 0;
  // Leaves only: (class index, bootstrap weight), non-empty.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> histogram;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(const CountVector& x) const {
    const TreeNode* n = &nodes.front();
    while (!n->is_leaf()) {
      n = &nodes[x.get(static_cast<std::uint32_t>(n->feature)) <= n->threshold ? n->left : n->right];
    }
    return *n;
  }
  bool operator==(const DecisionTree&) const = default;
};

struct RfParams {
  std::size_t n_trees = kDefaultTrees;
  std::uint64_t seed = 42;
  std::optional<std::size_t> max_depth;
  std::size_t min_leaf = 1;
  std::optional<std::size_t> features_per_split;  // default floor(sqrt(|V|))
  std::size_t threads = 1;
};

struct RfModel {
  std::vector<ClassCode> classes;  // lexicographic
  std::vector<DecisionTree> trees;
  std::size_t vocab_size = 0;
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
  bool operator==(const RfModel&) const = default;
};

namespace detail {

/// Grows one tree at a time. The bootstrap sample's rows are laid out
/// contiguously and every node owns one contiguous block of samples and of
/// row entries, so splitting only ever scans memory sequentially.
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<CountVector>& X, const std::vector<std::uint32_t>& y, std::size_t n_classes,
              std::size_t vocab_size, std::size_t m_try, const RfParams& params)
      : X_(X), y_(y), m_try_(m_try), params_(params), min_leaf_(std::max<double>(1.0, static_cast<double>(params.min_leaf))),
        stamp_(vocab_size, 0), slot_(vocab_size, -1), right_(n_classes, 0), node_counts_(n_classes, 0) {}

  DecisionTree build(std::uint64_t tree_seed) {
    rng_.seed(tree_seed);
    const std::size_t n = X_.size();
    std::vector<std::uint32_t> mult(n, 0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) ++mult[pick(rng_)];
    samples_.clear();
    cells_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (!mult[i]) continue;
      const auto& row = X_[i].entries;
      samples_.push_back({y_[i], mult[i], static_cast<std::uint32_t>(row.size())});
      for (const auto& [f, v] : row) cells_.push_back({f, v});
    }

    goes_right_.assign(samples_.size(), 0);
    DecisionTree tree;
    tree.nodes.emplace_back();
    struct Task {
      std::size_t node, sb, se, cb, ce, depth;
    };
    std::vector<Task> stack{{0, 0, samples_.size(), 0, cells_.size(), 0}};
    while (!stack.empty()) {
      Task t = stack.back();
      stack.pop_back();
      auto split = find_split(t.sb, t.se, t.cb, t.ce, t.depth);
      if (!split) {
        make_leaf(tree.nodes[t.node], t.sb, t.se);
        continue;
      }
      auto [sm, cm] = partition(t.sb, t.se, t.cb);
      auto l = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[t.node];
      node.feature = static_cast<std::int32_t>(split->feature);
      node.threshold = split->threshold;
      node.left = static_cast<std::int32_t>(l);
      node.right = static_cast<std::int32_t>(l + 1);
      stack.push_back({l + 1, sm, t.se, cm, t.ce, t.depth + 1});
      stack.push_back({l, t.sb, sm, t.cb, cm, t.depth + 1});
    }
    return tree;
  }

 private:
  struct Sample {
    std::uint32_t cls;
    std::uint32_t weight;
    std::uint32_t len;  // number of cells in this sample's row
  };
  struct Cell {
    std::uint32_t feature;
    std::uint32_t value;
  };
  struct Split {
    std::uint32_t feature;
    std::uint32_t threshold;
  };
  struct Entry {
    std::uint32_t value;
    std::uint32_t cls;
    std::uint32_t weight;
    std::uint32_t sample;  // position in samples_
  };

  /// Stable partition of samples (and their cells): samples flagged in
  /// goes_right_ move behind the others. Returns the first right-hand sample
  /// and cell positions.
  std::pair<std::size_t, std::size_t> partition(std::size_t sb, std::size_t se, std::size_t cb) {
    tmp_samples_.clear();
    tmp_cells_.clear();
    std::size_t ws = sb, wc = cb, rc = cb;
    for (std::size_t i = sb; i < se; ++i) {
      const Sample smp = samples_[i];
      const Cell* row = &cells_[rc];
      if (!goes_right_[i]) {
        samples_[ws++] = smp;
        std::copy(row, row + smp.len, cells_.begin() + static_cast<std::ptrdiff_t>(wc));
        wc += smp.len;
      } else {
        tmp_samples_.push_back(smp);
        tmp_cells_.insert(tmp_cells_.end(), row, row + smp.len);
      }
      rc += smp.len;
      goes_right_[i] = 0;
    }
    std::copy(tmp_samples_.begin(), tmp_samples_.end(), samples_.begin() + static_cast<std::ptrdiff_t>(ws));
    std::copy(tmp_cells_.begin(), tmp_cells_.end(), cells_.begin() + static_cast<std::ptrdiff_t>(wc));
    return {ws, wc};
  }

  void make_leaf(TreeNode& node, std::size_t sb, std::size_t se) {
    std::map<std::uint32_t, std::uint32_t> hist;
    for (std::size_t i = sb; i < se; ++i) hist[samples_[i].cls] += samples_[i].weight;
    node.histogram.assign(hist.begin(), hist.end());
    std::uint32_t best = 0, best_w = 0;
    for (const auto& [c, w] : node.histogram) {
      if (w > best_w) {
        best = c;
        best_w = w;
      }
    }
    node.majority = best;
  }

  std::optional<Split> find_split(std::size_t sb, std::size_t se, std::size_t cb, std::size_t ce, std::size_t depth) {
    if (params_.max_depth && depth >= *params_.max_depth) return std::nullopt;
    present_classes_.clear();
    double total = 0.0, sq_node = 0.0;
    for (std::size_t i = sb; i < se; ++i) {
      auto c = samples_[i].cls;
      if (node_counts_[c] == 0) present_classes_.push_back(c);
      node_counts_[c] += samples_[i].weight;
      total += samples_[i].weight;
    }
    for (auto c : present_classes_) sq_node += static_cast<double>(node_counts_[c]) * node_counts_[c];
    auto reset_counts = [&] {
      for (auto c : present_classes_) node_counts_[c] = 0;
    };
    if (present_classes_.size() < 2 || total < 2.0 * min_leaf_) {
      reset_counts();
      return std::nullopt;
    }

    // Candidate features: a uniform subset of the features occurring in the node.
    ++current_stamp_;
    present_features_.clear();
    for (std::size_t k = cb; k < ce; ++k) {
      auto f = cells_[k].feature;
      if (stamp_[f] != current_stamp_) {
        stamp_[f] = current_stamp_;
        present_features_.push_back(f);
      }
    }
    const std::size_t take = std::min(m_try_, present_features_.size());
    for (std::size_t k = 0; k < take; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, present_features_.size() - 1);
      std::swap(present_features_[k], present_features_[pick(rng_)]);
    }
    for (std::size_t k = 0; k < take; ++k) slot_[present_features_[k]] = static_cast<std::int32_t>(k);

    // Candidate entries grouped by slot, each group ordered by value.
    if (by_slot_.size() < take) by_slot_.resize(take);
    for (std::size_t k = 0; k < take; ++k) by_slot_[k].clear();
    for (std::size_t i = sb, k = cb; i < se; ++i) {
      const Sample& smp = samples_[i];
      for (std::size_t end = k + smp.len; k < end; ++k) {
        auto slot = slot_[cells_[k].feature];
        if (slot >= 0) {
          by_slot_[static_cast<std::size_t>(slot)].push_back(
              {cells_[k].value, smp.cls, smp.weight, static_cast<std::uint32_t>(i)});
        }
      }
    }
    for (std::size_t k = 0; k < take; ++k) {
      slot_[present_features_[k]] = -1;
      auto& group = by_slot_[k];
      std::sort(group.begin(), group.end(),
                [](const Entry& x, const Entry& y) { return x.value != y.value ? x.value < y.value : x.sample < y.sample; });
    }

    double best_score = std::numeric_limits<double>::infinity();
    std::optional<Split> best;
    std::size_t best_slot = 0;
    for (std::size_t slot = 0; slot < take; ++slot) {
      const auto& entries = by_slot_[slot];
      const std::size_t s_begin = 0, s_end = entries.size();
      if (s_begin == s_end) continue;

      // Right starts as every sample with a non-zero count; left holds the
      // zeros. Only classes seen in this feature's entries differ from the
      // node totals, so the squared sums are corrected for those alone.
      touched_.clear();
      double n_right = 0.0;
      for (std::size_t k = s_begin; k < s_end; ++k) {
        if (right_[entries[k].cls] == 0) touched_.push_back(entries[k].cls);
        right_[entries[k].cls] += entries[k].weight;
        n_right += entries[k].weight;
      }
      double n_left = total - n_right;
      double sq_left = sq_node, sq_right = 0.0;
      for (auto c : touched_) {
        double node = node_counts_[c], r = right_[c];
        sq_left += (node - r) * (node - r) - node * node;
        sq_right += r * r;
      }
      auto consider = [&](std::uint32_t threshold) {
        if (n_left < min_leaf_ || n_right < min_leaf_) return;
        double score = (n_left - sq_left / n_left) + (n_right - sq_right / n_right);
        if (score < best_score) {
          best_score = score;
          best = Split{present_features_[slot], threshold};
          best_slot = slot;
        }
      };
      consider(0);
      std::size_t k = s_begin;
      while (k < s_end) {
        std::uint32_t value = entries[k].value;
        for (; k < s_end && entries[k].value == value; ++k) {
          auto c = entries[k].cls;
          double w = entries[k].weight;
          double r = right_[c], l = node_counts_[c] - r;
          sq_left += (l + w) * (l + w) - l * l;
          sq_right += (r - w) * (r - w) - r * r;
          right_[c] -= entries[k].weight;
          n_left += w;
          n_right -= w;
        }
        if (k < s_end) consider(value);
      }
      for (auto c : touched_) right_[c] = 0;
    }
    reset_counts();
    if (best) {
      for (const auto& e : by_slot_[best_slot])
        if (e.value > best->threshold) goes_right_[e.sample] = 1;
    }
    return best;
  }

  const std::vector<CountVector>& X_;
  const std::vector<std::uint32_t>& y_;
  std::size_t m_try_;
  RfParams params_;
  double min_leaf_;
  std::mt19937_64 rng_;
  std::vector<Sample> samples_, tmp_samples_;
  std::vector<Cell> cells_, tmp_cells_;
  std::vector<std::vector<Entry>> by_slot_;
  std::vector<std::uint8_t> goes_right_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t current_stamp_ = 0;
  std::vector<std::int32_t> slot_;
  std::vector<std::uint32_t> present_features_, present_classes_, right_, node_counts_, touched_;
};

}  // namespace detail

inline RfModel train_rf(const std::vector<CountVector>& X, const std::vector<ClassCode>& y, std::size_t vocab_size,
                        const RfParams& params = {}) {
  if (X.size() != y.size()) {
    throw Error(Errc::ShapeMismatch, std::to_string(X.size()) + " vectors but " + std::to_string(y.size()) + " labels");
  }
  if (X.empty()) throw Error(Errc::ShapeMismatch, "no training samples");
  if (params.n_trees == 0) throw Error(Errc::InvalidArgument, "n_trees must be positive");
  for (const auto& x : X)
    for (const auto& [f, _] : x.entries)
      if (f >= vocab_size) throw Error(Errc::ShapeMismatch, "feature index beyond vocabulary size");

  RfModel m;
  m.vocab_size = vocab_size;
  m.seed = params.seed;
  m.features_per_split = params.features_per_split.value_or(
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(vocab_size))))));
  std::map<ClassCode, std::uint32_t> class_index;
  for (const auto& c : y) class_index.emplace(c, 0);
  for (auto& [c, idx] : class_index) {
    idx = static_cast<std::uint32_t>(m.classes.size());
    m.classes.push_back(c);
  }
  std::vector<std::uint32_t> labels(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) labels[i] = class_index.at(y[i]);

  m.trees.resize(params.n_trees);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    detail::TreeBuilder builder(X, labels, m.classes.size(), vocab_size, m.features_per_split, params);
    for (std::size_t t = next++; t < params.n_trees; t = next++) {
      m.trees[t] = builder.build(detail::derive_seed(params.seed, t));
    }
  };
  std::size_t threads = std::clamp<std::size_t>(params.threads, 1, params.n_trees);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return m;
}

inline Prediction predict_rf(const RfModel& m, const CountVector& x, std::string record_key = {},
                             std::string model_id = "rf") {
  if (m.trees.empty() || m.classes.empty()) throw Error(Errc::ModelUnusable, "random forest has no trees");
  std::vector<std::size_t> votes(m.classes.size(), 0);
  for (const auto& t : m.trees) ++votes[t.leaf_for(x).majority];
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[best]) best = c;
  return {std::move(record_key), m.classes[best],
          static_cast<double>(votes[best]) / static_cast<double>(m.trees.size()), std::move(model_id)};
}

}  // namespace obdaml
