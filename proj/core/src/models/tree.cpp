#include "bidscreen/models/tree.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <utility>

#include "bidscreen/error.hpp"

namespace bidscreen {

const Tree::Node& Tree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const Node& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] >= n.threshold ? n.right : n.left);
  }
  return nodes[i];
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t Tree::leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
}

nlohmann::json to_json(const Tree& tree) {
  std::vector<int> feature, left, right, leaf_class;
  std::vector<double> threshold, value;
  std::vector<std::size_t> samples, positives;
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    leaf_class.push_back(n.leaf_class);
    samples.push_back(n.samples);
    positives.push_back(n.positives);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value},         {"leaf_class", leaf_class},
          {"samples", samples}, {"positives", positives}};
}

Tree tree_from_json(const nlohmann::json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto leaf_class = j.at("leaf_class").get<std::vector<int>>();
  const auto samples = j.at("samples").get<std::vector<std::size_t>>();
  const auto positives = j.at("positives").get<std::vector<std::size_t>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
      leaf_class.size() != n || samples.size() != n || positives.size() != n || n == 0) {
    throw Error(ErrorKind::SchemaMismatch, "tree arrays have inconsistent lengths");
  }
  Tree tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = tree.nodes[i];
    node = {feature[i], threshold[i], left[i], right[i], value[i], leaf_class[i], samples[i], positives[i]};
    if (!node.is_leaf()) {
      const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
      if (!in_range(node.left) || !in_range(node.right))
        throw Error(ErrorKind::SchemaMismatch, "tree child index out of range");
    }
  }
  return tree;
}

double split_midpoint(double lo, double hi) noexcept {
  const double mid = lo + (hi - lo) / 2;
  return (mid > lo && mid <= hi) ? mid : hi;
}

namespace {

__extension__ typedef __int128 Int;

/// n * weighted Gini of a split, kept as the exact fraction num / den with
/// num = c0L*c1L*nR + c0R*c1R*nL and den = nL*nR (the constant factor 2 dropped).
struct Impurity {
  Int num;
  Int den;

  bool operator<(const Impurity& o) const { return num * o.den < o.num * den; }
};

Impurity split_impurity(std::size_t c0l, std::size_t c1l, std::size_t c0r, std::size_t c1r) {
  const Int nl = static_cast<Int>(c0l + c1l);
  const Int nr = static_cast<Int>(c0r + c1r);
  return {static_cast<Int>(c0l) * static_cast<Int>(c1l) * nr + static_cast<Int>(c0r) * static_cast<Int>(c1r) * nl,
          nl * nr};
}

class ClassificationGrower {
public:
  ClassificationGrower(const Eigen::MatrixXd& x, std::span<const int> y, const GrowOptions& options, Rng& rng)
      : x_(x), y_(y), options_(options), rng_(rng), p_(static_cast<std::size_t>(x.cols())) {
    features_.resize(p_);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  Tree grow(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    tree_.nodes.clear();
    build(0, rows_.size(), 0);
    return std::move(tree_);
  }

private:
  int build(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    std::size_t positives = 0;
    for (std::size_t i = begin; i < end; ++i) positives += y_[rows_[i]] == 1 ? 1 : 0;

    const int id = static_cast<int>(tree_.nodes.size());
    Tree::Node node;
    node.samples = n;
    node.positives = positives;
    node.value = n ? static_cast<double>(positives) / static_cast<double>(n) : 0.0;
    node.leaf_class = 2 * positives >= n ? 1 : 0;
    tree_.nodes.push_back(node);

    const bool pure = positives == 0 || positives == n;
    const bool depth_capped = options_.max_depth != 0 && depth >= options_.max_depth;
    if (pure || depth_capped || n < 2 * std::max<std::size_t>(options_.min_leaf, 1)) return id;

    const auto split = find_split(begin, end, positives);
    if (!split) return id;

    const auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                    rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
                                      return x_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(split->first)) <
                                             split->second;
                                    });
    const std::size_t cut = static_cast<std::size_t>(mid - rows_.begin());
    tree_.nodes[static_cast<std::size_t>(id)].feature = static_cast<int>(split->first);
    tree_.nodes[static_cast<std::size_t>(id)].threshold = split->second;
    const int left = build(begin, cut, depth + 1);
    const int right = build(cut, end, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = left;
    tree_.nodes[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  std::optional<std::pair<std::size_t, double>> find_split(std::size_t begin, std::size_t end,
                                                          std::size_t positives) {
    const std::size_t n = end - begin;
    const std::size_t min_leaf = std::max<std::size_t>(options_.min_leaf, 1);

    std::span<const std::size_t> candidates(features_);
    std::vector<std::size_t> sampled;
    if (options_.mtry != 0 && options_.mtry < p_) {
      // Partial Fisher-Yates, then ascending so tie-breaking stays index-ordered.
      sampled = features_;
      for (std::size_t k = 0; k < options_.mtry; ++k) {
        std::uniform_int_distribution<std::size_t> d(k, p_ - 1);
        std::swap(sampled[k], sampled[d(rng_)]);
      }
      sampled.resize(options_.mtry);
      std::sort(sampled.begin(), sampled.end());
      candidates = sampled;
    }

    const std::size_t total1 = positives;
    const std::size_t total0 = n - positives;
    // Parent impurity as a degenerate "split" with an empty right side.
    Impurity best{static_cast<Int>(total0) * static_cast<Int>(total1), static_cast<Int>(n)};
    std::optional<std::pair<std::size_t, double>> chosen;

    scratch_.resize(n);
    for (std::size_t f : candidates) {
      const auto col = static_cast<Eigen::Index>(f);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = rows_[begin + i];
        scratch_[i] = {x_(static_cast<Eigen::Index>(r), col), y_[r] == 1 ? 1 : 0};
      }
      std::sort(scratch_.begin(), scratch_.end());
      if (scratch_.front().first == scratch_.back().first) continue;

      std::size_t c0 = 0, c1 = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        (scratch_[i].second ? c1 : c0) += 1;
        const std::size_t nl = i + 1;
        if (nl < min_leaf) continue;
        if (n - nl < min_leaf) break;
        if (scratch_[i].first == scratch_[i + 1].first) continue;
        const Impurity imp = split_impurity(c0, c1, total0 - c0, total1 - c1);
        if (imp < best) {
          best = imp;
          chosen = {f, split_midpoint(scratch_[i].first, scratch_[i + 1].first)};
        }
      }
    }
    return chosen;
  }

  const Eigen::MatrixXd& x_;
  std::span<const int> y_;
  GrowOptions options_;
  Rng& rng_;
  std::size_t p_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> rows_;
  std::vector<std::pair<double, int>> scratch_;
  Tree tree_;
};

}  // namespace

Tree grow_classification_tree(const Eigen::MatrixXd& x, std::span<const int> y, std::vector<std::size_t> rows,
                              const GrowOptions& options, Rng& rng) {
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "cannot grow a tree on zero rows");
  ClassificationGrower grower(x, y, options, rng);
  return grower.grow(std::move(rows));
}

}  // namespace bidscreen
