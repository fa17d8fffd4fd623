#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bidscreen/rng.hpp"

namespace bidscreen {

/// Binary tree in flat storage where parents precede children; node 0 is the
/// root. Samples with
/// x[feature] >= threshold go right.
struct Tree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    /// Class-1 fraction for classification trees, additive score for
    /// regression trees.
    double value = 0;
    int leaf_class = 0;
    std::size_t samples = 0;
    std::size_t positives = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;

  const Node& leaf_for(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaves() const;

  bool operator==(const Tree&) const = default;
};

nlohmann::json to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

struct GrowOptions {
  std::size_t min_leaf = 1;
  /// Features tried per split; 0 or >= p means all of them.
  std::size_t mtry = 0;
  /// 0 means unlimited.
  std::size_t max_depth = 0;
};

/// Greedy Gini tree over `rows` (duplicates allowed, as in a bootstrap
/// resample). Split impurity is compared in exact integer arithmetic; ties go
/// to the lower feature index, then the lower threshold. `rng` is only drawn
/// from when mtry restricts the candidate features.
Tree grow_classification_tree(const Eigen::MatrixXd& x, std::span<const int> y,
                              std::vector<std::size_t> rows, const GrowOptions& options, Rng& rng);

/// Midpoint between two consecutive distinct sorted values, guaranteed to
/// satisfy lo < t <= hi.
double split_midpoint(double lo, double hi) noexcept;

}  // namespace bidscreen
