#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "bidscreen/models/examples.hpp"
#include "bidscreen/models/tree.hpp"

namespace bidscreen {

struct ForestConfig {
  std::size_t n_trees = 1000;
  /// 0 selects floor(sqrt(p)).
  std::size_t mtry = 0;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 1;
  /// Worker threads; not part of the model, results are identical for any value.
  unsigned threads = 0;
};

ForestConfig forest_config_from_json(const nlohmann::json& j);
/// Excludes `threads`.
nlohmann::json to_json(const ForestConfig& c);

struct ForestModel {
  std::vector<Tree> trees;
  std::size_t mtry = 0;
};

/// Bootstrap row indices for tree `tree_index` (size n, with replacement).
std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t tree_index);
/// Stream used for the per-split feature sampling of tree `tree_index`.
Rng tree_feature_rng(std::uint64_t seed, std::size_t tree_index);

ForestModel fit_random_forest(const LabeledExamples& data, const ForestConfig& config = {});
/// Fraction of trees whose leaf votes class 1.
double predict(const ForestModel& model, std::span<const double> features);

nlohmann::json to_json(const ForestModel& m);
ForestModel forest_model_from_json(const nlohmann::json& j);

}  // namespace bidscreen
