#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bidscreen/models/examples.hpp"
#include "bidscreen/models/tree.hpp"

namespace bidscreen {

struct CartConfig {
  std::size_t cv_folds = 10;
  std::size_t min_leaf = 5;
  std::size_t max_depth = 0;
  std::uint64_t seed = 1;
  bool prune = true;
};

CartConfig cart_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CartConfig& c);

struct CartModel {
  Tree tree;
  /// Selected cost-complexity parameter, in units of training error rate per leaf.
  double complexity = 0;
  std::vector<double> complexity_grid;
  std::vector<double> cv_accuracy;
};

/// Full Gini tree, then cost-complexity pruning with the complexity parameter
/// picked by stratified K-fold accuracy (ties favour the simpler tree).
CartModel fit_cart(const LabeledExamples& data, const CartConfig& config = {});
double predict(const CartModel& model, std::span<const double> features);

/// Critical complexity values of the weakest-link pruning sequence, ascending,
/// starting with 0.
std::vector<double> pruning_sequence(const Tree& tree);

/// Smallest subtree minimizing error rate + alpha * leaves; error rate is
/// misclassified training samples over root samples.
Tree prune(const Tree& tree, double alpha);

/// Indented text diagram, e.g.
///   cv ≥ 0.053?
///     yes → 0  (p=0.021, n=1450)
///     no  → 1  (p=0.957, n=550)
std::string render_tree(const Tree& tree, const std::vector<std::string>& names);

/// Node tests visited for `features`, e.g. {"cv ≥ 0.053? yes → 0"}; the last
/// entry carries the predicted leaf class.
std::vector<std::string> tree_path(const Tree& tree, const std::vector<std::string>& names,
                                   std::span<const double> features);

nlohmann::json to_json(const CartModel& m);
CartModel cart_model_from_json(const nlohmann::json& j);

}  // namespace bidscreen
