#include "bidscreen/models/forest.hpp"

#include <cmath>

#include "bidscreen/error.hpp"
#include "bidscreen/parallel.hpp"

namespace bidscreen {

ForestConfig forest_config_from_json(const nlohmann::json& j) {
  ForestConfig c;
  if (j.contains("n_trees")) j.at("n_trees").get_to(c.n_trees);
  if (j.contains("mtry")) j.at("mtry").get_to(c.mtry);
  if (j.contains("min_leaf")) j.at("min_leaf").get_to(c.min_leaf);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("threads")) j.at("threads").get_to(c.threads);
  if (c.min_leaf == 0) throw Error(ErrorKind::InvalidConfig, "min_leaf must be positive");
  return c;
}

nlohmann::json to_json(const ForestConfig& c) {
  return {{"n_trees", c.n_trees}, {"mtry", c.mtry}, {"min_leaf", c.min_leaf}, {"seed", c.seed}};
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t tree_index) {
  Rng rng = make_rng(seed, {0x626f6f74ULL, tree_index});
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = pick(rng);
  return rows;
}

Rng tree_feature_rng(std::uint64_t seed, std::size_t tree_index) {
  return make_rng(seed, {0x6d747279ULL, tree_index});
}

ForestModel fit_random_forest(const LabeledExamples& data, const ForestConfig& config) {
  require_both_classes(data, 1);
  const std::size_t p = data.features();
  ForestModel model;
  model.mtry = config.mtry != 0
                   ? std::min(config.mtry, p)
                   : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
  GrowOptions grow;
  grow.min_leaf = config.min_leaf;
  grow.mtry = model.mtry;

  model.trees.resize(config.n_trees);
  parallel_for(config.n_trees, config.threads, [&](std::size_t t) {
    Rng rng = tree_feature_rng(config.seed, t);
    model.trees[t] = grow_classification_tree(data.x, data.y, bootstrap_rows(data.size(), config.seed, t), grow, rng);
  });
  return model;
}

double predict(const ForestModel& model, std::span<const double> features) {
  if (model.trees.empty()) return 0.0;
  std::size_t votes = 0;
  for (const Tree& tree : model.trees) votes += static_cast<std::size_t>(tree.leaf_for(features).leaf_class);
  return static_cast<double>(votes) / static_cast<double>(model.trees.size());
}

nlohmann::json to_json(const ForestModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : m.trees) trees.push_back(to_json(t));
  return {{"mtry", m.mtry}, {"trees", std::move(trees)}};
}

ForestModel forest_model_from_json(const nlohmann::json& j) {
  ForestModel m;
  m.mtry = j.at("mtry").get<std::size_t>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

}  // namespace bidscreen
