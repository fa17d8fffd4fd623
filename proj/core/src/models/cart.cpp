#include "bidscreen/models/cart.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <numeric>

#include "bidscreen/error.hpp"

namespace bidscreen {
namespace {

std::size_t leaf_errors(const Tree::Node& n) {
  return n.leaf_class == 1 ? n.samples - n.positives : n.positives;
}

struct SubtreeStats {
  std::size_t errors = 0;  // summed over leaves
  std::size_t leaves = 0;
};

/// Post-order stats over the nodes not hidden under a collapsed ancestor.
std::vector<SubtreeStats> subtree_stats(const Tree& tree, const std::vector<char>& collapsed) {
  std::vector<SubtreeStats> stats(tree.nodes.size());
  for (std::size_t k = tree.nodes.size(); k-- > 0;) {
    const auto& n = tree.nodes[k];
    if (n.is_leaf() || collapsed[k]) {
      stats[k] = {leaf_errors(n), 1};
    } else {
      const auto& l = stats[static_cast<std::size_t>(n.left)];
      const auto& r = stats[static_cast<std::size_t>(n.right)];
      stats[k] = {l.errors + r.errors, l.leaves + r.leaves};
    }
  }
  return stats;
}

/// Nodes reachable from the root without passing a collapsed node.
std::vector<char> live_internal(const Tree& tree, const std::vector<char>& collapsed) {
  std::vector<char> live(tree.nodes.size(), 0);
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t k = stack.back();
    stack.pop_back();
    const auto& n = tree.nodes[k];
    if (n.is_leaf() || collapsed[k]) continue;
    live[k] = 1;
    stack.push_back(static_cast<std::size_t>(n.left));
    stack.push_back(static_cast<std::size_t>(n.right));
  }
  return live;
}

Tree rebuild(const Tree& tree, const std::vector<char>& collapsed) {
  Tree out;
  std::function<int(std::size_t)> copy = [&](std::size_t k) -> int {
    const int id = static_cast<int>(out.nodes.size());
    Tree::Node node = tree.nodes[k];
    out.nodes.push_back(node);
    if (node.is_leaf() || collapsed[k]) {
      auto& leaf = out.nodes[static_cast<std::size_t>(id)];
      leaf.feature = -1;
      leaf.threshold = 0;
      leaf.left = leaf.right = -1;
      return id;
    }
    const int l = copy(static_cast<std::size_t>(node.left));
    const int r = copy(static_cast<std::size_t>(node.right));
    out.nodes[static_cast<std::size_t>(id)].left = l;
    out.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  };
  copy(0);
  return out;
}

std::string format_threshold(double t) { return fmt::format("{:.3f}", t); }

}  // namespace

std::vector<double> pruning_sequence(const Tree& tree) {
  std::vector<double> alphas{0.0};
  if (tree.nodes.empty()) return alphas;
  const double total = static_cast<double>(tree.nodes[0].samples);
  std::vector<char> collapsed(tree.nodes.size(), 0);
  while (!tree.nodes[0].is_leaf() && !collapsed[0]) {
    const auto stats = subtree_stats(tree, collapsed);
    const auto live = live_internal(tree, collapsed);
    std::vector<double> g(tree.nodes.size(), INFINITY);
    double weakest = INFINITY;
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      if (!live[k]) continue;
      const double gain = static_cast<double>(leaf_errors(tree.nodes[k])) - static_cast<double>(stats[k].errors);
      g[k] = gain / (total * static_cast<double>(stats[k].leaves - 1));
      weakest = std::min(weakest, g[k]);
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k)
      if (live[k] && g[k] <= weakest * (1 + 1e-12)) collapsed[k] = 1;
    alphas.push_back(std::max(weakest, alphas.back()));
  }
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  return alphas;
}

Tree prune(const Tree& tree, double alpha) {
  if (tree.nodes.empty()) return tree;
  const double total = static_cast<double>(tree.nodes[0].samples);
  std::vector<char> collapsed(tree.nodes.size(), 0);
  // Bottom-up: children are finalized before their parent is examined.
  std::vector<SubtreeStats> stats(tree.nodes.size());
  for (std::size_t k = tree.nodes.size(); k-- > 0;) {
    const auto& n = tree.nodes[k];
    if (n.is_leaf()) {
      stats[k] = {leaf_errors(n), 1};
      continue;
    }
    const auto& l = stats[static_cast<std::size_t>(n.left)];
    const auto& r = stats[static_cast<std::size_t>(n.right)];
    SubtreeStats sub{l.errors + r.errors, l.leaves + r.leaves};
    const double gain = (static_cast<double>(leaf_errors(n)) - static_cast<double>(sub.errors)) / total;
    const double penalty = alpha * static_cast<double>(sub.leaves - 1);
    if (gain <= penalty * (1 + 1e-12)) {
      collapsed[k] = 1;
      sub = {leaf_errors(n), 1};
    }
    stats[k] = sub;
  }
  return rebuild(tree, collapsed);
}

CartConfig cart_config_from_json(const nlohmann::json& j) {
  CartConfig c;
  if (j.contains("cv_folds")) j.at("cv_folds").get_to(c.cv_folds);
  if (j.contains("min_leaf")) j.at("min_leaf").get_to(c.min_leaf);
  if (j.contains("max_depth")) j.at("max_depth").get_to(c.max_depth);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("prune")) j.at("prune").get_to(c.prune);
  if (c.prune && c.cv_folds < 2) throw Error(ErrorKind::InvalidConfig, "cv_folds must be at least 2");
  if (c.min_leaf == 0) throw Error(ErrorKind::InvalidConfig, "min_leaf must be positive");
  return c;
}

nlohmann::json to_json(const CartConfig& c) {
  return {{"cv_folds", c.cv_folds}, {"min_leaf", c.min_leaf}, {"max_depth", c.max_depth},
          {"seed", c.seed},         {"prune", c.prune}};
}

CartModel fit_cart(const LabeledExamples& data, const CartConfig& config) {
  if (data.size() == 0) throw Error(ErrorKind::EmptyInput, "no training examples");
  GrowOptions grow;
  grow.min_leaf = config.min_leaf;
  grow.max_depth = config.max_depth;
  Rng unused(config.seed);

  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  CartModel model;
  const Tree full = grow_classification_tree(data.x, data.y, all, grow, unused);
  const auto counts = data.class_counts();
  if (!config.prune || counts[0] == 0 || counts[1] == 0 || full.nodes.size() == 1) {
    model.tree = full;
    return model;
  }

  const auto alphas = pruning_sequence(full);
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    model.complexity_grid.push_back(k + 1 < alphas.size() ? std::sqrt(alphas[k] * alphas[k + 1]) : alphas[k]);
  }

  const std::size_t folds_wanted = std::min(config.cv_folds, std::min(counts[0], counts[1]));
  if (folds_wanted >= 2) {
    const auto folds = stratified_folds(data.y, folds_wanted, config.seed);
    std::vector<std::size_t> correct(model.complexity_grid.size(), 0);
    for (std::size_t f = 0; f < folds_wanted; ++f) {
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t i = 0; i < data.size(); ++i) (folds[i] == f ? test_rows : train_rows).push_back(i);
      const Tree fold_tree = grow_classification_tree(data.x, data.y, train_rows, grow, unused);
      for (std::size_t c = 0; c < model.complexity_grid.size(); ++c) {
        const Tree pruned = prune(fold_tree, model.complexity_grid[c]);
        for (std::size_t r : test_rows) {
          const auto row = data.row(r);
          correct[c] += pruned.leaf_for(row).leaf_class == data.y[r] ? 1 : 0;
        }
      }
    }
    std::size_t chosen = 0;
    for (std::size_t c = 0; c < correct.size(); ++c) {
      model.cv_accuracy.push_back(static_cast<double>(correct[c]) / static_cast<double>(data.size()));
      if (correct[c] >= correct[chosen]) chosen = c;
    }
    model.complexity = model.complexity_grid[chosen];
  }
  model.tree = prune(full, model.complexity);
  return model;
}

double predict(const CartModel& model, std::span<const double> features) {
  return model.tree.leaf_for(features).value;
}

std::string render_tree(const Tree& tree, const std::vector<std::string>& names) {
  std::string out;
  std::function<void(std::size_t, std::size_t, const std::string&)> walk =
      [&](std::size_t k, std::size_t indent, const std::string& prefix) {
        const auto& n = tree.nodes[k];
        const std::string pad(indent * 2, ' ');
        if (n.is_leaf()) {
          out += fmt::format("{}{}{}  (p={:.3f}, n={})\n", pad, prefix, n.leaf_class, n.value, n.samples);
          return;
        }
        out += fmt::format("{}{}{} ≥ {}?\n", pad, prefix, names.at(static_cast<std::size_t>(n.feature)),
                           format_threshold(n.threshold));
        walk(static_cast<std::size_t>(n.right), indent + 1, "yes → ");
        walk(static_cast<std::size_t>(n.left), indent + 1, "no  → ");
      };
  if (!tree.nodes.empty()) walk(0, 0, tree.nodes[0].is_leaf() ? "→ " : "");
  return out;
}

std::vector<std::string> tree_path(const Tree& tree, const std::vector<std::string>& names,
                                   std::span<const double> features) {
  std::vector<std::string> path;
  std::size_t k = 0;
  while (!tree.nodes[k].is_leaf()) {
    const auto& n = tree.nodes[k];
    const bool yes = features[static_cast<std::size_t>(n.feature)] >= n.threshold;
    path.push_back(fmt::format("{} ≥ {}? {}", names.at(static_cast<std::size_t>(n.feature)),
                               format_threshold(n.threshold), yes ? "yes" : "no"));
    k = static_cast<std::size_t>(yes ? n.right : n.left);
  }
  const std::string leaf = fmt::format("{}", tree.nodes[k].leaf_class);
  if (path.empty()) {
    path.push_back("→ " + leaf);
  } else {
    path.back() += " → " + leaf;
  }
  return path;
}

nlohmann::json to_json(const CartModel& m) {
  return {{"tree", to_json(m.tree)},
          {"complexity", m.complexity},
          {"complexity_grid", m.complexity_grid},
          {"cv_accuracy", m.cv_accuracy}};
}

CartModel cart_model_from_json(const nlohmann::json& j) {
  CartModel m;
  m.tree = tree_from_json(j.at("tree"));
  m.complexity = j.at("complexity").get<double>();
  m.complexity_grid = j.at("complexity_grid").get<std::vector<double>>();
  m.cv_accuracy = j.at("cv_accuracy").get<std::vector<double>>();
  return m;
}

}  // namespace bidscreen
