#include "bidscreen/models/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bidscreen/error.hpp"
#include "bidscreen/models/logit.hpp"

namespace bidscreen {
namespace {

struct Accumulator {
  double sum_left = 0;
  std::size_t count_left = 0;
  double last_value = 0;
  double best_gain = 0;
  int best_feature = -1;
  double best_threshold = 0;
};

/// Level-wise least-squares tree on presorted columns.
Tree grow_regression_tree(const Eigen::MatrixXd& x, const std::vector<std::vector<std::size_t>>& sorted,
                          std::span<const double> residual, std::span<const double> hessian,
                          const BoostingConfig& config) {
  const std::size_t n = residual.size();
  Tree tree;
  std::vector<int> node_of(n, 0);

  auto make_node = [&](double sum_r, double sum_h, std::size_t count) {
    Tree::Node node;
    node.samples = count;
    node.value = config.learning_rate * sum_r / std::max(sum_h, 1e-12);
    return node;
  };
  {
    double sr = 0, sh = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sr += residual[i];
      sh += hessian[i];
    }
    tree.nodes.push_back(make_node(sr, sh, n));
  }

  std::vector<int> frontier{0};
  std::vector<double> node_sum(1, 0);
  for (std::size_t i = 0; i < n; ++i) node_sum[0] += residual[i];

  for (std::size_t level = 0; level < config.depth && !frontier.empty(); ++level) {
    std::vector<Accumulator> acc(tree.nodes.size());
    std::vector<char> active(tree.nodes.size(), 0);
    for (int k : frontier) active[static_cast<std::size_t>(k)] = 1;

    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (int k : frontier) {
        acc[static_cast<std::size_t>(k)].sum_left = 0;
        acc[static_cast<std::size_t>(k)].count_left = 0;
      }
      const auto col = static_cast<Eigen::Index>(f);
      for (std::size_t r : sorted[f]) {
        const auto k = static_cast<std::size_t>(node_of[r]);
        if (!active[k]) continue;
        Accumulator& a = acc[k];
        const double v = x(static_cast<Eigen::Index>(r), col);
        const std::size_t total = tree.nodes[k].samples;
        if (a.count_left >= config.min_leaf && total - a.count_left >= config.min_leaf && v > a.last_value) {
          const double sl = a.sum_left;
          const double sr = node_sum[k] - sl;
          const double nl = static_cast<double>(a.count_left);
          const double nr = static_cast<double>(total - a.count_left);
          const double gain = sl * sl / nl + sr * sr / nr - node_sum[k] * node_sum[k] / static_cast<double>(total);
          if (gain > a.best_gain) {
            a.best_gain = gain;
            a.best_feature = static_cast<int>(f);
            a.best_threshold = split_midpoint(a.last_value, v);
          }
        }
        a.sum_left += residual[r];
        a.count_left += 1;
        a.last_value = v;
      }
    }

    std::vector<int> next;
    std::vector<std::pair<int, int>> children(tree.nodes.size(), {-1, -1});
    for (int k : frontier) {
      const Accumulator& a = acc[static_cast<std::size_t>(k)];
      if (a.best_feature < 0) continue;
      const int left = static_cast<int>(tree.nodes.size());
      const int right = left + 1;
      // Appending invalidates references into tree.nodes, so grow first.
      tree.nodes.resize(tree.nodes.size() + 2);
      node_sum.resize(node_sum.size() + 2, 0);
      auto& node = tree.nodes[static_cast<std::size_t>(k)];
      node.feature = a.best_feature;
      node.threshold = a.best_threshold;
      node.left = left;
      node.right = right;
      children[static_cast<std::size_t>(k)] = {left, right};
      next.push_back(left);
      next.push_back(right);
    }
    if (next.empty()) break;

    std::vector<double> sum_h(tree.nodes.size(), 0);
    std::vector<std::size_t> count(tree.nodes.size(), 0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto k = static_cast<std::size_t>(node_of[r]);
      const auto [l, rt] = children[k];
      if (l < 0) continue;
      const auto& parent = tree.nodes[k];
      const int child = x(static_cast<Eigen::Index>(r), parent.feature) >= parent.threshold ? rt : l;
      node_of[r] = child;
      node_sum[static_cast<std::size_t>(child)] += residual[r];
      sum_h[static_cast<std::size_t>(child)] += hessian[r];
      count[static_cast<std::size_t>(child)] += 1;
    }
    for (int c : next) {
      const auto cu = static_cast<std::size_t>(c);
      tree.nodes[cu] = make_node(node_sum[cu], sum_h[cu], count[cu]);
    }
    frontier = std::move(next);
  }
  return tree;
}

}  // namespace

std::vector<double> logistic_residuals(std::span<const int> y, std::span<const double> scores) {
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = (y[i] == 1 ? 1.0 : 0.0) - sigmoid(scores[i]);
  return r;
}

BoostingConfig boosting_config_from_json(const nlohmann::json& j) {
  BoostingConfig c;
  if (j.contains("n_rounds")) j.at("n_rounds").get_to(c.n_rounds);
  if (j.contains("depth")) j.at("depth").get_to(c.depth);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("min_leaf")) j.at("min_leaf").get_to(c.min_leaf);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (!(c.learning_rate > 0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
  if (c.min_leaf == 0) throw Error(ErrorKind::InvalidConfig, "min_leaf must be positive");
  return c;
}

nlohmann::json to_json(const BoostingConfig& c) {
  return {{"n_rounds", c.n_rounds}, {"depth", c.depth}, {"learning_rate", c.learning_rate},
          {"min_leaf", c.min_leaf}, {"seed", c.seed}};
}

BoostingModel fit_gradient_boosting(const LabeledExamples& data, const BoostingConfig& config) {
  require_both_classes(data, 1);
  const std::size_t n = data.size();
  const auto counts = data.class_counts();
  BoostingModel model;
  model.learning_rate = config.learning_rate;
  model.init = std::log(static_cast<double>(counts[1]) / static_cast<double>(counts[0]));

  std::vector<std::vector<std::size_t>> sorted(data.features(), std::vector<std::size_t>(n));
  for (std::size_t f = 0; f < data.features(); ++f) {
    auto& order = sorted[f];
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto col = static_cast<Eigen::Index>(f);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return data.x(static_cast<Eigen::Index>(a), col) < data.x(static_cast<Eigen::Index>(b), col);
    });
  }

  std::vector<double> scores(n, model.init);
  std::vector<double> prob(n);
  auto loss = [&] {
    for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(scores[i]);
    return log_loss(prob, data.y);
  };
  model.training_loss.push_back(loss());

  std::vector<double> hessian(n);
  for (std::size_t round = 0; round < config.n_rounds; ++round) {
    const auto residual = logistic_residuals(data.y, scores);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      hessian[i] = p * (1.0 - p);
    }
    Tree tree = grow_regression_tree(data.x, sorted, residual, hessian, config);
    for (std::size_t i = 0; i < n; ++i) scores[i] += tree.leaf_for(data.row(i)).value;
    model.trees.push_back(std::move(tree));
    model.training_loss.push_back(loss());
  }
  return model;
}

double decision_score(const BoostingModel& model, std::span<const double> features) {
  double score = model.init;
  for (const Tree& t : model.trees) score += t.leaf_for(features).value;
  return score;
}

double predict(const BoostingModel& model, std::span<const double> features) {
  return sigmoid(decision_score(model, features));
}

nlohmann::json to_json(const BoostingModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : m.trees) trees.push_back(to_json(t));
  return {{"init", m.init},
          {"learning_rate", m.learning_rate},
          {"trees", std::move(trees)},
          {"training_loss", m.training_loss}};
}

BoostingModel boosting_model_from_json(const nlohmann::json& j) {
  BoostingModel m;
  m.init = j.at("init").get<double>();
  m.learning_rate = j.at("learning_rate").get<double>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  m.training_loss = j.at("training_loss").get<std::vector<double>>();
  return m;
}

}  // namespace bidscreen
