#include "bidscreen/models/super_learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <Eigen/Dense>

#include "bidscreen/error.hpp"
#include "bidscreen/models/artifact.hpp"
#include "bidscreen/rng.hpp"

namespace bidscreen {
namespace {

double squared_error(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  return (z * w - y).squaredNorm() / static_cast<double>(y.size());
}

/// Minimizes over the simplex for columns that are pairwise distinct.
Eigen::VectorXd simplex_ls_distinct(const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
  const auto k = static_cast<int>(z.cols());
  if (k > 16) throw Error(ErrorKind::InvalidConfig, "simplex solver supports at most 16 distinct learners");
  const Eigen::MatrixXd gram = z.transpose() * z;
  const Eigen::VectorXd zy = z.transpose() * y;

  Eigen::VectorXd best = Eigen::VectorXd::Zero(k);
  double best_loss = INFINITY;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> support;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) support.push_back(i);
    const auto s = static_cast<Eigen::Index>(support.size());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    if (s == 1) {
      w[support[0]] = 1.0;
    } else {
      // KKT system of min ||Z_S w - y||^2 subject to sum(w) = 1.
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
      Eigen::VectorXd rhs(s + 1);
      for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = gram(support[a], support[b]);
        kkt(a, s) = kkt(s, a) = 1.0;
        rhs[a] = zy[support[a]];
      }
      rhs[s] = 1.0;
      const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      if (!sol.allFinite()) continue;
      bool feasible = true;
      for (Eigen::Index a = 0; a < s; ++a) {
        if (sol[a] < -1e-12) feasible = false;
        w[support[a]] = std::max(0.0, sol[a]);
      }
      if (!feasible || w.sum() <= 0) continue;
      w /= w.sum();
    }
    const double loss = squared_error(z, y, w);
    if (loss < best_loss) {
      best_loss = loss;
      best = w;
    }
  }
  return best;
}

}  // namespace

std::vector<double> simplex_least_squares(const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
  const Eigen::Index k = z.cols();
  if (k == 0) throw Error(ErrorKind::EmptyInput, "no learners to weight");
  // Group identical columns; each group is solved as one column.
  std::vector<Eigen::Index> group(static_cast<std::size_t>(k), -1);
  std::vector<Eigen::Index> representatives;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (std::size_t r = 0; r < representatives.size(); ++r) {
      if (z.col(representatives[r]) == z.col(c)) {
        group[static_cast<std::size_t>(c)] = static_cast<Eigen::Index>(r);
        break;
      }
    }
    if (group[static_cast<std::size_t>(c)] < 0) {
      group[static_cast<std::size_t>(c)] = static_cast<Eigen::Index>(representatives.size());
      representatives.push_back(c);
    }
  }
  Eigen::MatrixXd distinct(z.rows(), static_cast<Eigen::Index>(representatives.size()));
  for (std::size_t r = 0; r < representatives.size(); ++r)
    distinct.col(static_cast<Eigen::Index>(r)) = z.col(representatives[r]);
  const Eigen::VectorXd grouped = simplex_ls_distinct(distinct, y);

  std::vector<std::size_t> group_size(representatives.size(), 0);
  for (Eigen::Index g : group) ++group_size[static_cast<std::size_t>(g)];
  std::vector<double> weights(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto g = static_cast<std::size_t>(group[static_cast<std::size_t>(c)]);
    weights[static_cast<std::size_t>(c)] = grouped[static_cast<Eigen::Index>(g)] / static_cast<double>(group_size[g]);
  }
  return weights;
}

SuperLearnerConfig super_learner_config_from_json(const nlohmann::json& j) {
  SuperLearnerConfig c;
  if (j.contains("folds")) j.at("folds").get_to(c.folds);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("threads")) j.at("threads").get_to(c.threads);
  if (j.contains("base_learners")) {
    c.base_learners.clear();
    for (const auto& entry : j.at("base_learners")) {
      BaseLearnerSpec spec;
      if (entry.is_string()) {
        spec.family = parse_family(entry.get<std::string>());
      } else {
        spec.family = parse_family(entry.at("family").get<std::string>());
        if (entry.contains("config")) spec.config = entry.at("config");
      }
      if (spec.family == Family::super_learner)
        throw Error(ErrorKind::InvalidConfig, "a super learner cannot stack another super learner");
      c.base_learners.push_back(std::move(spec));
    }
  }
  if (c.folds < 2) throw Error(ErrorKind::InvalidConfig, "folds must be at least 2");
  if (c.base_learners.empty()) throw Error(ErrorKind::InvalidConfig, "at least one base learner is required");
  return c;
}

nlohmann::json to_json(const SuperLearnerConfig& c) {
  nlohmann::json learners = nlohmann::json::array();
  for (const auto& spec : c.base_learners)
    learners.push_back({{"family", to_string(spec.family)}, {"config", spec.config}});
  return {{"folds", c.folds}, {"seed", c.seed}, {"base_learners", std::move(learners)}};
}

SuperLearnerModel fit_super_learner(const LabeledExamples& data, const SuperLearnerConfig& config) {
  require_both_classes(data, config.folds);
  const std::size_t k = config.base_learners.size();
  const std::size_t n = data.size();

  // Learners without an explicit seed get one derived from the master seed.
  std::vector<nlohmann::json> configs;
  for (std::size_t l = 0; l < k; ++l) {
    nlohmann::json c = config.base_learners[l].config.is_null() ? nlohmann::json::object()
                                                                : config.base_learners[l].config;
    if (!c.contains("seed")) c["seed"] = derive_seed(config.seed, {0x6261736555ULL, l});
    configs.push_back(std::move(c));
  }
  TrainOptions options{config.threads};

  const auto folds = stratified_folds(data.y, config.folds, derive_seed(config.seed, {0x666f6c6473ULL}));
  Eigen::MatrixXd oof(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::vector<char> failed(k, 0);
  SuperLearnerModel model;
  std::vector<std::string> failure_reason(k);

  for (std::size_t f = 0; f < config.folds; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i) (folds[i] == f ? test_rows : train_rows).push_back(i);
    const LabeledExamples train_part = data.subset(train_rows);
    for (std::size_t l = 0; l < k; ++l) {
      if (failed[l]) continue;
      try {
        const ModelArtifact fitted = train(config.base_learners[l].family, configs[l], train_part, options);
        for (std::size_t r : test_rows)
          oof(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = predict_proba(fitted, data.row(r));
      } catch (const std::exception& e) {
        failed[l] = 1;
        failure_reason[l] = e.what();
      }
    }
  }

  std::vector<std::size_t> kept;
  for (std::size_t l = 0; l < k; ++l) {
    const std::string name = std::string(to_string(config.base_learners[l].family));
    if (failed[l]) {
      model.failures.push_back(name + ": " + failure_reason[l]);
      continue;
    }
    kept.push_back(l);
  }
  if (kept.empty()) throw Error(ErrorKind::BaseLearnerFailure, "every base learner failed");

  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) z.col(static_cast<Eigen::Index>(c)) = oof.col(static_cast<Eigen::Index>(kept[c]));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = data.y[i] == 1 ? 1.0 : 0.0;

  model.weights = simplex_least_squares(z, y);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(model.weights.data(), static_cast<Eigen::Index>(model.weights.size()));
  model.ensemble_loss = squared_error(z, y, w);
  for (std::size_t c = 0; c < kept.size(); ++c) {
    Eigen::VectorXd vertex = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kept.size()));
    vertex[static_cast<Eigen::Index>(c)] = 1.0;
    model.stacking_loss.push_back(squared_error(z, y, vertex));
  }

  for (std::size_t l : kept) {
    model.names.emplace_back(to_string(config.base_learners[l].family));
    model.learners.push_back(
        std::make_shared<const ModelArtifact>(train(config.base_learners[l].family, configs[l], data, options)));
  }
  return model;
}

double predict(const SuperLearnerModel& model, std::span<const double> features) {
  double p = 0;
  for (std::size_t l = 0; l < model.learners.size(); ++l) p += model.weights[l] * predict_proba(*model.learners[l], features);
  return std::clamp(p, 0.0, 1.0);
}

nlohmann::json to_json(const SuperLearnerModel& m) {
  nlohmann::json learners = nlohmann::json::array();
  for (const auto& l : m.learners) learners.push_back(to_json(*l));
  return {{"learners", std::move(learners)}, {"names", m.names},
          {"weights", m.weights},            {"stacking_loss", m.stacking_loss},
          {"ensemble_loss", m.ensemble_loss}, {"failures", m.failures}};
}

SuperLearnerModel super_learner_model_from_json(const nlohmann::json& j) {
  SuperLearnerModel m;
  for (const auto& l : j.at("learners")) m.learners.push_back(std::make_shared<const ModelArtifact>(model_from_json(l)));
  m.names = j.at("names").get<std::vector<std::string>>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.stacking_loss = j.at("stacking_loss").get<std::vector<double>>();
  m.ensemble_loss = j.at("ensemble_loss").get<double>();
  m.failures = j.at("failures").get<std::vector<std::string>>();
  if (m.weights.size() != m.learners.size() || m.names.size() != m.learners.size())
    throw Error(ErrorKind::SchemaMismatch, "super learner weights do not match its learners");
  return m;
}

}  // namespace bidscreen
