#include "bidscreen/models/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bidscreen/error.hpp"
#include "bidscreen/models/logit.hpp"

namespace bidscreen {
namespace {

double soft_threshold(double g, double lambda) {
  if (g > lambda) return g - lambda;
  if (g < -lambda) return g + lambda;
  return 0.0;
}

double base_log_odds(std::span<const int> y) {
  const double n1 = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double n = static_cast<double>(y.size());
  return std::log(n1 / (n - n1));
}

struct PathState {
  double intercept = 0;
  Eigen::VectorXd beta;
};

/// Coordinate descent at one penalty, warm-started from `state`.
void solve_at(const Eigen::MatrixXd& z, std::span<const int> y, double lambda, const LassoConfig& config,
              PathState& state) {
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();
  const double nd = static_cast<double>(n);
  Eigen::VectorXd w(n), res(n), xwx(p);

  for (std::size_t outer = 0; outer < 100; ++outer) {
    const Eigen::VectorXd eta = (z * state.beta).array() + state.intercept;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = std::clamp(sigmoid(eta[i]), 1e-5, 1.0 - 1e-5);
      w[i] = prob * (1.0 - prob);
      res[i] = ((y[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0) - prob) / w[i];
    }
    for (Eigen::Index j = 0; j < p; ++j) xwx[j] = (w.array() * z.col(j).array().square()).sum() / nd;
    const double wsum = w.sum();
    const double intercept_before = state.intercept;
    const Eigen::VectorXd beta_before = state.beta;

    auto sweep = [&](bool active_only) {
      double max_change = 0;
      const double delta0 = w.dot(res) / wsum;
      state.intercept += delta0;
      res.array() -= delta0;
      max_change = std::max(max_change, delta0 * delta0 * wsum / nd);
      for (Eigen::Index j = 0; j < p; ++j) {
        if (active_only && state.beta[j] == 0) continue;
        if (xwx[j] <= 0) continue;
        const double g = (w.array() * z.col(j).array() * res.array()).sum() / nd + xwx[j] * state.beta[j];
        const double updated = soft_threshold(g, lambda) / xwx[j];
        const double delta = updated - state.beta[j];
        if (delta != 0) {
          res -= delta * z.col(j);
          state.beta[j] = updated;
          max_change = std::max(max_change, delta * delta * xwx[j]);
        }
      }
      return max_change;
    };

    for (std::size_t it = 0; it < config.max_iterations; ++it) {
      if (sweep(false) < config.tolerance) break;
      std::size_t inner = 0;
      while (sweep(true) >= config.tolerance && ++inner < config.max_iterations) {
      }
    }

    double change = std::abs(state.intercept - intercept_before);
    change = std::max(change, (state.beta - beta_before).cwiseAbs().maxCoeff());
    if (change < std::sqrt(config.tolerance)) break;
  }
}

std::vector<double> make_grid(double lambda_max, const LassoConfig& config) {
  if (!config.lambda_grid.empty()) {
    std::vector<double> grid = config.lambda_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());
    return grid;
  }
  std::vector<double> grid(std::max<std::size_t>(config.n_lambda, 1));
  if (grid.size() == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double log_ratio = std::log(config.lambda_min_ratio);
  for (std::size_t k = 0; k < grid.size(); ++k)
    grid[k] = lambda_max * std::exp(log_ratio * static_cast<double>(k) / static_cast<double>(grid.size() - 1));
  return grid;
}

/// Fits the whole (descending) path with warm starts; one state per grid value.
std::vector<PathState> fit_path(const Eigen::MatrixXd& z, std::span<const int> y, const std::vector<double>& grid,
                                const LassoConfig& config) {
  PathState state;
  state.intercept = base_log_odds(y);
  state.beta = Eigen::VectorXd::Zero(z.cols());
  std::vector<PathState> path;
  path.reserve(grid.size());
  for (double lambda : grid) {
    solve_at(z, y, lambda, config, state);
    PathState snapshot = state;
    if ((snapshot.beta.array() == 0).all()) snapshot.intercept = base_log_odds(y);
    path.push_back(std::move(snapshot));
  }
  return path;
}

}  // namespace

double lasso_lambda_max(const Eigen::MatrixXd& z, std::span<const int> y) {
  const double n = static_cast<double>(y.size());
  const double ybar = static_cast<double>(std::count(y.begin(), y.end(), 1)) / n;
  double best = 0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    double g = 0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) g += z(i, j) * ((y[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0) - ybar);
    best = std::max(best, std::abs(g) / n);
  }
  return best;
}

std::string_view to_string(LassoSelection s) noexcept {
  return s == LassoSelection::min ? "min" : "one_standard_error";
}

LassoSelection parse_lasso_selection(std::string_view text) {
  if (text == "min") return LassoSelection::min;
  if (text == "one_standard_error") return LassoSelection::one_standard_error;
  throw Error(ErrorKind::InvalidConfig, "unknown lasso selection '" + std::string(text) + "'");
}

LassoConfig lasso_config_from_json(const nlohmann::json& j) {
  LassoConfig c;
  if (j.contains("lambda_grid")) j.at("lambda_grid").get_to(c.lambda_grid);
  if (j.contains("n_lambda")) j.at("n_lambda").get_to(c.n_lambda);
  if (j.contains("lambda_min_ratio")) j.at("lambda_min_ratio").get_to(c.lambda_min_ratio);
  if (j.contains("cv_folds")) j.at("cv_folds").get_to(c.cv_folds);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("tolerance")) j.at("tolerance").get_to(c.tolerance);
  if (j.contains("selection")) c.selection = parse_lasso_selection(j.at("selection").get<std::string>());
  if (j.contains("max_iterations")) j.at("max_iterations").get_to(c.max_iterations);
  for (double l : c.lambda_grid)
    if (!(l >= 0)) throw Error(ErrorKind::InvalidConfig, "lambda values must be >= 0");
  if (c.cv_folds < 2) throw Error(ErrorKind::InvalidConfig, "cv_folds must be at least 2");
  return c;
}

nlohmann::json to_json(const LassoConfig& c) {
  return {{"lambda_grid", c.lambda_grid}, {"n_lambda", c.n_lambda},   {"lambda_min_ratio", c.lambda_min_ratio},
          {"cv_folds", c.cv_folds},       {"seed", c.seed},           {"tolerance", c.tolerance},
          {"selection", to_string(c.selection)},
          {"max_iterations", c.max_iterations}};
}

LassoModel fit_lasso_logit(const LabeledExamples& data, const LassoConfig& config) {
  require_both_classes(data, 2);
  LassoModel model;
  model.standardizer = Standardizer::fit(data.x);
  const Eigen::MatrixXd z = model.standardizer.apply(data.x);
  model.lambda_grid = make_grid(lasso_lambda_max(z, data.y), config);

  std::size_t chosen = 0;
  if (model.lambda_grid.size() > 1) {
    const std::size_t k = config.cv_folds;
    require_both_classes(data, k);
    const auto folds = stratified_folds(data.y, k, config.seed);
    model.cv_loss.assign(model.lambda_grid.size(), 0.0);
    std::vector<std::vector<double>> fold_loss(model.lambda_grid.size(), std::vector<double>(k, 0.0));
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t i = 0; i < data.size(); ++i) (folds[i] == f ? test_rows : train_rows).push_back(i);
      const LabeledExamples train = data.subset(train_rows);
      const LabeledExamples test = data.subset(test_rows);
      const Standardizer s = Standardizer::fit(train.x);
      const Eigen::MatrixXd zt = s.apply(train.x);
      const Eigen::MatrixXd zv = s.apply(test.x);
      const auto path = fit_path(zt, train.y, model.lambda_grid, config);
      for (std::size_t g = 0; g < path.size(); ++g) {
        const Eigen::VectorXd eta = (zv * path[g].beta).array() + path[g].intercept;
        std::vector<double> prob(static_cast<std::size_t>(eta.size()));
        for (Eigen::Index i = 0; i < eta.size(); ++i) prob[static_cast<std::size_t>(i)] = sigmoid(eta[i]);
        fold_loss[g][f] = log_loss(prob, test.y);
        model.cv_loss[g] += fold_loss[g][f] * static_cast<double>(test.size()) / static_cast<double>(data.size());
      }
    }
    // Grid is descending, so the first minimum is the largest penalty.
    std::size_t best = 0;
    for (std::size_t g = 1; g < model.cv_loss.size(); ++g)
      if (model.cv_loss[g] < model.cv_loss[best]) best = g;
    chosen = best;
    if (config.selection == LassoSelection::one_standard_error) {
      // Largest penalty whose CV loss is within one standard error of the minimum.
      const auto& losses = fold_loss[best];
      const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(k);
      double ss = 0;
      for (double l : losses) ss += (l - mean) * (l - mean);
      const double se = std::sqrt(ss / static_cast<double>(k - 1) / static_cast<double>(k));
      chosen = static_cast<std::size_t>(
          std::find_if(model.cv_loss.begin(), model.cv_loss.end(),
                       [&](double l) { return l <= model.cv_loss[best] + se; }) -
          model.cv_loss.begin());
    }
  }

  const std::vector<double> prefix(model.lambda_grid.begin(),
                                   model.lambda_grid.begin() + static_cast<std::ptrdiff_t>(chosen + 1));
  const auto path = fit_path(z, data.y, prefix, config);
  model.lambda = model.lambda_grid[chosen];
  model.intercept = path.back().intercept;
  model.coefficients = path.back().beta;
  model.zero_coefficients = static_cast<std::size_t>((model.coefficients.array() == 0).count());
  return model;
}

double predict(const LassoModel& model, std::span<const double> features) {
  const Eigen::VectorXd z = model.standardizer.apply(features);
  return sigmoid(model.intercept + z.dot(model.coefficients));
}

nlohmann::json to_json(const LassoModel& m) {
  return {{"standardizer", to_json(m.standardizer)},
          {"intercept", m.intercept},
          {"coefficients", to_json(m.coefficients)},
          {"lambda", m.lambda},
          {"lambda_grid", m.lambda_grid},
          {"cv_loss", m.cv_loss},
          {"zero_coefficients", m.zero_coefficients}};
}

LassoModel lasso_model_from_json(const nlohmann::json& j) {
  LassoModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  m.intercept = j.at("intercept").get<double>();
  m.coefficients = vector_from_json(j.at("coefficients"));
  m.lambda = j.at("lambda").get<double>();
  m.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  m.cv_loss = j.at("cv_loss").get<std::vector<double>>();
  m.zero_coefficients = j.at("zero_coefficients").get<std::size_t>();
  return m;
}

}  // namespace bidscreen
