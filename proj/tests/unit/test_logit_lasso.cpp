#include <doctest.h>

#include <cmath>
#include <vector>

#include "bidscreen/error.hpp"
#include "bidscreen/models/lasso.hpp"
#include "bidscreen/models/logit.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bidscreen;

namespace {

double at(const auto& model, double x) { return predict(model, std::vector<double>{x}); }

}  // namespace

TEST_CASE("separable 1-D data pushes probabilities to the extremes") {
  Eigen::MatrixXd x(20, 1);
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = -1.0 - i;
    y.push_back(0);
  }
  for (int i = 0; i < 10; ++i) {
    x(10 + i, 0) = 1.0 + i;
    y.push_back(1);
  }
  const auto model = fit_logit(fixture::examples(x, y));
  CHECK(at(model, 10) > 0.99);
  CHECK(at(model, -10) < 0.01);
}

TEST_CASE("labels independent of the features give an intercept-only fit") {
  // Every x value appears once with each label, so the slope MLE is exactly 0.
  Eigen::MatrixXd x(200, 2);
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    for (int label = 0; label < 2; ++label) {
      x(2 * i + label, 0) = std::sin(i * 1.7);
      x(2 * i + label, 1) = std::cos(i * 0.3) * 4;
      y.push_back(label);
    }
  }
  const auto model = fit_logit(fixture::examples(x, y));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double p = predict(model, std::vector<double>{x(r, 0), x(r, 1)});
    CHECK(std::abs(p - 0.5) < 0.02);
  }
}

TEST_CASE("Newton fit agrees with an independent IRLS solve") {
  const auto data = fixture::logistic(100, -0.3, {1.2, -0.8, 0.4}, 11);
  const auto model = fit_logit(data);
  CHECK(model.converged);
  const Eigen::VectorXd beta = oracle::irls_logit(data.x, data.y);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    double eta = beta(0);
    for (std::size_t j = 0; j < row.size(); ++j) eta += beta(static_cast<Eigen::Index>(j) + 1) * row[j];
    CHECK(predict(model, row) == doctest::Approx(1.0 / (1.0 + std::exp(-eta))).epsilon(1e-6));
  }
  // Slopes in original units: standardized coefficients divided by scale.
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(model.coefficients(j) / model.standardizer.scale(j) == doctest::Approx(beta(j + 1)).epsilon(1e-6));
  }
}

TEST_CASE("single-class data is rejected") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 2);
  CHECK_THROWS_AS(fit_logit(fixture::examples(x, std::vector<int>(10, 1))), Error);
}

TEST_CASE("an overwhelming penalty zeroes every slope and keeps the base-rate intercept") {
  const auto data = fixture::logistic(300, 0.7, {1.0, -1.0, 0.5}, 3);
  LassoConfig c;
  c.lambda_grid = {1e3};
  const auto model = fit_lasso_logit(data, c);
  CHECK(model.zero_coefficients == 3);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(model.coefficients(j) == 0.0);
  const auto counts = data.class_counts();
  const double log_odds = std::log(static_cast<double>(counts[1]) / static_cast<double>(counts[0]));
  CHECK(model.intercept == doctest::Approx(log_odds).epsilon(1e-8));
}

TEST_CASE("lambda_max is the smallest all-zero penalty") {
  const auto data = fixture::logistic(300, 0.2, {1.0, 0.0, -0.5}, 5);
  const Standardizer s = Standardizer::fit(data.x);
  const double lmax = lasso_lambda_max(s.apply(data.x), data.y);
  LassoConfig c;
  c.lambda_grid = {lmax * 1.0001};
  CHECK(fit_lasso_logit(data, c).zero_coefficients == 3);
  c.lambda_grid = {lmax * 0.95};
  CHECK(fit_lasso_logit(data, c).zero_coefficients < 3);
}

TEST_CASE("zero penalty reproduces the unpenalized fit") {
  const auto data = fixture::logistic(400, 0.1, {0.9, -0.6, 0.3, 0.0}, 9);
  LassoConfig c;
  c.lambda_grid = {0.0};
  c.tolerance = 1e-14;
  const auto lasso = fit_lasso_logit(data, c);
  const auto logit = fit_logit(data);
  CHECK(lasso.intercept == doctest::Approx(logit.intercept).epsilon(1e-4));
  for (Eigen::Index j = 0; j < 4; ++j)
    CHECK(std::abs(lasso.coefficients(j) - logit.coefficients(j)) < 1e-4);
}

TEST_CASE("cross-validated penalty removes most pure-noise features") {
  std::vector<double> beta(11, 0.0);
  beta[0] = 1.5;  // the only signal
  const auto data = fixture::logistic(500, 0.0, beta, 21);
  const auto model = fit_lasso_logit(data);
  std::size_t zero_noise = 0;
  for (Eigen::Index j = 1; j < 11; ++j) zero_noise += model.coefficients(j) == 0.0 ? 1 : 0;
  CHECK(zero_noise >= 8);
  CHECK(model.coefficients(0) > 0);
  CHECK(model.lambda_grid.size() == 50);
  CHECK(model.cv_loss.size() == 50);
}

TEST_CASE("lasso JSON round trip preserves predictions") {
  const auto data = fixture::logistic(120, 0.0, {1.0, 1.0}, 2);
  LassoConfig c;
  c.n_lambda = 10;
  c.cv_folds = 5;
  const auto model = fit_lasso_logit(data, c);
  const auto back = lasso_model_from_json(to_json(model));
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(predict(back, data.row(i)) == predict(model, data.row(i)));
}
