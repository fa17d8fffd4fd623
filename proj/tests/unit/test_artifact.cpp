#include <doctest.h>

#include <string>
#include <vector>

#include "bidscreen/error.hpp"
#include "bidscreen/models/artifact.hpp"
#include "fixtures.hpp"

using namespace bidscreen;

namespace {

nlohmann::json quick_config(Family f) {
  switch (f) {
    case Family::lasso_logit: return {{"n_lambda", 10}, {"cv_folds", 5}};
    case Family::cart: return {{"cv_folds", 5}};
    case Family::random_forest: return {{"n_trees", 20}};
    case Family::gradient_boosting: return {{"n_rounds", 20}};
    case Family::neural_net: return {{"epochs", 20}};
    case Family::super_learner:
      return {{"folds", 3},
              {"base_learners",
               {{{"family", "logit"}, {"config", nlohmann::json::object()}},
                {{"family", "random_forest"}, {"config", {{"n_trees", 10}}}}}}};
    default: return nlohmann::json::object();
  }
}

const std::vector<Family> kFamilies = {Family::logit,         Family::lasso_logit,       Family::cart,
                                       Family::random_forest, Family::gradient_boosting, Family::neural_net,
                                       Family::super_learner};

/// A model that outputs exactly `p` everywhere: a CART stump on a constant
/// feature cannot split, so its single leaf holds the class-1 share.
ModelArtifact constant_model(std::size_t positives, std::size_t n) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1);
  std::vector<int> y(n, 0);
  for (std::size_t i = 0; i < positives; ++i) y[i] = 1;
  return train(Family::cart, {{"prune", false}}, fixture::examples(x, y));
}

}  // namespace

TEST_CASE("every family serializes to a byte-stable canonical form") {
  const auto data = fixture::logistic(150, 0.0, {1.0, -1.0, 0.5}, 19);
  for (Family f : kFamilies) {
    CAPTURE(to_string(f));
    const ModelArtifact model = train(f, quick_config(f), data);
    CHECK(model.family == f);
    CHECK(model.feature_count == 3);
    const std::string text = serialize(model);
    const ModelArtifact back = deserialize(text);
    CHECK(serialize(back) == text);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double p = predict_proba(model, data.row(i));
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(predict_proba(back, data.row(i)) == p);
    }
    // Retraining with the same normalized config is reproducible.
    CHECK(serialize(train(f, model.training_config, data)) == text);
  }
}

TEST_CASE("feature-count mismatches and malformed artifacts are rejected") {
  const auto data = fixture::logistic(80, 0.0, {1.0, 1.0}, 1);
  const ModelArtifact model = train(Family::logit, {}, data);
  try {
    predict_proba(model, std::vector<double>{1.0, 2.0, 3.0});
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SchemaMismatch);
  }
  auto j = to_json(model);
  j["schema_version"] = 999;
  CHECK_THROWS_AS(model_from_json(j), Error);
  CHECK_THROWS_AS(deserialize("{not json"), Error);
  CHECK_THROWS_AS(deserialize(R"({"family":"nope"})"), Error);
}

TEST_CASE("classification uses an inclusive threshold") {
  const ModelArtifact half = constant_model(1, 2);
  const std::vector<double> x{0.0};
  REQUIRE(predict_proba(half, x) == 0.5);
  CHECK(classify(half, x, 0.5) == 1);
  CHECK(classify(half, x, 0.51) == 0);

  const ModelArtifact p69 = constant_model(69, 100);
  REQUIRE(predict_proba(p69, x) == doctest::Approx(0.69));
  CHECK(classify(p69, x, 0.7) == 0);
  CHECK(classify(p69, x, 0.69) == 1);

  CHECK_THROWS_AS(classify(half, x, 0.0), Error);
  CHECK_THROWS_AS(classify(half, x, 1.0), Error);
}

TEST_CASE("unknown family names are rejected") {
  CHECK(parse_family("random_forest") == Family::random_forest);
  CHECK_THROWS_AS(parse_family("svm"), Error);
}
