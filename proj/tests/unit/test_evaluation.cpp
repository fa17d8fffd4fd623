#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "bidscreen/error.hpp"
#include "bidscreen/evaluation.hpp"
#include "bidscreen/models/artifact.hpp"
#include "bidscreen/rng.hpp"
#include "fixtures.hpp"

using namespace bidscreen;

namespace {

/// Predictions realising a given confusion matrix at threshold 0.5.
std::vector<Prediction> confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  std::vector<Prediction> out;
  out.insert(out.end(), tp, Prediction{0.9, 1});
  out.insert(out.end(), fp, Prediction{0.8, 0});
  out.insert(out.end(), fn, Prediction{0.2, 1});
  out.insert(out.end(), tn, Prediction{0.1, 0});
  return out;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

TEST_CASE("hand-computed confusion metrics") {
  const auto m = compute_metrics(confusion(2, 2, 1, 6));
  CHECK(m.tp == 2);
  CHECK(m.fp == 2);
  CHECK(m.fn == 1);
  CHECK(m.tn == 6);
  CHECK(*m.ccr == 8.0 / 11.0);
  CHECK(*m.precision == 0.5);
  CHECK(*m.recall == 2.0 / 3.0);
  CHECK(*m.f1 == 4.0 / 7.0);
  CHECK(*m.fpr == 0.25);
  CHECK(metric_value(m, "fpr") == m.fpr);
  CHECK_THROWS_AS(metric_value(m, "auc"), Error);
}

TEST_CASE("every small confusion matrix matches the definitions") {
  for (std::size_t tp = 0; tp <= 3; ++tp)
    for (std::size_t fp = 0; fp <= 3; ++fp)
      for (std::size_t fn = 0; fn <= 3; ++fn)
        for (std::size_t tn = 0; tn <= 3; ++tn) {
          if (tp + fp + fn + tn == 0) continue;
          const auto m = compute_metrics(confusion(tp, fp, fn, tn));
          CHECK(m.ccr == ratio(tp + tn, tp + fp + fn + tn));
          CHECK(m.precision == ratio(tp, tp + fp));
          CHECK(m.recall == ratio(tp, tp + fn));
          CHECK(m.fpr == ratio(fp, fp + tn));
          const bool f1_defined = tp > 0;
          CHECK(m.f1 == (f1_defined ? ratio(2 * tp, 2 * tp + fp + fn) : std::nullopt));
        }
}

TEST_CASE("degenerate denominators stay undefined") {
  const auto all_negative = compute_metrics(confusion(0, 0, 0, 5));
  CHECK(*all_negative.ccr == 1.0);
  CHECK_FALSE(all_negative.precision.has_value());
  CHECK_FALSE(all_negative.recall.has_value());
  CHECK_FALSE(all_negative.f1.has_value());
  CHECK(*all_negative.fpr == 0.0);
  const auto all_positive = compute_metrics(confusion(4, 0, 0, 0));
  CHECK_FALSE(all_positive.fpr.has_value());
  CHECK(*all_positive.f1 == 1.0);
  CHECK_THROWS_AS(compute_metrics(std::vector<Prediction>{}), Error);
}

TEST_CASE("threshold is inclusive") {
  const std::vector<Prediction> p = {{0.5, 1}, {0.4999, 0}};
  const auto m = compute_metrics(p, 0.5);
  CHECK(m.tp == 1);
  CHECK(m.tn == 1);
}

TEST_CASE("stratified 75/25 split") {
  std::vector<int> y(100, 0);
  std::fill(y.begin(), y.begin() + 40, 1);
  const auto s = split_indices(y, 0.75, 3);
  CHECK(s.train.size() == 75);
  CHECK(s.test.size() == 25);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 100);
  const auto positives = [&](const std::vector<std::size_t>& rows) {
    return std::count_if(rows.begin(), rows.end(), [&](std::size_t r) { return y[r] == 1; });
  };
  CHECK(positives(s.train) == 30);
  CHECK(positives(s.test) == 10);
  const auto again = split_indices(y, 0.75, 3);
  CHECK(again.train == s.train);
  CHECK(split_indices(y, 0.75, 4).train != s.train);

  try {
    split_indices(y, 1.0, 3);
    FAIL("expected EmptyClass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyClass);
  }
}

TEST_CASE("nearest-rank percentiles") {
  const std::vector<double> v = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(nearest_rank(v, 0.025) == 1);
  CHECK(nearest_rank(v, 0.5) == 5);
  CHECK(nearest_rank(v, 0.975) == 10);
  CHECK(nearest_rank(v, 0.3) == 3);  // exactly 3.0 ranks
  CHECK(nearest_rank(v, 0.0) == 1);
  CHECK(nearest_rank(v, 1.0) == 10);
}

TEST_CASE("two replicates give min and max as interval ends") {
  const auto data = fixture::logistic(120, 0.0, {1.5, -0.5}, 5);
  const ModelSpec spec{Family::logit, {}};
  const auto r = resample_intervals(data, spec, 2, 0.75, 0.05, 9);
  CHECK(r.replicates == 2);
  // Replay each replicate: its split seed is derived from (seed, "split", b).
  std::vector<double> ccr;
  for (std::uint64_t b = 0; b < 2; ++b) {
    const auto [train_part, test_part] = split(data, 0.75, derive_seed(9, {0x73706c6974ULL, b}));
    const auto model = train(Family::logit, {}, train_part);
    ccr.push_back(*compute_metrics(predictions_for(model, test_part)).ccr);
  }
  const auto& iv = r.metrics.at("ccr");
  CHECK(iv.defined == 2);
  CHECK(iv.lower <= iv.median);
  CHECK(iv.median <= iv.upper);
  CHECK(iv.median == iv.lower);  // rank ceil(0.5 * 2) = 1
  CHECK(iv.lower == *std::min_element(ccr.begin(), ccr.end()));
  CHECK(iv.upper == *std::max_element(ccr.begin(), ccr.end()));
}

TEST_CASE("resampling is deterministic and thread-independent") {
  const auto data = fixture::logistic(150, 0.0, {1.0, 1.0}, 8);
  const ModelSpec spec{Family::cart, {{"cv_folds", 3}}};
  const auto a = resample_intervals(data, spec, 30, 0.75, 0.1, 4, 0.5, {1});
  const auto b = resample_intervals(data, spec, 30, 0.75, 0.1, 4, 0.5, {4});
  CHECK(to_json(a) == to_json(b));
  for (const auto& [name, iv] : a.metrics) {
    CHECK(iv.lower <= iv.median);
    CHECK(iv.median <= iv.upper);
  }
}

TEST_CASE("threshold sweep grid and monotone false-positive rate") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Prediction> p;
  for (int i = 0; i < 500; ++i) {
    const int y = i % 2;
    p.push_back({std::clamp(0.3 * y + 0.7 * u(rng), 0.0, 1.0), y});
  }
  const auto sweep = threshold_sweep(p);
  REQUIRE(sweep.size() == 46);
  CHECK(sweep.front().threshold == 0.5);
  CHECK(sweep[7].threshold == 0.57);
  CHECK(sweep.back().threshold == 0.95);
  for (std::size_t k = 1; k < sweep.size(); ++k) CHECK(*sweep[k].fpr <= *sweep[k - 1].fpr);
  for (const auto& s : sweep) CHECK(s.ccr == compute_metrics(p, s.threshold).ccr);

  std::ostringstream csv;
  write_sweep_csv(csv, sweep);
  CHECK(csv.str().rfind("threshold,ccr,fpr\n0.5,", 0) == 0);
}

TEST_CASE("permutation importance of a one-split tree") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd x(400, 3);
  std::vector<int> y;
  for (Eigen::Index i = 0; i < 400; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = u(rng);
    y.push_back(x(i, 0) > 0.5 ? 1 : 0);
  }
  const auto data = fixture::examples(x, y);
  const auto model = train(Family::cart, {{"max_depth", 1}}, data);
  const auto imp = permutation_importance(model, data, ImportanceMetric::ccr, 5, 3);
  REQUIRE(imp.raw.size() == 3);
  CHECK(imp.names == std::vector<std::string>{"x1", "x2", "x3"});
  CHECK(imp.raw[0] > 0.3);
  CHECK(imp.raw[1] == 0.0);
  CHECK(imp.raw[2] == 0.0);
  CHECK(imp.normalized[0] == 1.0);
  CHECK_FALSE(imp.zero_everywhere);
}

TEST_CASE("importance of a constant model is zero everywhere") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 2);
  x.col(1).setLinSpaced(10, 0, 1);
  std::vector<int> y = {1, 1, 1, 0, 1, 0, 0, 1, 0, 0};
  const auto model = train(Family::cart, {{"max_depth", 0}, {"prune", false}, {"min_leaf", 10}}, fixture::examples(x, y));
  const auto imp = permutation_importance(model, fixture::examples(x, y));
  CHECK(imp.zero_everywhere);
  CHECK(imp.normalized.empty());
}
