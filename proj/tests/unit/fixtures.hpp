#pragma once

// Synthetic data builders shared by the unit and acceptance tests. They use
// only the standard library and Eigen so that the generating rule stays
// independent of the code under test.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bidscreen/data.hpp"
#include "bidscreen/models/examples.hpp"

namespace fixture {

inline bidscreen::LabeledExamples examples(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  bidscreen::LabeledExamples d;
  d.x = x;
  d.y = y;
  for (std::size_t i = 0; i < y.size(); ++i) d.ids.push_back("e" + std::to_string(i));
  d.mode = bidscreen::FeatureMode::raw_screens;
  return d;
}

/// y ~ Bernoulli(sigmoid(intercept + x * beta)), x standard normal.
inline bidscreen::LabeledExamples logistic(std::size_t n, double intercept, const std::vector<double>& beta,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const auto p = static_cast<Eigen::Index>(beta.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = intercept;
    for (Eigen::Index j = 0; j < p; ++j) {
      x(static_cast<Eigen::Index>(i), j) = normal(rng);
      eta += beta[static_cast<std::size_t>(j)] * x(static_cast<Eigen::Index>(i), j);
    }
    y[i] = unit(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
  }
  return examples(x, y);
}

/// Two Gaussian blobs in 2-D centred at (-2,-2) and (2,2) with unit spread.
inline bidscreen::LabeledExamples blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    const double c = y[i] ? 2.0 : -2.0;
    x(static_cast<Eigen::Index>(i), 0) = c + normal(rng);
    x(static_cast<Eigen::Index>(i), 1) = c + normal(rng);
  }
  return examples(x, y);
}

/// Sample coefficient of variation, written out from its definition.
inline double coefficient_of_variation(const std::vector<double>& b) {
  double mean = 0;
  for (double v : b) mean += v;
  mean /= static_cast<double>(b.size());
  double ss = 0;
  for (double v : b) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(b.size() - 1)) / mean;
}

/// Tenders labelled cartel iff their bid CV is below `cut`, with each label
/// flipped with probability `noise`. Bid dispersion is spread so that CV
/// values straddle the cut.
inline bidscreen::Dataset cv_labelled(std::size_t n_tenders, double cut, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(3, 8);
  std::uniform_real_distribution<double> spread(0.005, 0.12);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  bidscreen::Dataset d;
  d.provenance = "cv-labelled fixture";
  for (std::size_t t = 0; t < n_tenders; ++t) {
    bidscreen::Tender tender;
    tender.tender_id = "C" + std::to_string(t);
    const double cost = 1e5 * std::exp(normal(rng));
    const double sd = spread(rng);
    const int k = count(rng);
    std::vector<double> amounts;
    for (int i = 0; i < k; ++i) {
      const double a = cost * std::exp(sd * normal(rng));
      amounts.push_back(a);
      tender.bids.push_back({tender.tender_id, "F" + std::to_string(i), a, std::nullopt});
    }
    bool cartel = coefficient_of_variation(amounts) < cut;
    if (unit(rng) < noise) cartel = !cartel;
    tender.label = cartel ? bidscreen::Label::cartel : bidscreen::Label::competition;
    d.tenders.push_back(std::move(tender));
  }
  return d;
}

}  // namespace fixture
