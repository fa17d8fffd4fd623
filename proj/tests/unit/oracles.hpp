#pragma once
// Independent reference implementations used as test oracles. They are
// written straight from the textbook definitions, deliberately without
// sharing code or algebraic shortcuts with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// The eight screens in canonical order (cv, spd, diffp, rd, rdalt, rdnor,
/// skew, kstest); nullopt where a denominator is zero. Long double throughout.
inline std::array<std::optional<double>, 8> screens(std::vector<double> bids) {
  using ld = long double;
  std::sort(bids.begin(), bids.end());
  const int n = static_cast<int>(bids.size());
  std::vector<ld> b(bids.begin(), bids.end());

  ld mean = 0;
  for (int i = 0; i < n; ++i) mean += b[i];
  mean /= n;
  ld var = 0;
  for (int i = 0; i < n; ++i) var += (b[i] - mean) * (b[i] - mean);
  var /= (n - 1);
  const ld s = std::sqrt(var);

  // Losing bids are b_2..b_n.
  ld lmean = 0;
  for (int i = 1; i < n; ++i) lmean += b[i];
  lmean /= (n - 1);
  ld lvar = 0;
  for (int i = 1; i < n; ++i) lvar += (b[i] - lmean) * (b[i] - lmean);
  lvar /= (n - 2);
  const ld s_losing = std::sqrt(lvar);

  const auto div = [](ld num, ld den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num / den);
  };

  std::array<std::optional<double>, 8> out;
  out[0] = div(s, mean);
  out[1] = div(b[n - 1] - b[0], b[0]);
  out[2] = div(b[1] - b[0], b[0]);
  out[3] = div(b[1] - b[0], s_losing);
  ld alt = 0;
  for (int i = 1; i <= n - 2; ++i) alt += b[i + 1] - b[i];  // i = 2..n-1 in 1-based terms
  out[4] = div(b[1] - b[0], alt / (n - 2));
  ld nor = 0;
  for (int i = 0; i <= n - 2; ++i) nor += b[i + 1] - b[i];
  out[5] = div(b[1] - b[0], nor / (n - 1));
  // Sample skewness G1 = n / ((n-1)(n-2)) * sum(((b - mean) / s)^3).
  if (s == 0) {
    out[6] = 0.0;
  } else {
    ld acc = 0;
    for (int i = 0; i < n; ++i) {
      const ld z = (b[i] - mean) / s;
      acc += z * z * z;
    }
    out[6] = static_cast<double>(acc * n / ((n - 1) * static_cast<ld>(n - 2)));
  }
  if (s == 0) {
    out[7] = std::nullopt;
  } else {
    ld dplus = -1e300L, dminus = -1e300L;
    for (int i = 1; i <= n; ++i) {
      const ld u = b[i - 1] / s;
      const ld r = static_cast<ld>(i) / (n + 1);
      dplus = std::max(dplus, u - r);
      dminus = std::max(dminus, r - u);
    }
    out[7] = static_cast<double>(std::max(dplus, dminus));
  }
  return out;
}

/// Textbook Newton/IRLS for the unpenalized logit on the given (already
/// standardized) design. Returns (intercept, slopes).
inline Eigen::VectorXd irls_logit(const Eigen::MatrixXd& z, const std::vector<int>& y, int iterations = 100) {
  const Eigen::Index n = z.rows(), p = z.cols();
  Eigen::MatrixXd x(n, p + 1);
  x.col(0).setOnes();
  x.rightCols(p) = z;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu(n), w(n), zwork(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = mu(i) * (1 - mu(i));
      zwork(i) = eta(i) + (y[static_cast<std::size_t>(i)] - mu(i)) / w(i);
    }
    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    const Eigen::VectorXd next = (xtw * x).ldlt().solve(xtw * zwork);
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (change < 1e-13) break;
  }
  return beta;
}

/// Weighted Gini impurity of a split, computed from the definition.
inline double split_gini(const std::vector<int>& left, const std::vector<int>& right) {
  const auto gini = [](const std::vector<int>& ys) {
    if (ys.empty()) return 0.0;
    double pos = 0;
    for (int y : ys) pos += y;
    const double p = pos / static_cast<double>(ys.size());
    return 1.0 - p * p - (1 - p) * (1 - p);
  };
  const double n = static_cast<double>(left.size() + right.size());
  return static_cast<double>(left.size()) / n * gini(left) + static_cast<double>(right.size()) / n * gini(right);
}

}  // namespace oracle
