#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bidscreen/data.hpp"

namespace bidscreen {

/// Canonical screen order. Feature indices everywhere derive from it.
enum class Screen : std::size_t { cv, spd, diffp, rd, rdalt, rdnor, skew, kstest };

inline constexpr std::size_t kScreenCount = 8;
inline constexpr std::array<std::string_view, kScreenCount> kScreenNames = {
    "cv", "spd", "diffp", "rd", "rdalt", "rdnor", "skew", "kstest"};

/// 8 raw + 8 squares + 28 pairwise products.
inline constexpr std::size_t kExpandedCount = 2 * kScreenCount + kScreenCount * (kScreenCount - 1) / 2;

/// What to do when a screen's denominator is exactly zero.
enum class DegeneracyPolicy {
  strict,  // throw DegenerateTender
  cap,     // sentinel when the numerator is positive, 0 when it is zero
  drop,    // leave the screen undefined and mark the tender unusable
};

std::string_view to_string(DegeneracyPolicy p) noexcept;
DegeneracyPolicy parse_degeneracy_policy(std::string_view text);

struct ScreenOptions {
  DegeneracyPolicy policy = DegeneracyPolicy::cap;
  double cap_value = 1e6;
  /// Use (b_i - mean)/sd instead of b_i/sd inside the KS statistic.
  bool kstest_centered = false;
};

struct ScreenVector {
  std::array<std::optional<double>, kScreenCount> values{};
  std::size_t n_bids = 0;
  bool usable = true;

  std::optional<double> operator[](Screen s) const { return values[static_cast<std::size_t>(s)]; }
  bool fully_defined() const;

  bool operator==(const ScreenVector&) const = default;
};

/// Sorts internally, so the input order of bids is irrelevant.
/// Throws TooFewBids for fewer than three bids, NonPositiveBid for amounts <= 0.
ScreenVector compute_screens(std::span<const double> bids, const ScreenOptions& options = {});
ScreenVector compute_screens(const Tender& tender, const ScreenOptions& options = {});

struct FeatureVector {
  std::vector<double> values;

  static const std::vector<std::string>& names();
};

/// The eight screens in canonical order; throws UndefinedScreen if any is missing.
std::vector<double> raw_features(const ScreenVector& screens);
FeatureVector expand_features(const ScreenVector& screens);
/// Expansion of an already-extracted raw vector (length kScreenCount).
std::vector<double> expand_raw(std::span<const double> raw);

const std::vector<std::string>& raw_feature_names();

nlohmann::json to_json(const ScreenVector& screens);
nlohmann::json to_json(const FeatureVector& features);

}  // namespace bidscreen
