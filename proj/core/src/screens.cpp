#include "bidscreen/screens.hpp"

#include <algorithm>
#include <cmath>

#include "bidscreen/error.hpp"

namespace bidscreen {
namespace {

double sample_sd(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sum = 0;
  for (double v : x) sum += v;
  const double mean = sum / n;
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1));
}

}  // namespace

std::string_view to_string(DegeneracyPolicy p) noexcept {
  switch (p) {
    case DegeneracyPolicy::strict: return "strict";
    case DegeneracyPolicy::cap: return "cap";
    case DegeneracyPolicy::drop: return "drop";
  }
  return "cap";
}

DegeneracyPolicy parse_degeneracy_policy(std::string_view text) {
  if (text == "strict") return DegeneracyPolicy::strict;
  if (text == "cap") return DegeneracyPolicy::cap;
  if (text == "drop") return DegeneracyPolicy::drop;
  throw Error(ErrorKind::InvalidConfig, "unknown degeneracy policy '" + std::string(text) + "'");
}

bool ScreenVector::fully_defined() const {
  return std::all_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
}

ScreenVector compute_screens(std::span<const double> bids, const ScreenOptions& options) {
  if (bids.size() < kMinBids) {
    throw Error(ErrorKind::TooFewBids,
                "screens need at least 3 bids, got " + std::to_string(bids.size()));
  }
  std::vector<double> b(bids.begin(), bids.end());
  for (double v : b) {
    if (!(v > 0) || !std::isfinite(v)) throw Error(ErrorKind::NonPositiveBid, "bid amounts must be positive");
  }
  std::sort(b.begin(), b.end());
  const std::size_t n = b.size();
  const double nd = static_cast<double>(n);

  double sum = 0;
  for (double v : b) sum += v;
  const double mean = sum / nd;
  const double sd = sample_sd(b);
  const double sd_losing = sample_sd(std::span<const double>(b).subspan(1));
  const double lowest = b.front();
  const double gap12 = b[1] - b[0];

  ScreenVector out;
  out.n_bids = n;
  std::vector<std::string_view> degenerate;
  auto set = [&](Screen s, double numerator, double denominator) {
    auto& slot = out.values[static_cast<std::size_t>(s)];
    if (denominator != 0) {
      slot = numerator / denominator;
      return;
    }
    degenerate.push_back(kScreenNames[static_cast<std::size_t>(s)]);
    if (options.policy == DegeneracyPolicy::cap) slot = numerator > 0 ? options.cap_value : 0.0;
  };

  set(Screen::cv, sd, mean);
  set(Screen::spd, b.back() - lowest, lowest);
  set(Screen::diffp, gap12, lowest);
  set(Screen::rd, gap12, sd_losing);

  // Mean consecutive gap among the losing bids, then among all bids.
  double losing_gaps = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) losing_gaps += b[i + 1] - b[i];
  set(Screen::rdalt, gap12, losing_gaps / (nd - 2));
  double all_gaps = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) all_gaps += b[i + 1] - b[i];
  set(Screen::rdnor, gap12, all_gaps / (nd - 1));

  // Adjusted Fisher-Pearson skewness from population central moments.
  if (sd == 0) {
    out.values[static_cast<std::size_t>(Screen::skew)] = 0.0;
  } else {
    double m2 = 0;
    double m3 = 0;
    for (double v : b) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= nd;
    m3 /= nd;
    const double g1 = m3 / std::pow(m2, 1.5);
    out.values[static_cast<std::size_t>(Screen::skew)] = g1 * std::sqrt(nd * (nd - 1)) / (nd - 2);
  }

  if (sd == 0) {
    const double spread = options.kstest_centered ? 0.0 : lowest;
    set(Screen::kstest, spread, 0.0);
  } else {
    const double shift = options.kstest_centered ? mean : 0.0;
    double d_plus = -INFINITY;
    double d_minus = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (b[i] - shift) / sd;
      const double rank = static_cast<double>(i + 1) / (nd + 1);
      d_plus = std::max(d_plus, z - rank);
      d_minus = std::max(d_minus, rank - z);
    }
    out.values[static_cast<std::size_t>(Screen::kstest)] = std::max(d_plus, d_minus);
  }

  if (!degenerate.empty()) {
    if (options.policy == DegeneracyPolicy::strict) {
      std::string names;
      for (auto name : degenerate) names += (names.empty() ? "" : ", ") + std::string(name);
      throw Error(ErrorKind::DegenerateTender, "zero denominator in " + names);
    }
    if (options.policy == DegeneracyPolicy::drop) out.usable = false;
  }
  return out;
}

ScreenVector compute_screens(const Tender& tender, const ScreenOptions& options) {
  try {
    return compute_screens(tender.amounts(), options);
  } catch (const Error& e) {
    throw Error(e.kind(), "tender " + tender.tender_id + ": " +
                              std::string(e.what()).substr(e.name().size() + 2));
  }
}

const std::vector<std::string>& raw_feature_names() {
  static const std::vector<std::string> names(kScreenNames.begin(), kScreenNames.end());
  return names;
}

const std::vector<std::string>& FeatureVector::names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kExpandedCount);
    for (auto s : kScreenNames) out.emplace_back(s);
    for (auto s : kScreenNames) out.push_back(std::string(s) + "^2");
    for (std::size_t i = 0; i < kScreenCount; ++i)
      for (std::size_t j = i + 1; j < kScreenCount; ++j)
        out.push_back(std::string(kScreenNames[i]) + "*" + std::string(kScreenNames[j]));
    return out;
  }();
  return names;
}

std::vector<double> raw_features(const ScreenVector& screens) {
  std::vector<double> raw(kScreenCount);
  for (std::size_t i = 0; i < kScreenCount; ++i) {
    if (!screens.values[i]) {
      throw Error(ErrorKind::UndefinedScreen,
                  "screen '" + std::string(kScreenNames[i]) + "' is undefined");
    }
    raw[i] = *screens.values[i];
  }
  return raw;
}

std::vector<double> expand_raw(std::span<const double> raw) {
  if (raw.size() != kScreenCount) {
    throw Error(ErrorKind::SchemaMismatch, "expected 8 raw screens, got " + std::to_string(raw.size()));
  }
  std::vector<double> out;
  out.reserve(kExpandedCount);
  out.insert(out.end(), raw.begin(), raw.end());
  for (double v : raw) out.push_back(v * v);
  for (std::size_t i = 0; i < kScreenCount; ++i)
    for (std::size_t j = i + 1; j < kScreenCount; ++j) out.push_back(raw[i] * raw[j]);
  return out;
}

FeatureVector expand_features(const ScreenVector& screens) {
  return FeatureVector{expand_raw(raw_features(screens))};
}

nlohmann::json to_json(const ScreenVector& screens) {
  nlohmann::json j;
  for (std::size_t i = 0; i < kScreenCount; ++i) {
    const auto& v = screens.values[i];
    j[std::string(kScreenNames[i])] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  j["n_bids"] = screens.n_bids;
  j["usable"] = screens.usable;
  return j;
}

nlohmann::json to_json(const FeatureVector& features) {
  nlohmann::json j = nlohmann::json::object();
  const auto& names = FeatureVector::names();
  for (std::size_t i = 0; i < features.values.size() && i < names.size(); ++i)
    j[names[i]] = features.values[i];
  return j;
}

}  // namespace bidscreen
