#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bidscreen/data.hpp"

namespace bidscreen {

/// Synthetic tender generator. Competitive tenders draw independent log-normal
/// markups around a common cost; cartel tenders place a designated winner and
/// tightly clustered cover bids above it (low CV, isolated lowest bid).
struct SimConfig {
  std::size_t n_tenders = 1500;
  double cartel_share = 0.5;
  std::size_t bids_min = 3;
  std::size_t bids_max = 8;

  double cost_log_mean = 13.0;  // exp(13) ~ 440k currency units
  double cost_log_sd = 1.0;

  /// sd of the log markup in competitive tenders ...
  double competitive_markup_sd = 0.06;
  /// ... multiplied per tender by exp(N(0, dispersion)) so that some
  /// competitive tenders look tight.
  double competitive_markup_dispersion = 0.6;

  double cartel_winner_markup = 0.05;
  /// Cover bids fall in winner * [1 + gap, 1 + gap + spread].
  double cartel_cover_gap = 0.005;
  double cartel_cover_spread = 0.06;

  std::uint64_t seed = 7;

  std::vector<std::string> regions = {"ZH", "BE", "VD", "AG", "SG", "TI", "GR", "LU"};
  std::vector<std::string> procedures = {"open", "invitation"};
  std::vector<int> years = {2016, 2017, 2018, 2019, 2020, 2021};
  std::size_t firm_pool = 60;
  /// Firm ids cartel tenders draw from first; empty means the whole pool.
  std::vector<std::string> cartel_firms = {"F001", "F002", "F003", "F004", "F005", "F006",
                                           "F007", "F008"};

  void validate() const;
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& config);

std::string firm_name(std::size_t index);

/// Deterministic in config.seed; tender t draws from its own derived stream.
Dataset generate(const SimConfig& config);

}  // namespace bidscreen
