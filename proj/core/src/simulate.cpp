#include "bidscreen/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "bidscreen/error.hpp"
#include "bidscreen/rng.hpp"

namespace bidscreen {

void SimConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (n_tenders == 0) fail("n_tenders must be positive");
  if (!(cartel_share >= 0 && cartel_share <= 1)) fail("cartel_share must lie in [0, 1]");
  if (bids_min < kMinBids) fail("bids_min must be at least 3");
  if (bids_max < bids_min) fail("bids_max must be >= bids_min");
  if (!(competitive_markup_sd > 0)) fail("competitive_markup_sd must be positive");
  if (!(competitive_markup_dispersion >= 0)) fail("competitive_markup_dispersion must be >= 0");
  if (!(cost_log_sd >= 0)) fail("cost_log_sd must be >= 0");
  if (!(cartel_cover_spread > 0)) fail("cartel_cover_spread must be positive");
  if (!(cartel_cover_gap >= 0)) fail("cartel_cover_gap must be >= 0");
  if (!(cartel_winner_markup > -1)) fail("cartel_winner_markup must exceed -1");
  if (firm_pool < bids_max) fail("firm_pool must be at least bids_max");
  if (regions.empty() || procedures.empty() || years.empty())
    fail("regions, procedures and years must be non-empty");
}

std::string firm_name(std::size_t index) { return fmt::format("F{:03d}", index + 1); }

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_tenders", c.n_tenders);
  get("cartel_share", c.cartel_share);
  get("bids_min", c.bids_min);
  get("bids_max", c.bids_max);
  get("cost_log_mean", c.cost_log_mean);
  get("cost_log_sd", c.cost_log_sd);
  get("competitive_markup_sd", c.competitive_markup_sd);
  get("competitive_markup_dispersion", c.competitive_markup_dispersion);
  get("cartel_winner_markup", c.cartel_winner_markup);
  get("cartel_cover_gap", c.cartel_cover_gap);
  get("cartel_cover_spread", c.cartel_cover_spread);
  get("seed", c.seed);
  get("regions", c.regions);
  get("procedures", c.procedures);
  get("years", c.years);
  get("firm_pool", c.firm_pool);
  get("cartel_firms", c.cartel_firms);
  c.validate();
  return c;
}

nlohmann::json to_json(const SimConfig& c) {
  return {{"n_tenders", c.n_tenders},
          {"cartel_share", c.cartel_share},
          {"bids_min", c.bids_min},
          {"bids_max", c.bids_max},
          {"cost_log_mean", c.cost_log_mean},
          {"cost_log_sd", c.cost_log_sd},
          {"competitive_markup_sd", c.competitive_markup_sd},
          {"competitive_markup_dispersion", c.competitive_markup_dispersion},
          {"cartel_winner_markup", c.cartel_winner_markup},
          {"cartel_cover_gap", c.cartel_cover_gap},
          {"cartel_cover_spread", c.cartel_cover_spread},
          {"seed", c.seed},
          {"regions", c.regions},
          {"procedures", c.procedures},
          {"years", c.years},
          {"firm_pool", c.firm_pool},
          {"cartel_firms", c.cartel_firms}};
}

namespace {

double to_cents(double x) { return std::max(0.01, std::round(x * 100.0) / 100.0); }

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

/// `count` distinct firms; cartel tenders prefer the designated set.
std::vector<std::string> draw_firms(const SimConfig& c, std::size_t count, bool cartel, Rng& rng) {
  std::vector<std::string> pool;
  pool.reserve(c.firm_pool);
  for (std::size_t i = 0; i < c.firm_pool; ++i) pool.push_back(firm_name(i));

  std::vector<std::string> chosen;
  if (cartel && !c.cartel_firms.empty()) {
    std::vector<std::string> members = c.cartel_firms;
    std::shuffle(members.begin(), members.end(), rng);
    for (const auto& f : members) {
      if (chosen.size() == count) break;
      chosen.push_back(f);
    }
  }
  std::vector<std::string> rest;
  for (const auto& f : pool)
    if (std::find(chosen.begin(), chosen.end(), f) == chosen.end()) rest.push_back(f);
  std::shuffle(rest.begin(), rest.end(), rng);
  for (const auto& f : rest) {
    if (chosen.size() == count) break;
    chosen.push_back(f);
  }
  return chosen;
}

}  // namespace

Dataset generate(const SimConfig& config) {
  config.validate();
  Dataset out;
  out.provenance = fmt::format("simulate(seed={}, n={}, cartel_share={})", config.seed,
                               config.n_tenders, config.cartel_share);
  out.tenders.reserve(config.n_tenders);

  for (std::size_t t = 0; t < config.n_tenders; ++t) {
    Rng rng = make_rng(config.seed, {0x73696dULL, t});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Tender tender;
    tender.tender_id = fmt::format("T{:05d}", t + 1);
    const bool cartel = unit(rng) < config.cartel_share;
    tender.label = cartel ? Label::cartel : Label::competition;
    tender.region = pick(config.regions, rng);
    tender.procedure = parse_procedure(pick(config.procedures, rng));
    const int year = pick(config.years, rng);
    std::uniform_int_distribution<int> month(1, 12);
    std::uniform_int_distribution<int> day(1, 28);
    const int m = month(rng);
    tender.date = fmt::format("{:04d}-{:02d}-{:02d}", year, m, day(rng));

    std::uniform_int_distribution<std::size_t> size(config.bids_min, config.bids_max);
    const std::size_t n = size(rng);
    const double cost = std::exp(config.cost_log_mean + config.cost_log_sd * normal(rng));

    std::vector<double> amounts(n);
    if (cartel) {
      const double winner = cost * (1.0 + config.cartel_winner_markup);
      std::uniform_real_distribution<double> cover(1.0 + config.cartel_cover_gap,
                                                   1.0 + config.cartel_cover_gap + config.cartel_cover_spread);
      amounts[0] = winner;
      for (std::size_t i = 1; i < n; ++i) amounts[i] = winner * cover(rng);
    } else {
      const double sd = config.competitive_markup_sd *
                        std::exp(config.competitive_markup_dispersion * normal(rng));
      for (std::size_t i = 0; i < n; ++i) amounts[i] = cost * std::exp(sd * normal(rng));
    }

    const auto firms = draw_firms(config, n, cartel, rng);
    for (std::size_t i = 0; i < n; ++i) {
      tender.bids.push_back(Bid{tender.tender_id, firms[i], to_cents(amounts[i]), std::nullopt});
    }
    std::stable_sort(tender.bids.begin(), tender.bids.end(),
                     [](const Bid& a, const Bid& b) { return a.amount < b.amount; });
    out.tenders.push_back(std::move(tender));
  }
  return out;
}

}  // namespace bidscreen
