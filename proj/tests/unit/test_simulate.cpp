#include <doctest.h>

#include <cmath>
#include <vector>

#include "bidscreen/error.hpp"
#include "bidscreen/screens.hpp"
#include "bidscreen/simulate.hpp"

using namespace bidscreen;

namespace {

struct Moments {
  double mean = 0;
  double var = 0;
  std::size_t n = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = v.size();
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(m.n - 1);
  return m;
}

}  // namespace

TEST_CASE("default benchmark has the configured size and bid counts") {
  const Dataset d = generate(SimConfig{});
  REQUIRE(d.tenders.size() == 1500);
  std::size_t cartel = 0;
  for (const auto& t : d.tenders) {
    CHECK(t.bids.size() >= 3);
    CHECK(t.bids.size() <= 8);
    CHECK(t.label != Label::unknown);
    CHECK(t.region.has_value());
    CHECK(t.year().has_value());
    for (const auto& b : t.bids) CHECK(b.amount > 0);
    cartel += t.label == Label::cartel ? 1 : 0;
  }
  // Binomial(1500, 0.5): 5 standard deviations is about 97.
  CHECK(std::abs(static_cast<double>(cartel) - 750.0) < 97.0);
}

TEST_CASE("zero cartel share yields only competitive tenders") {
  SimConfig c;
  c.n_tenders = 300;
  c.cartel_share = 0;
  for (const auto& t : generate(c).tenders) CHECK(t.label == Label::competition);
  c.cartel_share = 1;
  for (const auto& t : generate(c).tenders) CHECK(t.label == Label::cartel);
}

TEST_CASE("cartel tenders have lower CV than competitive ones") {
  const Dataset d = generate(SimConfig{});
  std::vector<double> cartel, competitive;
  for (const auto& t : d.tenders) {
    const double cv = *compute_screens(t)[Screen::cv];
    (t.label == Label::cartel ? cartel : competitive).push_back(cv);
  }
  const Moments a = moments(cartel);
  const Moments b = moments(competitive);
  const double pooled_se = std::sqrt(a.var / static_cast<double>(a.n) + b.var / static_cast<double>(b.n));
  CHECK(b.mean - a.mean > 3 * pooled_se);
}

TEST_CASE("generation is deterministic in the seed") {
  SimConfig c;
  c.n_tenders = 200;
  CHECK(generate(c) == generate(c));
  SimConfig other = c;
  other.seed = 8;
  CHECK_FALSE(generate(other).tenders == generate(c).tenders);
}

TEST_CASE("simulated data is already clean") {
  const Dataset d = generate(SimConfig{});
  const Dataset w = wrangle(d);
  CHECK(w.tenders == d.tenders);
  CHECK(w.wrangling_log.dropped_tenders == 0);
  CHECK(w.wrangling_log.collapsed_variants == 0);
}

TEST_CASE("config validation and JSON round trip") {
  SimConfig c;
  c.bids_min = 2;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SimConfig{};
  c.cartel_share = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);

  SimConfig d;
  d.n_tenders = 42;
  d.seed = 99;
  const SimConfig back = sim_config_from_json(to_json(d));
  CHECK(back.n_tenders == 42);
  CHECK(back.seed == 99);
  CHECK(to_json(back) == to_json(d));
}
