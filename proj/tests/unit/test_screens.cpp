#include <doctest.h>

#include <cmath>
#include <random>

#include "bidscreen/error.hpp"
#include "bidscreen/screens.hpp"
#include "oracles.hpp"

using namespace bidscreen;

namespace {

double at(const ScreenVector& s, Screen which) { return *s[which]; }

std::vector<double> random_bids(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(3, 10);
  std::uniform_real_distribution<double> amount(1.0, 1e6);
  std::vector<double> bids(static_cast<std::size_t>(count(rng)));
  for (auto& b : bids) b = amount(rng);
  return bids;
}

}  // namespace

TEST_CASE("three evenly spaced bids match a hand evaluation") {
  const auto s = compute_screens(std::vector<double>{100, 120, 140});
  CHECK(at(s, Screen::cv) == doctest::Approx(20.0 / 120.0).epsilon(1e-14));
  CHECK(at(s, Screen::spd) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(at(s, Screen::diffp) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(at(s, Screen::rd) == doctest::Approx(20.0 / std::sqrt(200.0)).epsilon(1e-14));
  CHECK(at(s, Screen::rdalt) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(at(s, Screen::rdnor) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(at(s, Screen::skew)) < 1e-14);
  // b_i / s = 5, 6, 7 against ranks 1/4, 2/4, 3/4.
  CHECK(at(s, Screen::kstest) == doctest::Approx(6.25).epsilon(1e-14));
  CHECK(s.n_bids == 3);
  CHECK(s.usable);
}

TEST_CASE("all-equal bids: zero screens and per-policy handling of zero denominators") {
  const std::vector<double> bids{100, 100, 100};
  SUBCASE("cap substitutes 0 for a zero numerator and the sentinel otherwise") {
    const auto s = compute_screens(bids);
    CHECK(at(s, Screen::cv) == 0);
    CHECK(at(s, Screen::spd) == 0);
    CHECK(at(s, Screen::diffp) == 0);
    CHECK(at(s, Screen::skew) == 0);
    CHECK(at(s, Screen::rd) == 0);
    CHECK(at(s, Screen::rdalt) == 0);
    CHECK(at(s, Screen::rdnor) == 0);
    CHECK(at(s, Screen::kstest) == 1e6);
    CHECK(s.usable);
  }
  SUBCASE("strict raises DegenerateTender") {
    ScreenOptions o;
    o.policy = DegeneracyPolicy::strict;
    try {
      compute_screens(bids, o);
      FAIL("expected DegenerateTender");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateTender);
    }
  }
  SUBCASE("drop leaves the screens undefined and the tender unusable") {
    ScreenOptions o;
    o.policy = DegeneracyPolicy::drop;
    const auto s = compute_screens(bids, o);
    CHECK_FALSE(s.usable);
    CHECK_FALSE(s[Screen::rd].has_value());
    CHECK_FALSE(s[Screen::kstest].has_value());
    CHECK(s[Screen::cv].has_value());
    CHECK_THROWS_AS(expand_features(s), Error);
  }
}

TEST_CASE("fewer than three bids and non-positive bids are rejected") {
  try {
    compute_screens(std::vector<double>{100, 120});
    FAIL("expected TooFewBids");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewBids);
  }
  try {
    compute_screens(std::vector<double>{100, 0, 120});
    FAIL("expected NonPositiveBid");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveBid);
  }
}

TEST_CASE("screens agree with an independent transcription on random tenders") {
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int t = 0; t < 2000; ++t) {
    const auto bids = random_bids(rng);
    const auto got = compute_screens(bids);
    const auto want = oracle::screens(bids);
    for (std::size_t k = 0; k < kScreenCount; ++k) {
      REQUIRE(want[k].has_value());
      const double a = *got.values[k], b = *want[k];
      const double rel = std::abs(a - b) / std::max(std::abs(b), 1e-300);
      worst = std::max(worst, k == static_cast<std::size_t>(Screen::skew) && std::abs(b) < 1e-3 ? 0.0 : rel);
      if (k != static_cast<std::size_t>(Screen::skew) || std::abs(b) >= 1e-3) CHECK(rel <= 1e-12);
    }
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("invariants: ordering, scale, spd >= diffp, zero diffp") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 300; ++t) {
    auto bids = random_bids(rng);
    const auto base = compute_screens(bids);
    CHECK(at(base, Screen::spd) >= at(base, Screen::diffp));
    CHECK(at(base, Screen::cv) >= 0);
    std::shuffle(bids.begin(), bids.end(), rng);
    CHECK(compute_screens(bids) == base);
    for (double c : {1e-3, 1e3}) {
      std::vector<double> scaled = bids;
      for (auto& b : scaled) b *= c;
      const auto s = compute_screens(scaled);
      for (std::size_t k = 0; k < kScreenCount; ++k) {
        const double a = *s.values[k], b = *base.values[k];
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
      }
    }
  }
  const auto tied = compute_screens(std::vector<double>{100, 100, 130, 170});
  CHECK(at(tied, Screen::diffp) == 0);
  CHECK(at(tied, Screen::rd) == 0);
  CHECK(at(tied, Screen::rdalt) == 0);
  CHECK(at(tied, Screen::rdnor) == 0);
}

TEST_CASE("centered KS statistic uses (b - mean) / s") {
  ScreenOptions o;
  o.kstest_centered = true;
  const auto s = compute_screens(std::vector<double>{100, 120, 140}, o);
  // z = -1, 0, 1 against 1/4, 2/4, 3/4: D+ = 0.25, D- = 1.25.
  CHECK(at(s, Screen::kstest) == doctest::Approx(1.25).epsilon(1e-14));
}

TEST_CASE("feature expansion: 44 named entries in canonical order") {
  const auto& names = FeatureVector::names();
  REQUIRE(names.size() == kExpandedCount);
  CHECK(kExpandedCount == 44);
  CHECK(names[0] == "cv");
  CHECK(names[8] == "cv^2");
  CHECK(names[16] == "cv*spd");
  CHECK(names[43] == "skew*kstest");

  ScreenVector zero;
  for (auto& v : zero.values) v = 0.0;
  const auto fz = expand_features(zero);
  CHECK(std::all_of(fz.values.begin(), fz.values.end(), [](double v) { return v == 0; }));

  ScreenVector single = zero;
  single.values[0] = 2.0;
  const auto fs = expand_features(single);
  CHECK(fs.values[0] == 2);
  CHECK(fs.values[8] == 4);
  for (std::size_t k = 16; k < kExpandedCount; ++k) CHECK(fs.values[k] == 0);

  // Brute force: every product entry equals the product of its named parts.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  ScreenVector r;
  for (auto& v : r.values) v = u(rng);
  const auto fr = expand_features(r);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < kExpandedCount; ++k) {
    const auto& name = names[k];
    const auto star = name.find('*');
    const auto caret = name.find('^');
    const auto index = [&](const std::string& s) {
      return static_cast<std::size_t>(std::find(kScreenNames.begin(), kScreenNames.end(), s) - kScreenNames.begin());
    };
    if (star != std::string::npos) {
      CHECK(fr.values[k] == *r.values[index(name.substr(0, star))] * *r.values[index(name.substr(star + 1))]);
      ++checked;
    } else if (caret != std::string::npos) {
      const double v = *r.values[index(name.substr(0, caret))];
      CHECK(fr.values[k] == v * v);
    } else {
      CHECK(fr.values[k] == *r.values[index(name)]);
    }
  }
  CHECK(checked == 28);
}
