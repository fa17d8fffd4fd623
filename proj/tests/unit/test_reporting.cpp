#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bidscreen/error.hpp"
#include "bidscreen/reporting.hpp"

using namespace bidscreen;

namespace {

struct Market {
  std::vector<Tender> tenders;
  std::vector<Verdict> verdicts;
};

Tender tender(const std::string& id, const std::vector<std::string>& firms, const std::string& region = "ZH",
              const std::string& date = "2019-01-01") {
  Tender t;
  t.tender_id = id;
  t.region = region;
  t.date = date;
  t.procedure = Procedure::open;
  double amount = 100;
  for (const auto& f : firms) t.bids.push_back({id, f, amount += 5, std::nullopt});
  return t;
}

/// Random tenders over `firms` plus two outsiders; every tender has a verdict.
Market random_market(const std::vector<std::string>& firms, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::string> pool = firms;
  pool.push_back("OUT1");
  pool.push_back("OUT2");
  Market m;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::string> bidders;
    for (const auto& f : pool)
      if (u(rng) < 0.45) bidders.push_back(f);
    while (bidders.size() < 3) bidders.push_back("FILL" + std::to_string(bidders.size()));
    const std::string id = "T" + std::to_string(t);
    m.tenders.push_back(tender(id, bidders));
    m.verdicts.push_back(make_verdict(id, u(rng), {}));
  }
  return m;
}

/// Recount of one cluster's rate straight from the definition.
std::pair<std::size_t, std::size_t> recount(const std::set<std::string>& cluster, const Market& m, double threshold,
                                            std::size_t need) {
  std::size_t suspicious = 0, total = 0;
  for (std::size_t i = 0; i < m.tenders.size(); ++i) {
    std::size_t members = 0;
    for (const auto& b : m.tenders[i].bids) members += cluster.count(b.firm_id);
    if (members < need) continue;
    ++total;
    suspicious += m.verdicts[i].probability >= threshold ? 1 : 0;
  }
  return {suspicious, total};
}

}  // namespace

TEST_CASE("published table formats") {
  CHECK(format_count_share(102, 1206) == "102 (8.5%)");
  CHECK(format_count_share(1104, 1206) == "1104 (91.5%)");
  CHECK(format_count_share(0, 10) == "0 (0.0%)");
  CHECK(format_count_share(1, 8) == "1 (12.5%)");
  CHECK(format_count_share(1, 16) == "1 (6.3%)");  // 6.25 rounds half-up
  CHECK(format_rate_cell(7, 32) == "22% (7/32)");
  CHECK(format_rate_cell(1, 8) == "13% (1/8)");  // 12.5 rounds half-up
  CHECK(format_rate_cell(0, 5) == "0% (0/5)");
  CHECK(format_rate_cell(5, 5) == "100% (5/5)");
}

TEST_CASE("traffic lights and thresholds") {
  const Thresholds t;
  CHECK(traffic_light(0.49, t) == Light::green);
  CHECK(traffic_light(0.5, t) == Light::suspicious);
  CHECK(traffic_light(0.69, t) == Light::suspicious);
  CHECK(traffic_light(0.7, t) == Light::very_suspicious);
  CHECK(parse_light(to_string(Light::very_suspicious)) == Light::very_suspicious);
  CHECK_THROWS_AS((Thresholds{0.7, 0.5}.validate()), Error);
  CHECK_THROWS_AS((Thresholds{0.0, 0.5}.validate()), Error);
  CHECK_NOTHROW((Thresholds{0.3, 0.9}.validate()));
}

TEST_CASE("summary counts partition the verdicts") {
  std::vector<Verdict> v;
  for (std::size_t i = 0; i < 1206; ++i) v.push_back(make_verdict("T" + std::to_string(i), i < 102 ? 0.8 : 0.2, {}));
  const Summary s = summarize(v, 0.5);
  CHECK(s.flagged == 102);
  CHECK(s.not_flagged == 1104);
  CHECK(s.flagged + s.not_flagged == s.total);
  CHECK(s.flagged_text() == "102 (8.5%)");
  const Summary rows[] = {s};
  CHECK(render_summary(rows).find("102 (8.5%)") != std::string::npos);
  CHECK_THROWS_AS(summarize(std::vector<Verdict>{}, 0.5), Error);
}

TEST_CASE("cluster tables obey the law of total probability") {
  std::vector<Tender> tenders;
  std::vector<Verdict> verdicts;
  const char* regions[] = {"ZH", "BE", "TI"};
  for (int i = 0; i < 30; ++i) {
    auto t = tender("T" + std::to_string(i), {"A", "B", "C"}, regions[i % 3], std::to_string(2015 + i % 4) + "-06-01");
    if (i == 29) t.region.reset();
    tenders.push_back(t);
    verdicts.push_back(make_verdict(t.tender_id, (i * 37 % 100) / 100.0, {}));
  }
  const auto table = cluster_breakdown(verdicts, tenders, GroupBy::region, 0.5);
  std::size_t flagged = 0, total = 0;
  for (const auto& row : table.rows) {
    flagged += row.flagged;
    total += row.total;
  }
  CHECK(total == 30);
  CHECK(flagged == table.overall.flagged);
  CHECK(table.overall.flagged == summarize(verdicts, 0.5).flagged);
  CHECK(std::any_of(table.rows.begin(), table.rows.end(), [](const ClusterRow& r) { return r.group == "unknown"; }));

  const auto years = cluster_breakdown(verdicts, tenders, GroupBy::year, 0.5, 8);
  for (const auto& row : years.rows) CHECK(row.total >= 8);
  CHECK(years.overall.total == 30);

  verdicts.push_back(make_verdict("missing", 0.9, {}));
  CHECK_THROWS_AS(cluster_breakdown(verdicts, tenders, GroupBy::region, 0.5), Error);
}

TEST_CASE("interaction cell for a firm with 7 suspicious of 32 tenders") {
  std::vector<Tender> tenders;
  std::vector<Verdict> verdicts;
  for (int i = 0; i < 32; ++i) {
    tenders.push_back(tender("T" + std::to_string(i), {"Alpha", "Beta", "Gamma"}));
    verdicts.push_back(make_verdict(tenders.back().tender_id, i < 7 ? 0.9 : 0.1, {}));
  }
  // A firm that never reaches the suspicious minimum stays off the matrix.
  tenders.push_back(tender("X", {"Alpha", "Beta", "Delta"}));
  verdicts.push_back(make_verdict("X", 0.95, {}));

  const auto m = interaction_matrix(tenders, verdicts, 0.5, 3);
  CHECK(m.firms == std::vector<std::string>{"Alpha", "Beta", "Gamma"});
  CHECK(*m.cell(2, 2) == CellCount{7, 32});
  CHECK(*m.cell(0, 0) == CellCount{8, 33});
  CHECK(*m.cell(0, 1) == CellCount{8, 33});
  CHECK(*m.cell(2, 0) == CellCount{7, 32});
  CHECK(format_rate_cell(m.cell(2, 2)->suspicious, m.cell(2, 2)->total) == "22% (7/32)");
  CHECK(render_interaction_matrix(m).find("22% (7/32)") != std::string::npos);
}

TEST_CASE("interaction matrix matches a recount on random markets") {
  const std::vector<std::string> firms = {"A", "B", "C", "D", "E"};
  const Market market = random_market(firms, 200, 12);
  const auto m = interaction_matrix(market.tenders, market.verdicts, 0.5, 3);
  for (std::size_t i = 0; i < m.firms.size(); ++i) {
    for (std::size_t j = i; j < m.firms.size(); ++j) {
      std::size_t s = 0, t = 0;
      for (std::size_t k = 0; k < market.tenders.size(); ++k) {
        bool has_i = false, has_j = false;
        for (const auto& b : market.tenders[k].bids) {
          has_i |= b.firm_id == m.firms[i];
          has_j |= b.firm_id == m.firms[j];
        }
        if (!has_i || !has_j) continue;
        ++t;
        s += market.verdicts[k].probability >= 0.5 ? 1 : 0;
      }
      if (t == 0) {
        CHECK_FALSE(m.cell(i, j).has_value());
      } else {
        CHECK(*m.cell(i, j) == CellCount{s, t});
      }
    }
  }
}

TEST_CASE("suspicioucy rates match a brute-force recount") {
  for (std::size_t n_firms : {std::size_t{3}, std::size_t{5}}) {
    std::vector<std::string> firms;
    for (std::size_t f = 0; f < n_firms; ++f) firms.push_back(std::string(1, static_cast<char>('A' + f)));
    const Market market = random_market(firms, 150, 40 + n_firms);
    for (ClusterMode mode : {ClusterMode::with_diagonal, ClusterMode::without_diagonal}) {
      const auto rates = suspicioucy_rates(firms, market.tenders, market.verdicts, 0.5, mode);
      REQUIRE(rates.size() == (std::size_t{1} << n_firms));
      std::set<std::vector<std::string>> seen;
      for (const auto& r : rates) {
        seen.insert(r.cluster);
        const std::set<std::string> members(r.cluster.begin(), r.cluster.end());
        const auto [s, t] = recount(members, market, 0.5, mode == ClusterMode::with_diagonal ? 1 : 2);
        CHECK(r.suspicious == s);
        CHECK(r.total == t);
        CHECK(r.rate == (t ? std::optional<double>(static_cast<double>(s) / static_cast<double>(t)) : std::nullopt));
        CHECK(r.degenerate == (r.cluster.size() <= 1));
      }
      CHECK(seen.size() == rates.size());
      // Ordering: rate descending, undefined last.
      for (std::size_t k = 1; k < rates.size(); ++k) {
        if (!rates[k - 1].rate) CHECK_FALSE(rates[k].rate.has_value());
        if (rates[k - 1].rate && rates[k].rate) CHECK(*rates[k - 1].rate >= *rates[k].rate);
      }
    }
  }
}

TEST_CASE("twelve firms enumerate 4096 clusters with monotone totals") {
  std::vector<std::string> firms;
  for (int f = 0; f < 12; ++f) firms.push_back("F" + std::to_string(10 + f));
  const Market market = random_market(firms, 300, 99);
  const auto start = std::chrono::steady_clock::now();
  const auto rates = suspicioucy_rates(firms, market.tenders, market.verdicts, 0.5, ClusterMode::with_diagonal);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(rates.size() == 4096);
  CHECK(seconds < 1.0);

  // Adding a firm can only add tenders to a with-diagonal cluster.
  std::map<std::vector<std::string>, std::size_t> total;
  for (const auto& r : rates) total[r.cluster] = r.total;
  for (const auto& r : rates) {
    for (const auto& f : firms) {
      if (std::find(r.cluster.begin(), r.cluster.end(), f) != r.cluster.end()) continue;
      std::vector<std::string> bigger;
      for (const auto& g : firms)
        if (g == f || std::find(r.cluster.begin(), r.cluster.end(), g) != r.cluster.end()) bigger.push_back(g);
      CHECK(total.at(bigger) >= r.total);
    }
  }
}

TEST_CASE("firm limit is enforced") {
  std::vector<std::string> firms;
  for (int f = 0; f < 21; ++f) firms.push_back("F" + std::to_string(f));
  const Market market = random_market({"F0"}, 10, 1);
  try {
    suspicioucy_rates(firms, market.tenders, market.verdicts, 0.5, ClusterMode::with_diagonal);
    FAIL("expected TooManyFirms");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooManyFirms);
  }
}
