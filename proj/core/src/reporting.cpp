#include "bidscreen/reporting.hpp"

#include <algorithm>
#include <bit>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "bidscreen/csv.hpp"
#include "bidscreen/error.hpp"
#include "bidscreen/parallel.hpp"

namespace bidscreen {
namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::unordered_map<std::string_view, const Verdict*> index_verdicts(std::span<const Verdict> verdicts) {
  std::unordered_map<std::string_view, const Verdict*> out;
  out.reserve(verdicts.size());
  for (const auto& v : verdicts) out.emplace(v.tender_id, &v);
  return out;
}

std::string group_key(const Tender& t, GroupBy by) {
  switch (by) {
    case GroupBy::region:
      return t.region && !t.region->empty() ? *t.region : "unknown";
    case GroupBy::procedure:
      return std::string(to_string(t.procedure));
    case GroupBy::year: {
      const auto y = t.year();
      return y ? std::to_string(*y) : "unknown";
    }
  }
  return "unknown";
}

/// Distinct firms of a tender in bid order (wrangled tenders have one bid per
/// firm, but ingested ones may not).
std::vector<std::string_view> distinct_firms(const Tender& t) {
  std::vector<std::string_view> firms;
  for (const auto& b : t.bids) {
    if (std::find(firms.begin(), firms.end(), b.firm_id) == firms.end()) firms.push_back(b.firm_id);
  }
  return firms;
}

std::string cluster_label(const std::vector<std::string>& cluster) {
  if (cluster.empty()) return "{}";
  std::string s = "{";
  for (std::size_t i = 0; i < cluster.size(); ++i) s += (i ? ", " : "") + cluster[i];
  return s + "}";
}

}  // namespace

std::string_view to_string(Light light) noexcept {
  switch (light) {
    case Light::green: return "green";
    case Light::suspicious: return "suspicious";
    case Light::very_suspicious: return "very_suspicious";
  }
  return "green";
}

Light parse_light(std::string_view text) {
  for (auto l : {Light::green, Light::suspicious, Light::very_suspicious}) {
    if (to_string(l) == text) return l;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown light '" + std::string(text) + "'");
}

void Thresholds::validate() const {
  if (!(low > 0 && low < high && high < 1)) {
    throw Error(ErrorKind::InvalidThresholds,
                fmt::format("thresholds must satisfy 0 < low < high < 1 (got {}, {})", low, high));
  }
}

Light traffic_light(double probability, const Thresholds& thresholds) {
  thresholds.validate();
  if (!(probability >= 0 && probability <= 1))
    throw Error(ErrorKind::InvalidConfig, fmt::format("probability {} outside [0, 1]", probability));
  if (probability >= thresholds.high) return Light::very_suspicious;
  if (probability >= thresholds.low) return Light::suspicious;
  return Light::green;
}

Verdict make_verdict(std::string tender_id, double probability, const Thresholds& thresholds,
                     std::string model_id) {
  return {std::move(tender_id), probability, traffic_light(probability, thresholds), std::move(model_id)};
}

std::string format_count_share(std::size_t count, std::size_t total) {
  if (total == 0) return fmt::format("{} (-)", count);
  // Tenths of a percent, rounded half-up in integer arithmetic.
  const std::uint64_t tenths = (2000ULL * count + total) / (2ULL * total);
  return fmt::format("{} ({}.{}%)", count, tenths / 10, tenths % 10);
}

std::string format_rate_cell(std::size_t suspicious, std::size_t total) {
  if (total == 0) return fmt::format("- ({}/{})", suspicious, total);
  const std::uint64_t percent = (200ULL * suspicious + total) / (2ULL * total);
  return fmt::format("{}% ({}/{})", percent, suspicious, total);
}

Summary summarize(std::span<const Verdict> verdicts, double threshold) {
  if (verdicts.empty()) throw Error(ErrorKind::EmptyInput, "no verdicts to summarize");
  Summary s;
  s.threshold = threshold;
  s.total = verdicts.size();
  for (const auto& v : verdicts) s.flagged += v.probability >= threshold ? 1 : 0;
  s.not_flagged = s.total - s.flagged;
  return s;
}

std::string_view to_string(GroupBy by) noexcept {
  switch (by) {
    case GroupBy::region: return "region";
    case GroupBy::procedure: return "procedure";
    case GroupBy::year: return "year";
  }
  return "region";
}

GroupBy parse_group_by(std::string_view text) {
  for (auto g : {GroupBy::region, GroupBy::procedure, GroupBy::year}) {
    if (to_string(g) == text) return g;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown grouping '" + std::string(text) + "'");
}

ClusterTable cluster_breakdown(std::span<const Verdict> verdicts, std::span<const Tender> tenders, GroupBy by,
                               double threshold, std::size_t min_group_size) {
  if (verdicts.empty()) throw Error(ErrorKind::EmptyInput, "no verdicts to break down");
  std::unordered_map<std::string_view, const Tender*> by_id;
  for (const auto& t : tenders) by_id.emplace(t.tender_id, &t);

  std::map<std::string, ClusterRow> groups;
  ClusterTable table;
  table.group_by = by;
  table.threshold = threshold;
  table.min_group_size = min_group_size;
  table.overall.group = "all";
  for (const auto& v : verdicts) {
    const auto it = by_id.find(v.tender_id);
    if (it == by_id.end()) throw Error(ErrorKind::NotFound, "no tender '" + v.tender_id + "' for verdict");
    const auto key = group_key(*it->second, by);
    auto& row = groups[key];
    row.group = key;
    const bool flagged = v.probability >= threshold;
    row.total += 1;
    row.flagged += flagged ? 1 : 0;
    table.overall.total += 1;
    table.overall.flagged += flagged ? 1 : 0;
  }
  for (auto& [key, row] : groups) {
    if (row.total >= min_group_size) table.rows.push_back(row);
  }
  return table;
}

std::optional<CellCount> InteractionMatrix::cell(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  const auto it = cells.find({i, j});
  if (it == cells.end()) return std::nullopt;
  return it->second;
}

InteractionMatrix interaction_matrix(std::span<const Tender> tenders, std::span<const Verdict> verdicts,
                                     double threshold, std::size_t min_suspicious) {
  const auto verdict_of = index_verdicts(verdicts);
  struct Entry {
    std::vector<std::string_view> firms;
    bool suspicious;
  };
  std::vector<Entry> screened;
  std::map<std::string_view, std::size_t> suspicious_count;
  for (const auto& t : tenders) {
    const auto it = verdict_of.find(t.tender_id);
    if (it == verdict_of.end()) continue;
    Entry e{distinct_firms(t), it->second->probability >= threshold};
    if (e.suspicious) {
      for (auto f : e.firms) ++suspicious_count[f];
    }
    screened.push_back(std::move(e));
  }

  std::unordered_set<std::string_view> heavy;
  for (const auto& [firm, n] : suspicious_count) {
    if (n >= min_suspicious) heavy.insert(firm);
  }
  // Eligible: a heavy firm that bid at least once alongside another heavy firm.
  std::set<std::string_view> eligible;
  for (const auto& e : screened) {
    std::vector<std::string_view> present;
    for (auto f : e.firms) {
      if (heavy.contains(f)) present.push_back(f);
    }
    if (present.size() >= 2) eligible.insert(present.begin(), present.end());
  }

  InteractionMatrix m;
  m.threshold = threshold;
  m.min_suspicious = min_suspicious;
  std::unordered_map<std::string_view, std::size_t> pos;
  for (auto f : eligible) {
    pos.emplace(f, m.firms.size());
    m.firms.emplace_back(f);
  }
  for (const auto& e : screened) {
    std::vector<std::size_t> idx;
    for (auto f : e.firms) {
      if (const auto it = pos.find(f); it != pos.end()) idx.push_back(it->second);
    }
    std::sort(idx.begin(), idx.end());
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a; b < idx.size(); ++b) {
        auto& c = m.cells[{idx[a], idx[b]}];
        c.total += 1;
        c.suspicious += e.suspicious ? 1 : 0;
      }
    }
  }
  return m;
}

std::string_view to_string(ClusterMode mode) noexcept {
  return mode == ClusterMode::with_diagonal ? "with_diagonal" : "without_diagonal";
}

ClusterMode parse_cluster_mode(std::string_view text) {
  if (text == "with_diagonal") return ClusterMode::with_diagonal;
  if (text == "without_diagonal") return ClusterMode::without_diagonal;
  throw Error(ErrorKind::InvalidConfig, "unknown cluster mode '" + std::string(text) + "'");
}

std::vector<ClusterRate> suspicioucy_rates(std::span<const std::string> firms, std::span<const Tender> tenders,
                                           std::span<const Verdict> verdicts, double threshold, ClusterMode mode,
                                           std::size_t max_firms) {
  if (firms.size() > max_firms || firms.size() > 30) {
    throw Error(ErrorKind::TooManyFirms, fmt::format("{} firms exceed the enumeration limit of {}", firms.size(),
                                                     std::min<std::size_t>(max_firms, 30)));
  }
  std::unordered_map<std::string_view, std::size_t> pos;
  for (std::size_t i = 0; i < firms.size(); ++i) {
    if (!pos.emplace(firms[i], i).second)
      throw Error(ErrorKind::InvalidConfig, "firm '" + firms[i] + "' listed twice");
  }

  // Collapse screened tenders to (firm bitmask -> suspicious, total).
  const auto verdict_of = index_verdicts(verdicts);
  std::map<std::uint32_t, CellCount> by_mask;
  for (const auto& t : tenders) {
    const auto it = verdict_of.find(t.tender_id);
    if (it == verdict_of.end()) continue;
    std::uint32_t mask = 0;
    for (const auto& b : t.bids) {
      if (const auto p = pos.find(b.firm_id); p != pos.end()) mask |= 1U << p->second;
    }
    if (mask == 0) continue;
    auto& c = by_mask[mask];
    c.total += 1;
    c.suspicious += it->second->probability >= threshold ? 1 : 0;
  }
  const std::vector<std::pair<std::uint32_t, CellCount>> masks(by_mask.begin(), by_mask.end());
  const int need = mode == ClusterMode::with_diagonal ? 1 : 2;

  const std::size_t subsets = std::size_t{1} << firms.size();
  std::vector<ClusterRate> out(subsets);
  parallel_for(subsets, 0, [&](std::size_t s) {
    const auto subset = static_cast<std::uint32_t>(s);
    ClusterRate r;
    r.mode = mode;
    for (std::size_t i = 0; i < firms.size(); ++i) {
      if (subset & (1U << i)) r.cluster.push_back(firms[i]);
    }
    for (const auto& [mask, c] : masks) {
      if (std::popcount(mask & subset) >= need) {
        r.total += c.total;
        r.suspicious += c.suspicious;
      }
    }
    if (r.total > 0) r.rate = static_cast<double>(r.suspicious) / static_cast<double>(r.total);
    r.degenerate = r.cluster.size() <= 1;
    out[s] = std::move(r);
  });

  std::sort(out.begin(), out.end(), [](const ClusterRate& a, const ClusterRate& b) {
    if (a.rate.has_value() != b.rate.has_value()) return a.rate.has_value();
    if (a.rate && *a.rate != *b.rate) return *a.rate > *b.rate;
    if (a.total != b.total) return a.total > b.total;
    return a.cluster < b.cluster;
  });
  return out;
}

nlohmann::json to_json(const Verdict& v) {
  return {{"tender_id", v.tender_id},
          {"probability", v.probability},
          {"light", to_string(v.light)},
          {"model_id", v.model_id}};
}

nlohmann::json to_json(const Summary& s) {
  return {{"threshold", s.threshold},
          {"total", s.total},
          {"flagged", s.flagged},
          {"not_flagged", s.not_flagged},
          {"flagged_text", s.flagged_text()},
          {"not_flagged_text", s.not_flagged_text()}};
}

nlohmann::json to_json(const ClusterTable& t) {
  const auto row_json = [](const ClusterRow& r) {
    return nlohmann::json{{"group", r.group},
                          {"flagged", r.flagged},
                          {"not_flagged", r.total - r.flagged},
                          {"total", r.total},
                          {"flagged_text", format_count_share(r.flagged, r.total)},
                          {"not_flagged_text", format_count_share(r.total - r.flagged, r.total)}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) rows.push_back(row_json(r));
  return {{"group_by", to_string(t.group_by)},
          {"threshold", t.threshold},
          {"min_group_size", t.min_group_size},
          {"rows", rows},
          {"overall", row_json(t.overall)}};
}

nlohmann::json to_json(const InteractionMatrix& m) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, c] : m.cells) {
    cells.push_back({{"row", m.firms[key.first]},
                     {"column", m.firms[key.second]},
                     {"suspicious", c.suspicious},
                     {"total", c.total},
                     {"text", format_rate_cell(c.suspicious, c.total)}});
  }
  return {{"threshold", m.threshold}, {"min_suspicious", m.min_suspicious}, {"firms", m.firms}, {"cells", cells}};
}

nlohmann::json to_json(const ClusterRate& r) {
  return {{"cluster", r.cluster},     {"mode", to_string(r.mode)}, {"suspicious", r.suspicious},
          {"total", r.total},         {"rate", optional_json(r.rate)}, {"degenerate", r.degenerate}};
}

nlohmann::json to_json(std::span<const ClusterRate> rates) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rates) out.push_back(to_json(r));
  return out;
}

std::string render_summary(std::span<const Summary> rows) {
  std::string out = fmt::format("{:<10} {:>18} {:>18}\n", "threshold", "suspicious", "not suspicious");
  for (const auto& s : rows)
    out += fmt::format("{:<10} {:>18} {:>18}\n", s.threshold, s.flagged_text(), s.not_flagged_text());
  return out;
}

std::string render_cluster_table(const ClusterTable& t) {
  std::size_t width = 9;
  for (const auto& r : t.rows) width = std::max(width, r.group.size());
  std::string out = fmt::format("{:<{}} {:>18} {:>18}\n", std::string(to_string(t.group_by)), width, "suspicious",
                                "not suspicious");
  const auto line = [&](const ClusterRow& r) {
    return fmt::format("{:<{}} {:>18} {:>18}\n", r.group, width, format_count_share(r.flagged, r.total),
                       format_count_share(r.total - r.flagged, r.total));
  };
  for (const auto& r : t.rows) out += line(r);
  out += line(t.overall);
  return out;
}

std::string render_interaction_matrix(const InteractionMatrix& m) {
  if (m.firms.empty()) return "(no firm meets the interaction criteria)\n";
  std::size_t width = 6;
  for (const auto& f : m.firms) width = std::max(width, f.size());
  for (const auto& [key, c] : m.cells) width = std::max(width, format_rate_cell(c.suspicious, c.total).size());
  std::string out = fmt::format("{:<{}}", "", width);
  for (const auto& f : m.firms) out += fmt::format(" {:>{}}", f, width);
  out += '\n';
  for (std::size_t i = 0; i < m.firms.size(); ++i) {
    out += fmt::format("{:<{}}", m.firms[i], width);
    for (std::size_t j = 0; j < m.firms.size(); ++j) {
      std::string text;
      if (j >= i) {
        if (const auto c = m.cell(i, j)) text = format_rate_cell(c->suspicious, c->total);
      }
      out += fmt::format(" {:>{}}", text, width);
    }
    out += '\n';
  }
  return out;
}

std::string render_suspicioucy(std::span<const ClusterRate> rates, std::size_t limit) {
  std::string out = fmt::format("{:>5}  {:<14} {:>12}  {}\n", "rank", "mode", "rate", "cluster");
  std::size_t shown = 0;
  for (const auto& r : rates) {
    if (shown == limit) break;
    ++shown;
    out += fmt::format("{:>5}  {:<14} {:>12}  {}\n", shown, to_string(r.mode), format_rate_cell(r.suspicious, r.total),
                       cluster_label(r.cluster));
  }
  return out;
}

void write_verdicts_csv(std::ostream& out, std::span<const Verdict> verdicts) {
  csv::write_row(out, {"tender_id", "probability", "light", "model_id"});
  for (const auto& v : verdicts)
    csv::write_row(out, {v.tender_id, csv::format_double(v.probability), std::string(to_string(v.light)), v.model_id});
}

void write_cluster_csv(std::ostream& out, const ClusterTable& t) {
  csv::write_row(out, {std::string(to_string(t.group_by)), "flagged", "total", "flagged_share"});
  const auto line = [&](const ClusterRow& r) {
    csv::write_row(out, {r.group, std::to_string(r.flagged), std::to_string(r.total),
                         r.total ? csv::format_double(static_cast<double>(r.flagged) / static_cast<double>(r.total))
                                 : std::string()});
  };
  for (const auto& r : t.rows) line(r);
  line(t.overall);
}

void write_interaction_csv(std::ostream& out, const InteractionMatrix& m) {
  csv::write_row(out, {"row", "column", "suspicious", "total"});
  for (const auto& [key, c] : m.cells)
    csv::write_row(out, {m.firms[key.first], m.firms[key.second], std::to_string(c.suspicious), std::to_string(c.total)});
}

void write_suspicioucy_csv(std::ostream& out, std::span<const ClusterRate> rates) {
  csv::write_row(out, {"cluster", "mode", "suspicious", "total", "rate", "degenerate"});
  for (const auto& r : rates) {
    std::string cluster;
    for (std::size_t i = 0; i < r.cluster.size(); ++i) cluster += (i ? ";" : "") + r.cluster[i];
    csv::write_row(out, {cluster, std::string(to_string(r.mode)), std::to_string(r.suspicious),
                         std::to_string(r.total), r.rate ? csv::format_double(*r.rate) : std::string(),
                         r.degenerate ? "true" : "false"});
  }
}

}  // namespace bidscreen
