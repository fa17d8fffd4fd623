#include "bidscreen/service.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

#include <fmt/format.h>
#include <httplib.h>

#include "bidscreen/csv.hpp"
#include "bidscreen/error.hpp"

namespace bidscreen {
namespace {

/// Malformed requests, as opposed to well-formed requests that fail a domain rule.
struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Unauthorized : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::SchemaMismatch: return 400;
    case ErrorKind::Io: return 500;
    default: return 422;
  }
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const auto j = path.find('/', i);
    const auto end = j == std::string_view::npos ? path.size() : j;
    if (end > i) parts.emplace_back(path.substr(i, end - i));
    i = end;
  }
  return parts;
}

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    auto j = nlohmann::json::parse(body);
    if (!j.is_object()) throw BadRequest("request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw BadRequest(std::string("malformed JSON: ") + e.what());
  }
}

std::optional<std::string> body_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw BadRequest(fmt::format("'{}' must be a string", key));
  return j.at(key).get<std::string>();
}

double query_double(const std::map<std::string, std::string>& q, const std::string& key, double fallback) {
  const auto it = q.find(key);
  if (it == q.end()) return fallback;
  const auto v = csv::parse_double(it->second);
  if (!v) throw BadRequest(fmt::format("query parameter '{}' must be a number", key));
  return *v;
}

std::size_t query_size(const std::map<std::string, std::string>& q, const std::string& key, std::size_t fallback) {
  const auto it = q.find(key);
  if (it == q.end()) return fallback;
  const auto v = csv::parse_double(it->second);
  if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
    throw BadRequest(fmt::format("query parameter '{}' must be a non-negative integer", key));
  return static_cast<std::size_t>(*v);
}

nlohmann::json thresholds_json(const Thresholds& t) { return {{"low", t.low}, {"high", t.high}}; }

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  RunStore store;
  httplib::Server server;
  int bound_port = -1;
  std::mutex cache_mutex;
  std::unordered_map<std::string, std::shared_ptr<const ModelArtifact>> cache;

  explicit Impl(ServiceConfig c) : config(std::move(c)), store(config.store) { config.thresholds.validate(); }

  std::optional<std::string> default_model_id() const {
    if (config.default_model) return config.default_model;
    const auto models = store.models();
    if (models.empty()) return std::nullopt;
    return models.back().id;
  }

  std::shared_ptr<const ModelArtifact> model(const std::string& id) {
    {
      std::lock_guard lock(cache_mutex);
      if (const auto it = cache.find(id); it != cache.end()) return it->second;
    }
    auto m = std::make_shared<const ModelArtifact>(store.get_model(id));
    std::lock_guard lock(cache_mutex);
    return cache.emplace(id, std::move(m)).first->second;
  }

  Thresholds thresholds_from_body(const nlohmann::json& body) const {
    Thresholds t = config.thresholds;
    if (body.contains("thresholds") && !body.at("thresholds").is_null()) {
      const auto& j = body.at("thresholds");
      if (!j.is_object()) throw BadRequest("'thresholds' must be an object {low, high}");
      for (const auto* key : {"low", "high"}) {
        if (j.contains(key) && !j.at(key).is_number())
          throw BadRequest(fmt::format("thresholds.{} must be a number", key));
      }
      if (j.contains("low")) t.low = j.at("low").get<double>();
      if (j.contains("high")) t.high = j.at("high").get<double>();
    }
    t.validate();
    return t;
  }

  Thresholds thresholds_from_query(const std::map<std::string, std::string>& q) const {
    Thresholds t{query_double(q, "threshold_low", config.thresholds.low),
                 query_double(q, "threshold_high", config.thresholds.high)};
    t.validate();
    return t;
  }

  /// Screens the request's tender; the model is the one named in the body,
  /// else the default. Without any model only screens are returned.
  std::pair<ScreenedTender, std::optional<std::string>> screen(const nlohmann::json& body, bool needs_id) {
    if (!body.contains("bids")) throw BadRequest("'bids' is required");
    nlohmann::json tj = body;
    if (!tj.contains("tender_id") || tj.at("tender_id").is_null()) {
      if (needs_id) throw BadRequest("'tender_id' is required");
      tj["tender_id"] = "";
    }
    Tender tender = tender_from_json(tj);
    const Thresholds thresholds = thresholds_from_body(body);
    std::optional<std::string> id = body_string(body, "model_id");
    if (!id) id = default_model_id();
    std::shared_ptr<const ModelArtifact> m;
    if (id) m = model(*id);
    auto result = screen_tender(tender, m.get(), thresholds, config.screen_options);
    ScreenedTender st;
    st.tender = std::move(result.tender);
    st.screens = to_json(result.screens);
    st.thresholds = thresholds;
    st.tree_path = std::move(result.tree_path);
    if (result.probability) {
      st.verdict = Verdict{st.tender.tender_id, *result.probability, *result.light, *id};
    }
    return {std::move(st), id};
  }

  nlohmann::json screened_json(const ScreenedTender& t) const {
    auto j = to_json(t);
    j["tender_id"] = t.tender.tender_id;
    return j;
  }

  /// Verdicts of stored tenders, relabelled at the given thresholds and
  /// restricted to one model when a model id is known.
  std::vector<Verdict> stored_verdicts(const std::optional<std::string>& id, const Thresholds& t,
                                       std::vector<Tender>* tenders) const {
    std::vector<Verdict> out;
    for (const auto& s : store.tenders()) {
      if (!s.verdict) continue;
      if (id && s.verdict->model_id != *id) continue;
      out.push_back(make_verdict(s.tender.tender_id, s.verdict->probability, t, s.verdict->model_id));
      if (tenders) tenders->push_back(s.tender);
    }
    return out;
  }

  void authorize(const ServiceRequest& req, const std::vector<std::string>& parts) const {
    if (!config.token) return;
    if (parts.size() == 1 && parts[0] == "health") return;
    const std::string expected = "Bearer " + *config.token;
    // Compare without early exit so timing does not leak the token prefix.
    bool same = req.authorization.size() == expected.size();
    unsigned char diff = 0;
    for (std::size_t i = 0; i < std::min(req.authorization.size(), expected.size()); ++i)
      diff |= static_cast<unsigned char>(req.authorization[i] ^ expected[i]);
    if (!same || diff != 0) throw Unauthorized("missing or invalid bearer token");
  }

  ServiceResponse route(const ServiceRequest& req, const std::vector<std::string>& p,
                        std::optional<std::string>& model_used, Thresholds& thresholds_used) {
    const auto& m = req.method;
    const auto n = p.size();
    const auto ok = [&](nlohmann::json body, int status = 200) { return ServiceResponse{status, std::move(body)}; };

    if (n == 1 && p[0] == "health" && m == "GET") {
      model_used = default_model_id();
      return ok({{"status", "ok"}, {"models", store.models().size()}, {"tenders", store.tenders().size()}});
    }

    if (n == 1 && p[0] == "screen" && m == "POST") {
      const auto body = parse_body(req.body);
      auto [st, id] = screen(body, false);
      model_used = id;
      thresholds_used = st.thresholds;
      if (!st.tender.tender_id.empty()) store.put_tender(st);
      nlohmann::json out = {{"tender_id", st.tender.tender_id},
                            {"screens", st.screens},
                            {"n_bids", st.tender.bids.size()},
                            {"probability", st.verdict ? nlohmann::json(st.verdict->probability) : nullptr},
                            {"light", st.verdict ? nlohmann::json(to_string(st.verdict->light)) : nullptr}};
      if (!st.tree_path.empty()) out["tree_path"] = st.tree_path;
      return ok(out);
    }

    if (n >= 1 && p[0] == "tenders") {
      if (n == 1 && m == "POST") {
        const auto body = parse_body(req.body);
        auto [st, id] = screen(body, true);
        model_used = id;
        thresholds_used = st.thresholds;
        store.put_tender(st);
        return ok(screened_json(st), 201);
      }
      if (n == 1 && m == "GET") {
        thresholds_used = thresholds_from_query(req.query);
        const bool by_light = req.query.contains("light");
        const Light light = by_light ? parse_light(req.query.at("light")) : Light::green;
        const auto region = req.query.contains("region") ? std::optional(req.query.at("region")) : std::nullopt;
        const auto offset = query_size(req.query, "offset", 0);
        const auto limit = query_size(req.query, "limit", 1000);
        nlohmann::json list = nlohmann::json::array();
        std::size_t matched = 0;
        for (auto t : store.tenders()) {
          if (t.verdict) t.verdict->light = traffic_light(t.verdict->probability, thresholds_used);
          if (by_light && (!t.verdict || t.verdict->light != light)) continue;
          if (region && t.tender.region.value_or("unknown") != *region) continue;
          if (matched++ < offset || list.size() >= limit) continue;
          list.push_back(screened_json(t));
        }
        model_used = default_model_id();
        return ok({{"tenders", list}, {"total", matched}, {"offset", offset}, {"limit", limit}});
      }
      if (n == 2 && m == "GET") {
        const auto t = store.tender(p[1]);
        if (!t) throw Error(ErrorKind::NotFound, "no tender '" + p[1] + "'");
        if (t->verdict) model_used = t->verdict->model_id;
        thresholds_used = t->thresholds;
        return ok(screened_json(*t));
      }
    }

    if (n >= 1 && p[0] == "flags") {
      model_used = default_model_id();
      if (n == 1 && m == "POST") {
        const auto body = parse_body(req.body);
        const auto tender_id = body_string(body, "tender_id");
        const auto manager_id = body_string(body, "manager_id");
        if (!tender_id || !manager_id) throw BadRequest("'tender_id' and 'manager_id' are required");
        if (!store.tender(*tender_id)) throw Error(ErrorKind::NotFound, "no tender '" + *tender_id + "'");
        const auto f = store.create_flag(*tender_id, *manager_id, body_string(body, "note").value_or(""));
        return ok(to_json(f), 201);
      }
      if (n == 1 && m == "GET") {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& f : store.flags()) {
          if (req.query.contains("status") && to_string(f.status) != req.query.at("status")) continue;
          if (req.query.contains("manager_id") && f.manager_id != req.query.at("manager_id")) continue;
          list.push_back(to_json(f));
        }
        return ok({{"flags", list}});
      }
      if (n == 2 && m == "PATCH") {
        const auto body = parse_body(req.body);
        std::optional<FlagStatus> status;
        if (const auto s = body_string(body, "status")) {
          if (*s != "open" && *s != "reviewed") throw BadRequest("'status' must be open or reviewed");
          status = parse_flag_status(*s);
        }
        return ok(to_json(store.update_flag(p[1], status, body_string(body, "note"))));
      }
    }

    if (n == 2 && p[0] == "reports" && m == "GET") {
      thresholds_used = thresholds_from_query(req.query);
      model_used = req.query.contains("model_id") ? std::optional(req.query.at("model_id")) : default_model_id();
      const auto& kind = p[1];
      if (kind == "flags") {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& f : store.flags()) list.push_back(to_json(f));
        return ok({{"flags", list}});
      }
      std::vector<Tender> tenders;
      const auto verdicts = stored_verdicts(model_used, thresholds_used, &tenders);
      const double t = thresholds_used.low;
      if (kind == "summary") {
        nlohmann::json rows = nlohmann::json::array();
        rows.push_back(to_json(summarize(verdicts, thresholds_used.low)));
        rows.push_back(to_json(summarize(verdicts, thresholds_used.high)));
        std::map<std::string, std::size_t> lights;
        for (const auto& v : verdicts) ++lights[std::string(to_string(v.light))];
        return ok({{"summary", rows}, {"lights", lights}, {"total", verdicts.size()}});
      }
      if (kind == "clusters") {
        const auto by = parse_group_by(req.query.contains("group_by") ? req.query.at("group_by") : "region");
        const auto min_size = query_size(req.query, "min_group_size", config.report.min_group_size);
        return ok(to_json(cluster_breakdown(verdicts, tenders, by, t, min_size)));
      }
      if (kind == "interactions") {
        const auto min_s = query_size(req.query, "min_suspicious", config.report.min_suspicious);
        return ok(to_json(interaction_matrix(tenders, verdicts, t, min_s)));
      }
      if (kind == "suspicioucy") {
        const auto min_s = query_size(req.query, "min_suspicious", config.report.min_suspicious);
        const auto mode =
            parse_cluster_mode(req.query.contains("mode") ? req.query.at("mode") : "with_diagonal");
        const auto limit = query_size(req.query, "limit", config.report.top_clusters);
        const auto matrix = interaction_matrix(tenders, verdicts, t, min_s);
        const auto rates = suspicioucy_rates(matrix.firms, tenders, verdicts, t, mode, config.report.max_firms);
        const auto shown = std::min(limit, rates.size());
        return ok({{"firms", matrix.firms},
                   {"enumerated", rates.size()},
                   {"clusters", to_json(std::span<const ClusterRate>(rates.data(), shown))}});
      }
    }

    if (n >= 1 && p[0] == "models" && m == "GET") {
      if (n == 1) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& e : store.models()) list.push_back({{"id", e.id}, {"family", e.label}});
        model_used = default_model_id();
        return ok({{"models", list}});
      }
      if (n == 2) {
        model_used = p[1];
        return ok({{"artifact", to_json(*model(p[1]))}});
      }
    }

    throw Error(ErrorKind::NotFound, "no route " + m + " " + req.path);
  }

  ServiceResponse handle(const ServiceRequest& req) {
    const auto parts = split_path(req.path);
    std::optional<std::string> model_used;
    Thresholds thresholds_used = config.thresholds;
    ServiceResponse res;
    try {
      authorize(req, parts);
      res = route(req, parts, model_used, thresholds_used);
    } catch (const Unauthorized& e) {
      res = {401, {{"error", "Unauthorized"}, {"message", e.what()}}};
    } catch (const BadRequest& e) {
      res = {400, {{"error", "BadRequest"}, {"message", e.what()}}};
    } catch (const Error& e) {
      res = {status_for(e.kind()), {{"error", e.name()}, {"message", e.what()}}};
    } catch (const nlohmann::json::exception& e) {
      res = {400, {{"error", "BadRequest"}, {"message", e.what()}}};
    } catch (const std::exception& e) {
      res = {500, {{"error", "Internal"}, {"message", e.what()}}};
    }
    if (!res.body.contains("model_id")) res.body["model_id"] = model_used ? nlohmann::json(*model_used) : nullptr;
    if (!res.body.contains("thresholds")) res.body["thresholds"] = thresholds_json(thresholds_used);
    return res;
  }

  void install_routes() {
    const auto dispatch = [this](const httplib::Request& r, httplib::Response& out) {
      ServiceRequest req;
      req.method = r.method;
      req.path = r.path;
      for (const auto& [k, v] : r.params) req.query[k] = v;
      req.body = r.body;
      req.authorization = r.get_header_value("Authorization");
      const auto res = handle(req);
      out.status = res.status;
      out.set_content(res.body.dump(), "application/json");
    };
    const char* any = ".*";
    server.Get(any, dispatch);
    server.Post(any, dispatch);
    server.Patch(any, dispatch);
    if (config.static_dir) server.set_mount_point("/ui", config.static_dir->string());
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) { impl_->install_routes(); }

Service::~Service() { stop(); }

ServiceResponse Service::handle(const ServiceRequest& request) { return impl_->handle(request); }

int Service::bind() {
  auto& i = *impl_;
  if (i.config.port == 0) {
    i.bound_port = i.server.bind_to_any_port(i.config.host);
  } else if (i.server.bind_to_port(i.config.host, i.config.port)) {
    i.bound_port = i.config.port;
  }
  if (i.bound_port < 0)
    throw Error(ErrorKind::Io, fmt::format("cannot bind {}:{}", i.config.host, i.config.port));
  return i.bound_port;
}

void Service::listen() {
  if (impl_->bound_port < 0) bind();
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

RunStore& Service::store() { return impl_->store; }

}  // namespace bidscreen
