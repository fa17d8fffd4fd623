#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "bidscreen/error.hpp"
#include "bidscreen/models/artifact.hpp"
#include "bidscreen/service.hpp"
#include "bidscreen/store.hpp"
#include "fixtures.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro that
// collides with Eigen parameter names.
#include <httplib.h>

using namespace bidscreen;
namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / fmt::format("bidscreen-test-{:016x}", (std::uint64_t{rd()} << 32) | rd());
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

/// Depth-1 CART on raw screens that flags tenders with a low CV.
ModelArtifact cv_stump() {
  const Dataset d = fixture::cv_labelled(600, 0.053, 0.0, 8);
  return train(Family::cart, {{"max_depth", 1}, {"prune", false}}, make_examples(d, FeatureMode::raw_screens));
}

ServiceRequest request(std::string method, std::string path, nlohmann::json body = nullptr,
                       std::map<std::string, std::string> query = {}) {
  ServiceRequest r;
  r.method = std::move(method);
  r.path = std::move(path);
  r.query = std::move(query);
  if (!body.is_null()) r.body = body.dump();
  return r;
}

/// A tender whose CV is far above the stump's cut.
const nlohmann::json kWideTender = {{"tender_id", "W1"}, {"region", "ZH"}, {"bids", {100, 150, 210}}};
/// A tender with a CV well below it.
const nlohmann::json kTightTender = {{"tender_id", "N1"}, {"region", "BE"}, {"bids", {100, 100.5, 101}}};

}  // namespace

TEST_CASE("content ids are stable SHA-256 prefixes") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(content_id("abc") == "ba7816bf8f01cfea");
  const auto m = cv_stump();
  CHECK(model_id(m) == model_id(deserialize(serialize(m))));
}

TEST_CASE("store contents survive a restart") {
  TempDir dir;
  std::string mid, rid, did;
  EscalationFlag flag;
  {
    RunStore store(dir.path);
    mid = store.put_model(cv_stump());
    CHECK(store.put_model(cv_stump()) == mid);  // content addressed
    rid = store.put_report({{"ccr", 0.9}}, "evaluation");
    Dataset d = fixture::cv_labelled(5, 0.05, 0.0, 1);
    did = store.put_dataset(d);
    ScreenedTender st;
    st.tender = tender_from_json(kWideTender);
    st.verdict = Verdict{"W1", 0.2, Light::green, mid};
    store.put_tender(st);
    st.verdict->probability = 0.8;  // latest write wins
    st.verdict->light = Light::very_suspicious;
    store.put_tender(st);
    flag = store.create_flag("W1", "m.keller", "odd spacing");
    store.update_flag(flag.id, FlagStatus::reviewed, std::nullopt);
  }
  RunStore again(dir.path);
  REQUIRE(again.models().size() == 1);
  CHECK(again.models()[0].id == mid);
  CHECK(serialize(again.get_model(mid)) == serialize(cv_stump()));
  CHECK(again.get_report(rid).at("ccr") == 0.9);
  CHECK(again.get_dataset(did).tenders.size() == 5);
  REQUIRE(again.tenders().size() == 1);
  CHECK(again.tender("W1")->verdict->probability == 0.8);
  REQUIRE(again.flags().size() == 1);
  CHECK(again.flags()[0].status == FlagStatus::reviewed);
  CHECK(again.flags()[0].note == "odd spacing");
  CHECK(again.flags()[0].id == flag.id);
  CHECK_THROWS_AS(again.get_model("0000000000000000"), Error);
}

TEST_CASE("duplicate open flags conflict") {
  TempDir dir;
  RunStore store(dir.path);
  const auto f = store.create_flag("T1", "anna", "");
  try {
    store.create_flag("T1", "anna", "again");
    FAIL("expected Conflict");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Conflict);
  }
  CHECK_NOTHROW(store.create_flag("T1", "ben", ""));
  store.update_flag(f.id, FlagStatus::reviewed, std::nullopt);
  const auto second = store.create_flag("T1", "anna", "new round");
  CHECK(second.id != f.id);
  CHECK_THROWS_AS(store.update_flag(f.id, FlagStatus::open, std::nullopt), Error);  // reopening conflicts
  CHECK_THROWS_AS(store.update_flag("flag-999999", std::nullopt, std::string("x")), Error);
}

TEST_CASE("service handles the API without a socket") {
  TempDir dir;
  ServiceConfig config;
  config.store = dir.path;
  Service service(config);
  const std::string mid = service.store().put_model(cv_stump());

  SUBCASE("health") {
    const auto r = service.handle(request("GET", "/health"));
    CHECK(r.status == 200);
    CHECK(r.body.at("status") == "ok");
    CHECK(r.body.at("model_id") == mid);
    CHECK(r.body.at("thresholds").at("low") == 0.5);
  }
  SUBCASE("screening a tender returns screens, light and decision path") {
    const auto r = service.handle(request("POST", "/screen", kWideTender));
    REQUIRE(r.status == 200);
    CHECK(r.body.at("light") == "green");
    CHECK(r.body.at("probability").get<double>() < 0.5);
    CHECK(r.body.at("screens").at("n_bids") == 3);
    const auto path = r.body.at("tree_path").get<std::vector<std::string>>();
    REQUIRE(path.size() == 1);
    CHECK(path[0].rfind("cv ≥ 0.05", 0) == 0);
    CHECK(path[0].ends_with("? yes → 0"));
    CHECK(service.store().tender("W1").has_value());

    const auto tight = service.handle(request("POST", "/screen", kTightTender));
    CHECK(tight.body.at("light") == "very_suspicious");
    CHECK(tight.body.at("tree_path")[0].get<std::string>().ends_with("? no → 1"));
  }
  SUBCASE("error statuses") {
    const auto two = service.handle(request("POST", "/screen", {{"bids", {100, 120}}}));
    CHECK(two.status == 422);
    CHECK(two.body.at("error") == "TooFewBids");
    CHECK(service.handle(request("POST", "/screen", {{"bids", {100, -1, 120}}})).status == 422);
    CHECK(service.handle(request("POST", "/screen", {{"tender_id", "x"}})).status == 400);
    ServiceRequest bad = request("POST", "/screen");
    bad.body = "{not json";
    CHECK(service.handle(bad).status == 400);
    CHECK(service.handle(request("GET", "/tenders/nope")).status == 404);
    CHECK(service.handle(request("GET", "/models/0123456789abcdef")).status == 404);
    CHECK(service.handle(request("GET", "/nowhere")).status == 404);
    CHECK(service.handle(request("POST", "/screen", {{"bids", {1, 2, 3}}, {"thresholds", {{"low", 0.8}, {"high", 0.6}}}}))
              .status == 422);
  }
  SUBCASE("flags") {
    CHECK(service.handle(request("POST", "/flags", {{"tender_id", "W1"}, {"manager_id", "a"}})).status == 404);
    service.handle(request("POST", "/tenders", kWideTender));
    const auto created = service.handle(request("POST", "/flags", {{"tender_id", "W1"}, {"manager_id", "a"}}));
    CHECK(created.status == 201);
    CHECK(service.handle(request("POST", "/flags", {{"tender_id", "W1"}, {"manager_id", "a"}})).status == 409);
    const std::string id = created.body.at("id");
    const auto patched = service.handle(request("PATCH", "/flags/" + id, {{"status", "reviewed"}, {"note", "ok"}}));
    CHECK(patched.status == 200);
    CHECK(patched.body.at("status") == "reviewed");
    CHECK(service.handle(request("PATCH", "/flags/" + id, {{"status", "closed"}})).status == 400);
    CHECK(service.handle(request("GET", "/flags")).body.at("flags").size() == 1);
  }
  SUBCASE("reports follow the query thresholds") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> spread(0.0, 0.3);
    for (int i = 0; i < 40; ++i) {
      const double s = spread(rng);
      service.handle(request("POST", "/tenders",
                             {{"tender_id", "R" + std::to_string(i)},
                              {"region", i % 2 ? "ZH" : "BE"},
                              {"bids", {100.0, 100.0 * (1 + s), 100.0 * (1 + 2 * s)}}}));
    }
    const auto summary = service.handle(request("GET", "/reports/summary"));
    REQUIRE(summary.status == 200);
    const auto& low = summary.body.at("summary")[0];
    CHECK(low.at("flagged").get<std::size_t>() + low.at("not_flagged").get<std::size_t>() == 40);
    CHECK(summary.body.at("total") == 40);

    const auto clusters = service.handle(request("GET", "/reports/clusters", nullptr, {{"group_by", "region"}}));
    CHECK(clusters.status == 200);
    const auto list = service.handle(request("GET", "/tenders", nullptr, {{"light", "green"}, {"limit", "5"}}));
    CHECK(list.body.at("tenders").size() <= 5);
    for (const auto& t : list.body.at("tenders")) CHECK(t.at("light") == "green");
    CHECK(service.handle(request("GET", "/reports/suspicioucy")).status == 200);
    CHECK(service.handle(request("GET", "/reports/interactions")).status == 200);
    CHECK(service.handle(request("GET", "/reports/summary", nullptr, {{"threshold_low", "0.9"}})).status == 422);
  }
}

TEST_CASE("bearer token guards everything but health") {
  TempDir dir;
  ServiceConfig config;
  config.store = dir.path;
  config.token = "s3cret";
  Service service(config);
  CHECK(service.handle(request("GET", "/health")).status == 200);
  CHECK(service.handle(request("GET", "/models")).status == 401);
  auto r = request("GET", "/models");
  r.authorization = "Bearer wrong!";
  CHECK(service.handle(r).status == 401);
  r.authorization = "Bearer s3cret";
  CHECK(service.handle(r).status == 200);
}

TEST_CASE("service speaks HTTP on a real socket") {
  TempDir dir;
  ServiceConfig config;
  config.store = dir.path;
  config.port = 0;
  Service service(config);
  service.store().put_model(cv_stump());
  const int port = service.bind();
  REQUIRE(port > 0);
  std::thread server([&] { service.listen(); });

  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto screened = client.Post("/screen", kTightTender.dump(), "application/json");
  REQUIRE(screened);
  CHECK(screened->status == 200);
  CHECK(nlohmann::json::parse(screened->body).at("light") == "very_suspicious");
  const auto listed = client.Get("/tenders?light=very_suspicious");
  REQUIRE(listed);
  CHECK(nlohmann::json::parse(listed->body).at("total") == 1);
  const auto missing = client.Get("/tenders/none");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  service.stop();
  server.join();
}
