#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("bidscreen-cli-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

/// Runs the CLI with `args`, capturing stdout and stderr into files, and
/// returns its exit status.
int run(const std::string& args, const fs::path& dir, std::string* out = nullptr) {
  const fs::path stdout_file = dir / "stdout.txt";
  const std::string cmd = std::string("\"") + BIDSCREEN_CLI_PATH + "\" " + args + " > \"" + stdout_file.string() +
                          "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
  const int raw = std::system(cmd.c_str());
  if (out) {
    std::ifstream in(stdout_file);
    std::stringstream ss;
    ss << in.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("exit codes distinguish success, domain errors and usage errors") {
  TempDir dir;
  CHECK(run("--help", dir.path) == 0);
  CHECK(run("train --no-such-flag", dir.path) == 2);
  CHECK(run("frobnicate", dir.path) == 2);
  CHECK(run("screens --input \"" + (dir.path / "missing.csv").string() + "\"", dir.path) == 1);

  std::ofstream(dir.path / "bad.csv") << "tender_id,firm_id\nT1,A\n";
  CHECK(run("screens --input \"" + (dir.path / "bad.csv").string() + "\"", dir.path) == 1);
  CHECK(slurp(dir.path / "stderr.txt").find("MissingColumn") != std::string::npos);
}

TEST_CASE("simulate, train, evaluate and screen round trip") {
  TempDir dir;
  const auto p = [&](const char* name) { return "\"" + (dir.path / name).string() + "\""; };
  REQUIRE(run("simulate --n-tenders 300 --seed 3 --output " + p("t.csv"), dir.path) == 0);
  REQUIRE(run("simulate --n-tenders 300 --seed 3 --output " + p("t2.csv"), dir.path) == 0);
  CHECK(slurp(dir.path / "t.csv") == slurp(dir.path / "t2.csv"));

  REQUIRE(run("train --family cart --input " + p("t.csv") + " --output " + p("m1.json"), dir.path) == 0);
  REQUIRE(run("train --family cart --input " + p("t.csv") + " --output " + p("m2.json"), dir.path) == 0);
  CHECK(slurp(dir.path / "m1.json") == slurp(dir.path / "m2.json"));

  const std::string forest = "--family random_forest --config '{\"n_trees\": 30}' --input " + p("t.csv");
  REQUIRE(run("train " + forest + " --threads 1 --output " + p("f1.json"), dir.path) == 0);
  REQUIRE(run("train " + forest + " --threads 3 --output " + p("f2.json"), dir.path) == 0);
  CHECK(slurp(dir.path / "f1.json") == slurp(dir.path / "f2.json"));

  std::string out;
  REQUIRE(run("evaluate --family logit --input " + p("t.csv") + " --json", dir.path, &out) == 0);
  const auto report = nlohmann::json::parse(out);
  CHECK(report.at("point_metrics").at("ccr").get<double>() > 0.6);
  CHECK(report.at("sweep").size() == 46);

  REQUIRE(run("screen --model " + p("m1.json") + " --bids 100,100.4,100.9 --json", dir.path, &out) == 0);
  const auto verdict = nlohmann::json::parse(out);
  CHECK(verdict.contains("light"));
  CHECK(verdict.contains("probability"));
  CHECK(run("screen --model " + p("m1.json") + " --bids 100,120", dir.path) == 1);

  REQUIRE(run("report --model " + p("m1.json") + " --input " + p("t.csv") + " --output " + p("r.json"), dir.path,
              &out) == 0);
  const auto screening = nlohmann::json::parse(slurp(dir.path / "r.json"));
  CHECK(screening.contains("summary"));
}
