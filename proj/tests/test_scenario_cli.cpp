#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "ztnet/scenario.hpp"

using namespace ztnet;
using namespace ztnet::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(ZTNET_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ztnet-cli-tests";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("run the three cases") {
  const auto c1 = cli("run case1 --seed 0");
  CHECK(c1.code == 0);
  CHECK(contains(c1.out, "ok   calibrated_error"));
  const auto c2 = cli("run case2 --seed 0 --format structured");
  CHECK(c2.code == 0);
  const auto j2 = json::parse(c2.out);
  CHECK(j2["exit_code"] == 0);
  CHECK(j2["report"]["completion"] == 1.0);
  const auto c3 = cli("run case3 --seed 0");
  CHECK(c3.code == 0);
  CHECK(contains(c3.out, "193.75 THz"));
}

TEST_CASE("structured output is reproducible") {
  const auto a = json::parse(cli("run case3 --seed 4 --format structured").out);
  const auto b = json::parse(cli("run case3 --seed 4 --format structured").out);
  auto strip = [](json j) {
    j["report"].erase("wall_time_s");
    j["report"].erase("within_time_budget");
    return j.dump();
  };
  CHECK(strip(a) == strip(b));
  CHECK(a["report"]["within_time_budget"] == true);
}

TEST_CASE("report files") {
  const auto path = scratch("case1-report.json");
  fs::remove(path);
  CHECK(cli("run case1 --seed 1 --report " + path.string()).code == 0);
  std::ifstream f(path);
  REQUIRE(f);
  const auto j = json::parse(f);
  CHECK(j["report"]["sections"].size() == 3);
  CHECK(fs::exists(path.string() + ".txt"));

  // missing parent directories get created
  const auto nested = scratch("nested") / "deeper" / "r.json";
  fs::remove_all(scratch("nested"));
  CHECK(cli("run case2 --seed 1 --report " + nested.string()).code == 0);
  CHECK(fs::exists(nested));
}

TEST_CASE("configuration errors exit 2") {
  CHECK(cli("run case9").code == kExitConfigError);
  CHECK(cli("run case1 --planner oracle").code == kExitConfigError);
  CHECK(cli("run case1 --bogus").code == kExitConfigError);
  CHECK(cli("").code == kExitConfigError);
  CHECK(cli("run case1 --noise-sigma -1").code == kExitConfigError);
  CHECK(cli("run case1 --topology /nonexistent.json").code == kExitConfigError);

  const auto bad = scratch("bad-scenario.json");
  write(bad, R"({"id": "x", "topology": "default_topology.json", "task_target": "please order a pizza", "services": []})");
  CHECK(cli("run " + bad.string()).code == kExitConfigError);
}

TEST_CASE("generative planner without a reachable endpoint falls back") {
  const auto r = cli("run case1 --planner generative --planner-endpoint http://127.0.0.1:9/plan");
  CHECK(r.code == 0);
}

TEST_CASE("qot") {
  const auto table = cli("qot");
  CHECK(table.code == 0);
  int rows = 0;
  std::istringstream is(table.out);
  for (std::string line; std::getline(is, line);) rows += line.rfind("c1-", 0) == 0;
  CHECK(rows == 10);
  CHECK(contains(table.out, "gsnr_db"));

  const auto empty = scratch("empty-services.json");
  write(empty, R"({"services": []})");
  const auto e = cli("qot --services " + empty.string());
  CHECK(e.code == 0);

  const auto broken = scratch("broken-services.json");
  write(broken, "{\"services\": [");
  CHECK(cli("qot --services " + broken.string()).code == kExitConfigError);
}

TEST_CASE("rsa plan") {
  const std::string occ = data_path("case3_services.json");
  const auto r = cli("rsa plan --occupancy " + occ + " --src 5 --dst 1 --rate 800");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "center 193.75 THz"));

  const auto e = cli("rsa plan --src 5 --dst 1 --rate 800");
  CHECK(e.code == 0);
  CHECK(contains(e.out, "center 191.05 THz"));

  json full{{"services", json::array()}};
  for (int k = 0; k < 60; ++k) {
    full["services"].push_back({{"id", "f" + std::to_string(k)},
                                {"path", {5, 6}},
                                {"center_thz", channel_center(k)},
                                {"rate_gbps", 400}});
  }
  const auto path = scratch("full-56.json");
  write(path, full.dump());
  CHECK(cli("rsa plan --occupancy " + path.string() + " --src 5 --dst 6 --k 1").code ==
        kExitScenarioFailure);
  CHECK(cli("rsa plan --src 5 --dst 5").code == kExitConfigError);
  CHECK(cli("rsa plan --src 5 --dst 1 --rate 600").code == kExitConfigError);
}

TEST_CASE("pool dump") {
  const auto r = cli("pool dump case1 --seed 2");
  CHECK(r.code == 0);
  std::istringstream is(r.out);
  int lines = 0;
  for (std::string line; std::getline(is, line);) {
    CHECK(json::accept(line));
    ++lines;
  }
  CHECK(lines > 10);
}

TEST_CASE("scenario loading") {
  const auto spec = load_scenario("case2", ZTNET_DATA_DIR);
  CHECK(spec.services.size() == 8);
  CHECK(spec.topology == default_topology());
  CHECK_THROWS_AS(load_scenario("nope", ZTNET_DATA_DIR), ConfigError);

  const auto clash = scratch("clash-scenario.json");
  json j = json::parse(read_text_file(data_path("scenarios/case1.json")));
  j["topology"] = data_path("default_topology.json");
  j["services"][1]["center_thz"] = j["services"][0]["center_thz"];
  j["services"][1]["path"] = j["services"][0]["path"];
  write(clash, j.dump());
  CHECK_THROWS_AS(load_scenario(clash.string(), ZTNET_DATA_DIR), ConfigError);
}
