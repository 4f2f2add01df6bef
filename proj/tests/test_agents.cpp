#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "support.hpp"
#include "ztnet/agents.hpp"

using namespace ztnet;
using namespace ztnet::testing;
using nlohmann::json;
using R = AgentRole;

namespace {

// Minimal planner endpoint that answers every POST with a fixed body.
class MockPlanner {
 public:
  explicit MockPlanner(std::string body, int status = 200) {
    server_.Post("/plan", [this, body, status](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_request_ = req.body;
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockPlanner() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/plan"; }
  int hits() const { return hits_; }
  std::string last_request() const { return last_request_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::string last_request_;
};

const std::string kCase1 =
    "to ensure the accuracy of the optical network modeling and provide the QoT estimation "
    "results of the current 10 signals";
const std::string kCase2 =
    "to analyze whether the margin is sufficient for dropping signals on Path A and Path C and "
    "retaining signals on Path B, and if the conditions are met, to perform signal dropping";
const std::string kCase3 =
    "to help analyze the feasibility for upgrading the system, find an appropriate channel to add "
    "an 800Gb/s signal";

std::vector<AgentRole> divisions_of(const WorkflowPlan& p) {
  std::vector<AgentRole> out;
  for (const auto& s : p.steps) out.push_back(s.division);
  return out;
}

}  // namespace

TEST_CASE("hierarchy") {
  for (auto d : kDivisions) {
    int n = 0;
    for (auto r : kAllRoles) n += division_of(r) == d;
    CHECK(n >= 3);
  }
  for (auto r : kAllRoles) {
    CHECK(role_from_name(role_name(r)) == r);
    if (is_expert(r)) CHECK(division_of(r).has_value());
  }
  CHECK(division_of(R::DataCollector) == R::OpticalLayerAgent);
  CHECK(division_of(R::SecuritySupporter) == R::SupportAgent);
  CHECK_FALSE(division_of(R::NetworkDirector).has_value());
}

TEST_CASE("classify") {
  CHECK(classify(kCase1).template_id == TemplateId::PlanQot);
  CHECK(classify(kCase1).params["channel_count"] == 10);

  const auto c2 = classify(kCase2);
  CHECK(c2.template_id == TemplateId::OpReconfig);
  CHECK(c2.params["drop_groups"] == json::array({"A", "C"}));
  CHECK(c2.params["keep_groups"] == json::array({"B"}));

  const auto c3 = classify(kCase3);
  CHECK(c3.template_id == TemplateId::Upgrade);
  CHECK(c3.params["rate_gbps"] == 800);

  CHECK_THROWS_AS(classify("please order a pizza"), UnrecognizedIntent);
  CHECK_THROWS_AS(classify("   "), UnrecognizedIntent);
  CHECK(classify(kCase2).params == classify(kCase2).params);
}

TEST_CASE("templates") {
  DeterministicPlanner rules;
  const auto p1 = rules.plan("t", kCase1, json::object()).plan;
  CHECK(divisions_of(p1) ==
        std::vector<AgentRole>{R::OpticalLayerAgent, R::DtAgent, R::DtAgent, R::ControlAgent});

  const auto p2 = rules.plan("t", kCase2, json::object()).plan;
  REQUIRE(p2.steps.size() == 8);
  CHECK(p2.steps.back().name == "analyze_and_report");

  const auto p3 = rules.plan("t", kCase3, json::object()).plan;
  REQUIRE(p3.steps.size() == 8);
  CHECK(p3.steps[1].name == "upgrade_strategy");
  CHECK(p3.steps[1].division == R::SupportAgent);
  CHECK(p3.steps[1].expert_hint == R::FullLifecycleManager);

  for (const auto& p : {p1, p2, p3}) {
    CHECK_NOTHROW(validate_plan(p));
    const auto back = json(p).get<WorkflowPlan>();
    CHECK(back == p);
  }
}

TEST_CASE("plan validation") {
  auto p = instantiate(TemplateId::PlanQot, "t", json::object());
  auto bad = p;
  bad.steps.clear();
  CHECK_THROWS_AS(validate_plan(bad), ValidationError);
  bad = p;
  bad.steps[0].depends_on = {3};
  CHECK_THROWS_AS(validate_plan(bad), ValidationError);
  bad = p;
  bad.steps[1].division = R::DataCollector;
  CHECK_THROWS_AS(validate_plan(bad), ValidationError);
  bad = p;
  bad.steps[1].expert_hint = R::DataCollector;
  CHECK_THROWS_AS(validate_plan(bad), ValidationError);
  bad = p;
  bad.steps[2].name = "make_coffee";
  CHECK_THROWS_AS(validate_plan(bad), ValidationError);
  bad = p;
  bad.steps[2].step_id = 1;
  CHECK_THROWS_AS(validate_plan(bad), ValidationError);
}

TEST_CASE("dispatch and review") {
  const auto spec = load_scenario("case1", ZTNET_DATA_DIR);
  auto st = init_field(spec.topology, 0, 0.1);
  for (const auto& s : spec.services) apply_command(st, make_add_command(s));
  FieldNetwork field(st);
  TwinModel twin(spec.topology);
  ToolEnvironment env;
  env.field = &field;
  env.twin = &twin;
  env.telemetry_batch = 2;

  TaskMessage collect;
  collect.task_id = "t";
  collect.step_id = 1;
  collect.action = "collect";
  collect.expected_output_kind = ContentKind::TelemetrySnapshot;
  const auto r = dispatch(env, R::OpticalLayerAgent, R::DataCollector, collect);
  CHECK(r.status == TaskStatus::Ok);
  CHECK(r.output.kind == ContentKind::TelemetrySnapshot);
  CHECK(review(R::OpticalLayerAgent, r, collect).accepted);

  CHECK_THROWS_WITH_AS(dispatch(env, R::DtAgent, R::DataCollector, collect),
                       doctest::Contains("expert not in division"), DispatchError);

  // estimate, then drop two channels from the report
  TaskMessage est;
  est.action = "estimate";
  est.expected_output_kind = ContentKind::QotReport;
  est.inputs = {r.output};
  auto q = dispatch(env, R::DtAgent, R::ValidationSpecialist, est);
  REQUIRE(q.status == TaskStatus::Ok);
  CHECK(review(R::DtAgent, q, est).accepted);
  auto& chans = q.output.body["report"]["channels"];
  chans.erase(chans.begin(), chans.begin() + 2);
  const auto rej = review(R::DtAgent, q, est);
  CHECK_FALSE(rej.accepted);
  CHECK(rej.reason == "incomplete channels");

  // wrong kind
  auto wrong = q;
  wrong.output.kind = ContentKind::MarginReport;
  CHECK_FALSE(review(R::DtAgent, wrong, est).accepted);

  // rehearse an invalid command: error result carries the reason
  TaskMessage reh;
  reh.action = "rehearse";
  reh.expected_output_kind = ContentKind::RehearsalResult;
  Content clash_strategy{ContentKind::AnalysisReport,
                         json{{"subject", "upgrade_strategy"}, {"service", spec.services[0]}}};
  clash_strategy.body["service"]["id"] = "clash";
  reh.inputs = {r.output, clash_strategy};
  const auto bad = dispatch(env, R::DtAgent, R::ValidationSpecialist, reh);
  CHECK(bad.status == TaskStatus::Error);
  CHECK(bad.reason.find("slice collision") != std::string::npos);
  const auto rv = review(R::DtAgent, bad, reh);
  CHECK_FALSE(rv.accepted);
  CHECK(rv.reason == bad.reason);

  // missing inputs are tool errors, not exceptions
  TaskMessage lonely;
  lonely.action = "calibrate";
  lonely.expected_output_kind = ContentKind::CalibrationReport;
  const auto miss = dispatch(env, R::DtAgent, R::ModelingEngineer, lonely);
  CHECK(miss.status == TaskStatus::Error);
  CHECK(miss.reason.find("missing input") != std::string::npos);
}

TEST_CASE("recipes") {
  for (const auto& a : known_actions()) {
    for (const auto& item : recipe_for(a)) CHECK(is_expert(item.expert));
  }
  CHECK_THROWS_AS(recipe_for("nope"), ValidationError);
}

TEST_CASE("generative planner") {
  SUBCASE("endpoint unset") {
    const auto out = GenerativePlanner("").plan("t", kCase1, json::object());
    CHECK_FALSE(out.fell_back);
    CHECK(out.plan == DeterministicPlanner().plan("t", kCase1, json::object()).plan);
  }
  SUBCASE("valid plan passes through") {
    WorkflowPlan custom = instantiate(TemplateId::PlanQot, "remote", json::object());
    custom.steps[0].goal = "remote goal";
    MockPlanner mock(json(custom).dump());
    const auto out = GenerativePlanner(mock.endpoint()).plan("t", kCase1, json::object());
    CHECK(mock.hits() == 1);
    CHECK_FALSE(out.fell_back);
    REQUIRE(out.plan.steps.size() == 4);
    CHECK(out.plan.steps[0].goal == "remote goal");
    CHECK(out.plan.task_id == "t");
    const auto req = json::parse(mock.last_request());
    CHECK(req["task_target"] == kCase1);
    CHECK(req["template_catalog"].size() == 3);
  }
  SUBCASE("malformed payload falls back") {
    MockPlanner mock("{\"steps\": 12");
    const auto out = GenerativePlanner(mock.endpoint()).plan("t", kCase2, json::object());
    CHECK(out.fell_back);
    CHECK_FALSE(out.fallback_reason.empty());
    CHECK(out.plan.steps.size() == 8);
  }
  SUBCASE("invalid plan falls back") {
    auto p = json(instantiate(TemplateId::PlanQot, "x", json::object()));
    p["steps"][1]["depends_on"] = {9};
    MockPlanner mock(p.dump());
    CHECK(GenerativePlanner(mock.endpoint()).plan("t", kCase1, json::object()).fell_back);
  }
  SUBCASE("http error falls back") {
    MockPlanner mock("{}", 500);
    CHECK(GenerativePlanner(mock.endpoint()).plan("t", kCase3, json::object()).fell_back);
  }
}
