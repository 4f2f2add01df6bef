#include <set>

#include "doctest.h"
#include "support.hpp"
#include "ztnet/orchestrator.hpp"
#include "ztnet/scenario.hpp"

using namespace ztnet;
using namespace ztnet::testing;
using nlohmann::json;

namespace {

ScenarioOutcome run(const std::string& name, RunOptions opt = {}) {
  return run_scenario(load_scenario(name, ZTNET_DATA_DIR), opt);
}

// Flips one character of the serialized InstructionSet's digest.
void flip_digest(const WorkflowStep& step, Content& c) {
  if (step.name != "generate_instructions") return;
  auto d = c.body.at("digest").get<std::string>();
  d[0] = d[0] == 'a' ? 'b' : 'a';
  c.body["digest"] = d;
}

}  // namespace

TEST_CASE("noise-free case 1 completes") {
  RunOptions opt;
  opt.perturb = false;
  opt.noise_sigma_db = 0.0;
  const auto out = run("case1", opt);
  CHECK(out.trace.steps.size() == 4);
  CHECK(out.trace.completed() == 4);
  CHECK(out.exit_code == kExitOk);
  for (const auto& s : out.trace.steps) {
    CHECK(s.assignment_entry > out.trace.plan_entry);
    CHECK_FALSE(s.output_entries.empty());
  }
  const auto* a = out.analysis();
  REQUIRE(a != nullptr);
  CHECK(a->at("calibrated_max_error_db").get<double>() < 1e-6);
}

TEST_CASE("pool traffic follows the protocol") {
  const auto out = run("case3");
  const auto& entries = out.pool_state.entries;
  for (std::size_t i = 1; i < entries.size(); ++i) CHECK(entries[i].entry_id > entries[i - 1].entry_id);
  for (const auto& e : entries) {
    CHECK(PermissionMatrix::has_access(e.sender));
    CHECK(PermissionMatrix::has_access(e.receiver));
    CHECK(e.digest == content_digest(e.content));
  }
  for (const auto& s : out.trace.steps) {
    const auto& asg = entries.at(s.assignment_entry - 1);
    CHECK(asg.receiver == s.division);
    CHECK(asg.status == EntryStatus::Completed);
    for (EntryId id : s.output_entries) {
      CHECK(entries.at(id - 1).sender == s.division);
      CHECK(entries.at(id - 1).receiver == AgentRole::NetworkDirector);
    }
  }
  CHECK(replay(out.pool->audit()) == out.pool_state);
}

TEST_CASE("tampered instruction set is gated") {
  RunOptions opt;
  opt.tamper = flip_digest;
  const auto out = run("case2", opt);
  const auto* sec = out.trace.find("security_check");
  const auto* apply = out.trace.find("apply_change");
  const auto* again = out.trace.find("recollect");
  REQUIRE(sec);
  REQUIRE(apply);
  REQUIRE(again);
  CHECK(sec->status == StepStatus::Completed);
  const auto verdict = out.pool_state.entries.at(sec->output_entries.at(0) - 1).content.body;
  CHECK(verdict.at("approved") == false);
  CHECK(apply->status == StepStatus::Failed);
  CHECK(apply->gated);
  CHECK(apply->dispatches.empty());
  CHECK(again->status == StepStatus::Completed);
  CHECK(gate_before_apply_holds(out.trace, out.pool_state));
  // nothing reached the field
  CHECK(out.field_after.active_services == out.field_before.active_services);
  CHECK(out.exit_code == kExitScenarioFailure);
  CHECK(out.check("completion")->pass == false);
  CHECK(out.check("report_factuality")->pass);
}

TEST_CASE("gate check catches an unapproved apply") {
  const auto out = run("case2");
  CHECK(gate_before_apply_holds(out.trace, out.pool_state));
  auto forged = out.pool_state;
  const auto* sec = out.trace.find("security_check");
  forged.entries.at(sec->output_entries.at(0) - 1).content.body["approved"] = false;
  CHECK_FALSE(gate_before_apply_holds(out.trace, forged));
}

TEST_CASE("report") {
  const auto out = run("case1");
  const auto& r = out.report;
  REQUIRE(r.sections.size() == 3);
  CHECK(r.sections[0].title == "performance evaluation");
  CHECK(r.sections[1].title == "error analysis");
  CHECK(r.sections[2].title == "suggestions");
  CHECK(verify_report(r, out.pool_state).empty());
  CHECK(r.completion == 1.0);

  // cites the calibration and the per-channel QoT
  std::set<ContentKind> kinds;
  for (EntryId id : r.cited_entries) kinds.insert(out.pool_state.entries.at(id - 1).content.kind);
  CHECK(kinds.count(ContentKind::CalibrationReport));
  CHECK(kinds.count(ContentKind::QotReport));

  // a number nobody cited
  auto bad = r;
  bad.sections[0].claims[0].text += " Also 42.5 dB.";
  CHECK_FALSE(verify_report(bad, out.pool_state).empty());

  // an entry that vanished
  auto pruned = out.pool_state;
  const EntryId victim = r.cited_entries.front();
  pruned.entries.erase(pruned.entries.begin() + static_cast<long>(victim - 1));
  CHECK_THROWS_AS(summarize(out.trace, pruned), CitationError);
  CHECK_FALSE(verify_report(r, pruned).empty());
}

TEST_CASE("empty trace") {
  ExecutionTrace t;
  const auto r = summarize(t, PoolState{});
  CHECK(r.completion == 0.0);
  for (const auto& s : r.sections) CHECK(s.claims.empty());
  CHECK(r.cited_entries.empty());
}

TEST_CASE("tokens") {
  CHECK(report_tokens("GSNR 22.13 dB, from 1 to 2.") ==
        std::vector<std::string>{"GSNR", "22.13", "dB", "from", "1", "to", "2"});
  CHECK(is_numeric_token("-0.05"));
  CHECK(is_numeric_token("216"));
  CHECK_FALSE(is_numeric_token("c1-ch01"));
  CHECK_FALSE(is_numeric_token("-"));
  CHECK_FALSE(is_numeric_token("1.2.3"));
  CHECK(format_number(193.75, 2) == "193.75");
  CHECK(format_number(0.1234, 3) == "0.123");
}

TEST_CASE("determinism") {
  for (const char* name : {"case1", "case2", "case3"}) {
    CAPTURE(name);
    RunOptions opt;
    opt.seed = 3;
    const auto a = run(name, opt);
    const auto b = run(name, opt);
    CHECK(report_to_json(a.report, false).dump() == report_to_json(b.report, false).dump());
    CHECK(a.pool_state == b.pool_state);
    CHECK(a.field_after == b.field_after);
  }
}

TEST_CASE("generate workflow") {
  DeterministicPlanner p;
  CHECK_THROWS_AS(generate_workflow("t", "please order a pizza", json::object(), p),
                  UnrecognizedIntent);
  Environment env;
  CHECK_THROWS_AS(execute(instantiate(TemplateId::PlanQot, "t", json::object()), env), ConfigError);
}

TEST_CASE("failed dependency aborts downstream steps") {
  const auto spec = load_scenario("case1", ZTNET_DATA_DIR);
  SharedPool pool;
  Environment env;
  env.pool = &pool;  // no field attached: collection fails
  TwinModel twin(spec.topology);
  env.tools.twin = &twin;
  const auto plan = instantiate(TemplateId::PlanQot, "t", json{{"template", "PLAN_QOT"}});
  const auto trace = execute(plan, env);
  REQUIRE(trace.steps.size() == 4);
  CHECK(trace.steps[0].status == StepStatus::Failed);
  CHECK(trace.steps[0].dispatches.size() == 2);  // retried once
  CHECK(trace.steps[1].aborted);
  CHECK(trace.completed() == 0);
  const auto r = summarize(trace, pool.state());
  CHECK(r.completion == 0.0);
}
