#pragma once

// The three reference cases end to end: scenario files, one-call runs with the
// checks that decide the exit code.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/field.hpp"
#include "ztnet/orchestrator.hpp"
#include "ztnet/pool.hpp"
#include "ztnet/topology.hpp"

namespace ztnet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitScenarioFailure = 1;
inline constexpr int kExitConfigError = 2;

std::string default_data_dir();

struct ScenarioSpec {
  std::string id;
  std::string topology_ref;  // relative to the data dir unless absolute
  NetworkTopology topology;
  std::vector<Service> services;
  double noise_sigma_db = 0.1;
  std::string task_target;
  nlohmann::json context = nlohmann::json::object();
};

// `name` is a case id (looked up as <data_dir>/scenarios/<name>.json) or a
// path to a scenario file. Throws ConfigError for anything unreadable or a
// roster that does not fit the topology.
ScenarioSpec load_scenario(const std::string& name, const std::string& data_dir = default_data_dir());

// Replaces the topology (and re-validates the roster against it).
void override_topology(ScenarioSpec& spec, const std::string& topology_path);

struct RunOptions {
  std::uint64_t seed = 0;
  std::optional<double> noise_sigma_db;  // scenario value when unset
  bool perturb = true;
  std::string planner = "deterministic";  // or "generative"
  std::string planner_endpoint;
  int telemetry_batch = 10;
  std::function<void(const WorkflowStep&, Content&)> tamper;
};

struct ScenarioCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScenarioOutcome {
  ScenarioSpec spec;
  WorkflowPlan plan;
  ExecutionTrace trace;
  FinalReport report;
  std::unique_ptr<SharedPool> pool;
  PoolState pool_state;  // snapshot taken after the run
  FieldState field_before;
  FieldState field_after;
  std::vector<ScenarioCheck> checks;
  int exit_code = kExitOk;

  const ScenarioCheck* check(const std::string& name) const;
  // Body of the final analyze_and_report output, or null.
  const nlohmann::json* analysis() const;
};

// Throws ConfigError for planner configuration problems; everything that
// goes wrong while running lands in the trace and the checks.
ScenarioOutcome run_scenario(const ScenarioSpec& spec, const RunOptions& options = {});

nlohmann::json checks_to_json(const std::vector<ScenarioCheck>& checks);

}  // namespace ztnet
