#pragma once

// Division <-> expert message contract, the expert tool bindings, intent
// classification and the planner backends that turn a task target into a
// WorkflowPlan.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/common.hpp"
#include "ztnet/field.hpp"
#include "ztnet/pool.hpp"
#include "ztnet/roles.hpp"
#include "ztnet/security.hpp"
#include "ztnet/twin.hpp"

namespace ztnet {

// ---------------------------------------------------------------------------
// Workflow plans

enum class TemplateId { PlanQot, OpReconfig, Upgrade };

std::string_view template_name(TemplateId t);
TemplateId template_from_name(std::string_view s);

struct WorkflowStep {
  int step_id = 0;
  std::string name;  // action key, e.g. "dt_rehearsal"
  std::string goal;
  AgentRole division = AgentRole::OpticalLayerAgent;
  AgentRole expert_hint = AgentRole::DataCollector;
  std::vector<int> depends_on;

  bool operator==(const WorkflowStep&) const = default;
};

struct WorkflowPlan {
  std::string task_id;
  TemplateId template_id = TemplateId::PlanQot;
  std::vector<WorkflowStep> steps;
  nlohmann::json params = nlohmann::json::object();  // extracted task parameters

  bool operator==(const WorkflowPlan&) const = default;
};

// Throws ValidationError unless steps are non-empty, ids unique, every
// dependency names an earlier step, divisions are divisions, the expert hint
// belongs to its division and every step name is a known action.
void validate_plan(const WorkflowPlan& plan);

// Step names the executor knows how to run.
const std::vector<std::string>& known_actions();

// One expert call within a step: which expert, which tool binding, and the
// payload kind the division expects back.
struct RecipeItem {
  AgentRole expert;
  std::string tool;
  ContentKind output;
};

// Expert calls a division makes for a step name, in order. Throws
// ValidationError for unknown names.
const std::vector<RecipeItem>& recipe_for(const std::string& step_name);

// Template instantiation.
WorkflowPlan instantiate(TemplateId t, std::string task_id, nlohmann::json params);

class UnrecognizedIntent : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct Classification {
  TemplateId template_id = TemplateId::PlanQot;
  nlohmann::json params = nlohmann::json::object();
};

// Keyword rules; pure. Throws UnrecognizedIntent when nothing matches.
Classification classify(const std::string& task_target);

// ---------------------------------------------------------------------------
// Planner backends

struct PlanOutcome {
  WorkflowPlan plan;
  bool fell_back = false;  // generative backend failed and rules were used
  std::string fallback_reason;
};

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  virtual std::string name() const = 0;
  virtual PlanOutcome plan(const std::string& task_id, const std::string& task_target,
                           const nlohmann::json& context) = 0;
};

class DeterministicPlanner : public PlannerBackend {
 public:
  std::string name() const override { return "deterministic"; }
  PlanOutcome plan(const std::string& task_id, const std::string& task_target,
                   const nlohmann::json& context) override;
};

// POSTs {task_target, context, template_catalog} as JSON to `endpoint`
// (http://host:port/path) and expects a WorkflowPlan back. Anything else
// falls back to the deterministic plan with the flag set. An empty endpoint
// never touches the network.
class GenerativePlanner : public PlannerBackend {
 public:
  explicit GenerativePlanner(std::string endpoint, int timeout_ms = 2000)
      : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {}
  std::string name() const override { return "generative"; }
  PlanOutcome plan(const std::string& task_id, const std::string& task_target,
                   const nlohmann::json& context) override;

 private:
  std::string endpoint_;
  int timeout_ms_;
};

PlanOutcome generative_plan(const std::string& endpoint, const std::string& task_id,
                            const std::string& task_target, const nlohmann::json& context,
                            int timeout_ms = 2000);

// Request body sent to a generative endpoint.
nlohmann::json planner_request(const std::string& task_target, const nlohmann::json& context);

// ---------------------------------------------------------------------------
// Division <-> expert contract

struct TaskMessage {
  std::string task_id;
  int step_id = 0;
  std::string action;  // which tool binding to run
  std::string instruction;
  std::vector<EntryId> input_refs;
  std::vector<Content> inputs;  // resolved by the division from the pool
  ContentKind expected_output_kind = ContentKind::AnalysisReport;
  AgentRole issuer = AgentRole::OpticalLayerAgent;
  nlohmann::json params = nlohmann::json::object();
};

enum class TaskStatus { Ok, Error };

struct TaskResult {
  std::string task_id;
  int step_id = 0;
  TaskStatus status = TaskStatus::Ok;
  std::string reason;  // Error only
  Content output;
  std::string notes;
};

// What the tools act on. Experts see this, never the pool.
struct ToolEnvironment {
  FieldNetwork* field = nullptr;
  TwinModel* twin = nullptr;
  int telemetry_batch = 10;
  double min_margin_db = 1.0;
  SecurityPolicy policy;
  CalibrationOptions calibration;
};

class DispatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Runs the expert's tool binding. Throws DispatchError("expert not in
// division") for a foreign expert; tool failures come back as Error results.
TaskResult dispatch(ToolEnvironment& env, AgentRole division, AgentRole expert,
                    const TaskMessage& msg);

struct ReviewOutcome {
  bool accepted = false;
  std::string reason;
};

// Kind-specific completeness predicate; nullopt when complete.
std::optional<std::string> completeness_problem(const Content& output, const TaskMessage& msg);

ReviewOutcome review(AgentRole division, const TaskResult& result, const TaskMessage& msg);

std::string_view task_status_name(TaskStatus s);

void to_json(nlohmann::json& j, const WorkflowStep& s);
void from_json(const nlohmann::json& j, WorkflowStep& s);
void to_json(nlohmann::json& j, const WorkflowPlan& p);
void from_json(const nlohmann::json& j, WorkflowPlan& p);

}  // namespace ztnet
