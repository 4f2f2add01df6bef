#pragma once

// The director: runs a WorkflowPlan step by step through the divisions and
// the Shared Pool, gates apply on the security verdict, and consolidates the
// pool into a FinalReport whose every number is cited.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/agents.hpp"
#include "ztnet/pool.hpp"

namespace ztnet {

inline constexpr double kTimeBudgetSeconds = 20.0;

enum class StepStatus { Pending, Completed, Failed };

std::string_view step_status_name(StepStatus s);

struct DispatchRecord {
  AgentRole expert = AgentRole::DataCollector;
  std::string tool;
  int attempt = 1;
  TaskStatus status = TaskStatus::Ok;
  std::string reason;
  bool accepted = false;
  std::string review_reason;
};

struct StepTrace {
  int step_id = 0;
  std::string name;
  AgentRole division = AgentRole::OpticalLayerAgent;
  StepStatus status = StepStatus::Pending;
  bool aborted = false;  // a dependency failed; nothing was posted
  bool gated = false;    // apply refused by the director's gate
  std::string reason;
  EntryId assignment_entry = 0;
  std::vector<EntryId> input_entries;   // forwarded copies addressed to the division
  std::vector<EntryId> output_entries;  // results addressed to the director
  std::vector<DispatchRecord> dispatches;
  double duration_s = 0.0;
};

struct ExecutionTrace {
  std::string task_id;
  TemplateId template_id = TemplateId::PlanQot;
  std::string planner = "deterministic";
  bool planner_fallback = false;
  std::string fallback_reason;
  EntryId plan_entry = 0;
  std::vector<StepTrace> steps;
  double wall_time_s = 0.0;

  const StepTrace* find(const std::string& name) const;
  int completed() const;
};

struct Environment {
  SharedPool* pool = nullptr;
  ToolEnvironment tools;
  // Test hook: sees every accepted output before it is put in the pool.
  std::function<void(const WorkflowStep&, Content&)> tamper;
};

// Plans via the backend. UnrecognizedIntent propagates.
PlanOutcome generate_workflow(const std::string& task_id, const std::string& task_target,
                              const nlohmann::json& context, PlannerBackend& planner);

// Runs every step in plan order. Failures are captured in the trace.
ExecutionTrace execute(const WorkflowPlan& plan, Environment& env);

// True when every apply_change that ran consumed an InstructionSet whose
// digest equals that of an approved verdict from an earlier security_check.
bool gate_before_apply_holds(const ExecutionTrace& trace, const PoolState& pool);

// ---------------------------------------------------------------------------
// Reports

struct Citation {
  EntryId entry_id = 0;
  std::string pointer;  // JSON pointer into the entry's content body
  int precision = 2;

  bool operator==(const Citation&) const = default;
};

struct Claim {
  std::string text;
  std::vector<Citation> citations;

  bool operator==(const Claim&) const = default;
};

struct ReportSection {
  std::string title;
  std::vector<Claim> claims;

  bool operator==(const ReportSection&) const = default;
};

struct FinalReport {
  std::string task_id;
  TemplateId template_id = TemplateId::PlanQot;
  std::vector<ReportSection> sections;  // performance evaluation, error analysis, suggestions
  std::vector<EntryId> cited_entries;
  double wall_time_s = 0.0;
  double completion = 0.0;
  int steps_completed = 0;
  int steps_total = 0;
  std::string planner;
  bool planner_fallback = false;

  bool within_time_budget() const { return wall_time_s < kTimeBudgetSeconds; }
};

class CitationError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

// Fixed-point rendering shared by report construction and checking.
std::string format_number(double v, int precision);

// Builds the report from pool entries named in the trace. Throws
// CitationError when a referenced entry or field is missing from `pool`.
FinalReport summarize(const ExecutionTrace& trace, const PoolState& pool);

// Mechanical factuality check: every purely numeric token in a claim equals
// one of its citations rendered from the pool. Returns the violations.
std::vector<std::string> verify_report(const FinalReport& report, const PoolState& pool);

// Splits on whitespace and punctuation other than '.' and '-'.
std::vector<std::string> report_tokens(const std::string& text);
bool is_numeric_token(const std::string& token);

nlohmann::json report_to_json(const FinalReport& r, bool include_wall_time = true);
std::string render_text(const FinalReport& r);
nlohmann::json trace_to_json(const ExecutionTrace& t);

}  // namespace ztnet
