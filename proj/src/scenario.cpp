#include "ztnet/scenario.hpp"

#include <filesystem>

#include "ztnet/agents.hpp"
#include "ztnet/twin.hpp"

namespace ztnet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kCalibratedErrorBoundDb = 0.25;
constexpr double kPredictionErrorBoundDb = 0.40;
constexpr double kDegradationBoundDb = 0.5;
constexpr double kExactModelDb = 1e-6;

std::string resolve_path(const std::string& ref, const std::string& base) {
  const fs::path p(ref);
  if (p.is_absolute() || base.empty()) return ref;
  return (fs::path(base) / p).string();
}

void validate_roster(const ScenarioSpec& spec) {
  for (const auto& s : spec.services) {
    try {
      validate_service(spec.topology, s);
    } catch (const ValidationError& e) {
      throw ConfigError("scenario " + spec.id + ": " + e.what());
    }
  }
  try {
    FieldState probe;
    probe.true_topology = spec.topology;
    for (const auto& s : spec.services) apply_command(probe, make_add_command(s));
  } catch (const ValidationError& e) {
    throw ConfigError("scenario " + spec.id + ": " + e.what());
  }
}

}  // namespace

std::string default_data_dir() {
  if (const char* env = std::getenv("ZTNET_DATA_DIR")) return env;
  return ZTNET_DATA_DIR;
}

ScenarioSpec load_scenario(const std::string& name, const std::string& data_dir) {
  std::string path = name;
  if (!fs::exists(path)) path = (fs::path(data_dir) / "scenarios" / (name + ".json")).string();
  if (!fs::exists(path)) throw ConfigError("unknown scenario '" + name + "'");

  ScenarioSpec spec;
  try {
    const json j = json::parse(read_text_file(path));
    j.at("id").get_to(spec.id);
    j.at("topology").get_to(spec.topology_ref);
    spec.noise_sigma_db = j.value("noise_sigma_db", 0.1);
    j.at("task_target").get_to(spec.task_target);
    spec.services = j.at("services").get<std::vector<Service>>();
    spec.context = j.value("context", json::object());
  } catch (const json::exception& e) {
    throw ConfigError("scenario " + path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError("scenario " + path + ": " + e.what());
  }
  spec.topology = load_topology_file(resolve_path(spec.topology_ref, data_dir));
  validate_roster(spec);
  return spec;
}

void override_topology(ScenarioSpec& spec, const std::string& topology_path) {
  spec.topology_ref = topology_path;
  spec.topology = load_topology_file(topology_path);
  validate_roster(spec);
}

const ScenarioCheck* ScenarioOutcome::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const json* ScenarioOutcome::analysis() const {
  const auto* s = trace.find("analyze_and_report");
  if (!s || s->output_entries.empty()) return nullptr;
  for (const auto& e : pool_state.entries) {
    if (e.entry_id == s->output_entries.back()) return &e.content.body;
  }
  return nullptr;
}

ScenarioOutcome run_scenario(const ScenarioSpec& spec, const RunOptions& options) {
  std::unique_ptr<PlannerBackend> planner;
  if (options.planner == "deterministic") {
    planner = std::make_unique<DeterministicPlanner>();
  } else if (options.planner == "generative") {
    planner = std::make_unique<GenerativePlanner>(options.planner_endpoint);
  } else {
    throw ConfigError("unknown planner '" + options.planner + "'");
  }

  ScenarioOutcome out;
  out.spec = spec;
  const double sigma = options.noise_sigma_db.value_or(spec.noise_sigma_db);
  if (sigma < 0.0) throw ConfigError("noise sigma must be >= 0");

  FieldState state = init_field(spec.topology, options.seed, sigma, options.perturb);
  for (const auto& s : spec.services) apply_command(state, make_add_command(s));
  out.field_before = state;
  FieldNetwork field(std::move(state));
  TwinModel twin(spec.topology);
  out.pool = std::make_unique<SharedPool>();

  const std::string task_id = spec.id + "-seed" + std::to_string(options.seed);
  const auto planned = generate_workflow(task_id, spec.task_target, spec.context, *planner);
  out.plan = planned.plan;

  Environment env;
  env.pool = out.pool.get();
  env.tools.field = &field;
  env.tools.twin = &twin;
  env.tools.telemetry_batch = options.telemetry_batch;
  env.tamper = options.tamper;

  out.trace = execute(out.plan, env);
  out.trace.planner = planner->name();
  out.trace.planner_fallback = planned.fell_back;
  out.trace.fallback_reason = planned.fallback_reason;
  out.field_after = field.snapshot();

  out.pool_state = out.pool->state();
  const auto& pool_state = out.pool_state;
  out.report = summarize(out.trace, pool_state);

  auto add = [&](std::string name, bool pass, std::string detail) {
    out.checks.push_back(ScenarioCheck{std::move(name), pass, std::move(detail)});
  };
  add("completion", out.report.completion == 1.0,
      std::to_string(out.report.steps_completed) + "/" + std::to_string(out.report.steps_total) +
          " steps completed");
  const auto problems = verify_report(out.report, pool_state);
  add("report_factuality", problems.empty(), problems.empty() ? "" : problems.front());
  add("gate_before_apply", gate_before_apply_holds(out.trace, pool_state), "");

  const json* a = out.analysis();
  auto number = [&](const char* key) -> std::optional<double> {
    if (!a || !a->contains(key) || !a->at(key).is_number()) return std::nullopt;
    return a->at(key).get<double>();
  };
  auto bound = [&](const char* name, const char* key, double limit) {
    const auto v = number(key);
    add(name, v && *v <= limit,
        v ? format_number(*v, 3) + " dB (limit " + format_number(limit, 2) + ")" : "not reported");
  };

  switch (out.plan.template_id) {
    case TemplateId::PlanQot: {
      bound("calibrated_error", "calibrated_max_error_db", kCalibratedErrorBoundDb);
      const auto cal = number("calibrated_max_error_db");
      const auto raw = number("uncalibrated_max_error_db");
      // An exact nominal model leaves nothing to improve.
      const bool exact = cal && raw && *raw <= kExactModelDb && *cal <= kExactModelDb;
      add("calibration_improves", cal && raw && (*raw > *cal || exact),
          raw ? "uncalibrated " + format_number(*raw, 3) + " dB" : "not reported");
      break;
    }
    case TemplateId::OpReconfig:
      bound("prediction_error", "prediction_error_max_db", kPredictionErrorBoundDb);
      break;
    case TemplateId::Upgrade: {
      const bool active = a && a->value("new_service_active", false);
      add("new_service_active", active,
          a && a->contains("new_service_id") ? a->at("new_service_id").get<std::string>() : "");
      bound("worst_degradation", "worst_degradation_db", kDegradationBoundDb);
      const auto m = number("new_margin_db");
      add("new_service_margin", m && *m >= env.tools.min_margin_db,
          m ? format_number(*m, 3) + " dB" : "not reported");
      break;
    }
  }

  for (const auto& c : out.checks) {
    if (!c.pass) out.exit_code = kExitScenarioFailure;
  }
  return out;
}

json checks_to_json(const std::vector<ScenarioCheck>& checks) {
  json out = json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  return out;
}

}  // namespace ztnet
