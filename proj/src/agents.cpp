#include "ztnet/agents.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>

#include "httplib.h"
#include "ztnet/rsa.hpp"

namespace ztnet {

using nlohmann::json;

std::string_view template_name(TemplateId t) {
  switch (t) {
    case TemplateId::PlanQot: return "PLAN_QOT";
    case TemplateId::OpReconfig: return "OP_RECONFIG";
    case TemplateId::Upgrade: return "UPGRADE";
  }
  return "?";
}

TemplateId template_from_name(std::string_view s) {
  for (auto t : {TemplateId::PlanQot, TemplateId::OpReconfig, TemplateId::Upgrade}) {
    if (template_name(t) == s) return t;
  }
  throw ValidationError("unknown template '" + std::string(s) + "'");
}

std::string_view task_status_name(TaskStatus s) { return s == TaskStatus::Ok ? "Ok" : "Error"; }

const std::vector<std::string>& known_actions() {
  static const std::vector<std::string> actions = {
      "collect_and_package", "collect",         "recollect",       "dt_modeling",
      "qot_estimation",      "dt_rehearsal",    "resource_analysis", "upgrade_strategy",
      "generate_instructions", "security_check", "apply_change",    "analyze_and_report"};
  return actions;
}

const std::vector<RecipeItem>& recipe_for(const std::string& step_name) {
  using K = ContentKind;
  using R = AgentRole;
  static const std::map<std::string, std::vector<RecipeItem>> recipes = {
      {"collect_and_package", {{R::DataCollector, "collect", K::TelemetrySnapshot}}},
      {"collect", {{R::DataCollector, "collect", K::TelemetrySnapshot}}},
      {"recollect", {{R::DataCollector, "collect", K::TelemetrySnapshot}}},
      {"dt_modeling", {{R::ModelingEngineer, "calibrate", K::CalibrationReport}}},
      {"qot_estimation", {{R::ValidationSpecialist, "estimate", K::QotReport}}},
      {"dt_rehearsal",
       {{R::ModelingEngineer, "calibrate", K::CalibrationReport},
        {R::ValidationSpecialist, "rehearse", K::RehearsalResult}}},
      {"resource_analysis", {{R::ResourceCoordinator, "margin", K::MarginReport}}},
      {"upgrade_strategy", {{R::FullLifecycleManager, "plan_service", K::AnalysisReport}}},
      {"generate_instructions", {{R::ConfigurationDeployer, "generate", K::InstructionSet}}},
      {"security_check", {{R::SecuritySupporter, "verify", K::SecurityVerdict}}},
      {"apply_change", {{R::ConfigurationDeployer, "apply", K::AnalysisReport}}},
      {"analyze_and_report", {{R::StatisticalAnalyst, "analyze", K::AnalysisReport}}},
  };
  const auto it = recipes.find(step_name);
  if (it == recipes.end()) throw ValidationError("unknown action '" + step_name + "'");
  return it->second;
}

void validate_plan(const WorkflowPlan& plan) {
  if (plan.steps.empty()) throw ValidationError("plan has no steps");
  std::set<int> seen;
  const auto& actions = known_actions();
  for (const auto& s : plan.steps) {
    const std::string where = "step " + std::to_string(s.step_id);
    if (seen.count(s.step_id)) throw ValidationError(where + ": duplicate step id");
    for (int d : s.depends_on) {
      if (!seen.count(d)) {
        throw ValidationError(where + ": dependency " + std::to_string(d) +
                              " is not an earlier step");
      }
    }
    if (!is_division(s.division)) throw ValidationError(where + ": division is not a division");
    if (division_of(s.expert_hint) != s.division) {
      throw ValidationError(where + ": expert " + std::string(role_name(s.expert_hint)) +
                            " not in division");
    }
    if (std::find(actions.begin(), actions.end(), s.name) == actions.end()) {
      throw ValidationError(where + ": unknown action '" + s.name + "'");
    }
    for (const auto& item : recipe_for(s.name)) {
      if (division_of(item.expert) != s.division) {
        throw ValidationError(where + ": " + s.name + " needs " +
                              std::string(role_name(item.expert)) + ", not in division");
      }
    }
    seen.insert(s.step_id);
  }
}

namespace {

using R = AgentRole;

WorkflowStep step(int id, std::string name, std::string goal, R division, R expert,
                  std::vector<int> deps) {
  return WorkflowStep{id, std::move(name), std::move(goal), division, expert, std::move(deps)};
}

}  // namespace

WorkflowPlan instantiate(TemplateId t, std::string task_id, json params) {
  WorkflowPlan p;
  p.task_id = std::move(task_id);
  p.template_id = t;
  p.params = std::move(params);
  p.params["template"] = std::string(template_name(t));
  const R optical = R::OpticalLayerAgent, dt = R::DtAgent, control = R::ControlAgent,
          support = R::SupportAgent;
  switch (t) {
    case TemplateId::PlanQot:
      p.steps = {
          step(1, "collect_and_package", "collect current channel performance and package it",
               optical, R::DataCollector, {}),
          step(2, "dt_modeling", "calibrate the DT model against the collected telemetry", dt,
               R::ModelingEngineer, {1}),
          step(3, "qot_estimation", "estimate QoT of the current channels on the DT", dt,
               R::ValidationSpecialist, {1, 2}),
          step(4, "analyze_and_report", "evaluate accuracy and performance and report", control,
               R::StatisticalAnalyst, {1, 2, 3}),
      };
      break;
    case TemplateId::OpReconfig:
      p.steps = {
          step(1, "collect", "collect current performance on the affected paths", optical,
               R::DataCollector, {}),
          step(2, "dt_rehearsal", "calibrate the DT and rehearse the change", dt,
               R::ModelingEngineer, {1}),
          step(3, "resource_analysis", "analyze margin and spectrum after the change", control,
               R::ResourceCoordinator, {2}),
          step(4, "generate_instructions", "generate configuration instructions", optical,
               R::ConfigurationDeployer, {2, 3}),
          step(5, "security_check", "verify authenticity, integrity and policy", support,
               R::SecuritySupporter, {4}),
          step(6, "apply_change", "apply the approved instructions", optical,
               R::ConfigurationDeployer, {4, 5}),
          step(7, "recollect", "collect updated performance", optical, R::DataCollector, {1}),
          step(8, "analyze_and_report", "compare prediction with measurement and report", control,
               R::StatisticalAnalyst, {1, 2, 7}),
      };
      break;
    case TemplateId::Upgrade:
      p.steps = {
          step(1, "collect", "collect current performance", optical, R::DataCollector, {}),
          step(2, "upgrade_strategy", "find a route and channel for the new signal", support,
               R::FullLifecycleManager, {1}),
          step(3, "dt_rehearsal", "calibrate the DT and rehearse the upgraded state", dt,
               R::ModelingEngineer, {1, 2}),
          step(4, "generate_instructions", "generate configuration instructions", optical,
               R::ConfigurationDeployer, {2, 3}),
          step(5, "security_check", "verify authenticity, integrity and policy", support,
               R::SecuritySupporter, {4}),
          step(6, "apply_change", "apply the approved instructions", optical,
               R::ConfigurationDeployer, {4, 5}),
          step(7, "recollect", "collect updated performance", optical, R::DataCollector, {1}),
          step(8, "analyze_and_report", "evaluate the upgrade and report", control,
               R::StatisticalAnalyst, {1, 2, 3, 7}),
      };
      break;
  }
  return p;
}

// ---------------------------------------------------------------------------
// classify

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool has(const std::string& text, const char* word) { return text.find(word) != std::string::npos; }

std::vector<std::string> path_labels(const std::string& text) {
  static const std::regex re(R"(\bpath\s+([A-Za-z])\b)", std::regex::icase);
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator();
       ++it) {
    std::string label = (*it)[1].str();
    label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    if (std::find(out.begin(), out.end(), label) == out.end()) out.push_back(label);
  }
  return out;
}

}  // namespace

Classification classify(const std::string& task_target) {
  const std::string t = lower(task_target);
  if (t.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw UnrecognizedIntent("empty task target");
  }
  Classification c;

  if (has(t, "drop")) {
    c.template_id = TemplateId::OpReconfig;
    // Paths named before a retain/keep clause are dropped, after it kept.
    std::size_t split = std::string::npos;
    for (const char* w : {"retain", "keep"}) split = std::min(split, t.find(w));
    const std::string head = split == std::string::npos ? task_target : task_target.substr(0, split);
    const std::string tail = split == std::string::npos ? "" : task_target.substr(split);
    c.params["drop_groups"] = path_labels(head);
    c.params["keep_groups"] = path_labels(tail);
    if (c.params["drop_groups"].empty()) throw UnrecognizedIntent("drop target names no path");
    return c;
  }

  if (has(t, "upgrad") || (has(t, "add") && (has(t, "signal") || has(t, "channel")))) {
    c.template_id = TemplateId::Upgrade;
    static const std::regex rate(R"((\d+)\s*gb/?s)", std::regex::icase);
    std::smatch m;
    c.params["rate_gbps"] = std::regex_search(task_target, m, rate) ? std::stoi(m[1].str()) : 400;
    static const std::regex freq(R"((\d{3}(?:\.\d+)?)\s*thz)", std::regex::icase);
    if (std::regex_search(task_target, m, freq)) c.params["center_thz"] = std::stod(m[1].str());
    return c;
  }

  if (has(t, "qot") || has(t, "modeling") || has(t, "modelling") || has(t, "quality of transmission")) {
    c.template_id = TemplateId::PlanQot;
    static const std::regex count(R"((\d+)\s+(?:signals|channels))", std::regex::icase);
    std::smatch m;
    if (std::regex_search(task_target, m, count)) c.params["channel_count"] = std::stoi(m[1].str());
    return c;
  }

  throw UnrecognizedIntent("no workflow template matches the task target");
}

// ---------------------------------------------------------------------------
// planners

namespace {

json merged_params(const Classification& c, const json& context) {
  json p = c.params;
  if (context.is_object()) {
    for (auto it = context.begin(); it != context.end(); ++it) p[it.key()] = it.value();
  }
  return p;
}

}  // namespace

PlanOutcome DeterministicPlanner::plan(const std::string& task_id, const std::string& task_target,
                                       const json& context) {
  const auto c = classify(task_target);
  PlanOutcome out;
  out.plan = instantiate(c.template_id, task_id, merged_params(c, context));
  validate_plan(out.plan);
  return out;
}

json planner_request(const std::string& task_target, const json& context) {
  json catalog = json::array();
  for (auto t : {TemplateId::PlanQot, TemplateId::OpReconfig, TemplateId::Upgrade}) {
    catalog.push_back(instantiate(t, "", json::object()));
  }
  return json{{"task_target", task_target},
              {"context", context.is_null() ? json::object() : context},
              {"template_catalog", catalog},
              {"actions", known_actions()}};
}

PlanOutcome generative_plan(const std::string& endpoint, const std::string& task_id,
                            const std::string& task_target, const json& context, int timeout_ms) {
  DeterministicPlanner rules;
  if (endpoint.empty()) return rules.plan(task_id, task_target, context);

  auto fallback = [&](const std::string& why) {
    auto out = rules.plan(task_id, task_target, context);
    out.fell_back = true;
    out.fallback_reason = why;
    return out;
  };

  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, url)) return fallback("malformed endpoint " + endpoint);
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client cli(base);
  cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms));
  cli.set_read_timeout(std::chrono::milliseconds(timeout_ms));
  cli.set_write_timeout(std::chrono::milliseconds(timeout_ms));
  const auto res = cli.Post(path, planner_request(task_target, context).dump(), "application/json");
  if (!res) return fallback("endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) return fallback("endpoint returned HTTP " + std::to_string(res->status));

  try {
    json body = json::parse(res->body);
    if (body.is_object() && body.contains("plan")) body = body.at("plan");
    WorkflowPlan plan = body.get<WorkflowPlan>();
    plan.task_id = task_id;
    if (plan.params.empty()) {
      try {
        plan.params = merged_params(classify(task_target), context);
      } catch (const UnrecognizedIntent&) {
        plan.params = context.is_object() ? context : json::object();
      }
    }
    plan.params["template"] = std::string(template_name(plan.template_id));
    validate_plan(plan);
    PlanOutcome out;
    out.plan = std::move(plan);
    return out;
  } catch (const std::exception& e) {
    return fallback(std::string("invalid plan from endpoint: ") + e.what());
  }
}

PlanOutcome GenerativePlanner::plan(const std::string& task_id, const std::string& task_target,
                                    const json& context) {
  return generative_plan(endpoint_, task_id, task_target, context, timeout_ms_);
}

// ---------------------------------------------------------------------------
// expert tool bindings

namespace {

class ToolFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const Content* find_input(const TaskMessage& msg, ContentKind kind,
                          const std::string& subject = {}) {
  // Latest matching input wins (e.g. recollect over collect when both exist).
  for (auto it = msg.inputs.rbegin(); it != msg.inputs.rend(); ++it) {
    if (it->kind != kind) continue;
    if (!subject.empty() && it->body.value("subject", std::string()) != subject) continue;
    return &*it;
  }
  return nullptr;
}

const Content& require_input(const TaskMessage& msg, ContentKind kind,
                             const std::string& subject = {}) {
  const auto* c = find_input(msg, kind, subject);
  if (!c) {
    throw ToolFailure("missing input " + std::string(content_kind_name(kind)) +
                      (subject.empty() ? "" : " (" + subject + ")"));
  }
  return *c;
}

// All snapshots in input order; the first is the baseline collection.
std::vector<const Content*> snapshots(const TaskMessage& msg) {
  std::vector<const Content*> out;
  for (const auto& c : msg.inputs) {
    if (c.kind == ContentKind::TelemetrySnapshot) out.push_back(&c);
  }
  return out;
}

FieldNetwork& field_of(ToolEnvironment& env) {
  if (!env.field) throw ToolFailure("no field network attached");
  return *env.field;
}

TwinModel& twin_of(ToolEnvironment& env) {
  if (!env.twin) throw ToolFailure("no digital twin attached");
  return *env.twin;
}

std::map<std::string, int> rates_of(const std::vector<Service>& services) {
  std::map<std::string, int> rates;
  for (const auto& s : services) rates[s.id] = s.rate_gbps;
  return rates;
}

json measured_gsnr(const Telemetry& t) {
  json out = json::array();
  for (const auto& c : t.channels) {
    out.push_back({{"service_id", c.service_id},
                   {"center_thz", c.center_thz},
                   {"gsnr_db", c.gsnr_db}});
  }
  return out;
}

json error_json(const PredictionError& e) {
  json per = json::array();
  for (const auto& [id, d] : e.per_channel) per.push_back({{"service_id", id}, {"abs_error_db", d}});
  return json{{"max_abs_db", e.max_abs_db}, {"per_channel", per}};
}

Content collect(ToolEnvironment& env) {
  auto& field = field_of(env);
  const int n = std::max(1, env.telemetry_batch);
  std::vector<Telemetry> batch;
  for (int i = 0; i < n; ++i) batch.push_back(field.collect_performance());
  const auto mean = average_telemetry(batch);
  const auto services = field.list_services();
  double lo = 0.0, hi = 0.0;
  if (!services.empty()) {
    lo = hi = services.front().center_thz;
    for (const auto& s : services) {
      lo = std::min(lo, s.center_thz);
      hi = std::max(hi, s.center_thz);
    }
  }
  return Content{ContentKind::TelemetrySnapshot,
                 json{{"services", services},
                      {"channel_count", services.size()},
                      {"records", n},
                      {"first_seq", batch.front().seq},
                      {"last_seq", batch.back().seq},
                      {"min_center_thz", lo},
                      {"max_center_thz", hi},
                      {"mean", mean}}};
}

Content calibrate_twin(ToolEnvironment& env, const TaskMessage& msg) {
  auto& twin = twin_of(env);
  const auto& snap = require_input(msg, ContentKind::TelemetrySnapshot);
  const auto services = snap.body.at("services").get<std::vector<Service>>();
  const std::vector<Telemetry> batch{snap.body.at("mean").get<Telemetry>()};
  const auto report = calibrate(twin, batch, services, env.calibration);
  json body = report;
  body["batch_records"] = snap.body.at("records");
  return Content{ContentKind::CalibrationReport, body};
}

Content estimate(ToolEnvironment& env, const TaskMessage& msg) {
  auto& twin = twin_of(env);
  const auto& snap = require_input(msg, ContentKind::TelemetrySnapshot);
  const auto services = snap.body.at("services").get<std::vector<Service>>();
  const auto measured = snap.body.at("mean").get<Telemetry>();
  const auto report = estimate_qot(twin, services);
  const auto margins = margin(report, rates_of(services));
  json requested = json::array();
  for (const auto& s : services) requested.push_back(s.id);
  return Content{ContentKind::QotReport,
                 json{{"report", report},
                      {"margins", margins},
                      {"measured", measured_gsnr(measured)},
                      {"prediction_error", error_json(prediction_error(report, measured))},
                      {"requested", requested}}};
}

std::vector<NmsCommand> hypothesized_commands(const TaskMessage& msg,
                                              const std::vector<Service>& services) {
  std::vector<NmsCommand> cmds;
  if (msg.params.contains("drop_groups")) {
    const auto groups = msg.params.at("drop_groups").get<std::vector<std::string>>();
    for (const auto& s : services) {
      if (std::find(groups.begin(), groups.end(), s.group) != groups.end()) {
        cmds.push_back(make_drop_command(s.id, AgentRole::ValidationSpecialist));
      }
    }
    if (cmds.empty()) throw ToolFailure("no service on the paths to drop");
  }
  if (const auto* strat = find_input(msg, ContentKind::AnalysisReport, "upgrade_strategy")) {
    cmds.push_back(make_add_command(strat->body.at("service").get<Service>(),
                                    AgentRole::ValidationSpecialist));
  }
  return cmds;
}

Content rehearse_change(ToolEnvironment& env, const TaskMessage& msg) {
  auto& twin = twin_of(env);
  const auto& snap = require_input(msg, ContentKind::TelemetrySnapshot);
  const auto services = snap.body.at("services").get<std::vector<Service>>();
  const auto cmds = hypothesized_commands(msg, services);
  RehearsalResult r;
  try {
    r = rehearse(twin, cmds, services, env.min_margin_db);
  } catch (const ValidationError& e) {
    throw ToolFailure(e.what());
  }
  const auto baseline = estimate_qot(twin, services);
  return Content{ContentKind::RehearsalResult,
                 json{{"rehearsal", r},
                      {"baseline", baseline},
                      {"baseline_margins", margin(baseline, rates_of(services))},
                      {"commands", cmds}}};
}

Content margin_analysis(ToolEnvironment& env, const TaskMessage& msg) {
  const auto& reh = require_input(msg, ContentKind::RehearsalResult);
  const auto r = reh.body.at("rehearsal").get<RehearsalResult>();
  const auto baseline = reh.body.at("baseline").get<QotReport>();
  // Survivors must not lose more than the margin slack the change leaves.
  json deltas = json::array();
  double worst_delta = 0.0;
  for (const auto& c : r.predicted.channels) {
    if (const auto* b = baseline.find(c.service_id)) {
      const double d = c.gsnr_db - b->gsnr_db;
      deltas.push_back({{"service_id", c.service_id}, {"delta_gsnr_db", d}});
      worst_delta = std::min(worst_delta, d);
    }
  }
  std::string worst_id;
  if (!r.margins.channels.empty()) {
    worst_id = std::min_element(r.margins.channels.begin(), r.margins.channels.end(),
                                [](const auto& a, const auto& b) { return a.margin_db < b.margin_db; })
                   ->service_id;
  }
  // Spectrum: the post-change roster must still be collision free.
  bool spectrum_ok = true;
  try {
    (void)OccupancyMap::from_services(twin_of(env).topology, r.services_after);
  } catch (const ValidationError&) {
    spectrum_ok = false;
  }
  return Content{ContentKind::MarginReport,
                 json{{"margins", r.margins},
                      {"min_margin_db", r.margins.min_margin_db},
                      {"required_margin_db", r.min_margin_db},
                      {"worst_channel", worst_id},
                      {"survivor_deltas", deltas},
                      {"worst_delta_gsnr_db", worst_delta},
                      {"spectrum_ok", spectrum_ok},
                      {"feasible", r.feasible && spectrum_ok}}};
}

Content upgrade_strategy(ToolEnvironment& env, const TaskMessage& msg) {
  auto& twin = twin_of(env);
  const auto& snap = require_input(msg, ContentKind::TelemetrySnapshot);
  const auto services = snap.body.at("services").get<std::vector<Service>>();
  PlanRequest req;
  req.rate_gbps = msg.params.value("rate_gbps", 400);
  req.min_margin_db = env.min_margin_db;
  const std::string group = msg.params.value("target_group", std::string());
  const auto it = std::find_if(services.begin(), services.end(),
                               [&](const Service& s) { return !group.empty() && s.group == group; });
  if (it != services.end()) {
    req.src = it->path.front();
    req.dst = it->path.back();
  } else if (msg.params.contains("src") && msg.params.contains("dst")) {
    req.src = msg.params.at("src").get<SiteId>();
    req.dst = msg.params.at("dst").get<SiteId>();
  } else {
    throw ToolFailure("no endpoints for the new signal (target group '" + group + "' not found)");
  }
  req.service_id =
      msg.params.value("new_service_id", "up-" + std::to_string(req.rate_gbps) + "g-new");

  try {
    const auto occ = OccupancyMap::from_services(twin.topology, services);
    auto plan = plan_service(twin.topology, occ, twin, services, req);
    plan.service.group = group;
    const auto* m = [&]() -> const ChannelMargin* {
      for (const auto& c : plan.rehearsal.margins.channels) {
        if (c.service_id == plan.service.id) return &c;
      }
      return nullptr;
    }();
    return Content{ContentKind::AnalysisReport,
                   json{{"subject", "upgrade_strategy"},
                        {"service", plan.service},
                        {"path", plan.path},
                        {"start_slice", plan.start_slice},
                        {"center_thz", plan.service.center_thz},
                        {"rate_gbps", plan.service.rate_gbps},
                        {"predicted_gsnr_db", m ? m->gsnr_db : 0.0},
                        {"predicted_margin_db", m ? m->margin_db : 0.0},
                        {"min_margin_db", plan.rehearsal.margins.min_margin_db},
                        {"feasible", plan.rehearsal.feasible}}};
  } catch (const ValidationError& e) {
    throw ToolFailure(e.what());
  }
}

Content generate_instructions(const TaskMessage& msg) {
  const auto& reh = require_input(msg, ContentKind::RehearsalResult);
  bool feasible = reh.body.at("rehearsal").at("feasible").get<bool>();
  if (const auto* mr = find_input(msg, ContentKind::MarginReport)) {
    feasible = mr->body.at("feasible").get<bool>();
  }
  std::vector<NmsCommand> out;
  std::vector<std::string> tags;
  if (feasible) {
    for (const auto& c : reh.body.at("commands").get<std::vector<NmsCommand>>()) {
      switch (c.kind) {
        case CommandKind::DropService:
          out.push_back(make_drop_command(c.service_id));
          tags.push_back("drop:" + c.service_id);
          break;
        case CommandKind::AddService:
          out.push_back(make_add_command(*c.service));
          tags.push_back("add:" + c.service_id);
          break;
        case CommandKind::AdjustPower:
          out.push_back(make_adjust_power_command(c.service_id, c.launch_power_dbm));
          tags.push_back("power:" + c.service_id);
          break;
      }
    }
  } else {
    tags.push_back("no_change:insufficient_margin");
  }
  return Content{ContentKind::InstructionSet,
                 json(make_instruction_set(std::move(out), AgentRole::ConfigurationDeployer,
                                           std::move(tags)))};
}

Content verify(ToolEnvironment& env, const TaskMessage& msg) {
  const auto& set = require_input(msg, ContentKind::InstructionSet);
  const auto current = field_of(env).list_services();
  const ChannelGrid grid = env.twin ? env.twin->topology.grid : ChannelGrid{};
  return Content{ContentKind::SecurityVerdict,
                 json(security_gate(set.body, env.policy, grid, current))};
}

Content apply_change(ToolEnvironment& env, const TaskMessage& msg) {
  const auto& set_c = require_input(msg, ContentKind::InstructionSet);
  const auto& ver_c = require_input(msg, ContentKind::SecurityVerdict);
  InstructionSet set;
  SecurityVerdict verdict;
  try {
    set = read_instruction_set(set_c.body);
    verdict = ver_c.body.get<SecurityVerdict>();
  } catch (const std::exception& e) {
    throw ToolFailure(std::string("unreadable instruction set: ") + e.what());
  }
  if (!verdict.approved) throw ToolFailure("instruction set not approved");
  if (set.digest != instruction_digest(set) || verdict.digest != set.digest) {
    throw ToolFailure("integrity: instruction set differs from the approved one");
  }
  try {
    field_of(env).apply_commands(set.commands);
  } catch (const Error& e) {
    throw ToolFailure(e.what());
  }
  json ids = json::array();
  for (const auto& c : set.commands) ids.push_back(c.service_id);
  return Content{ContentKind::AnalysisReport,
                 json{{"subject", "apply_receipt"},
                      {"applied", set.commands.size()},
                      {"service_ids", ids},
                      {"digest", set.digest}}};
}

Content analyze(ToolEnvironment& env, const TaskMessage& msg) {
  const std::string tmpl = msg.params.value("template", std::string());
  json body{{"subject", "analysis"}, {"template", tmpl}};
  const auto snaps = snapshots(msg);
  if (snaps.empty()) throw ToolFailure("missing input TelemetrySnapshot");
  const auto& before = *snaps.front();
  const auto before_mean = before.body.at("mean").get<Telemetry>();

  if (tmpl == "PLAN_QOT") {
    const auto& cal = require_input(msg, ContentKind::CalibrationReport);
    const auto& qot = require_input(msg, ContentKind::QotReport);
    const auto report = qot.body.at("report").get<QotReport>();
    const auto margins = qot.body.at("margins").get<MarginReport>();
    body["calibrated_max_error_db"] = cal.body.at("final_max_abs_gsnr_error_db");
    body["uncalibrated_max_error_db"] = cal.body.at("initial_max_abs_gsnr_error_db");
    body["channel_count"] = report.channels.size();
    body["min_gsnr_db"] = report.min_gsnr_db;
    body["mean_gsnr_db"] = report.mean_gsnr_db;
    body["min_margin_db"] = margins.min_margin_db;
    body["required_margin_db"] = env.min_margin_db;
    body["margins_acceptable"] = margins.min_margin_db >= env.min_margin_db;
    return Content{ContentKind::AnalysisReport, body};
  }

  if (snaps.size() < 2) throw ToolFailure("missing re-collected TelemetrySnapshot");
  const auto& after = *snaps.back();
  const auto after_services = after.body.at("services").get<std::vector<Service>>();
  const auto after_mean = after.body.at("mean").get<Telemetry>();
  const auto predicted = estimate_qot(twin_of(env), after_services);
  const auto err = prediction_error(predicted, after_mean);
  body["channels_before"] = before_mean.channels.size();
  body["channels_after"] = after_mean.channels.size();
  body["prediction_error_max_db"] = err.max_abs_db;
  double lo = 0.0, hi = 0.0;
  if (!after_mean.channels.empty()) {
    lo = hi = after_mean.channels.front().gsnr_db;
    for (const auto& c : after_mean.channels) {
      lo = std::min(lo, c.gsnr_db);
      hi = std::max(hi, c.gsnr_db);
    }
  }
  body["gsnr_after_min_db"] = lo;
  body["gsnr_after_max_db"] = hi;
  const auto margins_after = margin(predicted, rates_of(after_services));
  body["min_margin_after_db"] = margins_after.min_margin_db;

  // Per-channel change for channels present both before and after.
  json changes = json::array();
  double worst = 0.0;
  for (const auto& c : after_mean.channels) {
    if (const auto* b = before_mean.find(c.service_id)) {
      const double d = c.gsnr_db - b->gsnr_db;
      changes.push_back({{"service_id", c.service_id},
                         {"gsnr_before_db", b->gsnr_db},
                         {"gsnr_after_db", c.gsnr_db},
                         {"delta_db", d}});
      worst = std::min(worst, d);
    }
  }
  body["retained"] = changes;
  body["worst_degradation_db"] = -worst;

  if (const auto* strat = find_input(msg, ContentKind::AnalysisReport, "upgrade_strategy")) {
    const auto id = strat->body.at("service").at("id").get<std::string>();
    body["new_service_id"] = id;
    body["new_center_thz"] = strat->body.at("center_thz");
    const auto* m = after_mean.find(id);
    body["new_service_active"] = m != nullptr;
    if (m) {
      const double req = rate_spec(strat->body.at("rate_gbps").get<int>()).required_gsnr_db;
      body["new_gsnr_db"] = m->gsnr_db;
      body["new_margin_db"] = m->gsnr_db - req;
    }
  }
  return Content{ContentKind::AnalysisReport, body};
}

Content stub(const TaskMessage& msg, AgentRole expert) {
  return Content{msg.expected_output_kind,
                 json{{"subject", "stub"}, {"expert", std::string(role_name(expert))}}};
}

Content run_tool(ToolEnvironment& env, AgentRole expert, const TaskMessage& msg) {
  const std::string& a = msg.action;
  auto unsupported = [&]() -> Content {
    throw ToolFailure("unsupported action '" + a + "' for " + std::string(role_name(expert)));
  };
  switch (expert) {
    case AgentRole::DataCollector:
      if (a == "collect") return collect(env);
      return unsupported();
    case AgentRole::ModelingEngineer:
      if (a == "calibrate") return calibrate_twin(env, msg);
      return unsupported();
    case AgentRole::ValidationSpecialist:
      if (a == "estimate") return estimate(env, msg);
      if (a == "rehearse") return rehearse_change(env, msg);
      return unsupported();
    case AgentRole::ResourceCoordinator:
      if (a == "margin") return margin_analysis(env, msg);
      return unsupported();
    case AgentRole::FullLifecycleManager:
      if (a == "plan_service") return upgrade_strategy(env, msg);
      return unsupported();
    case AgentRole::ConfigurationDeployer:
      if (a == "generate") return generate_instructions(msg);
      if (a == "apply") return apply_change(env, msg);
      return unsupported();
    case AgentRole::SecuritySupporter:
      if (a == "verify") return verify(env, msg);
      return unsupported();
    case AgentRole::StatisticalAnalyst:
      if (a == "analyze") return analyze(env, msg);
      return unsupported();
    case AgentRole::PerformanceSensor:
    case AgentRole::DataScientist:
    case AgentRole::OperationAssistant:
    case AgentRole::FailureHandler:
      return stub(msg, expert);
    default:
      return unsupported();
  }
}

}  // namespace

TaskResult dispatch(ToolEnvironment& env, AgentRole division, AgentRole expert,
                    const TaskMessage& msg) {
  if (!is_division(division) || division_of(expert) != division) {
    throw DispatchError("expert not in division: " + std::string(role_name(expert)) + " under " +
                        std::string(role_name(division)));
  }
  TaskResult r;
  r.task_id = msg.task_id;
  r.step_id = msg.step_id;
  try {
    r.output = run_tool(env, expert, msg);
    r.status = TaskStatus::Ok;
    r.notes = std::string(role_name(expert)) + " ran " + msg.action;
  } catch (const std::exception& e) {
    r.status = TaskStatus::Error;
    r.reason = e.what();
    r.output = Content{msg.expected_output_kind, json::object()};
  }
  return r;
}

// ---------------------------------------------------------------------------
// review

std::optional<std::string> completeness_problem(const Content& out, const TaskMessage& msg) {
  const auto& b = out.body;
  if (!b.is_object()) return "payload is not an object";
  auto need = [&](std::initializer_list<const char*> keys) -> std::optional<std::string> {
    for (const char* k : keys) {
      if (!b.contains(k)) return std::string("missing field '") + k + "'";
    }
    return std::nullopt;
  };
  switch (out.kind) {
    case ContentKind::TelemetrySnapshot: {
      if (auto p = need({"services", "mean"})) return p;
      if (b.at("mean").at("channels").size() != b.at("services").size())
        return "incomplete channels";
      return std::nullopt;
    }
    case ContentKind::CalibrationReport:
      return need({"stages", "final_max_abs_gsnr_error_db", "channel_count"});
    case ContentKind::QotReport: {
      if (auto p = need({"report", "margins"})) return p;
      std::vector<std::string> wanted;
      if (msg.params.contains("channels")) {
        wanted = msg.params.at("channels").get<std::vector<std::string>>();
      } else if (b.contains("requested")) {
        wanted = b.at("requested").get<std::vector<std::string>>();
      }
      std::set<std::string> have;
      for (const auto& c : b.at("report").at("channels")) have.insert(c.at("service_id").get<std::string>());
      for (const auto& w : wanted) {
        if (!have.count(w)) return "incomplete channels";
      }
      return std::nullopt;
    }
    case ContentKind::RehearsalResult:
      return need({"rehearsal", "baseline", "commands"});
    case ContentKind::MarginReport:
      return need({"margins", "feasible"});
    case ContentKind::InstructionSet: {
      if (auto p = need({"commands", "digest", "issuer"})) return p;
      if (b.at("digest").get<std::string>().empty()) return "missing digest";
      return std::nullopt;
    }
    case ContentKind::SecurityVerdict:
      return need({"approved", "checks", "digest"});
    case ContentKind::AnalysisReport:
      return need({"subject"});
    case ContentKind::WorkflowPlan:
    case ContentKind::FinalReport:
      return std::nullopt;
  }
  return std::nullopt;
}

ReviewOutcome review(AgentRole /*division*/, const TaskResult& result, const TaskMessage& msg) {
  if (result.status != TaskStatus::Ok) return {false, result.reason};
  if (result.output.kind != msg.expected_output_kind) {
    return {false, "output kind " + std::string(content_kind_name(result.output.kind)) +
                       " does not match expected " +
                       std::string(content_kind_name(msg.expected_output_kind))};
  }
  try {
    if (auto p = completeness_problem(result.output, msg)) return {false, *p};
  } catch (const std::exception& e) {
    return {false, std::string("malformed payload: ") + e.what()};
  }
  return {true, ""};
}

// ---------------------------------------------------------------------------

void to_json(json& j, const WorkflowStep& s) {
  j = json{{"step_id", s.step_id},
           {"name", s.name},
           {"goal", s.goal},
           {"division", std::string(role_name(s.division))},
           {"expert_hint", std::string(role_name(s.expert_hint))},
           {"depends_on", s.depends_on}};
}

void from_json(const json& j, WorkflowStep& s) {
  j.at("step_id").get_to(s.step_id);
  j.at("name").get_to(s.name);
  s.goal = j.value("goal", std::string());
  const auto div = role_from_name(j.at("division").get<std::string>());
  const auto hint = role_from_name(j.at("expert_hint").get<std::string>());
  if (!div || !hint) throw ValidationError("unknown role in workflow step");
  s.division = *div;
  s.expert_hint = *hint;
  s.depends_on = j.value("depends_on", std::vector<int>{});
}

void to_json(json& j, const WorkflowPlan& p) {
  j = json{{"task_id", p.task_id},
           {"template", std::string(template_name(p.template_id))},
           {"steps", p.steps},
           {"params", p.params}};
}

void from_json(const json& j, WorkflowPlan& p) {
  p.task_id = j.value("task_id", std::string());
  p.template_id = template_from_name(j.at("template").get<std::string>());
  j.at("steps").get_to(p.steps);
  p.params = j.value("params", json::object());
}

}  // namespace ztnet
