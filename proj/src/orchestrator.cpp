#include "ztnet/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "ztnet/security.hpp"

namespace ztnet {

using nlohmann::json;

std::string_view step_status_name(StepStatus s) {
  switch (s) {
    case StepStatus::Pending: return "Pending";
    case StepStatus::Completed: return "Completed";
    case StepStatus::Failed: return "Failed";
  }
  return "?";
}

const StepTrace* ExecutionTrace::find(const std::string& name) const {
  for (const auto& s : steps) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

int ExecutionTrace::completed() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(), [](const StepTrace& s) {
    return s.status == StepStatus::Completed;
  }));
}

PlanOutcome generate_workflow(const std::string& task_id, const std::string& task_target,
                              const json& context, PlannerBackend& planner) {
  return planner.plan(task_id, task_target, context);
}

// ---------------------------------------------------------------------------
// execute

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const PoolEntry* entry_in(const PoolState& pool, EntryId id) {
  for (const auto& e : pool.entries) {
    if (e.entry_id == id) return &e;
  }
  return nullptr;
}

// The director's own look before letting apply through: the verdict it holds
// must approve exactly the instruction set it is about to forward.
std::optional<std::string> gate_problem(const std::vector<Content>& inputs) {
  const Content* set_c = nullptr;
  const Content* ver_c = nullptr;
  for (const auto& c : inputs) {
    if (c.kind == ContentKind::InstructionSet) set_c = &c;
    if (c.kind == ContentKind::SecurityVerdict) ver_c = &c;
  }
  if (!set_c) return "no instruction set to apply";
  if (!ver_c) return "no security verdict for the instruction set";
  try {
    const auto set = read_instruction_set(set_c->body);
    const auto verdict = ver_c->body.get<SecurityVerdict>();
    if (!verdict.approved) return "security check did not approve the instruction set";
    const auto digest = instruction_digest(set);
    if (set.digest != digest || verdict.digest != digest) {
      return "instruction set digest differs from the approved one";
    }
  } catch (const std::exception& e) {
    return std::string("unreadable gate inputs: ") + e.what();
  }
  return std::nullopt;
}

class StepRunner {
 public:
  StepRunner(const WorkflowPlan& plan, Environment& env) : plan_(plan), env_(env) {}

  void run(const WorkflowStep& step, StepTrace& tr,
           const std::map<int, const StepTrace*>& done) {
    SharedPool& pool = *env_.pool;
    const AgentRole director = AgentRole::NetworkDirector;
    const AgentRole div = step.division;

    // Director side: pull each dependency's results and forward copies.
    std::vector<Content> forwarded;
    std::vector<std::pair<EntryId, std::string>> sources;
    for (int d : step.depends_on) {
      const auto it = done.find(d);
      if (it == done.end()) continue;
      for (EntryId id : it->second->output_entries) {
        const auto e = pool.get(director, id);
        forwarded.push_back(e.content);
        sources.emplace_back(id, e.instruction);
      }
    }

    if (step.name == "apply_change") {
      if (auto why = gate_problem(forwarded)) {
        tr.status = StepStatus::Failed;
        tr.gated = true;
        tr.reason = "gated: " + *why;
        return;
      }
    }

    const auto& recipe = recipe_for(step.name);

    json input_ids = json::array();
    for (std::size_t i = 0; i < forwarded.size(); ++i) {
      const EntryId id = pool.put(director, plan_.task_id,
                                  "forward #" + std::to_string(sources[i].first) + " for step " +
                                      std::to_string(step.step_id),
                                  forwarded[i], div);
      tr.input_entries.push_back(id);
      input_ids.push_back(id);
    }
    tr.assignment_entry =
        pool.put(director, plan_.task_id, step.goal,
                 Content{ContentKind::WorkflowPlan,
                         json{{"step", step}, {"inputs", input_ids}, {"params", plan_.params}}},
                 div);

    // Division side.
    pool.update_status(div, tr.assignment_entry, EntryStatus::Claimed);
    std::vector<Content> inputs;
    for (EntryId id : tr.input_entries) {
      inputs.push_back(pool.get(div, id).content);
      pool.update_status(div, id, EntryStatus::Claimed);
      pool.update_status(div, id, EntryStatus::Completed);
    }

    std::vector<Content> outputs;
    for (const auto& item : recipe) {
      TaskMessage msg;
      msg.task_id = plan_.task_id;
      msg.step_id = step.step_id;
      msg.action = item.tool;
      msg.instruction = step.goal;
      msg.input_refs = tr.input_entries;
      msg.inputs = inputs;
      msg.inputs.insert(msg.inputs.end(), outputs.begin(), outputs.end());
      msg.expected_output_kind = item.output;
      msg.issuer = div;
      msg.params = plan_.params;

      std::optional<Content> accepted;
      for (int attempt = 1; attempt <= 2 && !accepted; ++attempt) {
        DispatchRecord rec;
        rec.expert = item.expert;
        rec.tool = item.tool;
        rec.attempt = attempt;
        const auto result = dispatch(env_.tools, div, item.expert, msg);
        rec.status = result.status;
        rec.reason = result.reason;
        const auto verdict = review(div, result, msg);
        rec.accepted = verdict.accepted;
        rec.review_reason = verdict.reason;
        tr.dispatches.push_back(rec);
        if (verdict.accepted) accepted = result.output;
      }
      if (!accepted) {
        tr.status = StepStatus::Failed;
        tr.reason = std::string(role_name(item.expert)) + " " + item.tool + ": " +
                    tr.dispatches.back().review_reason;
        pool.update_status(div, tr.assignment_entry, EntryStatus::Failed);
        return;
      }
      outputs.push_back(*accepted);
    }

    for (auto& out : outputs) {
      if (env_.tamper) env_.tamper(step, out);
      const EntryId id = pool.put(div, plan_.task_id, step.name + " result", out, director);
      pool.update_status(director, id, EntryStatus::Claimed);
      pool.update_status(director, id, EntryStatus::Completed);
      tr.output_entries.push_back(id);
    }
    pool.update_status(div, tr.assignment_entry, EntryStatus::Completed);
    tr.status = StepStatus::Completed;
  }

 private:
  const WorkflowPlan& plan_;
  Environment& env_;
};

}  // namespace

ExecutionTrace execute(const WorkflowPlan& plan, Environment& env) {
  if (!env.pool) throw ConfigError("execute: no shared pool");
  const auto t0 = Clock::now();
  ExecutionTrace trace;
  trace.task_id = plan.task_id;
  trace.template_id = plan.template_id;
  trace.plan_entry = env.pool->put(AgentRole::NetworkDirector, plan.task_id, "workflow plan",
                                   Content{ContentKind::WorkflowPlan, json(plan)},
                                   AgentRole::NetworkDirector);

  StepRunner runner(plan, env);
  std::map<int, const StepTrace*> done;
  trace.steps.reserve(plan.steps.size());
  for (const auto& step : plan.steps) {
    trace.steps.emplace_back();
    StepTrace& tr = trace.steps.back();
    tr.step_id = step.step_id;
    tr.name = step.name;
    tr.division = step.division;
    const auto st = Clock::now();

    for (int d : step.depends_on) {
      const auto it = done.find(d);
      if (it == done.end() || it->second->status != StepStatus::Completed) {
        tr.status = StepStatus::Failed;
        tr.aborted = true;
        tr.reason = "dependency step " + std::to_string(d) + " failed";
        break;
      }
    }
    if (!tr.aborted) {
      try {
        runner.run(step, tr, done);
      } catch (const std::exception& e) {
        tr.status = StepStatus::Failed;
        if (tr.reason.empty()) tr.reason = e.what();
      }
    }
    tr.duration_s = seconds_since(st);
    done[step.step_id] = &tr;
  }
  trace.wall_time_s = seconds_since(t0);
  return trace;
}

bool gate_before_apply_holds(const ExecutionTrace& trace, const PoolState& pool) {
  std::set<std::string> approved;  // digests approved so far, in step order
  for (const auto& s : trace.steps) {
    if (s.name == "security_check") {
      for (EntryId id : s.output_entries) {
        const auto* e = entry_in(pool, id);
        if (!e || e->content.kind != ContentKind::SecurityVerdict) continue;
        try {
          const auto v = e->content.body.get<SecurityVerdict>();
          if (v.approved) approved.insert(v.digest);
        } catch (const std::exception&) {
        }
      }
    }
    if (s.name != "apply_change" || s.dispatches.empty()) continue;
    // It ran: every InstructionSet it was handed must be one approved earlier.
    bool saw_set = false;
    for (EntryId id : s.input_entries) {
      const auto* e = entry_in(pool, id);
      if (!e) return false;
      if (e->content.kind != ContentKind::InstructionSet) continue;
      saw_set = true;
      try {
        const auto set = read_instruction_set(e->content.body);
        const auto digest = instruction_digest(set);
        if (set.digest != digest || !approved.count(digest)) return false;
      } catch (const std::exception&) {
        return false;
      }
    }
    if (!saw_set) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// reports

std::string format_number(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", std::max(0, precision), v);
  return buf;
}

namespace {

std::string render_value(const json& v, int precision) {
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_number()) return format_number(v.get<double>(), precision);
  if (v.is_string()) return v.get<std::string>();
  throw CitationError("cited value is not a scalar");
}

std::string resolve(const PoolState& pool, const Citation& c) {
  const auto* e = entry_in(pool, c.entry_id);
  if (!e) throw CitationError("cited entry " + std::to_string(c.entry_id) + " not in pool");
  try {
    return render_value(e->content.body.at(json::json_pointer(c.pointer)), c.precision);
  } catch (const CitationError&) {
    throw;
  } catch (const std::exception&) {
    throw CitationError("entry " + std::to_string(c.entry_id) + " has no field " + c.pointer);
  }
}

// Claims are written as templates with "{}" holes; every hole is filled from
// a pool field and recorded as a citation, so the text cannot drift from the
// data it quotes.
class ClaimBuilder {
 public:
  explicit ClaimBuilder(const PoolState& pool) : pool_(pool) {}

  struct Ref {
    EntryId id;
    std::string pointer;
    int precision;
  };

  Claim make(const std::string& tmpl, const std::vector<Ref>& refs) {
    Claim c;
    std::size_t k = 0, pos = 0;
    while (true) {
      const auto hole = tmpl.find("{}", pos);
      if (hole == std::string::npos) {
        c.text += tmpl.substr(pos);
        break;
      }
      if (k >= refs.size()) throw CitationError("claim template has more holes than citations");
      c.text += tmpl.substr(pos, hole - pos);
      const Citation cit{refs[k].id, refs[k].pointer, refs[k].precision};
      c.text += resolve(pool_, cit);
      c.citations.push_back(cit);
      ++k;
      pos = hole + 2;
    }
    if (k != refs.size()) throw CitationError("claim template has fewer holes than citations");
    return c;
  }

  const json& body(EntryId id) const {
    const auto* e = entry_in(pool_, id);
    if (!e) throw CitationError("entry " + std::to_string(id) + " not in pool");
    return e->content.body;
  }

 private:
  const PoolState& pool_;
};

struct Found {
  EntryId id = 0;
  const json* body = nullptr;
  explicit operator bool() const { return body != nullptr; }
};

// Latest output of the given kind (and subject) among the trace's steps.
Found latest(const ExecutionTrace& trace, const PoolState& pool, ContentKind kind,
             const std::string& subject = {}, const std::string& step_name = {}) {
  Found f;
  for (const auto& s : trace.steps) {
    if (!step_name.empty() && s.name != step_name) continue;
    for (EntryId id : s.output_entries) {
      const auto* e = entry_in(pool, id);
      if (!e || e->content.kind != kind) continue;
      if (!subject.empty() && e->content.body.value("subject", std::string()) != subject) continue;
      f = Found{id, &e->content.body};
    }
  }
  return f;
}

std::string ptr(const std::string& base, std::size_t i, const std::string& field) {
  return base + "/" + std::to_string(i) + "/" + field;
}

void plan_qot_sections(const ExecutionTrace& trace, const PoolState& pool, ClaimBuilder& cb,
                       FinalReport& r) {
  auto& perf = r.sections[0].claims;
  auto& err = r.sections[1].claims;
  auto& sugg = r.sections[2].claims;

  if (const auto q = latest(trace, pool, ContentKind::QotReport)) {
    const auto& chans = q.body->at("report").at("channels");
    perf.push_back(cb.make("Estimated GSNR over the current channels: minimum {} dB, mean {} dB.",
                           {{q.id, "/report/min_gsnr_db", 2}, {q.id, "/report/mean_gsnr_db", 2}}));
    const auto& measured = q.body->at("measured");
    for (std::size_t i = 0; i < chans.size(); ++i) {
      const auto id = chans[i].at("service_id").get<std::string>();
      std::optional<std::size_t> mi;
      for (std::size_t j = 0; j < measured.size(); ++j) {
        if (measured[j].at("service_id") == id) mi = j;
      }
      if (mi) {
        perf.push_back(cb.make(id + " at {} THz: estimated GSNR {} dB, measured {} dB.",
                               {{q.id, ptr("/report/channels", i, "center_thz"), 2},
                                {q.id, ptr("/report/channels", i, "gsnr_db"), 2},
                                {q.id, ptr("/measured", *mi, "gsnr_db"), 2}}));
      } else {
        perf.push_back(cb.make(id + " at {} THz: estimated GSNR {} dB.",
                               {{q.id, ptr("/report/channels", i, "center_thz"), 2},
                                {q.id, ptr("/report/channels", i, "gsnr_db"), 2}}));
      }
    }
    err.push_back(cb.make("Calibrated model against measured telemetry: max abs GSNR error {} dB.",
                          {{q.id, "/prediction_error/max_abs_db", 3}}));
  }
  if (const auto c = latest(trace, pool, ContentKind::CalibrationReport)) {
    err.push_back(cb.make("Calibration reduced the max abs GSNR error over {} channels from {} dB "
                          "to {} dB.",
                          {{c.id, "/channel_count", 0},
                           {c.id, "/initial_max_abs_gsnr_error_db", 3},
                           {c.id, "/final_max_abs_gsnr_error_db", 3}}));
  }
  if (const auto a = latest(trace, pool, ContentKind::AnalysisReport, "analysis")) {
    const bool ok = a.body->value("margins_acceptable", false);
    sugg.push_back(cb.make(std::string("Minimum margin is {} dB against the required {} dB; ") +
                               (ok ? "margins are acceptable for the current channels."
                                   : "some channels need attention before further changes."),
                           {{a.id, "/min_margin_db", 2}, {a.id, "/required_margin_db", 2}}));
  }
}

void change_sections(const ExecutionTrace& trace, const PoolState& pool, ClaimBuilder& cb,
                     FinalReport& r) {
  auto& perf = r.sections[0].claims;
  auto& err = r.sections[1].claims;
  auto& sugg = r.sections[2].claims;

  const auto strat = latest(trace, pool, ContentKind::AnalysisReport, "upgrade_strategy");
  if (strat) {
    perf.push_back(cb.make("Planned {} Gb/s channel {} at {} THz from slice {}, predicted GSNR {} dB "
                           "and margin {} dB.",
                           {{strat.id, "/rate_gbps", 0},
                            {strat.id, "/service/id", 0},
                            {strat.id, "/center_thz", 2},
                            {strat.id, "/start_slice", 0},
                            {strat.id, "/predicted_gsnr_db", 2},
                            {strat.id, "/predicted_margin_db", 2}}));
  }
  if (const auto m = latest(trace, pool, ContentKind::MarginReport)) {
    perf.push_back(cb.make("Rehearsal predicts a minimum margin of {} dB after the change; worst "
                           "survivor GSNR change {} dB.",
                           {{m.id, "/min_margin_db", 2}, {m.id, "/worst_delta_gsnr_db", 2}}));
  }

  const auto receipt = latest(trace, pool, ContentKind::AnalysisReport, "apply_receipt");
  if (receipt) {
    perf.push_back(cb.make("{} approved commands were applied to the field network.",
                           {{receipt.id, "/applied", 0}}));
  } else if (const auto* s = trace.find("apply_change")) {
    perf.push_back(cb.make("No change was applied: " + std::string(s->gated
                                                                      ? "the security gate refused it."
                                                                      : "the apply step failed."),
                           {}));
  }

  if (const auto a = latest(trace, pool, ContentKind::AnalysisReport, "analysis")) {
    perf.push_back(cb.make("Measured channels went from {} to {}; measured GSNR now spans {} dB "
                           "to {} dB.",
                           {{a.id, "/channels_before", 0},
                            {a.id, "/channels_after", 0},
                            {a.id, "/gsnr_after_min_db", 2},
                            {a.id, "/gsnr_after_max_db", 2}}));
    const auto& kept = a.body->at("retained");
    for (std::size_t i = 0; i < kept.size(); ++i) {
      perf.push_back(cb.make("{}: GSNR {} dB before, {} dB after, change {} dB.",
                             {{a.id, ptr("/retained", i, "service_id"), 0},
                              {a.id, ptr("/retained", i, "gsnr_before_db"), 2},
                              {a.id, ptr("/retained", i, "gsnr_after_db"), 2},
                              {a.id, ptr("/retained", i, "delta_db"), 2}}));
    }
    if (a.body->contains("new_service_id")) {
      if (a.body->value("new_service_active", false) && a.body->contains("new_gsnr_db")) {
        perf.push_back(cb.make("{} is active at {} THz with measured GSNR {} dB, margin {} dB.",
                               {{a.id, "/new_service_id", 0},
                                {a.id, "/new_center_thz", 2},
                                {a.id, "/new_gsnr_db", 2},
                                {a.id, "/new_margin_db", 2}}));
      } else {
        perf.push_back(cb.make("{} is not active in the field network.",
                               {{a.id, "/new_service_id", 0}}));
      }
    }
    err.push_back(cb.make("Twin prediction against re-collected telemetry: max abs GSNR error {} dB.",
                          {{a.id, "/prediction_error_max_db", 3}}));
    if (!kept.empty()) {
      err.push_back(cb.make("Worst measured degradation of a retained channel is {} dB.",
                            {{a.id, "/worst_degradation_db", 2}}));
    }
    sugg.push_back(cb.make(receipt ? "Predicted minimum margin after the change is {} dB; keep "
                                     "the new configuration and monitor the retained channels."
                                   : "Predicted minimum margin for the current channels is {} dB; "
                                     "revisit the request before retrying.",
                           {{a.id, "/min_margin_after_db", 2}}));
  }
  if (const auto c = latest(trace, pool, ContentKind::CalibrationReport)) {
    err.push_back(cb.make("Calibration before rehearsal brought the max abs GSNR error from {} dB "
                          "to {} dB.",
                          {{c.id, "/initial_max_abs_gsnr_error_db", 3},
                           {c.id, "/final_max_abs_gsnr_error_db", 3}}));
  }
}

}  // namespace

FinalReport summarize(const ExecutionTrace& trace, const PoolState& pool) {
  FinalReport r;
  r.task_id = trace.task_id;
  r.template_id = trace.template_id;
  r.wall_time_s = trace.wall_time_s;
  r.planner = trace.planner;
  r.planner_fallback = trace.planner_fallback;
  r.steps_total = static_cast<int>(trace.steps.size());
  r.steps_completed = trace.completed();
  r.completion = r.steps_total == 0 ? 0.0 : double(r.steps_completed) / r.steps_total;
  r.sections = {{"performance evaluation", {}}, {"error analysis", {}}, {"suggestions", {}}};

  // Everything the trace says was produced must still be there.
  for (const auto& s : trace.steps) {
    for (EntryId id : s.output_entries) {
      if (!entry_in(pool, id)) {
        throw CitationError("step " + std::to_string(s.step_id) + " output entry " +
                            std::to_string(id) + " missing from pool");
      }
    }
  }

  ClaimBuilder cb(pool);
  if (trace.template_id == TemplateId::PlanQot) {
    plan_qot_sections(trace, pool, cb, r);
  } else {
    change_sections(trace, pool, cb, r);
  }

  std::set<EntryId> cited;
  for (const auto& sec : r.sections) {
    for (const auto& c : sec.claims) {
      for (const auto& cit : c.citations) cited.insert(cit.entry_id);
    }
  }
  r.cited_entries.assign(cited.begin(), cited.end());
  return r;
}

std::vector<std::string> report_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.back() == '.') cur.pop_back();
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u) || (std::ispunct(u) && ch != '.' && ch != '-')) {
      flush();
    } else {
      cur += ch;
    }
  }
  flush();
  return out;
}

bool is_numeric_token(const std::string& t) {
  std::size_t i = 0;
  if (i < t.size() && t[i] == '-') ++i;
  bool digits = false, dot = false;
  for (; i < t.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(t[i]))) {
      digits = true;
    } else if (t[i] == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digits;
}

std::vector<std::string> verify_report(const FinalReport& report, const PoolState& pool) {
  std::vector<std::string> problems;
  for (EntryId id : report.cited_entries) {
    if (!entry_in(pool, id)) problems.push_back("cited entry " + std::to_string(id) + " missing");
  }
  for (const auto& sec : report.sections) {
    for (const auto& claim : sec.claims) {
      std::set<std::string> allowed;
      for (const auto& cit : claim.citations) {
        try {
          allowed.insert(resolve(pool, cit));
        } catch (const CitationError& e) {
          problems.push_back(sec.title + ": " + e.what());
        }
      }
      for (const auto& tok : report_tokens(claim.text)) {
        if (is_numeric_token(tok) && !allowed.count(tok)) {
          problems.push_back(sec.title + ": uncited number " + tok + " in \"" + claim.text + "\"");
        }
      }
    }
  }
  return problems;
}

json report_to_json(const FinalReport& r, bool include_wall_time) {
  json sections = json::array();
  for (const auto& s : r.sections) {
    json claims = json::array();
    for (const auto& c : s.claims) {
      json cits = json::array();
      for (const auto& cit : c.citations) {
        cits.push_back({{"entry_id", cit.entry_id},
                        {"pointer", cit.pointer},
                        {"precision", cit.precision}});
      }
      claims.push_back({{"text", c.text}, {"citations", cits}});
    }
    sections.push_back({{"title", s.title}, {"claims", claims}});
  }
  json j{{"schema_version", 1},
         {"task_id", r.task_id},
         {"template", std::string(template_name(r.template_id))},
         {"planner", r.planner},
         {"planner_fallback", r.planner_fallback},
         {"completion", r.completion},
         {"steps_completed", r.steps_completed},
         {"steps_total", r.steps_total},
         {"sections", sections},
         {"cited_entries", r.cited_entries}};
  if (include_wall_time) {
    j["wall_time_s"] = r.wall_time_s;
    j["within_time_budget"] = r.within_time_budget();
  }
  return j;
}

std::string render_text(const FinalReport& r) {
  std::ostringstream os;
  os << "Task " << r.task_id << " (" << template_name(r.template_id) << ")\n";
  os << "  planner: " << r.planner << (r.planner_fallback ? " (fell back to rules)" : "") << "\n";
  os << "  steps completed: " << r.steps_completed << "/" << r.steps_total
     << "  completion: " << format_number(r.completion * 100.0, 1) << "%\n";
  os << "  wall time: " << format_number(r.wall_time_s, 3) << " s"
     << (r.within_time_budget() ? "" : " (over budget)") << "\n";
  for (const auto& s : r.sections) {
    os << "\n" << s.title << "\n";
    if (s.claims.empty()) os << "  (nothing to report)\n";
    for (const auto& c : s.claims) {
      os << "  - " << c.text;
      std::set<EntryId> ids;
      for (const auto& cit : c.citations) ids.insert(cit.entry_id);
      if (!ids.empty()) {
        os << " [";
        bool first = true;
        for (auto id : ids) {
          os << (first ? "" : ",") << "#" << id;
          first = false;
        }
        os << "]";
      }
      os << "\n";
    }
  }
  return os.str();
}

json trace_to_json(const ExecutionTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    json disp = json::array();
    for (const auto& d : s.dispatches) {
      disp.push_back({{"expert", std::string(role_name(d.expert))},
                      {"tool", d.tool},
                      {"attempt", d.attempt},
                      {"status", std::string(task_status_name(d.status))},
                      {"reason", d.reason},
                      {"accepted", d.accepted},
                      {"review_reason", d.review_reason}});
    }
    steps.push_back({{"step_id", s.step_id},
                     {"name", s.name},
                     {"division", std::string(role_name(s.division))},
                     {"status", std::string(step_status_name(s.status))},
                     {"aborted", s.aborted},
                     {"gated", s.gated},
                     {"reason", s.reason},
                     {"assignment_entry", s.assignment_entry},
                     {"input_entries", s.input_entries},
                     {"output_entries", s.output_entries},
                     {"dispatches", disp},
                     {"duration_s", s.duration_s}});
  }
  return json{{"task_id", t.task_id},
              {"template", std::string(template_name(t.template_id))},
              {"planner", t.planner},
              {"planner_fallback", t.planner_fallback},
              {"fallback_reason", t.fallback_reason},
              {"plan_entry", t.plan_entry},
              {"steps", steps},
              {"wall_time_s", t.wall_time_s}};
}

}  // namespace ztnet
