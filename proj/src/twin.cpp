#include "ztnet/twin.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ztnet/common.hpp"

namespace ztnet {

using nlohmann::json;

std::string_view stage_name(CalibrationStageKind k) {
  switch (k) {
    case CalibrationStageKind::SpanLoss: return "span_loss";
    case CalibrationStageKind::AmpGainTilt: return "amp_gain_tilt";
    case CalibrationStageKind::AmpNoiseFigure: return "amp_noise_figure";
    case CalibrationStageKind::FiberGamma: return "fiber_gamma";
  }
  return "?";
}

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo,
                                      double hi, double tolerance, int max_iterations) {
  static const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (std::abs(b - a) > tolerance && it < max_iterations) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
    ++it;
  }
  return fc < fd ? ScalarMinimum{c, fc, it} : ScalarMinimum{d, fd, it};
}

namespace {

struct Residuals {
  std::vector<double> span_loss;  // total-power drop across each span
  std::vector<double> gain;       // total-power rise across each amplifier
  std::vector<double> amp_in;
  std::vector<double> amp_out;
  std::vector<double> rx;
  std::vector<double> gsnr;
  std::vector<double> nli_fraction;
};

Residuals residuals(const NetworkTopology& model, std::span<const Service> services,
                    const Telemetry& obs) {
  const auto net = propagate(model, services);
  std::map<std::pair<SiteId, SiteId>, const LinkPower*> links;
  for (const auto& l : net.links) links[{l.from, l.to}] = &l;

  Residuals r;
  for (const auto& o : obs.omses) {
    const auto it = links.find({o.from, o.to});
    if (it == links.end() || it->second->spans.size() != o.spans.size())
      throw ValidationError("telemetry OMS layout does not match the service roster");
    const auto& lp = *it->second;
    for (std::size_t s = 0; s < o.spans.size(); ++s) {
      const double up_model = mw_to_dbm(s == 0 ? lp.input_mw : lp.spans[s - 1].amp_output_mw);
      const double up_obs = s == 0 ? o.input_power_dbm : o.spans[s - 1].amp_output_dbm;
      r.span_loss.push_back((up_model - mw_to_dbm(lp.spans[s].amp_input_mw)) -
                            (up_obs - o.spans[s].amp_input_dbm));
      r.gain.push_back((mw_to_dbm(lp.spans[s].amp_output_mw) - mw_to_dbm(lp.spans[s].amp_input_mw)) -
                       (o.spans[s].amp_output_dbm - o.spans[s].amp_input_dbm));
      r.amp_in.push_back(mw_to_dbm(it->second->spans[s].amp_input_mw) - o.spans[s].amp_input_dbm);
      r.amp_out.push_back(mw_to_dbm(it->second->spans[s].amp_output_mw) -
                          o.spans[s].amp_output_dbm);
    }
  }
  for (const auto& c : obs.channels) {
    const auto* p = net.report.find(c.service_id);
    if (!p) throw ValidationError("channel mismatch: " + c.service_id + " not in roster");
    r.rx.push_back(p->received_power_dbm - c.received_power_dbm);
    r.gsnr.push_back(p->gsnr_db - c.gsnr_db);
    const double noise = p->ase_mw + p->nli_mw;
    r.nli_fraction.push_back(noise > 0.0 ? p->nli_mw / noise : 0.0);
  }
  return r;
}

double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Param {
  std::string name;
  std::function<double(const NetworkTopology&)> get;
  std::function<void(NetworkTopology&, double)> set;
  double lo = 0.0;
  double hi = 0.0;
};

struct FitOutcome {
  int iterations = 0;
  bool pinned = false;
};

// Coordinate descent: one golden-section search per parameter per sweep.
// A parameter only moves when the objective strictly improves.
FitOutcome fit(NetworkTopology& model, const std::vector<Param>& params,
               const std::function<double(const NetworkTopology&)>& objective,
               const CalibrationOptions& opt) {
  FitOutcome out;
  for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
    const double start = objective(model);
    for (const auto& p : params) {
      const double x0 = p.get(model);
      const double f0 = objective(model);
      auto probe = [&](double x) {
        p.set(model, x);
        return objective(model);
      };
      const auto best = golden_section_minimize(probe, p.lo, p.hi, opt.tolerance,
                                                opt.max_iterations);
      out.iterations += best.iterations;
      p.set(model, best.value < f0 ? best.x : x0);
    }
    const double end = objective(model);
    if (start - end <= 1e-12 * std::max(1.0, start)) break;
  }
  out.pinned = !params.empty();
  for (const auto& p : params) {
    const double x = p.get(model);
    if (x - p.lo > 2 * opt.tolerance && p.hi - x > 2 * opt.tolerance) out.pinned = false;
  }
  return out;
}

struct ElementRef {
  std::size_t oms = 0;
  std::size_t idx = 0;
  std::string label;
};

std::vector<ElementRef> observed_elements(const NetworkTopology& model, const Telemetry& obs) {
  std::set<std::size_t> omses;
  for (const auto& o : obs.omses) {
    const auto i = model.find_oms(o.from, o.to);
    if (!i) throw ValidationError("telemetry references unknown OMS");
    omses.insert(*i);
  }
  std::vector<ElementRef> out;
  for (auto i : omses) {
    const auto& oms = model.omses[i];
    for (std::size_t e = 0; e < oms.elements.size(); ++e) {
      out.push_back(ElementRef{i, e,
                               std::to_string(oms.a) + "-" + std::to_string(oms.b) + "#" +
                                   std::to_string(e)});
    }
  }
  return out;
}

template <typename Field>
Param element_param(const ElementRef& el, const std::string& what, Field field, double lo,
                    double hi) {
  return Param{
      "span[" + el.label + "]." + what,
      [el, field](const NetworkTopology& t) { return field(t.omses[el.oms].elements[el.idx]); },
      [el, field](NetworkTopology& t, double v) { field(t.omses[el.oms].elements[el.idx]) = v; },
      lo, hi};
}

std::vector<std::string> names_of(const std::vector<Param>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.name);
  return out;
}

// Runs one stage on `model`, returning its report. The stage metric is
// recomputed from scratch before and after; a worse metric rolls back.
StageReport run_stage(CalibrationStageKind kind, NetworkTopology& model,
                      std::span<const Service> services, const Telemetry& obs,
                      const CalibrationOptions& opt) {
  const auto& b = opt.bounds;
  const auto elements = observed_elements(model, obs);
  StageReport rep;
  rep.name = std::string(stage_name(kind));

  std::function<double(const NetworkTopology&)> objective;
  std::function<double(const NetworkTopology&)> metric;
  std::vector<Param> params;
  std::vector<Param> tilt_params;  // amp_gain_tilt only

  switch (kind) {
    case CalibrationStageKind::SpanLoss: {
      objective = [&](const NetworkTopology& m) {
        return sum_sq(residuals(m, services, obs).span_loss);
      };
      metric = [&](const NetworkTopology& m) {
        return max_abs(residuals(m, services, obs).span_loss);
      };
      for (const auto& el : elements) {
        params.push_back(element_param(
            el, "attenuation_db_per_km",
            [](auto& e) -> auto& { return e.span.attenuation_db_per_km; }, b.attenuation_min,
            b.attenuation_max));
      }
      break;
    }
    case CalibrationStageKind::AmpGainTilt: {
      objective = [&](const NetworkTopology& m) {
        const auto r = residuals(m, services, obs);
        return sum_sq(r.gain) + sum_sq(r.rx);
      };
      metric = [&](const NetworkTopology& m) {
        const auto r = residuals(m, services, obs);
        return std::max(max_abs(r.gain), max_abs(r.rx));
      };
      for (const auto& el : elements) {
        // Field amplifiers are commissioned to their span loss, so the window
        // is centred on the loss fitted by the previous stage.
        const double g0 = model.omses[el.oms].elements[el.idx].span.total_loss_db();
        params.push_back(element_param(
            el, "amp.gain_db", [](auto& e) -> auto& { return e.amp.gain_db; },
            std::max(0.0, g0 - b.gain_window_db), g0 + b.gain_window_db));
      }
      for (const auto& el : elements) {
        tilt_params.push_back(element_param(
            el, "amp.tilt_db", [](auto& e) -> auto& { return e.amp.tilt_db; }, b.tilt_min,
            b.tilt_max));
      }
      break;
    }
    case CalibrationStageKind::AmpNoiseFigure: {
      // Fit on channels where ASE dominates; fall back to all channels.
      const auto r0 = residuals(model, services, obs);
      std::vector<std::size_t> chosen;
      for (std::size_t i = 0; i < r0.nli_fraction.size(); ++i) {
        if (r0.nli_fraction[i] <= 0.5) chosen.push_back(i);
      }
      if (chosen.empty()) {
        for (std::size_t i = 0; i < r0.gsnr.size(); ++i) chosen.push_back(i);
      }
      auto picked = [chosen](const std::vector<double>& v) {
        std::vector<double> out;
        for (auto i : chosen) out.push_back(v[i]);
        return out;
      };
      objective = [&, picked](const NetworkTopology& m) {
        return sum_sq(picked(residuals(m, services, obs).gsnr));
      };
      metric = [&, picked](const NetworkTopology& m) {
        return max_abs(picked(residuals(m, services, obs).gsnr));
      };
      const double nf_lo = std::max(b.nf_min, model.nf_floor_db);
      for (const auto& el : elements) {
        params.push_back(element_param(
            el, "amp.noise_figure_db", [](auto& e) -> auto& { return e.amp.noise_figure_db; },
            nf_lo, b.nf_max));
      }
      break;
    }
    case CalibrationStageKind::FiberGamma: {
      objective = [&](const NetworkTopology& m) { return sum_sq(residuals(m, services, obs).gsnr); };
      metric = [&](const NetworkTopology& m) { return max_abs(residuals(m, services, obs).gsnr); };
      std::vector<ElementRef> els = elements;
      params.push_back(Param{
          "fiber.gamma_per_w_km",
          [els](const NetworkTopology& t) {
            return t.omses[els.front().oms].elements[els.front().idx].span.gamma_per_w_km;
          },
          [els](NetworkTopology& t, double v) {
            for (const auto& el : els) t.omses[el.oms].elements[el.idx].span.gamma_per_w_km = v;
          },
          b.gamma_min, b.gamma_max});
      break;
    }
  }

  const NetworkTopology before = model;
  rep.residual_before = metric(model);
  FitOutcome outcome;
  if (kind == CalibrationStageKind::AmpGainTilt) {
    // Each gain alone sets its amplifier's total-power gain, so a first pass
    // fits gains against those only. From that start the joint problem is
    // well conditioned; tilts go first since the gains are already close.
    auto gain_only = [&](const NetworkTopology& m) {
      return sum_sq(residuals(m, services, obs).gain);
    };
    CalibrationOptions one = opt;
    one.sweeps = 1;
    outcome = fit(model, params, gain_only, one);
    std::vector<Param> joint = tilt_params;
    joint.insert(joint.end(), params.begin(), params.end());
    const auto j = fit(model, joint, objective, opt);
    outcome.iterations += j.iterations;
    outcome.pinned = j.pinned;
    for (auto& p : tilt_params) params.push_back(std::move(p));
  } else {
    outcome = fit(model, params, objective, opt);
  }
  rep.parameters = names_of(params);

  if (kind == CalibrationStageKind::SpanLoss) {
    // Loss the attenuation range cannot absorb goes to the output connector.
    std::vector<Param> extra;
    for (const auto& el : elements) {
      const double a = model.omses[el.oms].elements[el.idx].span.attenuation_db_per_km;
      if (a - b.attenuation_min <= 2 * opt.tolerance || b.attenuation_max - a <= 2 * opt.tolerance) {
        extra.push_back(element_param(
            el, "connector_loss_out_db",
            [](auto& e) -> auto& { return e.span.connector_loss_out_db; }, b.connector_min,
            b.connector_max));
      }
    }
    if (!extra.empty()) {
      const auto more = fit(model, extra, objective, opt);
      outcome.iterations += more.iterations;
      for (auto& n : names_of(extra)) rep.parameters.push_back(n);
    }
  }

  rep.iterations = outcome.iterations;
  rep.pinned = outcome.pinned;
  rep.residual_after = metric(model);
  if (rep.residual_after > rep.residual_before) {
    model = before;
    rep.residual_after = rep.residual_before;
    rep.reverted = true;
  }
  return rep;
}

}  // namespace

CalibrationReport calibrate(TwinModel& twin, std::span<const Telemetry> batch,
                            std::span<const Service> services, const CalibrationOptions& options) {
  if (batch.empty()) throw ValidationError("empty telemetry");
  const Telemetry obs = average_telemetry(batch);
  if (obs.channels.size() != services.size())
    throw ValidationError("channel mismatch: telemetry and roster differ");

  CalibrationReport report;
  report.channel_count = obs.channels.size();
  if (services.empty()) {
    twin.status = CalibrationStatus::Calibrated;
    return report;
  }

  NetworkTopology model = twin.topology;
  auto gsnr_error = [&](const NetworkTopology& m) {
    return max_abs(residuals(m, services, obs).gsnr);
  };
  report.initial_max_abs_gsnr_error_db = gsnr_error(model);
  for (const auto kind : options.order) {
    if (gsnr_error(model) < options.stop_threshold_db) {
      report.stopped_early = true;
      break;
    }
    report.stages.push_back(run_stage(kind, model, services, obs, options));
  }
  report.final_max_abs_gsnr_error_db = gsnr_error(model);

  twin.topology = std::move(model);
  twin.status = CalibrationStatus::Calibrated;
  for (const auto& s : report.stages) twin.history.push_back(s);
  return report;
}

QotReport estimate_qot(const TwinModel& twin, std::span<const Service> services) {
  if (services.empty()) return {};
  return estimate_path_qot(twin.topology, services);
}

RehearsalResult rehearse(const TwinModel& twin, std::span<const NmsCommand> commands,
                         std::span<const Service> current, double min_margin_db) {
  RehearsalResult out;
  out.min_margin_db = min_margin_db;
  out.services_after.assign(current.begin(), current.end());
  for (const auto& c : commands) apply_to_roster(out.services_after, c, twin.topology);
  out.predicted = estimate_qot(twin, out.services_after);
  std::map<std::string, int> rates;
  for (const auto& s : out.services_after) rates[s.id] = s.rate_gbps;
  out.margins = margin(out.predicted, rates);
  out.feasible = std::all_of(out.margins.channels.begin(), out.margins.channels.end(),
                             [&](const ChannelMargin& m) { return m.margin_db >= min_margin_db; });
  return out;
}

PredictionError prediction_error(const QotReport& predicted, const Telemetry& observed) {
  if (predicted.channels.size() != observed.channels.size())
    throw ValidationError("channel mismatch");
  PredictionError out;
  for (const auto& p : predicted.channels) {
    const auto* o = observed.find(p.service_id);
    if (!o) throw ValidationError("channel mismatch");
    const double d = std::abs(p.gsnr_db - o->gsnr_db);
    out.per_channel.emplace_back(p.service_id, d);
    out.max_abs_db = std::max(out.max_abs_db, d);
  }
  return out;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const StageReport& s) {
  j = json{{"name", s.name},
           {"parameters", s.parameters},
           {"residual_before_db", s.residual_before},
           {"residual_after_db", s.residual_after},
           {"iterations", s.iterations},
           {"pinned", s.pinned},
           {"reverted", s.reverted}};
}

void from_json(const json& j, StageReport& s) {
  j.at("name").get_to(s.name);
  j.at("parameters").get_to(s.parameters);
  j.at("residual_before_db").get_to(s.residual_before);
  j.at("residual_after_db").get_to(s.residual_after);
  j.at("iterations").get_to(s.iterations);
  j.at("pinned").get_to(s.pinned);
  j.at("reverted").get_to(s.reverted);
}

void to_json(json& j, const CalibrationReport& r) {
  j = json{{"stages", r.stages},
           {"channel_count", r.channel_count},
           {"initial_max_abs_gsnr_error_db", r.initial_max_abs_gsnr_error_db},
           {"final_max_abs_gsnr_error_db", r.final_max_abs_gsnr_error_db},
           {"stopped_early", r.stopped_early}};
}

void from_json(const json& j, CalibrationReport& r) {
  j.at("stages").get_to(r.stages);
  j.at("channel_count").get_to(r.channel_count);
  j.at("initial_max_abs_gsnr_error_db").get_to(r.initial_max_abs_gsnr_error_db);
  j.at("final_max_abs_gsnr_error_db").get_to(r.final_max_abs_gsnr_error_db);
  j.at("stopped_early").get_to(r.stopped_early);
}

void to_json(json& j, const RehearsalResult& r) {
  j = json{{"predicted", r.predicted},
           {"margins", r.margins},
           {"services_after", r.services_after},
           {"min_margin_db", r.min_margin_db},
           {"feasible", r.feasible}};
}

void from_json(const json& j, RehearsalResult& r) {
  j.at("predicted").get_to(r.predicted);
  j.at("margins").get_to(r.margins);
  j.at("services_after").get_to(r.services_after);
  j.at("min_margin_db").get_to(r.min_margin_db);
  j.at("feasible").get_to(r.feasible);
}

std::string export_twin(const TwinModel& twin) {
  json j = topology_to_json(twin.topology);
  j["calibration"] = {
      {"status", twin.status == CalibrationStatus::Calibrated ? "Calibrated" : "Uncalibrated"},
      {"history", twin.history}};
  return j.dump(2);
}

TwinModel import_twin(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("twin parse error: ") + e.what());
  }
  TwinModel twin(topology_from_json(j));
  if (j.contains("calibration")) {
    try {
      const auto& c = j.at("calibration");
      const auto status = c.at("status").get<std::string>();
      if (status == "Calibrated") {
        twin.status = CalibrationStatus::Calibrated;
      } else if (status == "Uncalibrated") {
        twin.status = CalibrationStatus::Uncalibrated;
      } else {
        throw ConfigError("unknown calibration status '" + status + "'");
      }
      c.at("history").get_to(twin.history);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("twin parse error: ") + e.what());
    }
  }
  return twin;
}

}  // namespace ztnet
