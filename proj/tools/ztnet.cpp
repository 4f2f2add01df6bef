// ztnet: run the reference cases and poke at the individual tools.
//
//   ztnet run case1 --seed 0
//   ztnet qot --services data/case1_services.json
//   ztnet rsa plan --occupancy data/case3_services.json --src 5 --dst 1 --rate 800
//   ztnet pool dump case2 --seed 0

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"
#include "ztnet/agents.hpp"
#include "ztnet/orchestrator.hpp"
#include "ztnet/qot.hpp"
#include "ztnet/rsa.hpp"
#include "ztnet/scenario.hpp"
#include "ztnet/twin.hpp"

using nlohmann::json;
using namespace ztnet;

namespace {

struct Common {
  std::string topology;
  std::uint64_t seed = 0;
  std::optional<double> noise_sigma;
  std::string planner = "deterministic";
  std::string endpoint;
  std::string report;
  std::string format = "text";
  std::string log_level = "warn";
  bool no_perturb = false;
};

void add_common(CLI::App* app, Common& c, bool scenario_flags) {
  app->add_option("--topology", c.topology, "topology file")->envname("ZTNET_TOPOLOGY");
  app->add_option("--format", c.format, "text|structured")
      ->check(CLI::IsMember({"text", "structured"}))
      ->envname("ZTNET_FORMAT");
  app->add_option("--log-level", c.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->envname("ZTNET_LOG_LEVEL");
  if (!scenario_flags) return;
  app->add_option("--seed", c.seed, "field perturbation and telemetry seed")->envname("ZTNET_SEED");
  app->add_option("--noise-sigma", c.noise_sigma, "telemetry noise sigma in dB")
      ->envname("ZTNET_NOISE_SIGMA");
  app->add_option("--planner", c.planner, "deterministic|generative")
      ->check(CLI::IsMember({"deterministic", "generative"}))
      ->envname("ZTNET_PLANNER");
  app->add_option("--planner-endpoint", c.endpoint, "http://host:port/path of a planner")
      ->envname("ZTNET_PLANNER_ENDPOINT");
  app->add_option("--report", c.report, "write the structured report here (text to <path>.txt)")
      ->envname("ZTNET_REPORT");
  app->add_flag("--no-perturb", c.no_perturb, "field equals the nominal topology");
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::stderr_color_mt("ztnet");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::from_str(level));
}

ScenarioOutcome run_case(const std::string& name, const Common& c) {
  auto spec = load_scenario(name);
  if (!c.topology.empty()) override_topology(spec, c.topology);
  RunOptions opt;
  opt.seed = c.seed;
  opt.noise_sigma_db = c.noise_sigma;
  opt.perturb = !c.no_perturb;
  opt.planner = c.planner;
  opt.planner_endpoint = c.endpoint;
  spdlog::info("running {} seed {} planner {}", spec.id, c.seed, c.planner);
  auto out = run_scenario(spec, opt);
  if (out.trace.planner_fallback) {
    spdlog::warn("generative planner fell back to rules: {}", out.trace.fallback_reason);
  }
  for (const auto& s : out.trace.steps) {
    if (s.status == StepStatus::Completed) {
      spdlog::info("step {} {} completed in {:.3f} s", s.step_id, s.name, s.duration_s);
    } else {
      spdlog::warn("step {} {} failed: {}", s.step_id, s.name, s.reason);
    }
  }
  return out;
}

json structured(const ScenarioOutcome& out, bool with_wall_time) {
  return json{{"scenario", out.spec.id},
              {"report", report_to_json(out.report, with_wall_time)},
              {"checks", checks_to_json(out.checks)},
              {"exit_code", out.exit_code}};
}

std::string checks_text(const ScenarioOutcome& out) {
  std::ostringstream os;
  os << "\nchecks\n";
  for (const auto& c : out.checks) {
    os << "  " << (c.pass ? "ok  " : "FAIL") << " " << c.name;
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << "\n";
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

int cmd_run(const std::string& name, const Common& c) {
  const auto out = run_case(name, c);
  const auto text = render_text(out.report) + checks_text(out);
  if (c.format == "structured") {
    std::cout << structured(out, true).dump(2) << "\n";
  } else {
    std::cout << text;
  }
  if (!c.report.empty()) {
    write_file(c.report, structured(out, true).dump(2) + "\n");
    write_file(c.report + ".txt", text);
  }
  return out.exit_code;
}

NetworkTopology topology_or_default(const Common& c) {
  return load_topology_file(c.topology.empty() ? default_data_dir() + "/default_topology.json"
                                               : c.topology);
}

int cmd_qot(const Common& c, const std::string& services_path) {
  const auto topo = topology_or_default(c);
  const auto services = load_services_file(services_path);
  for (const auto& s : services) {
    try {
      validate_service(topo, s);
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }
  const TwinModel twin(topo);
  const auto report = estimate_qot(twin, services);
  std::map<std::string, int> rates;
  for (const auto& s : services) rates[s.id] = s.rate_gbps;
  const auto margins = margin(report, rates);
  if (c.format == "structured") {
    std::cout << json{{"report", report}, {"margins", margins}}.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << std::left << std::setw(14) << "service" << std::setw(12) << "center_thz"
            << std::setw(10) << "gsnr_db" << std::setw(10) << "rx_dbm" << "margin_db\n";
  for (std::size_t i = 0; i < report.channels.size(); ++i) {
    const auto& ch = report.channels[i];
    std::cout << std::left << std::setw(14) << ch.service_id << std::setw(12)
              << format_number(ch.center_thz, 3) << std::setw(10) << format_number(ch.gsnr_db, 2)
              << std::setw(10) << format_number(ch.received_power_dbm, 2)
              << format_number(margins.channels[i].margin_db, 2) << "\n";
  }
  return kExitOk;
}

struct RsaArgs {
  std::string occupancy;
  int src = 0;
  int dst = 0;
  int rate = 400;
  int k = 3;
  double min_margin = 1.0;
  std::string id;
};

int cmd_rsa_plan(const Common& c, const RsaArgs& a) {
  const auto topo = topology_or_default(c);
  std::vector<Service> current;
  if (!a.occupancy.empty()) current = load_services_file(a.occupancy);
  OccupancyMap occ;
  try {
    occ = OccupancyMap::from_services(topo, current);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("occupancy: ") + e.what());
  }
  PlanRequest req;
  req.src = a.src;
  req.dst = a.dst;
  req.rate_gbps = a.rate;
  req.k = a.k;
  req.min_margin_db = a.min_margin;
  req.service_id = a.id;
  const TwinModel twin(topo);
  PlanResult plan;
  try {
    plan = plan_service(topo, occ, twin, current, req);
  } catch (const PlanningError& e) {
    std::cerr << "no placement: " << e.what() << "\n";
    return kExitScenarioFailure;
  }
  if (c.format == "structured") {
    std::cout << json(plan).dump(2) << "\n";
    return kExitOk;
  }
  std::string nodes;
  for (auto n : plan.path.nodes) nodes += (nodes.empty() ? "" : "-") + std::to_string(n);
  double margin_db = 0.0;
  for (const auto& m : plan.rehearsal.margins.channels) {
    if (m.service_id == plan.service.id) margin_db = m.margin_db;
  }
  std::cout << "service " << plan.service.id << " (" << plan.service.rate_gbps << "G)\n"
            << "path " << nodes << " (" << format_number(plan.path.length_km, 1) << " km)\n"
            << "start slice " << plan.start_slice << ", width " << plan.service.width_slices
            << "\n"
            << "center " << format_number(plan.service.center_thz, 2) << " THz\n"
            << "predicted margin " << format_number(margin_db, 2) << " dB\n";
  return kExitOk;
}

int cmd_pool_dump(const std::string& name, const Common& c) {
  const auto out = run_case(name, c);
  std::cout << out.pool->dump();
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ztnet: autonomous optical network operations on a digital twin"};
  app.require_subcommand(1);

  Common run_c, qot_c, rsa_c, pool_c;
  std::string run_case_name, pool_case_name, services_path;
  RsaArgs rsa;

  auto* run = app.add_subcommand("run", "run a reference case end to end");
  run->add_option("case", run_case_name, "case1|case2|case3 or a scenario file")->required();
  add_common(run, run_c, true);

  auto* qot = app.add_subcommand("qot", "estimate QoT for a service roster on the nominal model");
  qot->add_option("--services", services_path, "services file")
      ->envname("ZTNET_SERVICES")
      ->default_val(default_data_dir() + "/case1_services.json");
  add_common(qot, qot_c, false);

  auto* rsa_cmd = app.add_subcommand("rsa", "routing and spectrum assignment");
  rsa_cmd->require_subcommand(1);
  auto* plan = rsa_cmd->add_subcommand("plan", "place a new service");
  plan->add_option("--occupancy", rsa.occupancy, "services already lit (empty: none)");
  plan->add_option("--src", rsa.src, "source site")->required();
  plan->add_option("--dst", rsa.dst, "destination site")->required();
  plan->add_option("--rate", rsa.rate, "line rate in Gb/s");
  plan->add_option("--k", rsa.k, "candidate paths");
  plan->add_option("--min-margin", rsa.min_margin, "required margin in dB");
  plan->add_option("--id", rsa.id, "service id");
  add_common(plan, rsa_c, false);

  auto* pool = app.add_subcommand("pool", "shared pool inspection");
  pool->require_subcommand(1);
  auto* dump = pool->add_subcommand("dump", "run a case and print the pool and audit log");
  dump->add_option("case", pool_case_name, "case1|case2|case3")->required();
  add_common(dump, pool_c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  const Common& active = run->parsed()    ? run_c
                         : qot->parsed()  ? qot_c
                         : plan->parsed() ? rsa_c
                                          : pool_c;
  try {
    setup_logging(active.log_level);
    if (run->parsed()) return cmd_run(run_case_name, run_c);
    if (qot->parsed()) return cmd_qot(qot_c, services_path);
    if (plan->parsed()) return cmd_rsa_plan(rsa_c, rsa);
    if (dump->parsed()) return cmd_pool_dump(pool_case_name, pool_c);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const UnrecognizedIntent& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kExitScenarioFailure;
  }
  return kExitOk;
}
