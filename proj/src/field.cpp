#include "ztnet/field.hpp"

#include <algorithm>
#include <random>

#include "ztnet/common.hpp"
#include "ztnet/digest.hpp"

namespace ztnet {

using nlohmann::json;

namespace {

double clipped_normal(std::mt19937_64& rng, double sigma, double clip) {
  std::normal_distribution<double> dist(0.0, sigma);
  return std::clamp(dist(rng), -clip, clip);
}

std::seed_seq stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream),
                       static_cast<std::uint32_t>(counter),
                       static_cast<std::uint32_t>(counter >> 32)};
}

constexpr std::uint64_t kPerturbationStream = 0x50455254;  // "PERT"
constexpr std::uint64_t kTelemetryStream = 0x54454c45;     // "TELE"

}  // namespace

FieldState init_field(const NetworkTopology& topo, std::uint64_t seed, double noise_sigma_db,
                      bool perturb, const PerturbationModel& model) {
  FieldState state;
  state.true_topology = topo;
  state.seed = seed;
  state.noise_sigma_db = noise_sigma_db;
  if (!perturb) return state;

  auto seq = stream_seed(seed, kPerturbationStream, 0);
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> connector(0.0, model.connector_max_db);
  std::normal_distribution<double> tilt(0.0, model.tilt_sigma_db);
  for (auto& oms : state.true_topology.omses) {
    for (auto& e : oms.elements) {
      e.span.attenuation_db_per_km +=
          clipped_normal(rng, model.attenuation_sigma, model.attenuation_clip);
      e.span.connector_loss_in_db += connector(rng);
      e.span.connector_loss_out_db += connector(rng);
      e.amp.noise_figure_db += clipped_normal(rng, model.nf_sigma_db, model.nf_clip_db);
      e.amp.noise_figure_db = std::max(e.amp.noise_figure_db, topo.nf_floor_db);
      e.amp.tilt_db += tilt(rng);
      e.amp.gain_db = e.span.total_loss_db();
    }
  }
  return state;
}

const ChannelTelemetry* Telemetry::find(const std::string& service_id) const {
  for (const auto& c : channels) {
    if (c.service_id == service_id) return &c;
  }
  return nullptr;
}

Telemetry telemetry_from_plant(const NetworkTopology& plant, std::span<const Service> services) {
  Telemetry t;
  if (services.empty()) return t;
  const auto net = propagate(plant, services);
  for (const auto& c : net.report.channels) {
    t.channels.push_back(
        ChannelTelemetry{c.service_id, c.center_thz, c.received_power_dbm, c.gsnr_db});
  }
  for (const auto& link : net.links) {
    OmsTelemetry o;
    o.from = link.from;
    o.to = link.to;
    o.input_power_dbm = mw_to_dbm(link.input_mw);
    for (const auto& sp : link.spans) {
      o.spans.push_back(SpanTelemetry{mw_to_dbm(sp.amp_input_mw), mw_to_dbm(sp.amp_output_mw)});
    }
    o.total_power_dbm = o.spans.back().amp_output_dbm;
    t.omses.push_back(std::move(o));
  }
  return t;
}

Telemetry collect_performance(FieldState& state) {
  Telemetry t = telemetry_from_plant(state.true_topology, state.active_services);
  t.seq = state.telemetry_seq++;
  if (state.noise_sigma_db > 0.0) {
    auto seq = stream_seed(state.seed, kTelemetryStream, t.seq);
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, state.noise_sigma_db);
    for (auto& c : t.channels) {
      c.received_power_dbm += noise(rng);
      c.gsnr_db += noise(rng);
    }
    for (auto& o : t.omses) {
      o.input_power_dbm += noise(rng);
      for (auto& s : o.spans) {
        s.amp_input_dbm += noise(rng);
        s.amp_output_dbm += noise(rng);
      }
      o.total_power_dbm += noise(rng);
    }
  }
  return t;
}

Telemetry average_telemetry(std::span<const Telemetry> batch) {
  if (batch.empty()) throw ValidationError("empty telemetry batch");
  Telemetry out = batch.front();
  const auto n = static_cast<double>(batch.size());
  for (std::size_t r = 1; r < batch.size(); ++r) {
    const auto& t = batch[r];
    if (t.channels.size() != out.channels.size() || t.omses.size() != out.omses.size())
      throw ValidationError("telemetry batch layout mismatch");
    for (std::size_t i = 0; i < t.channels.size(); ++i) {
      if (t.channels[i].service_id != out.channels[i].service_id)
        throw ValidationError("telemetry batch layout mismatch");
      out.channels[i].received_power_dbm += t.channels[i].received_power_dbm;
      out.channels[i].gsnr_db += t.channels[i].gsnr_db;
    }
    for (std::size_t i = 0; i < t.omses.size(); ++i) {
      auto& o = out.omses[i];
      if (t.omses[i].spans.size() != o.spans.size() || t.omses[i].from != o.from ||
          t.omses[i].to != o.to)
        throw ValidationError("telemetry batch layout mismatch");
      o.input_power_dbm += t.omses[i].input_power_dbm;
      for (std::size_t s = 0; s < o.spans.size(); ++s) {
        o.spans[s].amp_input_dbm += t.omses[i].spans[s].amp_input_dbm;
        o.spans[s].amp_output_dbm += t.omses[i].spans[s].amp_output_dbm;
      }
      o.total_power_dbm += t.omses[i].total_power_dbm;
    }
  }
  for (auto& c : out.channels) {
    c.received_power_dbm /= n;
    c.gsnr_db /= n;
  }
  for (auto& o : out.omses) {
    o.input_power_dbm /= n;
    for (auto& s : o.spans) {
      s.amp_input_dbm /= n;
      s.amp_output_dbm /= n;
    }
    o.total_power_dbm /= n;
  }
  out.seq = batch.back().seq;
  return out;
}

// ---------------------------------------------------------------------------

std::string_view command_kind_name(CommandKind k) {
  switch (k) {
    case CommandKind::AddService: return "AddService";
    case CommandKind::DropService: return "DropService";
    case CommandKind::AdjustPower: return "AdjustPower";
  }
  return "?";
}

namespace {

CommandKind command_kind_from_name(const std::string& s) {
  if (s == "AddService") return CommandKind::AddService;
  if (s == "DropService") return CommandKind::DropService;
  if (s == "AdjustPower") return CommandKind::AdjustPower;
  throw ValidationError("unknown command kind '" + s + "'");
}

json payload_json(const NmsCommand& cmd) {
  json j;
  j["kind"] = std::string(command_kind_name(cmd.kind));
  switch (cmd.kind) {
    case CommandKind::AddService:
      j["service"] = cmd.service ? json(*cmd.service) : json(nullptr);
      break;
    case CommandKind::DropService:
      j["service_id"] = cmd.service_id;
      break;
    case CommandKind::AdjustPower:
      j["service_id"] = cmd.service_id;
      j["launch_power_dbm"] = cmd.launch_power_dbm;
      break;
  }
  return j;
}

NmsCommand sealed(NmsCommand cmd) {
  cmd.digest = command_digest(cmd);
  return cmd;
}

}  // namespace

std::string canonical_payload(const NmsCommand& cmd) { return payload_json(cmd).dump(); }

std::string command_digest(const NmsCommand& cmd) { return sha256_hex(canonical_payload(cmd)); }

NmsCommand make_add_command(Service svc, AgentRole issuer) {
  NmsCommand c;
  c.kind = CommandKind::AddService;
  c.service_id = svc.id;
  c.service = std::move(svc);
  c.issuer = issuer;
  return sealed(std::move(c));
}

NmsCommand make_drop_command(std::string service_id, AgentRole issuer) {
  NmsCommand c;
  c.kind = CommandKind::DropService;
  c.service_id = std::move(service_id);
  c.issuer = issuer;
  return sealed(std::move(c));
}

NmsCommand make_adjust_power_command(std::string service_id, double launch_power_dbm,
                                     AgentRole issuer) {
  NmsCommand c;
  c.kind = CommandKind::AdjustPower;
  c.service_id = std::move(service_id);
  c.launch_power_dbm = launch_power_dbm;
  c.issuer = issuer;
  return sealed(std::move(c));
}

void apply_to_roster(std::vector<Service>& roster, const NmsCommand& cmd,
                     const NetworkTopology& topo) {
  auto find = [&](const std::string& id) {
    return std::find_if(roster.begin(), roster.end(),
                        [&](const Service& s) { return s.id == id; });
  };
  switch (cmd.kind) {
    case CommandKind::AddService: {
      if (!cmd.service) throw ValidationError("AddService without service payload");
      Service svc = *cmd.service;
      validate_service(topo, svc);
      if (find(svc.id) != roster.end())
        throw ValidationError("duplicate service id " + svc.id);
      const int start = slice_index_of(topo.grid, svc.center_thz, svc.width_slices);
      const auto hops = hop_chain(topo, svc.path);
      for (const auto& other : roster) {
        const int o_start = slice_index_of(topo.grid, other.center_thz, other.width_slices);
        if (!(start < o_start + other.width_slices && o_start < start + svc.width_slices))
          continue;
        for (const auto& h : hop_chain(topo, other.path)) {
          for (const auto& mine : hops) {
            if (mine.oms_index == h.oms_index) {
              throw ValidationError("slice collision between " + svc.id + " and " + other.id);
            }
          }
        }
      }
      svc.state = ServiceState::Active;
      roster.push_back(std::move(svc));
      return;
    }
    case CommandKind::DropService: {
      const auto it = find(cmd.service_id);
      if (it == roster.end()) throw ValidationError("unknown service id " + cmd.service_id);
      roster.erase(it);
      return;
    }
    case CommandKind::AdjustPower: {
      const auto it = find(cmd.service_id);
      if (it == roster.end()) throw ValidationError("unknown service id " + cmd.service_id);
      it->launch_power_dbm = cmd.launch_power_dbm;
      return;
    }
  }
}

void apply_command(FieldState& state, const NmsCommand& cmd) {
  if (cmd.digest != command_digest(cmd))
    throw IntegrityError("integrity: command digest mismatch");
  auto roster = state.active_services;
  apply_to_roster(roster, cmd, state.true_topology);
  state.active_services = std::move(roster);
}

void to_json(json& j, const NmsCommand& c) {
  j = payload_json(c);
  j["issuer"] = std::string(role_name(c.issuer));
  j["digest"] = c.digest;
}

void from_json(const json& j, NmsCommand& c) {
  c.kind = command_kind_from_name(j.at("kind").get<std::string>());
  c.service.reset();
  c.service_id.clear();
  c.launch_power_dbm = 0.0;
  switch (c.kind) {
    case CommandKind::AddService:
      if (!j.at("service").is_null()) {
        c.service = j.at("service").get<Service>();
        c.service_id = c.service->id;
      }
      break;
    case CommandKind::DropService:
      c.service_id = j.at("service_id").get<std::string>();
      break;
    case CommandKind::AdjustPower:
      c.service_id = j.at("service_id").get<std::string>();
      c.launch_power_dbm = j.at("launch_power_dbm").get<double>();
      break;
  }
  const auto issuer = role_from_name(j.at("issuer").get<std::string>());
  if (!issuer) throw ValidationError("unknown issuer role");
  c.issuer = *issuer;
  c.digest = j.at("digest").get<std::string>();
}

void to_json(json& j, const Telemetry& t) {
  j = json::object();
  j["seq"] = t.seq;
  j["channels"] = json::array();
  for (const auto& c : t.channels) {
    j["channels"].push_back({{"service_id", c.service_id},
                             {"center_thz", c.center_thz},
                             {"received_power_dbm", c.received_power_dbm},
                             {"gsnr_db", c.gsnr_db}});
  }
  j["omses"] = json::array();
  for (const auto& o : t.omses) {
    json spans = json::array();
    for (const auto& s : o.spans) {
      spans.push_back({{"amp_input_dbm", s.amp_input_dbm}, {"amp_output_dbm", s.amp_output_dbm}});
    }
    j["omses"].push_back({{"from", o.from},
                          {"to", o.to},
                          {"input_power_dbm", o.input_power_dbm},
                          {"spans", spans},
                          {"total_power_dbm", o.total_power_dbm}});
  }
}

void from_json(const json& j, Telemetry& t) {
  t = Telemetry{};
  t.seq = j.at("seq").get<std::uint64_t>();
  for (const auto& c : j.at("channels")) {
    t.channels.push_back(ChannelTelemetry{c.at("service_id").get<std::string>(),
                                          c.at("center_thz").get<double>(),
                                          c.at("received_power_dbm").get<double>(),
                                          c.at("gsnr_db").get<double>()});
  }
  for (const auto& o : j.at("omses")) {
    OmsTelemetry ot;
    ot.from = o.at("from").get<SiteId>();
    ot.to = o.at("to").get<SiteId>();
    ot.input_power_dbm = o.at("input_power_dbm").get<double>();
    for (const auto& s : o.at("spans")) {
      ot.spans.push_back(
          SpanTelemetry{s.at("amp_input_dbm").get<double>(), s.at("amp_output_dbm").get<double>()});
    }
    ot.total_power_dbm = o.at("total_power_dbm").get<double>();
    t.omses.push_back(std::move(ot));
  }
}

// ---------------------------------------------------------------------------

Telemetry FieldNetwork::collect_performance() {
  std::lock_guard lock(mu_);
  return ztnet::collect_performance(state_);
}

void FieldNetwork::apply_command(const NmsCommand& cmd) {
  std::lock_guard lock(mu_);
  ztnet::apply_command(state_, cmd);
}

void FieldNetwork::apply_commands(std::span<const NmsCommand> cmds) {
  std::lock_guard lock(mu_);
  FieldState scratch = state_;
  for (const auto& c : cmds) ztnet::apply_command(scratch, c);
  state_ = std::move(scratch);
}

std::vector<Service> FieldNetwork::list_services() const {
  std::lock_guard lock(mu_);
  return state_.active_services;
}

FieldState FieldNetwork::snapshot() const {
  std::lock_guard lock(mu_);
  return state_;
}

QotReport FieldNetwork::true_qot() const {
  std::lock_guard lock(mu_);
  if (state_.active_services.empty()) return {};
  return estimate_path_qot(state_.true_topology, state_.active_services);
}

}  // namespace ztnet
