#pragma once

// Stand-in for the deployed network and its NMS. Holds hidden "true" plant
// parameters, executes configuration commands and serves noisy telemetry.

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/qot.hpp"
#include "ztnet/roles.hpp"
#include "ztnet/topology.hpp"

namespace ztnet {

struct PerturbationModel {
  double attenuation_sigma = 0.01;  // dB/km
  double attenuation_clip = 0.03;
  double connector_max_db = 0.5;  // uniform [0, max) added per connector
  double nf_sigma_db = 0.4;
  double nf_clip_db = 1.0;
  double tilt_sigma_db = 0.2;
};

struct FieldState {
  NetworkTopology true_topology;
  std::vector<Service> active_services;
  std::uint64_t seed = 0;
  double noise_sigma_db = 0.1;
  std::uint64_t telemetry_seq = 0;

  bool operator==(const FieldState&) const = default;
};

// Nominal topology plus seeded perturbations of span attenuation, connector
// losses, amplifier NF and tilt. Amplifier gains are commissioned to the
// perturbed span loss. With `perturb == false` the plant equals nominal.
FieldState init_field(const NetworkTopology& topo, std::uint64_t seed, double noise_sigma_db,
                      bool perturb = true, const PerturbationModel& model = {});

struct ChannelTelemetry {
  std::string service_id;
  double center_thz = 0.0;
  double received_power_dbm = 0.0;
  double gsnr_db = 0.0;

  bool operator==(const ChannelTelemetry&) const = default;
};

struct SpanTelemetry {
  double amp_input_dbm = 0.0;
  double amp_output_dbm = 0.0;

  bool operator==(const SpanTelemetry&) const = default;
};

// One direction of travel over an OMS that carries at least one channel.
struct OmsTelemetry {
  SiteId from = 0;
  SiteId to = 0;
  double input_power_dbm = 0.0;  // total launched into the OMS
  std::vector<SpanTelemetry> spans;
  double total_power_dbm = 0.0;  // total at the OMS output

  bool operator==(const OmsTelemetry&) const = default;
};

struct Telemetry {
  std::uint64_t seq = 0;
  std::vector<ChannelTelemetry> channels;
  std::vector<OmsTelemetry> omses;

  const ChannelTelemetry* find(const std::string& service_id) const;
  bool operator==(const Telemetry&) const = default;
};

// Noise-free telemetry computed from a plant and roster.
Telemetry telemetry_from_plant(const NetworkTopology& plant, std::span<const Service> services);

// Telemetry from the hidden parameters plus N(0, sigma) on every dB value.
// Draws come from a stream keyed by (seed, seq); seq advances by one.
Telemetry collect_performance(FieldState& state);

// Element-wise dB mean of records that share the same channel/OMS layout.
Telemetry average_telemetry(std::span<const Telemetry> batch);

// ---------------------------------------------------------------------------
// NMS commands

enum class CommandKind { AddService, DropService, AdjustPower };

std::string_view command_kind_name(CommandKind k);

struct NmsCommand {
  CommandKind kind = CommandKind::DropService;
  std::optional<Service> service;  // AddService
  std::string service_id;          // DropService / AdjustPower
  double launch_power_dbm = 0.0;   // AdjustPower
  AgentRole issuer = AgentRole::ConfigurationDeployer;
  std::string digest;

  bool operator==(const NmsCommand&) const = default;
};

// Canonical bytes covered by the digest (kind and payload, not issuer).
std::string canonical_payload(const NmsCommand& cmd);
std::string command_digest(const NmsCommand& cmd);

NmsCommand make_add_command(Service svc, AgentRole issuer = AgentRole::ConfigurationDeployer);
NmsCommand make_drop_command(std::string service_id,
                             AgentRole issuer = AgentRole::ConfigurationDeployer);
NmsCommand make_adjust_power_command(std::string service_id, double launch_power_dbm,
                                     AgentRole issuer = AgentRole::ConfigurationDeployer);

// Applies a command's effect to a service roster (no digest check). Throws
// ValidationError on unknown id, slice collision, off-grid frequency or an
// invalid path. The roster is unchanged when it throws.
void apply_to_roster(std::vector<Service>& roster, const NmsCommand& cmd,
                     const NetworkTopology& topo);

// Verifies the digest then applies. Strong guarantee: on any error `state`
// is untouched.
void apply_command(FieldState& state, const NmsCommand& cmd);

void to_json(nlohmann::json& j, const NmsCommand& c);
void from_json(const nlohmann::json& j, NmsCommand& c);
void to_json(nlohmann::json& j, const Telemetry& t);
void from_json(const nlohmann::json& j, Telemetry& t);

// In-process NMS surface. Serializes access to one FieldState.
class FieldNetwork {
 public:
  explicit FieldNetwork(FieldState state) : state_(std::move(state)) {}

  Telemetry collect_performance();
  void apply_command(const NmsCommand& cmd);
  // All-or-nothing application of an ordered command list.
  void apply_commands(std::span<const NmsCommand> cmds);
  std::vector<Service> list_services() const;

  FieldState snapshot() const;
  // Noise-free QoT on the hidden parameters.
  QotReport true_qot() const;

 private:
  mutable std::mutex mu_;
  FieldState state_;
};

}  // namespace ztnet
