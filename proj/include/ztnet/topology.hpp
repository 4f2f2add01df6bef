#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ztnet {

using SiteId = int;

struct FiberSpan {
  double length_km = 0.0;
  double attenuation_db_per_km = 0.20;
  double dispersion_ps_nm_km = 16.7;
  double gamma_per_w_km = 1.3;
  double connector_loss_in_db = 0.0;
  double connector_loss_out_db = 0.0;

  double fiber_loss_db() const { return attenuation_db_per_km * length_km; }
  double total_loss_db() const {
    return connector_loss_in_db + fiber_loss_db() + connector_loss_out_db;
  }

  bool operator==(const FiberSpan&) const = default;
};

struct Amplifier {
  double gain_db = 0.0;
  double noise_figure_db = 5.0;
  // Linear dB tilt across the band: +tilt/2 at the upper band edge,
  // -tilt/2 at the lower one.
  double tilt_db = 0.0;

  bool operator==(const Amplifier&) const = default;
};

// One fiber span followed by its post-amplifier.
struct OmsElement {
  FiberSpan span;
  Amplifier amp;

  bool operator==(const OmsElement&) const = default;
};

struct Oms {
  SiteId a = 0;
  SiteId b = 0;
  std::vector<OmsElement> elements;

  double length_km() const;
  bool connects(SiteId x, SiteId y) const {
    return (a == x && b == y) || (a == y && b == x);
  }

  bool operator==(const Oms&) const = default;
};

struct ChannelGrid {
  double base_thz = 191.0;
  double slice_width_ghz = 12.5;
  int slice_count = 480;

  double slice_width_thz() const { return slice_width_ghz / 1000.0; }
  double upper_edge_thz() const {
    return base_thz + slice_width_thz() * slice_count;
  }
  double mid_thz() const { return base_thz + slice_width_thz() * slice_count / 2.0; }
  double bandwidth_thz() const { return slice_width_thz() * slice_count; }
  double center_of(int start_slice, int width_slices) const {
    return base_thz + (start_slice + width_slices / 2.0) * slice_width_thz();
  }

  bool operator==(const ChannelGrid&) const = default;
};

struct Site {
  SiteId id = 0;
  std::string label;

  bool operator==(const Site&) const = default;
};

class NetworkTopology {
 public:
  std::vector<Site> sites;
  std::vector<Oms> omses;
  ChannelGrid grid;
  double nf_floor_db = 3.0;

  bool has_site(SiteId id) const;
  // Index into `omses` of the OMS joining x and y, in either direction.
  std::optional<std::size_t> find_oms(SiteId x, SiteId y) const;

  // Throws ValidationError when any structural invariant is broken.
  void validate() const;

  bool operator==(const NetworkTopology&) const = default;
};

// An OMS as traversed by a path: `reversed` means the path goes b -> a and
// the elements are visited back to front.
struct Hop {
  std::size_t oms_index = 0;
  bool reversed = false;
  SiteId from = 0;
  SiteId to = 0;
};

// Hops of a path in traversal order. Throws ValidationError for paths shorter
// than two sites or with a missing OMS between consecutive sites.
std::vector<Hop> hop_chain(const NetworkTopology& topo, const std::vector<SiteId>& path);

// Same chain materialized as OMS copies whose endpoints and elements are in
// traversal order.
std::vector<Oms> oms_chain(const NetworkTopology& topo, const std::vector<SiteId>& path);

// Start slice of a channel centered at `center_thz` occupying `width_slices`.
// Throws ValidationError when the center is off-grid or outside the band.
int slice_index_of(const ChannelGrid& grid, double center_thz, int width_slices);

// ---------------------------------------------------------------------------
// Services

enum class ServiceState { Planned, Active, Dropped };

std::string_view state_name(ServiceState s);

struct RateSpec {
  int rate_gbps = 0;
  std::string format;
  double symbol_rate_gbd = 0.0;
  double required_gsnr_db = 0.0;
  int width_slices = 8;
};

const std::vector<RateSpec>& rate_table();
// Throws ValidationError("unknown rate ...") for rates outside the table.
const RateSpec& rate_spec(int rate_gbps);

struct Service {
  std::string id;
  std::vector<SiteId> path;
  double center_thz = 0.0;
  int width_slices = 8;
  int rate_gbps = 400;
  std::string format;
  double symbol_rate_gbd = 64.0;
  double launch_power_dbm = 0.0;
  bool is_protected = false;
  ServiceState state = ServiceState::Active;
  // Operator-facing grouping label, e.g. the "A"/"B"/"C" path names.
  std::string group;

  bool operator==(const Service&) const = default;
};

// Service with format/symbol rate/width filled from the rate table.
Service make_service(std::string id, std::vector<SiteId> path, double center_thz,
                     int rate_gbps, double launch_power_dbm = 0.0,
                     std::string group = {});

// Checks path validity against the topology and on-grid placement.
void validate_service(const NetworkTopology& topo, const Service& svc);

// ---------------------------------------------------------------------------
// Configuration I/O

inline constexpr int kTopologySchemaVersion = 1;

NetworkTopology load_topology(std::string_view config_text);
NetworkTopology load_topology_file(const std::string& path);
nlohmann::json topology_to_json(const NetworkTopology& topo);
NetworkTopology topology_from_json(const nlohmann::json& j);
std::string serialize_topology(const NetworkTopology& topo);

void to_json(nlohmann::json& j, const Service& s);
void from_json(const nlohmann::json& j, Service& s);

std::vector<Service> load_services(std::string_view text);
std::vector<Service> load_services_file(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace ztnet
