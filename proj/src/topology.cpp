#include "ztnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ztnet/common.hpp"

namespace ztnet {

using nlohmann::json;

double Oms::length_km() const {
  double total = 0.0;
  for (const auto& e : elements) total += e.span.length_km;
  return total;
}

bool NetworkTopology::has_site(SiteId id) const {
  return std::any_of(sites.begin(), sites.end(),
                     [id](const Site& s) { return s.id == id; });
}

std::optional<std::size_t> NetworkTopology::find_oms(SiteId x, SiteId y) const {
  for (std::size_t i = 0; i < omses.size(); ++i) {
    if (omses[i].connects(x, y)) return i;
  }
  return std::nullopt;
}

namespace {

std::string oms_name(const Oms& o) {
  return std::to_string(o.a) + "-" + std::to_string(o.b);
}

void validate_element(const OmsElement& e, const std::string& where, double nf_floor) {
  const auto& s = e.span;
  if (!(s.length_km > 0.0))
    throw ValidationError("span length must be > 0 (" + where + ")");
  if (!(s.attenuation_db_per_km > 0.0))
    throw ValidationError("span attenuation must be > 0 (" + where + ")");
  if (!(s.gamma_per_w_km >= 0.0))
    throw ValidationError("span gamma must be >= 0 (" + where + ")");
  if (!(s.dispersion_ps_nm_km > 0.0))
    throw ValidationError("span dispersion must be > 0 (" + where + ")");
  if (!(s.connector_loss_in_db >= 0.0) || !(s.connector_loss_out_db >= 0.0))
    throw ValidationError("connector losses must be >= 0 (" + where + ")");
  if (!(e.amp.gain_db >= 0.0))
    throw ValidationError("amplifier gain must be >= 0 (" + where + ")");
  if (!(e.amp.noise_figure_db >= nf_floor))
    throw ValidationError("amplifier noise figure below floor (" + where + ")");
}

}  // namespace

void NetworkTopology::validate() const {
  if (grid.slice_count <= 0) throw ValidationError("grid slice_count must be > 0");
  if (!(grid.slice_width_ghz > 0.0)) throw ValidationError("grid slice width must be > 0");
  std::set<SiteId> ids;
  for (const auto& s : sites) {
    if (!ids.insert(s.id).second)
      throw ValidationError("duplicate site id " + std::to_string(s.id));
  }
  if (sites.empty() || omses.empty())
    throw ValidationError("graph not connected / no links");
  std::set<std::pair<SiteId, SiteId>> seen;
  for (const auto& o : omses) {
    if (o.a == o.b) throw ValidationError("self-loop OMS " + oms_name(o));
    if (!ids.count(o.a) || !ids.count(o.b))
      throw ValidationError("unknown site reference in OMS " + oms_name(o));
    if (o.elements.empty()) throw ValidationError("OMS " + oms_name(o) + " has no spans");
    if (!seen.insert(std::minmax(o.a, o.b)).second)
      throw ValidationError("duplicate OMS " + oms_name(o));
    for (std::size_t i = 0; i < o.elements.size(); ++i) {
      validate_element(o.elements[i], oms_name(o) + "#" + std::to_string(i), nf_floor_db);
    }
  }
  // Connectivity by flood fill.
  std::set<SiteId> reached{sites.front().id};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& o : omses) {
      const bool ha = reached.count(o.a) > 0;
      const bool hb = reached.count(o.b) > 0;
      if (ha != hb) {
        reached.insert(ha ? o.b : o.a);
        grew = true;
      }
    }
  }
  if (reached.size() != ids.size()) throw ValidationError("graph not connected / no links");
}

std::vector<Hop> hop_chain(const NetworkTopology& topo, const std::vector<SiteId>& path) {
  if (path.size() < 2) throw ValidationError("path too short");
  std::vector<Hop> hops;
  hops.reserve(path.size() - 1);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const SiteId from = path[i];
    const SiteId to = path[i + 1];
    if (from == to) throw ValidationError("path repeats site " + std::to_string(from));
    const auto idx = topo.find_oms(from, to);
    if (!idx) {
      throw ValidationError("no OMS " + std::to_string(from) + "-" + std::to_string(to));
    }
    hops.push_back(Hop{*idx, topo.omses[*idx].a != from, from, to});
  }
  return hops;
}

std::vector<Oms> oms_chain(const NetworkTopology& topo, const std::vector<SiteId>& path) {
  std::vector<Oms> chain;
  for (const auto& hop : hop_chain(topo, path)) {
    Oms o = topo.omses[hop.oms_index];
    if (hop.reversed) {
      std::reverse(o.elements.begin(), o.elements.end());
      for (auto& e : o.elements) {
        std::swap(e.span.connector_loss_in_db, e.span.connector_loss_out_db);
      }
    }
    o.a = hop.from;
    o.b = hop.to;
    chain.push_back(std::move(o));
  }
  return chain;
}

int slice_index_of(const ChannelGrid& grid, double center_thz, int width_slices) {
  if (width_slices <= 0) throw ValidationError("channel width must be > 0");
  const double pos = (center_thz - grid.base_thz) / grid.slice_width_thz() - width_slices / 2.0;
  const double rounded = std::round(pos);
  if (std::abs(pos - rounded) > 1e-6) {
    std::ostringstream os;
    os << "off-grid center frequency " << center_thz << " THz";
    throw ValidationError(os.str());
  }
  const auto start = static_cast<long long>(rounded);
  if (start < 0 || start + width_slices > grid.slice_count) {
    std::ostringstream os;
    os << "channel at " << center_thz << " THz exceeds band edge";
    throw ValidationError(os.str());
  }
  return static_cast<int>(start);
}

std::string_view state_name(ServiceState s) {
  switch (s) {
    case ServiceState::Planned: return "Planned";
    case ServiceState::Active: return "Active";
    case ServiceState::Dropped: return "Dropped";
  }
  return "?";
}

namespace {
ServiceState state_from_name(const std::string& s) {
  if (s == "Planned") return ServiceState::Planned;
  if (s == "Active") return ServiceState::Active;
  if (s == "Dropped") return ServiceState::Dropped;
  throw ConfigError("unknown service state '" + s + "'");
}
}  // namespace

const std::vector<RateSpec>& rate_table() {
  static const std::vector<RateSpec> table = {
      {100, "DP-QPSK", 32.0, 10.0, 8},
      {400, "DP-16QAM", 64.0, 17.0, 8},
      {800, "DP-PCS-64QAM", 96.0, 20.0, 8},
  };
  return table;
}

const RateSpec& rate_spec(int rate_gbps) {
  for (const auto& r : rate_table()) {
    if (r.rate_gbps == rate_gbps) return r;
  }
  throw ValidationError("unknown rate " + std::to_string(rate_gbps) + "G");
}

Service make_service(std::string id, std::vector<SiteId> path, double center_thz,
                     int rate_gbps, double launch_power_dbm, std::string group) {
  const auto& spec = rate_spec(rate_gbps);
  Service s;
  s.id = std::move(id);
  s.path = std::move(path);
  s.center_thz = center_thz;
  s.width_slices = spec.width_slices;
  s.rate_gbps = rate_gbps;
  s.format = spec.format;
  s.symbol_rate_gbd = spec.symbol_rate_gbd;
  s.launch_power_dbm = launch_power_dbm;
  s.group = std::move(group);
  return s;
}

void validate_service(const NetworkTopology& topo, const Service& svc) {
  if (svc.id.empty()) throw ValidationError("service without id");
  for (std::size_t i = 0; i + 1 < svc.path.size(); ++i) {
    if (svc.path[i] == svc.path[i + 1])
      throw ValidationError("service " + svc.id + ": repeated consecutive site");
  }
  (void)hop_chain(topo, svc.path);
  (void)slice_index_of(topo.grid, svc.center_thz, svc.width_slices);
  (void)rate_spec(svc.rate_gbps);
  if (!(svc.symbol_rate_gbd > 0.0))
    throw ValidationError("service " + svc.id + ": symbol rate must be > 0");
  if (svc.symbol_rate_gbd > svc.width_slices * topo.grid.slice_width_ghz)
    throw ValidationError("service " + svc.id + ": symbol rate exceeds channel width");
}

// ---------------------------------------------------------------------------
// Configuration I/O

namespace {

FiberSpan parse_span(const json& j, const FiberSpan& defaults) {
  FiberSpan s = defaults;
  s.length_km = j.at("length_km").get<double>();
  s.attenuation_db_per_km = j.value("attenuation_db_per_km", defaults.attenuation_db_per_km);
  s.dispersion_ps_nm_km = j.value("dispersion_ps_nm_km", defaults.dispersion_ps_nm_km);
  s.gamma_per_w_km = j.value("gamma_per_w_km", defaults.gamma_per_w_km);
  s.connector_loss_in_db = j.value("connector_loss_in_db", defaults.connector_loss_in_db);
  s.connector_loss_out_db = j.value("connector_loss_out_db", defaults.connector_loss_out_db);
  return s;
}

}  // namespace

NetworkTopology topology_from_json(const json& j) {
  NetworkTopology topo;
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kTopologySchemaVersion)
      throw ConfigError("unsupported topology schema_version " + std::to_string(version));
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      topo.grid.base_thz = g.value("base_thz", topo.grid.base_thz);
      topo.grid.slice_width_ghz = g.value("slice_width_ghz", topo.grid.slice_width_ghz);
      topo.grid.slice_count = g.value("slice_count", topo.grid.slice_count);
    }
    topo.nf_floor_db = j.value("nf_floor_db", topo.nf_floor_db);

    FiberSpan fiber_defaults;
    Amplifier amp_defaults;
    if (j.contains("defaults")) {
      const auto& d = j.at("defaults");
      if (d.contains("fiber")) {
        json f = d.at("fiber");
        f["length_km"] = 1.0;
        fiber_defaults = parse_span(f, fiber_defaults);
        fiber_defaults.length_km = 0.0;
      }
      if (d.contains("amplifier")) {
        const auto& a = d.at("amplifier");
        amp_defaults.noise_figure_db = a.value("noise_figure_db", amp_defaults.noise_figure_db);
        amp_defaults.tilt_db = a.value("tilt_db", amp_defaults.tilt_db);
      }
    }

    for (const auto& s : j.at("sites")) {
      topo.sites.push_back(Site{s.at("id").get<SiteId>(), s.value("label", std::string{})});
    }
    for (const auto& o : j.at("omses")) {
      Oms oms;
      const auto& ends = o.at("endpoints");
      if (!ends.is_array() || ends.size() != 2)
        throw ConfigError("OMS endpoints must be a pair");
      oms.a = ends[0].get<SiteId>();
      oms.b = ends[1].get<SiteId>();
      for (const auto& sj : o.at("spans")) {
        OmsElement e;
        e.span = parse_span(sj, fiber_defaults);
        e.amp = amp_defaults;
        // Transparent OMS: the post-amplifier compensates the preceding span.
        e.amp.gain_db = e.span.total_loss_db();
        if (sj.contains("amplifier")) {
          const auto& a = sj.at("amplifier");
          e.amp.gain_db = a.value("gain_db", e.amp.gain_db);
          e.amp.noise_figure_db = a.value("noise_figure_db", e.amp.noise_figure_db);
          e.amp.tilt_db = a.value("tilt_db", e.amp.tilt_db);
        }
        oms.elements.push_back(e);
      }
      topo.omses.push_back(std::move(oms));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("topology parse error: ") + e.what());
  }
  topo.validate();
  return topo;
}

NetworkTopology load_topology(std::string_view config_text) {
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("topology parse error: ") + e.what());
  }
  return topology_from_json(j);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

NetworkTopology load_topology_file(const std::string& path) {
  return load_topology(read_text_file(path));
}

json topology_to_json(const NetworkTopology& topo) {
  json j;
  j["schema_version"] = kTopologySchemaVersion;
  j["grid"] = {{"base_thz", topo.grid.base_thz},
               {"slice_width_ghz", topo.grid.slice_width_ghz},
               {"slice_count", topo.grid.slice_count}};
  j["nf_floor_db"] = topo.nf_floor_db;
  j["sites"] = json::array();
  for (const auto& s : topo.sites) j["sites"].push_back({{"id", s.id}, {"label", s.label}});
  j["omses"] = json::array();
  for (const auto& o : topo.omses) {
    json spans = json::array();
    for (const auto& e : o.elements) {
      spans.push_back({
          {"length_km", e.span.length_km},
          {"attenuation_db_per_km", e.span.attenuation_db_per_km},
          {"dispersion_ps_nm_km", e.span.dispersion_ps_nm_km},
          {"gamma_per_w_km", e.span.gamma_per_w_km},
          {"connector_loss_in_db", e.span.connector_loss_in_db},
          {"connector_loss_out_db", e.span.connector_loss_out_db},
          {"amplifier",
           {{"gain_db", e.amp.gain_db},
            {"noise_figure_db", e.amp.noise_figure_db},
            {"tilt_db", e.amp.tilt_db}}},
      });
    }
    j["omses"].push_back({{"endpoints", {o.a, o.b}}, {"spans", spans}});
  }
  return j;
}

std::string serialize_topology(const NetworkTopology& topo) {
  return topology_to_json(topo).dump(2);
}

void to_json(json& j, const Service& s) {
  j = json{{"id", s.id},
           {"path", s.path},
           {"center_thz", s.center_thz},
           {"width_slices", s.width_slices},
           {"rate_gbps", s.rate_gbps},
           {"format", s.format},
           {"symbol_rate_gbd", s.symbol_rate_gbd},
           {"launch_power_dbm", s.launch_power_dbm},
           {"protected", s.is_protected},
           {"state", std::string(state_name(s.state))},
           {"group", s.group}};
}

void from_json(const json& j, Service& s) {
  const int rate = j.at("rate_gbps").get<int>();
  const auto& spec = rate_spec(rate);
  s.id = j.at("id").get<std::string>();
  s.path = j.at("path").get<std::vector<SiteId>>();
  s.center_thz = j.at("center_thz").get<double>();
  s.rate_gbps = rate;
  s.width_slices = j.value("width_slices", spec.width_slices);
  s.format = j.value("format", spec.format);
  s.symbol_rate_gbd = j.value("symbol_rate_gbd", spec.symbol_rate_gbd);
  s.launch_power_dbm = j.value("launch_power_dbm", 0.0);
  s.is_protected = j.value("protected", false);
  s.state = state_from_name(j.value("state", std::string("Active")));
  s.group = j.value("group", std::string{});
}

std::vector<Service> load_services(std::string_view text) {
  try {
    const json j = json::parse(text);
    const json& list = j.is_object() ? j.at("services") : j;
    return list.get<std::vector<Service>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("services parse error: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("services parse error: ") + e.what());
  }
}

std::vector<Service> load_services_file(const std::string& path) {
  return load_services(read_text_file(path));
}

}  // namespace ztnet
