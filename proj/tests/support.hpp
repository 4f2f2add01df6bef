#pragma once

// Shared fixtures for the test binaries.

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/scenario.hpp"
#include "ztnet/topology.hpp"

namespace ztnet::testing {

inline std::string data_path(const std::string& rel) { return std::string(ZTNET_DATA_DIR) + "/" + rel; }

inline const NetworkTopology& default_topology() {
  static const NetworkTopology topo = load_topology_file(data_path("default_topology.json"));
  return topo;
}

// Frozen oracle values (tests/oracle/gn_oracle.py).
inline const nlohmann::json& goldens() {
  static const nlohmann::json g = [] {
    std::ifstream f(ZTNET_GOLDENS);
    if (!f) throw std::runtime_error("cannot open goldens " + std::string(ZTNET_GOLDENS));
    return nlohmann::json::parse(f);
  }();
  return g;
}

inline Service svc(const std::string& id, std::vector<SiteId> path, double center_thz,
                   int rate = 400, double launch_dbm = 0.0) {
  return make_service(id, std::move(path), center_thz, rate, launch_dbm);
}

// Centre of the 100 GHz channel starting at slice 8*k on the default grid.
inline double channel_center(int k) { return 191.05 + 0.1 * k; }

}  // namespace ztnet::testing
