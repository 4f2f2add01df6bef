#pragma once

// Routing and spectrum assignment: loopless k-shortest paths over OMS length,
// first-fit slice windows and QoT-checked placement via twin rehearsal.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/common.hpp"
#include "ztnet/topology.hpp"
#include "ztnet/twin.hpp"

namespace ztnet {

struct PathCandidate {
  std::vector<SiteId> nodes;
  double length_km = 0.0;
  int hops = 0;

  bool operator==(const PathCandidate&) const = default;
};

// Strict total order used everywhere paths are ranked: length, then hop
// count, then the node list lexicographically.
bool path_less(const PathCandidate& a, const PathCandidate& b);

// Length/hops filled in from the topology. Throws like hop_chain.
PathCandidate make_candidate(const NetworkTopology& topo, std::vector<SiteId> nodes);

// Yen's algorithm. Throws ValidationError for src == dst ("src equals dst"),
// unknown nodes, k < 1, or when no path exists.
std::vector<PathCandidate> k_shortest_paths(const NetworkTopology& topo, SiteId src, SiteId dst,
                                            int k);

// Per-OMS slice bitmap. Spectrum is shared by both directions of an OMS.
class OccupancyMap {
 public:
  OccupancyMap() = default;
  OccupancyMap(std::size_t oms_count, int slice_count);

  // Occupancy of every non-dropped service. Throws ValidationError on
  // overlapping services.
  static OccupancyMap from_services(const NetworkTopology& topo,
                                    std::span<const Service> services);

  int slice_count() const { return slice_count_; }
  std::size_t oms_count() const { return bits_.size(); }
  bool taken(std::size_t oms, int slice) const;
  bool window_free(std::size_t oms, int start, int width) const;
  // Throws ValidationError when any slice of the window is already taken.
  void occupy(std::size_t oms, int start, int width);
  void release(std::size_t oms, int start, int width);

  bool operator==(const OccupancyMap&) const = default;

 private:
  void check(std::size_t oms, int start, int width) const;

  int slice_count_ = 0;
  std::vector<std::vector<bool>> bits_;
};

// Every start slice whose window is free along the path, ascending.
std::vector<int> free_windows(const NetworkTopology& topo, const OccupancyMap& occ,
                              const std::vector<SiteId>& path, int width_slices);

// Lowest start slice free on every OMS of the path. Throws ValidationError
// ("spectrum exhausted") when none is.
int first_fit(const NetworkTopology& topo, const OccupancyMap& occ,
              const std::vector<SiteId>& path, int width_slices);

struct PlanRequest {
  SiteId src = 0;
  SiteId dst = 0;
  int rate_gbps = 400;
  double launch_power_dbm = 0.0;
  std::string service_id;  // generated when empty
  int k = 3;
  double min_margin_db = 1.0;
};

struct PlanResult {
  PathCandidate path;
  int start_slice = 0;
  Service service;
  RehearsalResult rehearsal;
};

// No feasible (path, window) pair. `best` is the rejected candidate with the
// highest minimum margin, when any candidate could be rehearsed at all.
class PlanningError : public ValidationError {
 public:
  PlanningError(const std::string& what, std::optional<PlanResult> best)
      : ValidationError(what), best_(std::move(best)) {}
  const std::optional<PlanResult>& best() const { return best_; }

 private:
  std::optional<PlanResult> best_;
};

// Walks k-shortest paths, and first-fit windows within each, returning the
// first placement whose rehearsal on the twin is feasible.
PlanResult plan_service(const NetworkTopology& topo, const OccupancyMap& occ,
                        const TwinModel& twin, std::span<const Service> current,
                        const PlanRequest& request);

void to_json(nlohmann::json& j, const PathCandidate& p);
void from_json(const nlohmann::json& j, PathCandidate& p);
void to_json(nlohmann::json& j, const PlanResult& r);

}  // namespace ztnet
