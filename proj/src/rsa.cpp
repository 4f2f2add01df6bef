#include "ztnet/rsa.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace ztnet {

using nlohmann::json;

bool path_less(const PathCandidate& a, const PathCandidate& b) {
  return std::tie(a.length_km, a.hops, a.nodes) < std::tie(b.length_km, b.hops, b.nodes);
}

PathCandidate make_candidate(const NetworkTopology& topo, std::vector<SiteId> nodes) {
  PathCandidate c;
  for (const auto& hop : hop_chain(topo, nodes)) {
    c.length_km += topo.omses[hop.oms_index].length_km();
    ++c.hops;
  }
  c.nodes = std::move(nodes);
  return c;
}

namespace {

using Edge = std::pair<SiteId, SiteId>;

Edge undirected(SiteId a, SiteId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct Label {
  double dist = 0.0;
  int hops = 0;
  std::vector<SiteId> path;

  bool operator<(const Label& o) const {
    return std::tie(dist, hops, path) < std::tie(o.dist, o.hops, o.path);
  }
};

// Label-setting search under the (dist, hops, path) order. The order is
// preserved under extension by a common edge, so the settled label of every
// node is the minimum over all its simple paths that avoid the blocked sets.
std::optional<std::vector<SiteId>> best_path(const NetworkTopology& topo, SiteId src, SiteId dst,
                                             const std::set<SiteId>& blocked_nodes,
                                             const std::set<Edge>& blocked_edges) {
  std::map<SiteId, std::vector<std::pair<SiteId, double>>> adj;
  for (const auto& o : topo.omses) {
    if (blocked_edges.count(undirected(o.a, o.b))) continue;
    const double len = o.length_km();
    adj[o.a].emplace_back(o.b, len);
    adj[o.b].emplace_back(o.a, len);
  }
  std::map<SiteId, Label> best;
  std::set<SiteId> settled;
  std::set<std::pair<Label, SiteId>> frontier;
  best[src] = Label{0.0, 0, {src}};
  frontier.insert({best[src], src});
  while (!frontier.empty()) {
    auto [label, u] = *frontier.begin();
    frontier.erase(frontier.begin());
    if (settled.count(u)) continue;
    settled.insert(u);
    if (u == dst) return label.path;
    for (const auto& [v, len] : adj[u]) {
      if (settled.count(v) || blocked_nodes.count(v)) continue;
      Label next{label.dist + len, label.hops + 1, label.path};
      next.path.push_back(v);
      auto it = best.find(v);
      if (it == best.end() || next < it->second) {
        if (it != best.end()) frontier.erase({it->second, v});
        best[v] = next;
        frontier.insert({next, v});
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<PathCandidate> k_shortest_paths(const NetworkTopology& topo, SiteId src, SiteId dst,
                                            int k) {
  if (src == dst) throw ValidationError("src equals dst");
  if (!topo.has_site(src)) throw ValidationError("unknown node " + std::to_string(src));
  if (!topo.has_site(dst)) throw ValidationError("unknown node " + std::to_string(dst));
  if (k < 1) throw ValidationError("k must be >= 1");

  auto first = best_path(topo, src, dst, {}, {});
  if (!first) {
    throw ValidationError("no path " + std::to_string(src) + "-" + std::to_string(dst));
  }
  std::vector<PathCandidate> accepted{make_candidate(topo, std::move(*first))};
  auto cmp = [](const PathCandidate& a, const PathCandidate& b) { return path_less(a, b); };
  std::set<PathCandidate, decltype(cmp)> pending(cmp);

  while (static_cast<int>(accepted.size()) < k) {
    const auto last = accepted.back().nodes;
    for (std::size_t i = 0; i + 1 < last.size(); ++i) {
      const SiteId spur = last[i];
      const std::vector<SiteId> root(last.begin(), last.begin() + static_cast<long>(i) + 1);
      std::set<Edge> blocked_edges;
      for (const auto& p : accepted) {
        if (p.nodes.size() > i + 1 && std::equal(root.begin(), root.end(), p.nodes.begin())) {
          blocked_edges.insert(undirected(p.nodes[i], p.nodes[i + 1]));
        }
      }
      std::set<SiteId> blocked_nodes(root.begin(), root.end() - 1);
      auto tail = best_path(topo, spur, dst, blocked_nodes, blocked_edges);
      if (!tail) continue;
      std::vector<SiteId> nodes = root;
      nodes.insert(nodes.end(), tail->begin() + 1, tail->end());
      pending.insert(make_candidate(topo, std::move(nodes)));
    }
    // Drop anything already accepted (possible when ties regenerate a path).
    while (!pending.empty() &&
           std::any_of(accepted.begin(), accepted.end(), [&](const PathCandidate& p) {
             return p.nodes == pending.begin()->nodes;
           })) {
      pending.erase(pending.begin());
    }
    if (pending.empty()) break;
    accepted.push_back(*pending.begin());
    pending.erase(pending.begin());
  }
  return accepted;
}

// ---------------------------------------------------------------------------

OccupancyMap::OccupancyMap(std::size_t oms_count, int slice_count)
    : slice_count_(slice_count), bits_(oms_count, std::vector<bool>(slice_count, false)) {
  if (slice_count <= 0) throw ValidationError("slice count must be > 0");
}

OccupancyMap OccupancyMap::from_services(const NetworkTopology& topo,
                                         std::span<const Service> services) {
  OccupancyMap occ(topo.omses.size(), topo.grid.slice_count);
  for (const auto& s : services) {
    if (s.state == ServiceState::Dropped) continue;
    const int start = slice_index_of(topo.grid, s.center_thz, s.width_slices);
    for (const auto& hop : hop_chain(topo, s.path)) {
      if (!occ.window_free(hop.oms_index, start, s.width_slices)) {
        throw ValidationError("slice collision for service " + s.id);
      }
      occ.occupy(hop.oms_index, start, s.width_slices);
    }
  }
  return occ;
}

void OccupancyMap::check(std::size_t oms, int start, int width) const {
  if (oms >= bits_.size()) throw ValidationError("unknown OMS index " + std::to_string(oms));
  if (width <= 0 || start < 0 || start + width > slice_count_) {
    throw ValidationError("slice window [" + std::to_string(start) + ", " +
                          std::to_string(start + width) + ") outside the grid");
  }
}

bool OccupancyMap::taken(std::size_t oms, int slice) const {
  check(oms, slice, 1);
  return bits_[oms][slice];
}

bool OccupancyMap::window_free(std::size_t oms, int start, int width) const {
  check(oms, start, width);
  const auto& b = bits_[oms];
  return std::none_of(b.begin() + start, b.begin() + start + width, [](bool x) { return x; });
}

void OccupancyMap::occupy(std::size_t oms, int start, int width) {
  if (!window_free(oms, start, width)) throw ValidationError("slice window already taken");
  std::fill(bits_[oms].begin() + start, bits_[oms].begin() + start + width, true);
}

void OccupancyMap::release(std::size_t oms, int start, int width) {
  check(oms, start, width);
  std::fill(bits_[oms].begin() + start, bits_[oms].begin() + start + width, false);
}

std::vector<int> free_windows(const NetworkTopology& topo, const OccupancyMap& occ,
                              const std::vector<SiteId>& path, int width_slices) {
  if (width_slices <= 0) throw ValidationError("channel width must be > 0");
  const auto hops = hop_chain(topo, path);
  std::vector<int> out;
  for (int s = 0; s + width_slices <= occ.slice_count(); ++s) {
    const bool free = std::all_of(hops.begin(), hops.end(), [&](const Hop& h) {
      return occ.window_free(h.oms_index, s, width_slices);
    });
    if (free) out.push_back(s);
  }
  return out;
}

int first_fit(const NetworkTopology& topo, const OccupancyMap& occ,
              const std::vector<SiteId>& path, int width_slices) {
  const auto hops = hop_chain(topo, path);
  if (width_slices <= 0) throw ValidationError("channel width must be > 0");
  for (int s = 0; s + width_slices <= occ.slice_count(); ++s) {
    const bool free = std::all_of(hops.begin(), hops.end(), [&](const Hop& h) {
      return occ.window_free(h.oms_index, s, width_slices);
    });
    if (free) return s;
  }
  throw ValidationError("spectrum exhausted");
}

PlanResult plan_service(const NetworkTopology& topo, const OccupancyMap& occ,
                        const TwinModel& twin, std::span<const Service> current,
                        const PlanRequest& request) {
  const auto& spec = rate_spec(request.rate_gbps);
  const std::string id = request.service_id.empty()
                             ? "svc-" + std::to_string(request.src) + "-" +
                                   std::to_string(request.dst) + "-" +
                                   std::to_string(request.rate_gbps) + "g"
                             : request.service_id;
  std::vector<Service> active;
  for (const auto& s : current) {
    if (s.state != ServiceState::Dropped) active.push_back(s);
  }

  std::optional<PlanResult> best;
  for (const auto& path : k_shortest_paths(topo, request.src, request.dst, request.k)) {
    for (int start : free_windows(topo, occ, path.nodes, spec.width_slices)) {
      Service svc = make_service(id, path.nodes, topo.grid.center_of(start, spec.width_slices),
                                 request.rate_gbps, request.launch_power_dbm);
      svc.state = ServiceState::Planned;
      const NmsCommand add = make_add_command(svc, AgentRole::FullLifecycleManager);
      PlanResult r{path, start, svc,
                   rehearse(twin, std::span<const NmsCommand>(&add, 1), active,
                            request.min_margin_db)};
      if (r.rehearsal.feasible) return r;
      if (!best || r.rehearsal.margins.min_margin_db > best->rehearsal.margins.min_margin_db) {
        best = std::move(r);
      }
    }
  }
  if (!best) throw PlanningError("spectrum exhausted on every candidate path", std::nullopt);
  throw PlanningError("no feasible placement: best min margin " +
                          std::to_string(best->rehearsal.margins.min_margin_db) + " dB",
                      std::move(best));
}

// ---------------------------------------------------------------------------

void to_json(json& j, const PathCandidate& p) {
  j = json{{"nodes", p.nodes}, {"length_km", p.length_km}, {"hops", p.hops}};
}

void from_json(const json& j, PathCandidate& p) {
  j.at("nodes").get_to(p.nodes);
  j.at("length_km").get_to(p.length_km);
  j.at("hops").get_to(p.hops);
}

void to_json(json& j, const PlanResult& r) {
  j = json{{"path", r.path},
           {"start_slice", r.start_slice},
           {"service", r.service},
           {"rehearsal", r.rehearsal}};
}

}  // namespace ztnet
