#include "doctest.h"
#include "support.hpp"
#include "ztnet/rsa.hpp"

using namespace ztnet;
using namespace ztnet::testing;

TEST_CASE("k shortest paths against the oracle") {
  const auto& t = default_topology();
  const auto& g = goldens()["ksp_5_1"];
  const auto paths = k_shortest_paths(t, 5, 1, static_cast<int>(g.size()) + 5);
  REQUIRE(paths.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(paths[i].nodes == g[i]["nodes"].get<std::vector<SiteId>>());
    CHECK(paths[i].length_km == doctest::Approx(g[i]["length_km"].get<double>()));
  }
  const auto one = k_shortest_paths(t, 5, 1, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].nodes == std::vector<SiteId>{5, 6, 1});
  CHECK(one[0].hops == 2);
}

TEST_CASE("k shortest paths errors and prefix property") {
  const auto& t = default_topology();
  CHECK_THROWS_WITH_AS(k_shortest_paths(t, 2, 2, 3), doctest::Contains("src equals dst"),
                       ValidationError);
  CHECK_THROWS_AS(k_shortest_paths(t, 2, 9, 3), ValidationError);
  CHECK_THROWS_AS(k_shortest_paths(t, 2, 3, 0), ValidationError);
  const auto five = k_shortest_paths(t, 3, 6, 5);
  for (int k = 1; k <= 5; ++k) {
    const auto some = k_shortest_paths(t, 3, 6, k);
    REQUIRE(some.size() <= five.size());
    for (std::size_t i = 0; i < some.size(); ++i) CHECK(some[i] == five[i]);
  }
  for (std::size_t i = 1; i < five.size(); ++i) CHECK(path_less(five[i - 1], five[i]));
}

TEST_CASE("occupancy map") {
  OccupancyMap occ(2, 16);
  CHECK(occ.window_free(0, 0, 8));
  occ.occupy(0, 4, 8);
  CHECK(occ.taken(0, 4));
  CHECK_FALSE(occ.taken(1, 4));
  CHECK_FALSE(occ.window_free(0, 0, 8));
  CHECK(occ.window_free(0, 12, 4));
  CHECK_THROWS_AS(occ.occupy(0, 8, 4), ValidationError);
  CHECK_THROWS_AS(occ.occupy(0, 12, 8), ValidationError);
  occ.release(0, 4, 8);
  CHECK(occ.window_free(0, 0, 16));

  const auto& t = default_topology();
  const std::vector<Service> clash{svc("a", {5, 6}, channel_center(0)),
                                   svc("b", {1, 6, 5}, channel_center(0))};
  CHECK_THROWS_AS(OccupancyMap::from_services(t, clash), ValidationError);
  auto dropped = clash;
  dropped[1].state = ServiceState::Dropped;
  CHECK_NOTHROW(OccupancyMap::from_services(t, dropped));
}

TEST_CASE("first fit") {
  const auto& t = default_topology();
  const OccupancyMap empty = OccupancyMap::from_services(t, std::vector<Service>{});
  CHECK(first_fit(t, empty, {5, 6, 1}, 8) == 0);

  const auto spec = load_scenario("case3", ZTNET_DATA_DIR);
  const auto occ = OccupancyMap::from_services(t, spec.services);
  const int s = first_fit(t, occ, {5, 6, 1}, 8);
  CHECK(s == goldens()["case3_first_fit_start_slice"].get<int>());
  CHECK(t.grid.center_of(s, 8) == doctest::Approx(goldens()["case3_first_fit_center_thz"].get<double>()));
  const auto windows = free_windows(t, occ, {5, 6, 1}, 8);
  REQUIRE_FALSE(windows.empty());
  CHECK(windows.front() == s);

  auto full = empty;
  for (std::size_t o = 0; o < full.oms_count(); ++o) full.occupy(o, 0, full.slice_count());
  CHECK_THROWS_WITH_AS(first_fit(t, full, {5, 6, 1}, 8), doctest::Contains("spectrum exhausted"),
                       ValidationError);
}

TEST_CASE("plan service") {
  const auto& t = default_topology();
  const auto spec = load_scenario("case3", ZTNET_DATA_DIR);
  const auto occ = OccupancyMap::from_services(t, spec.services);
  const TwinModel twin(t);

  PlanRequest req;
  req.src = 5;
  req.dst = 1;
  req.rate_gbps = 800;
  req.service_id = "up";
  const auto plan = plan_service(t, occ, twin, spec.services, req);
  CHECK(plan.path.nodes == std::vector<SiteId>{5, 6, 1});
  CHECK(plan.start_slice == 216);
  CHECK(plan.service.center_thz == doctest::Approx(193.75));
  CHECK(plan.service.rate_gbps == 800);
  CHECK(plan.rehearsal.feasible);

  // 100G on an empty network between neighbours: direct OMS, first window
  const OccupancyMap empty = OccupancyMap::from_services(t, std::vector<Service>{});
  PlanRequest small;
  small.src = 3;
  small.dst = 4;
  small.rate_gbps = 100;
  const auto p = plan_service(t, empty, twin, std::vector<Service>{}, small);
  CHECK(p.path.nodes == std::vector<SiteId>{3, 4});
  CHECK(p.start_slice == 0);
  CHECK_FALSE(p.service.id.empty());

  auto full = empty;
  for (std::size_t o = 0; o < full.oms_count(); ++o) full.occupy(o, 0, full.slice_count());
  try {
    (void)plan_service(t, full, twin, std::vector<Service>{}, small);
    FAIL("expected PlanningError");
  } catch (const PlanningError& e) {
    CHECK(std::string(e.what()).size() > 0);
  }

  // margin the line cannot give
  PlanRequest greedy = req;
  greedy.min_margin_db = 30.0;
  try {
    (void)plan_service(t, occ, twin, spec.services, greedy);
    FAIL("expected PlanningError");
  } catch (const PlanningError& e) {
    REQUIRE(e.best().has_value());
    CHECK_FALSE(e.best()->rehearsal.feasible);
  }
}
