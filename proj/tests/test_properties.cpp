#include "doctest.h"
#include "properties.hpp"

using namespace ztnet;
using namespace ztnet::testing;

TEST_CASE("gn physics over random instances") {
  const auto r = gn_properties(1000);
  INFO(r.first_failure);
  CHECK(r.instances == 1000);
  CHECK(r.failures == 0);
}

TEST_CASE("k shortest paths equal exhaustive enumeration") {
  const auto r = ksp_exhaustive(default_topology());
  INFO(r.first_failure);
  CHECK(r.instances == 30);
  CHECK(r.failures == 0);
}

TEST_CASE("first fit is minimal") {
  const auto r = first_fit_exhaustive(default_topology(), 500);
  INFO(r.first_failure);
  CHECK(r.failures == 0);
}

TEST_CASE("pool operation sequences") {
  const auto r = pool_sequences(1000, 40);
  INFO(r.first_failure);
  CHECK(r.instances == 1000);
  CHECK(r.failures == 0);
}

TEST_CASE("random topologies round trip") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto g = random_gn_instance(rng);
    CHECK(load_topology(serialize_topology(g.topo)) == g.topo);
  }
}
