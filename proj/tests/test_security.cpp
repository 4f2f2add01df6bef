#include "doctest.h"
#include "support.hpp"
#include "ztnet/security.hpp"

using namespace ztnet;
using namespace ztnet::testing;

namespace {

std::vector<Service> case2() { return load_scenario("case2", ZTNET_DATA_DIR).services; }

InstructionSet drop_set() {
  return make_instruction_set({make_drop_command("c2-a1"), make_drop_command("c2-a2"),
                               make_drop_command("c2-c7"), make_drop_command("c2-c8")},
                              AgentRole::ConfigurationDeployer, {"drop:A", "drop:C"});
}

const RuleResult* rule(const SecurityVerdict& v, const std::string& name) {
  for (const auto& r : v.policy) {
    if (r.rule == name) return &r;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("well formed drop set is approved") {
  const auto set = drop_set();
  CHECK(set.digest == instruction_digest(set));
  const auto v = security_gate(set, {}, ChannelGrid{}, case2());
  CHECK(v.approved);
  CHECK(v.authenticity);
  CHECK(v.integrity);
  CHECK(v.digest == set.digest);
  const auto again = security_gate(nlohmann::json(set), {}, ChannelGrid{}, case2());
  CHECK(again == v);
}

TEST_CASE("integrity") {
  auto set = drop_set();
  set.commands[1].service_id = "c2-b3";
  const auto v = security_gate(set, {}, ChannelGrid{}, case2());
  CHECK_FALSE(v.integrity);
  CHECK_FALSE(v.approved);

  // every single byte of the serialized form
  const auto text = nlohmann::json(drop_set()).dump();
  int rejected = 0, equivalent = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto t = text;
    t[i] = static_cast<char>(t[i] ^ 0x01);
    const auto body = nlohmann::json::parse(t, nullptr, false);
    if (!body.is_discarded() && body == nlohmann::json::parse(text)) {
      ++equivalent;
      continue;
    }
    const auto verdict = security_gate(body.is_discarded() ? nlohmann::json(t) : body, {},
                                       ChannelGrid{}, case2());
    CAPTURE(i);
    CHECK_FALSE(verdict.approved);
    ++rejected;
  }
  CHECK(rejected + equivalent == static_cast<int>(text.size()));
  CHECK(rejected > 0);
}

TEST_CASE("renamed optional key is not a harmless edit") {
  const auto set = make_instruction_set({make_add_command(make_service("n", {5, 6, 1}, 193.75, 800))});
  auto body = nlohmann::json(set);
  auto& svc = body["commands"][0]["service"];
  REQUIRE(svc.contains("launch_power_dbm"));
  svc["launch_powew_dbm"] = svc["launch_power_dbm"];
  svc.erase("launch_power_dbm");
  // the parsed set is unchanged, the document is not
  CHECK(body.get<InstructionSet>() == set);
  CHECK_THROWS_AS(read_instruction_set(body), IntegrityError);
  const auto v = security_gate(body, {}, ChannelGrid{}, {});
  CHECK_FALSE(v.approved);
  CHECK_FALSE(v.integrity);
  CHECK(read_instruction_set(nlohmann::json(set)) == set);
}

TEST_CASE("authenticity") {
  auto set = make_instruction_set({make_drop_command("c2-a1", AgentRole::DataScientist)});
  const auto v = security_gate(set, {}, ChannelGrid{}, case2());
  CHECK_FALSE(v.authenticity);
  CHECK_FALSE(v.approved);
  set = make_instruction_set({make_drop_command("c2-a1")}, AgentRole::SecuritySupporter);
  CHECK_FALSE(security_gate(set, {}, ChannelGrid{}, case2()).approved);
}

TEST_CASE("policy rules") {
  auto s = make_service("far", {5, 6}, 197.2, 400);
  const auto band = security_gate(make_instruction_set({make_add_command(s)}), {}, ChannelGrid{}, {});
  CHECK_FALSE(band.approved);
  REQUIRE(rule(band, "frequency_in_band") != nullptr);
  CHECK_FALSE(rule(band, "frequency_in_band")->pass);
  CHECK(rule(band, "frequency_in_band")->detail.find("out of band") != std::string::npos);

  const auto hot = security_gate(
      make_instruction_set({make_adjust_power_command("c2-b3", 6.0)}), {}, ChannelGrid{}, case2());
  CHECK_FALSE(hot.approved);

  auto roster = case2();
  roster[0].is_protected = true;
  const auto prot = security_gate(make_instruction_set({make_drop_command(roster[0].id)}), {},
                                  ChannelGrid{}, roster);
  CHECK_FALSE(prot.approved);
  CHECK_FALSE(rule(prot, "no_protected_drop")->pass);

  const auto garbage = security_gate(nlohmann::json{{"commands", 3}}, {}, ChannelGrid{}, {});
  CHECK_FALSE(garbage.approved);
  CHECK_FALSE(garbage.integrity);
}
