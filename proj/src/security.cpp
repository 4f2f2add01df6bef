#include "ztnet/security.hpp"

#include <algorithm>
#include <sstream>

#include "ztnet/common.hpp"
#include "ztnet/digest.hpp"

namespace ztnet {

using nlohmann::json;

std::string instruction_digest(const InstructionSet& set) {
  json j;
  j["issuer"] = std::string(role_name(set.issuer));
  j["policy_tags"] = set.policy_tags;
  j["commands"] = json::array();
  for (const auto& c : set.commands) j["commands"].push_back(json(c));
  return sha256_hex(j.dump());
}

InstructionSet make_instruction_set(std::vector<NmsCommand> commands, AgentRole issuer,
                                    std::vector<std::string> policy_tags) {
  InstructionSet s;
  s.commands = std::move(commands);
  s.issuer = issuer;
  s.policy_tags = std::move(policy_tags);
  s.digest = instruction_digest(s);
  return s;
}

namespace {

RuleResult band_rule(const InstructionSet& set, const ChannelGrid& grid) {
  RuleResult r{"frequency_in_band", true, ""};
  for (const auto& c : set.commands) {
    if (c.kind != CommandKind::AddService || !c.service) continue;
    try {
      (void)slice_index_of(grid, c.service->center_thz, c.service->width_slices);
    } catch (const ValidationError& e) {
      r.pass = false;
      std::ostringstream os;
      os << "out of band: " << c.service->id << " at " << c.service->center_thz << " THz";
      r.detail = os.str();
      return r;
    }
  }
  return r;
}

RuleResult power_rule(const InstructionSet& set, const SecurityPolicy& p) {
  RuleResult r{"launch_power_range", true, ""};
  for (const auto& c : set.commands) {
    double dbm = 0.0;
    if (c.kind == CommandKind::AddService && c.service) {
      dbm = c.service->launch_power_dbm;
    } else if (c.kind == CommandKind::AdjustPower) {
      dbm = c.launch_power_dbm;
    } else {
      continue;
    }
    if (dbm < p.min_launch_dbm || dbm > p.max_launch_dbm) {
      r.pass = false;
      std::ostringstream os;
      os << "launch power " << dbm << " dBm for " << c.service_id << " outside ["
         << p.min_launch_dbm << ", " << p.max_launch_dbm << "]";
      r.detail = os.str();
      return r;
    }
  }
  return r;
}

RuleResult protected_rule(const InstructionSet& set, std::span<const Service> current) {
  RuleResult r{"no_protected_drop", true, ""};
  for (const auto& c : set.commands) {
    if (c.kind != CommandKind::DropService) continue;
    const auto it = std::find_if(current.begin(), current.end(),
                                 [&](const Service& s) { return s.id == c.service_id; });
    if (it != current.end() && it->is_protected) {
      r.pass = false;
      r.detail = "drop of protected service " + c.service_id;
      return r;
    }
  }
  return r;
}

RuleResult rate_rule(const InstructionSet& set) {
  RuleResult r{"rate_in_table", true, ""};
  for (const auto& c : set.commands) {
    if (c.kind != CommandKind::AddService) continue;
    if (!c.service) {
      r.pass = false;
      r.detail = "AddService without service payload";
      return r;
    }
    const auto& table = rate_table();
    const bool known = std::any_of(table.begin(), table.end(), [&](const RateSpec& s) {
      return s.rate_gbps == c.service->rate_gbps;
    });
    if (!known) {
      r.pass = false;
      r.detail = "rate " + std::to_string(c.service->rate_gbps) + "G not in rate table";
      return r;
    }
  }
  return r;
}

}  // namespace

SecurityVerdict security_gate(const InstructionSet& set, const SecurityPolicy& policy,
                              const ChannelGrid& grid, std::span<const Service> current) {
  SecurityVerdict v;
  v.digest = set.digest;
  auto known = [&](AgentRole r) {
    return std::find(policy.known_issuers.begin(), policy.known_issuers.end(), r) !=
           policy.known_issuers.end();
  };
  v.authenticity = known(set.issuer) && std::all_of(set.commands.begin(), set.commands.end(),
                                                    [&](const NmsCommand& c) {
                                                      return known(c.issuer);
                                                    });
  v.integrity = set.digest == instruction_digest(set) &&
                std::all_of(set.commands.begin(), set.commands.end(),
                            [](const NmsCommand& c) { return c.digest == command_digest(c); });
  v.policy = {band_rule(set, grid), power_rule(set, policy), protected_rule(set, current),
              rate_rule(set)};
  v.approved = v.authenticity && v.integrity &&
               std::all_of(v.policy.begin(), v.policy.end(),
                           [](const RuleResult& r) { return r.pass; });
  return v;
}

SecurityVerdict security_gate(const json& body, const SecurityPolicy& policy,
                              const ChannelGrid& grid, std::span<const Service> current) {
  InstructionSet set;
  try {
    set = read_instruction_set(body);
  } catch (const IntegrityError& e) {
    SecurityVerdict v;
    v.policy.push_back(RuleResult{"canonical_form", false, e.what()});
    if (body.is_object() && body.contains("digest") && body["digest"].is_string()) {
      v.digest = body["digest"].get<std::string>();
    }
    return v;
  } catch (const std::exception& e) {
    SecurityVerdict v;
    v.policy.push_back(RuleResult{"well_formed", false, e.what()});
    if (body.is_object() && body.contains("digest") && body["digest"].is_string()) {
      v.digest = body["digest"].get<std::string>();
    }
    return v;
  }
  return security_gate(set, policy, grid, current);
}

InstructionSet read_instruction_set(const json& body) {
  auto set = body.get<InstructionSet>();
  if (json(set) != body) throw IntegrityError("integrity: instruction set is not in canonical form");
  return set;
}

void to_json(json& j, const InstructionSet& s) {
  j = json{{"commands", s.commands},
           {"issuer", std::string(role_name(s.issuer))},
           {"digest", s.digest},
           {"policy_tags", s.policy_tags}};
}

void from_json(const json& j, InstructionSet& s) {
  j.at("commands").get_to(s.commands);
  const auto issuer = role_from_name(j.at("issuer").get<std::string>());
  if (!issuer) throw ValidationError("unknown issuer role");
  s.issuer = *issuer;
  j.at("digest").get_to(s.digest);
  j.at("policy_tags").get_to(s.policy_tags);
}

void to_json(json& j, const SecurityVerdict& v) {
  json rules = json::array();
  for (const auto& r : v.policy) {
    rules.push_back({{"rule", r.rule}, {"pass", r.pass}, {"detail", r.detail}});
  }
  j = json{{"approved", v.approved},
           {"checks", {{"authenticity", v.authenticity}, {"integrity", v.integrity},
                       {"policy", rules}}},
           {"digest", v.digest}};
}

void from_json(const json& j, SecurityVerdict& v) {
  j.at("approved").get_to(v.approved);
  const auto& c = j.at("checks");
  c.at("authenticity").get_to(v.authenticity);
  c.at("integrity").get_to(v.integrity);
  v.policy.clear();
  for (const auto& r : c.at("policy")) {
    v.policy.push_back(RuleResult{r.at("rule").get<std::string>(), r.at("pass").get<bool>(),
                                  r.at("detail").get<std::string>()});
  }
  j.at("digest").get_to(v.digest);
}

}  // namespace ztnet
