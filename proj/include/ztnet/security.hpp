#pragma once

// Instruction sets and the gate the Security Supporter runs over them before
// anything reaches the NMS.

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/field.hpp"
#include "ztnet/roles.hpp"
#include "ztnet/topology.hpp"

namespace ztnet {

struct InstructionSet {
  std::vector<NmsCommand> commands;
  AgentRole issuer = AgentRole::ConfigurationDeployer;
  std::string digest;
  std::vector<std::string> policy_tags;

  bool operator==(const InstructionSet&) const = default;
};

// sha256 over issuer, tags and every command (payload, issuer, digest).
std::string instruction_digest(const InstructionSet& set);

// Reads the serialized form. Anything that does not serialize back to the
// same document (renamed or extra keys, say) is an IntegrityError, so a
// changed byte can never hide behind a default value.
InstructionSet read_instruction_set(const nlohmann::json& body);

InstructionSet make_instruction_set(std::vector<NmsCommand> commands,
                                    AgentRole issuer = AgentRole::ConfigurationDeployer,
                                    std::vector<std::string> policy_tags = {});

struct SecurityPolicy {
  double min_launch_dbm = -5.0;
  double max_launch_dbm = 3.0;
  std::vector<AgentRole> known_issuers = {AgentRole::ConfigurationDeployer};
};

struct RuleResult {
  std::string rule;
  bool pass = true;
  std::string detail;

  bool operator==(const RuleResult&) const = default;
};

struct SecurityVerdict {
  bool approved = false;
  bool authenticity = false;
  bool integrity = false;
  std::vector<RuleResult> policy;
  std::string digest;  // digest of the instruction set that was checked

  bool operator==(const SecurityVerdict&) const = default;
};

// Total: never throws on bad input. `current` is the roster the commands would
// act on (used for the protected-service rule).
SecurityVerdict security_gate(const InstructionSet& set, const SecurityPolicy& policy,
                              const ChannelGrid& grid, std::span<const Service> current);

// Same, starting from the serialized form; a body that does not parse is an
// integrity failure.
SecurityVerdict security_gate(const nlohmann::json& body, const SecurityPolicy& policy,
                              const ChannelGrid& grid, std::span<const Service> current);

void to_json(nlohmann::json& j, const InstructionSet& s);
void from_json(const nlohmann::json& j, InstructionSet& s);
void to_json(nlohmann::json& j, const SecurityVerdict& v);
void from_json(const nlohmann::json& j, SecurityVerdict& v);

}  // namespace ztnet
