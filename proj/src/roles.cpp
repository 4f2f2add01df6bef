#include "ztnet/roles.hpp"

#include <algorithm>

namespace ztnet {

std::string_view role_name(AgentRole role) {
  switch (role) {
    case AgentRole::NetworkDirector: return "NetworkDirector";
    case AgentRole::OpticalLayerAgent: return "OpticalLayerAgent";
    case AgentRole::DtAgent: return "DtAgent";
    case AgentRole::ControlAgent: return "ControlAgent";
    case AgentRole::SupportAgent: return "SupportAgent";
    case AgentRole::ConfigurationDeployer: return "ConfigurationDeployer";
    case AgentRole::DataCollector: return "DataCollector";
    case AgentRole::PerformanceSensor: return "PerformanceSensor";
    case AgentRole::ModelingEngineer: return "ModelingEngineer";
    case AgentRole::ValidationSpecialist: return "ValidationSpecialist";
    case AgentRole::DataScientist: return "DataScientist";
    case AgentRole::OperationAssistant: return "OperationAssistant";
    case AgentRole::ResourceCoordinator: return "ResourceCoordinator";
    case AgentRole::StatisticalAnalyst: return "StatisticalAnalyst";
    case AgentRole::FullLifecycleManager: return "FullLifecycleManager";
    case AgentRole::FailureHandler: return "FailureHandler";
    case AgentRole::SecuritySupporter: return "SecuritySupporter";
  }
  return "Unknown";
}

std::optional<AgentRole> role_from_name(std::string_view name) {
  for (auto r : kAllRoles) {
    if (role_name(r) == name) return r;
  }
  return std::nullopt;
}

bool is_division(AgentRole role) {
  return std::find(kDivisions.begin(), kDivisions.end(), role) != kDivisions.end();
}

bool is_expert(AgentRole role) {
  return division_of(role).has_value();
}

std::optional<AgentRole> division_of(AgentRole expert) {
  switch (expert) {
    case AgentRole::ConfigurationDeployer:
    case AgentRole::DataCollector:
    case AgentRole::PerformanceSensor:
      return AgentRole::OpticalLayerAgent;
    case AgentRole::ModelingEngineer:
    case AgentRole::ValidationSpecialist:
    case AgentRole::DataScientist:
      return AgentRole::DtAgent;
    case AgentRole::OperationAssistant:
    case AgentRole::ResourceCoordinator:
    case AgentRole::StatisticalAnalyst:
      return AgentRole::ControlAgent;
    case AgentRole::FullLifecycleManager:
    case AgentRole::FailureHandler:
    case AgentRole::SecuritySupporter:
      return AgentRole::SupportAgent;
    default:
      return std::nullopt;
  }
}

}  // namespace ztnet
