#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace ztnet {

enum class AgentRole {
  NetworkDirector,
  // divisions
  OpticalLayerAgent,
  DtAgent,
  ControlAgent,
  SupportAgent,
  // optical layer experts
  ConfigurationDeployer,
  DataCollector,
  PerformanceSensor,
  // DT layer experts
  ModelingEngineer,
  ValidationSpecialist,
  DataScientist,
  // control layer experts
  OperationAssistant,
  ResourceCoordinator,
  StatisticalAnalyst,
  // support layer experts
  FullLifecycleManager,
  FailureHandler,
  SecuritySupporter,
};

inline constexpr std::array<AgentRole, 17> kAllRoles = {
    AgentRole::NetworkDirector,     AgentRole::OpticalLayerAgent,
    AgentRole::DtAgent,             AgentRole::ControlAgent,
    AgentRole::SupportAgent,        AgentRole::ConfigurationDeployer,
    AgentRole::DataCollector,       AgentRole::PerformanceSensor,
    AgentRole::ModelingEngineer,    AgentRole::ValidationSpecialist,
    AgentRole::DataScientist,       AgentRole::OperationAssistant,
    AgentRole::ResourceCoordinator, AgentRole::StatisticalAnalyst,
    AgentRole::FullLifecycleManager, AgentRole::FailureHandler,
    AgentRole::SecuritySupporter,
};

inline constexpr std::array<AgentRole, 4> kDivisions = {
    AgentRole::OpticalLayerAgent, AgentRole::DtAgent, AgentRole::ControlAgent,
    AgentRole::SupportAgent};

std::string_view role_name(AgentRole role);
std::optional<AgentRole> role_from_name(std::string_view name);

bool is_division(AgentRole role);
bool is_expert(AgentRole role);

// Division that supervises an expert; nullopt for director and divisions.
std::optional<AgentRole> division_of(AgentRole expert);

}  // namespace ztnet
