#pragma once

// Shared Pool: append-only, permissioned blackboard between the director and
// the division agents, with an audit trail that can rebuild it.

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/common.hpp"
#include "ztnet/roles.hpp"

namespace ztnet {

enum class ContentKind {
  WorkflowPlan,
  TelemetrySnapshot,
  QotReport,
  CalibrationReport,
  RehearsalResult,
  MarginReport,
  InstructionSet,
  AnalysisReport,
  SecurityVerdict,
  FinalReport,
};

std::string_view content_kind_name(ContentKind k);
ContentKind content_kind_from_name(std::string_view s);

// Typed payload: the kind tags how `body` is to be read.
struct Content {
  ContentKind kind = ContentKind::AnalysisReport;
  nlohmann::json body;

  bool operator==(const Content&) const = default;
};

// sha256 over the canonical serialization of kind + body.
std::string content_digest(const Content& c);

enum class EntryStatus { Posted, Claimed, Completed, Failed };

std::string_view entry_status_name(EntryStatus s);
EntryStatus entry_status_from_name(std::string_view s);
bool legal_transition(EntryStatus from, EntryStatus to);

using EntryId = std::uint64_t;

struct PoolEntry {
  EntryId entry_id = 0;
  std::string task_id;
  std::string instruction;
  Content content;
  std::string digest;  // of content, fixed at put
  AgentRole sender = AgentRole::NetworkDirector;
  AgentRole receiver = AgentRole::NetworkDirector;
  EntryStatus status = EntryStatus::Posted;

  bool operator==(const PoolEntry&) const = default;
};

struct PermissionMatrix {
  static bool can_write(AgentRole r);
  static bool has_access(AgentRole r);  // any pool access at all
  static bool can_read(AgentRole r, const PoolEntry& e);
};

enum class AuditAction { Put, Get, StatusChange, Denied };

std::string_view audit_action_name(AuditAction a);

struct AuditRecord {
  std::uint64_t seq = 0;
  AgentRole actor = AgentRole::NetworkDirector;
  AuditAction action = AuditAction::Get;
  EntryId entry_id = 0;    // 0 when the action had no single target
  std::uint64_t timestamp = 0;  // logical clock
  std::optional<PoolEntry> entry;          // Put: the entry as written
  std::optional<EntryStatus> new_status;  // StatusChange
  std::string detail;                     // Denied: reason

  bool operator==(const AuditRecord&) const = default;
};

struct PoolFilter {
  std::optional<std::string> task_id;
  std::optional<AgentRole> receiver;
  std::optional<EntryStatus> status;
  std::optional<ContentKind> kind;
};

struct PoolState {
  std::vector<PoolEntry> entries;
  EntryId next_id = 1;

  bool operator==(const PoolState&) const = default;
};

class SharedPool {
 public:
  SharedPool() = default;

  // Appends the entry with the next id, status Posted and sender = actor.
  // Throws PermissionDenied (audited, pool unchanged) for experts, and
  // ValidationError for a receiver that is not a pool principal.
  EntryId put(AgentRole actor, std::string task_id, std::string instruction, Content content,
              AgentRole receiver);

  // Entries matching the filter within the actor's read scope, ordered by id.
  // A receiver filter naming someone outside the actor's scope is denied.
  std::vector<PoolEntry> query(AgentRole actor, const PoolFilter& filter = {});

  // Single entry; PermissionDenied when out of scope, ValidationError when
  // there is no such id.
  PoolEntry get(AgentRole actor, EntryId id);

  // Only the receiver or the director may move an entry, and only along
  // Posted -> Claimed -> {Completed, Failed}.
  void update_status(AgentRole actor, EntryId id, EntryStatus next);

  PoolState state() const;
  std::vector<AuditRecord> audit() const;

  // Line-delimited JSON: one record per entry, then one per audit record.
  std::string dump() const;

 private:
  void deny(AgentRole actor, EntryId id, const std::string& why);
  void record(AuditRecord r);

  mutable std::mutex mu_;
  PoolState state_;
  std::vector<AuditRecord> audit_;
  std::uint64_t clock_ = 0;
};

// Folds Put and StatusChange records; everything else is ignored.
PoolState replay(const std::vector<AuditRecord>& audit);

void to_json(nlohmann::json& j, const Content& c);
void from_json(const nlohmann::json& j, Content& c);
void to_json(nlohmann::json& j, const PoolEntry& e);
void from_json(const nlohmann::json& j, PoolEntry& e);
void to_json(nlohmann::json& j, const AuditRecord& r);

}  // namespace ztnet
