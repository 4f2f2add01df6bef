#include "ztnet/pool.hpp"

#include <algorithm>

#include "ztnet/common.hpp"
#include "ztnet/digest.hpp"

namespace ztnet {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ContentKind, std::string_view>, 10> kKindNames = {{
    {ContentKind::WorkflowPlan, "WorkflowPlan"},
    {ContentKind::TelemetrySnapshot, "TelemetrySnapshot"},
    {ContentKind::QotReport, "QotReport"},
    {ContentKind::CalibrationReport, "CalibrationReport"},
    {ContentKind::RehearsalResult, "RehearsalResult"},
    {ContentKind::MarginReport, "MarginReport"},
    {ContentKind::InstructionSet, "InstructionSet"},
    {ContentKind::AnalysisReport, "AnalysisReport"},
    {ContentKind::SecurityVerdict, "SecurityVerdict"},
    {ContentKind::FinalReport, "FinalReport"},
}};

AgentRole role_or_throw(const std::string& s) {
  const auto r = role_from_name(s);
  if (!r) throw ValidationError("unknown role '" + s + "'");
  return *r;
}

}  // namespace

std::string_view content_kind_name(ContentKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

ContentKind content_kind_from_name(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  throw ValidationError("unknown content kind '" + std::string(s) + "'");
}

std::string content_digest(const Content& c) { return sha256_hex(json(c).dump()); }

std::string_view entry_status_name(EntryStatus s) {
  switch (s) {
    case EntryStatus::Posted: return "Posted";
    case EntryStatus::Claimed: return "Claimed";
    case EntryStatus::Completed: return "Completed";
    case EntryStatus::Failed: return "Failed";
  }
  return "?";
}

EntryStatus entry_status_from_name(std::string_view s) {
  for (auto st : {EntryStatus::Posted, EntryStatus::Claimed, EntryStatus::Completed,
                  EntryStatus::Failed}) {
    if (entry_status_name(st) == s) return st;
  }
  throw ValidationError("unknown entry status '" + std::string(s) + "'");
}

bool legal_transition(EntryStatus from, EntryStatus to) {
  return from == EntryStatus::Posted ? to == EntryStatus::Claimed
         : from == EntryStatus::Claimed
             ? (to == EntryStatus::Completed || to == EntryStatus::Failed)
             : false;
}

bool PermissionMatrix::has_access(AgentRole r) {
  return r == AgentRole::NetworkDirector || is_division(r);
}

bool PermissionMatrix::can_write(AgentRole r) { return has_access(r); }

bool PermissionMatrix::can_read(AgentRole r, const PoolEntry& e) {
  if (r == AgentRole::NetworkDirector) return true;
  if (!is_division(r)) return false;
  return e.receiver == r || e.sender == r;
}

std::string_view audit_action_name(AuditAction a) {
  switch (a) {
    case AuditAction::Put: return "Put";
    case AuditAction::Get: return "Get";
    case AuditAction::StatusChange: return "StatusChange";
    case AuditAction::Denied: return "Denied";
  }
  return "?";
}

// ---------------------------------------------------------------------------

void SharedPool::record(AuditRecord r) {
  r.seq = audit_.size() + 1;
  r.timestamp = ++clock_;
  audit_.push_back(std::move(r));
}

void SharedPool::deny(AgentRole actor, EntryId id, const std::string& why) {
  AuditRecord r;
  r.actor = actor;
  r.action = AuditAction::Denied;
  r.entry_id = id;
  r.detail = why;
  record(std::move(r));
  throw PermissionDenied(std::string(role_name(actor)) + ": " + why);
}

EntryId SharedPool::put(AgentRole actor, std::string task_id, std::string instruction,
                        Content content, AgentRole receiver) {
  std::lock_guard lock(mu_);
  if (!PermissionMatrix::can_write(actor)) deny(actor, 0, "no pool write access");
  if (!PermissionMatrix::has_access(receiver)) {
    throw ValidationError("receiver " + std::string(role_name(receiver)) +
                          " is not a pool principal");
  }
  PoolEntry e;
  e.entry_id = state_.next_id++;
  e.task_id = std::move(task_id);
  e.instruction = std::move(instruction);
  e.digest = content_digest(content);
  e.content = std::move(content);
  e.sender = actor;
  e.receiver = receiver;
  e.status = EntryStatus::Posted;
  state_.entries.push_back(e);

  AuditRecord r;
  r.actor = actor;
  r.action = AuditAction::Put;
  r.entry_id = e.entry_id;
  r.entry = std::move(e);
  record(std::move(r));
  return state_.entries.back().entry_id;
}

std::vector<PoolEntry> SharedPool::query(AgentRole actor, const PoolFilter& filter) {
  std::lock_guard lock(mu_);
  if (!PermissionMatrix::has_access(actor)) deny(actor, 0, "no pool read access");
  if (filter.receiver && actor != AgentRole::NetworkDirector && *filter.receiver != actor) {
    deny(actor, 0,
         "query for receiver " + std::string(role_name(*filter.receiver)) + " is out of scope");
  }
  std::vector<PoolEntry> out;
  for (const auto& e : state_.entries) {
    if (!PermissionMatrix::can_read(actor, e)) continue;
    if (filter.task_id && e.task_id != *filter.task_id) continue;
    if (filter.receiver && e.receiver != *filter.receiver) continue;
    if (filter.status && e.status != *filter.status) continue;
    if (filter.kind && e.content.kind != *filter.kind) continue;
    out.push_back(e);
  }
  for (const auto& e : out) {
    AuditRecord r;
    r.actor = actor;
    r.action = AuditAction::Get;
    r.entry_id = e.entry_id;
    record(std::move(r));
  }
  return out;
}

PoolEntry SharedPool::get(AgentRole actor, EntryId id) {
  std::lock_guard lock(mu_);
  if (!PermissionMatrix::has_access(actor)) deny(actor, id, "no pool read access");
  const auto it = std::find_if(state_.entries.begin(), state_.entries.end(),
                               [id](const PoolEntry& e) { return e.entry_id == id; });
  if (it == state_.entries.end()) throw ValidationError("no pool entry " + std::to_string(id));
  if (!PermissionMatrix::can_read(actor, *it)) {
    deny(actor, id, "entry " + std::to_string(id) + " is out of scope");
  }
  AuditRecord r;
  r.actor = actor;
  r.action = AuditAction::Get;
  r.entry_id = id;
  record(std::move(r));
  return *it;
}

void SharedPool::update_status(AgentRole actor, EntryId id, EntryStatus next) {
  std::lock_guard lock(mu_);
  if (!PermissionMatrix::has_access(actor)) deny(actor, id, "no pool write access");
  const auto it = std::find_if(state_.entries.begin(), state_.entries.end(),
                               [id](const PoolEntry& e) { return e.entry_id == id; });
  if (it == state_.entries.end()) throw ValidationError("no pool entry " + std::to_string(id));
  if (actor != AgentRole::NetworkDirector && actor != it->receiver) {
    deny(actor, id, "only the receiver or the director may change entry status");
  }
  if (!legal_transition(it->status, next)) {
    throw ValidationError("illegal transition " + std::string(entry_status_name(it->status)) +
                          " -> " + std::string(entry_status_name(next)));
  }
  it->status = next;
  AuditRecord r;
  r.actor = actor;
  r.action = AuditAction::StatusChange;
  r.entry_id = id;
  r.new_status = next;
  record(std::move(r));
}

PoolState SharedPool::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::vector<AuditRecord> SharedPool::audit() const {
  std::lock_guard lock(mu_);
  return audit_;
}

std::string SharedPool::dump() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : state_.entries) {
    json j = e;
    j["record"] = "entry";
    out += j.dump();
    out += '\n';
  }
  for (const auto& a : audit_) {
    json j = a;
    j["record"] = "audit";
    out += j.dump();
    out += '\n';
  }
  return out;
}

PoolState replay(const std::vector<AuditRecord>& audit) {
  PoolState s;
  for (const auto& r : audit) {
    if (r.action == AuditAction::Put) {
      if (!r.entry) throw ValidationError("put record without entry");
      s.entries.push_back(*r.entry);
      s.next_id = std::max(s.next_id, r.entry->entry_id + 1);
    } else if (r.action == AuditAction::StatusChange) {
      if (!r.new_status) throw ValidationError("status record without status");
      auto it = std::find_if(s.entries.begin(), s.entries.end(),
                             [&](const PoolEntry& e) { return e.entry_id == r.entry_id; });
      if (it == s.entries.end()) throw ValidationError("status change for unknown entry");
      it->status = *r.new_status;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const Content& c) {
  j = json{{"kind", std::string(content_kind_name(c.kind))}, {"body", c.body}};
}

void from_json(const json& j, Content& c) {
  c.kind = content_kind_from_name(j.at("kind").get<std::string>());
  c.body = j.at("body");
}

void to_json(json& j, const PoolEntry& e) {
  j = json{{"entry_id", e.entry_id},
           {"task_id", e.task_id},
           {"instruction", e.instruction},
           {"content", e.content},
           {"digest", e.digest},
           {"sender", std::string(role_name(e.sender))},
           {"receiver", std::string(role_name(e.receiver))},
           {"status", std::string(entry_status_name(e.status))}};
}

void from_json(const json& j, PoolEntry& e) {
  j.at("entry_id").get_to(e.entry_id);
  j.at("task_id").get_to(e.task_id);
  j.at("instruction").get_to(e.instruction);
  j.at("content").get_to(e.content);
  j.at("digest").get_to(e.digest);
  e.sender = role_or_throw(j.at("sender").get<std::string>());
  e.receiver = role_or_throw(j.at("receiver").get<std::string>());
  e.status = entry_status_from_name(j.at("status").get<std::string>());
}

void to_json(json& j, const AuditRecord& r) {
  j = json{{"seq", r.seq},
           {"actor", std::string(role_name(r.actor))},
           {"action", std::string(audit_action_name(r.action))},
           {"entry_id", r.entry_id},
           {"timestamp", r.timestamp}};
  if (r.entry) j["entry"] = *r.entry;
  if (r.new_status) j["new_status"] = std::string(entry_status_name(*r.new_status));
  if (!r.detail.empty()) j["detail"] = r.detail;
}

}  // namespace ztnet
