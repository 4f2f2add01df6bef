#include "doctest.h"
#include "ztnet/pool.hpp"

using namespace ztnet;
using R = AgentRole;

namespace {

Content plan_content() { return Content{ContentKind::WorkflowPlan, {{"steps", 4}}}; }

}  // namespace

TEST_CASE("ids and put") {
  SharedPool pool;
  const auto a = pool.put(R::NetworkDirector, "t1", "plan", plan_content(), R::NetworkDirector);
  CHECK(a == 1);
  const auto b = pool.put(R::NetworkDirector, "t1", "go", plan_content(), R::DtAgent);
  CHECK(b > a);
  const auto e = pool.get(R::NetworkDirector, b);
  CHECK(e.sender == R::NetworkDirector);
  CHECK(e.receiver == R::DtAgent);
  CHECK(e.status == EntryStatus::Posted);
  CHECK(e.digest == content_digest(e.content));
  CHECK_THROWS_AS(pool.get(R::NetworkDirector, 99), ValidationError);
  CHECK_THROWS_AS(pool.put(R::NetworkDirector, "t1", "x", plan_content(), R::DataCollector),
                  ValidationError);
}

TEST_CASE("experts have no pool access") {
  SharedPool pool;
  pool.put(R::NetworkDirector, "t1", "plan", plan_content(), R::OpticalLayerAgent);
  for (auto r : kAllRoles) {
    if (!is_expert(r)) continue;
    CAPTURE(role_name(r));
    const auto before = pool.state();
    CHECK_THROWS_AS(pool.put(r, "t1", "x", plan_content(), R::NetworkDirector), PermissionDenied);
    CHECK_THROWS_AS(pool.query(r), PermissionDenied);
    CHECK_THROWS_AS(pool.get(r, 1), PermissionDenied);
    CHECK_THROWS_AS(pool.update_status(r, 1, EntryStatus::Claimed), PermissionDenied);
    CHECK(pool.state() == before);
  }
  int denied = 0;
  for (const auto& a : pool.audit()) denied += a.action == AuditAction::Denied;
  CHECK(denied == 12 * 4);
}

TEST_CASE("read scope") {
  SharedPool pool;
  pool.put(R::NetworkDirector, "t1", "a", plan_content(), R::DtAgent);
  pool.put(R::NetworkDirector, "t1", "b", plan_content(), R::ControlAgent);
  pool.put(R::NetworkDirector, "t2", "c", plan_content(), R::DtAgent);

  PoolFilter mine;
  mine.receiver = R::DtAgent;
  const auto dt = pool.query(R::DtAgent, mine);
  CHECK(dt.size() == 2);
  for (const auto& e : dt) CHECK(e.receiver == R::DtAgent);

  PoolFilter other;
  other.receiver = R::ControlAgent;
  CHECK_THROWS_AS(pool.query(R::DtAgent, other), PermissionDenied);
  CHECK_THROWS_AS(pool.get(R::DtAgent, 2), PermissionDenied);

  PoolFilter task;
  task.task_id = "t1";
  CHECK(pool.query(R::NetworkDirector, task).size() == 2);
  CHECK(pool.query(R::NetworkDirector).size() == 3);
}

TEST_CASE("status transitions") {
  SharedPool pool;
  const auto id = pool.put(R::NetworkDirector, "t", "a", plan_content(), R::DtAgent);
  CHECK_THROWS_AS(pool.update_status(R::DtAgent, id, EntryStatus::Completed), ValidationError);
  CHECK_THROWS_AS(pool.update_status(R::ControlAgent, id, EntryStatus::Claimed), PermissionDenied);
  pool.update_status(R::DtAgent, id, EntryStatus::Claimed);
  pool.update_status(R::DtAgent, id, EntryStatus::Completed);
  CHECK_THROWS_AS(pool.update_status(R::DtAgent, id, EntryStatus::Claimed), ValidationError);
  CHECK(pool.get(R::NetworkDirector, id).status == EntryStatus::Completed);

  CHECK(legal_transition(EntryStatus::Posted, EntryStatus::Claimed));
  CHECK(legal_transition(EntryStatus::Claimed, EntryStatus::Failed));
  CHECK_FALSE(legal_transition(EntryStatus::Posted, EntryStatus::Completed));
  CHECK_FALSE(legal_transition(EntryStatus::Failed, EntryStatus::Claimed));
  CHECK_FALSE(legal_transition(EntryStatus::Completed, EntryStatus::Completed));
}

TEST_CASE("replay and dump") {
  SharedPool pool;
  const auto a = pool.put(R::NetworkDirector, "t", "a", plan_content(), R::SupportAgent);
  pool.update_status(R::SupportAgent, a, EntryStatus::Claimed);
  pool.put(R::SupportAgent, "t", "r", Content{ContentKind::SecurityVerdict, {{"approved", true}}},
           R::NetworkDirector);
  pool.update_status(R::SupportAgent, a, EntryStatus::Failed);
  CHECK(replay(pool.audit()) == pool.state());

  const auto dump = pool.dump();
  std::size_t lines = 0;
  for (char c : dump) lines += c == '\n';
  CHECK(lines == pool.state().entries.size() + pool.audit().size());
}

TEST_CASE("digest covers kind and body") {
  const Content a{ContentKind::QotReport, {{"x", 1}}};
  Content b = a;
  CHECK(content_digest(a) == content_digest(b));
  b.body["x"] = 2;
  CHECK(content_digest(a) != content_digest(b));
  b = a;
  b.kind = ContentKind::MarginReport;
  CHECK(content_digest(a) != content_digest(b));
  CHECK(content_kind_from_name(content_kind_name(ContentKind::FinalReport)) ==
        ContentKind::FinalReport);
}
