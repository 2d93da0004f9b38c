#include "doctest.h"

#include "helpers.hpp"

#include "crasim/checker.hpp"

using namespace crasim;
using check::GroupSpec;
using check::PropertyId;
using check::VerdictResult;
using sym::Term;

namespace {

Trace base_trace(std::size_t provers, bool interactive = true,
                 AdversaryFlags flags = {}) {
  Trace t;
  t.meta.protocol = interactive ? "simpleplus" : "pads";
  t.meta.interactive = interactive;
  t.meta.adversary = flags;
  for (std::size_t i = 0; i < provers; ++i) {
    DeviceMeta d;
    d.id = static_cast<DeviceId>(i);
    d.name = "P" + std::to_string(i);
    d.roles.add(Role::Prover);
    d.initial_state = "good";
    d.acceptable = {"good"};
    t.meta.devices.push_back(d);
  }
  DeviceMeta v;
  v.id = static_cast<DeviceId>(provers);
  v.name = "V";
  v.roles.add(Role::Verifier);
  v.roles.add(Role::Initiator);
  v.roles.add(Role::RelyingParty);
  v.initial_state = "good";
  v.acceptable = {"good"};
  t.meta.devices.push_back(v);
  return t;
}

Event claim_ind(DeviceId party, std::map<DeviceId, Status> st, Interval w,
                TimePoint at, std::uint64_t ctr = 1) {
  return Event{at, ev::ClaimIndividual{party, std::move(st), w, ctr}};
}

Event claim_grp(DeviceId party, std::vector<ev::GroupStatus> groups, Interval w,
                TimePoint at, std::uint64_t ctr = 1) {
  return Event{at, ev::ClaimGroup{party, std::move(groups), w, ctr}};
}

AdversaryFlags sw_only() {
  AdversaryFlags f;
  f.sw = true;
  return f;
}

AdversaryFlags msw() {
  AdversaryFlags f;
  f.sw = f.msw = true;
  return f;
}

}  // namespace

TEST_CASE("ia: one send, one matching complete") {
  Trace t = base_trace(1);
  Term req = Term::atom("r1");
  t.events.push_back({1, ev::SendRequest{1, 0, req}});
  t.events.push_back({3, ev::RunComplete{0, 1, req}});
  CHECK(check::check_ia(t).result == VerdictResult::Holds);
}

TEST_CASE("ia: replay acceptance violates injectivity") {
  Trace t = base_trace(1);
  Term req = Term::atom("r1");
  t.events.push_back({1, ev::SendRequest{1, 0, req}});
  t.events.push_back({3, ev::RunComplete{0, 1, req}});
  t.events.push_back({5, ev::RunComplete{0, 1, req}});
  auto v = check::check_ia(t);
  CHECK(v.result == VerdictResult::Violated);
  REQUIRE(v.witness.has_value());
  Trace w = check::witness_subtrace(t, *v.witness);
  CHECK(check::check_ia(w).result == VerdictResult::Violated);
}

TEST_CASE("ia: completion without any send is a violation") {
  Trace t = base_trace(1);
  t.events.push_back({3, ev::RunComplete{0, 1, Term::atom("forged")}});
  CHECK(check::check_ia(t).result == VerdictResult::Violated);
}

TEST_CASE("ia: completion before the send is a violation") {
  Trace t = base_trace(1);
  Term req = Term::atom("r1");
  t.events.push_back({2, ev::RunComplete{0, 1, req}});
  t.events.push_back({5, ev::SendRequest{1, 0, req}});
  CHECK(check::check_ia(t).result == VerdictResult::Violated);
}

TEST_CASE("ia is inapplicable to non-interactive traces") {
  Trace t = base_trace(1, /*interactive=*/false);
  t.events.push_back({3, ev::RunComplete{0, 1, Term::atom("x")}});
  CHECK(check::check_ia(t).result == VerdictResult::Inapplicable);
}

TEST_CASE("all healthy throughout: every variant holds") {
  Trace t = base_trace(2, true, sw_only());
  t.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  t.events.push_back(claim_ind(2, {{0, Status::Healthy}, {1, Status::Healthy}},
                               {1, 5}, 6));
  for (bool sync : {false, true}) {
    for (bool strong : {false, true}) {
      CHECK(check::check_individual(t, sync, strong).result == VerdictResult::Holds);
    }
  }
}

TEST_CASE("healthy prover claimed unhealthy: weak holds, strong violated") {
  Trace t = base_trace(2, true, sw_only());
  t.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  t.events.push_back(claim_ind(2, {{0, Status::Healthy}, {1, Status::Unhealthy}},
                               {1, 5}, 6));
  CHECK(check::check_individual(t, false, false).result == VerdictResult::Holds);
  CHECK(check::check_individual(t, false, true).result == VerdictResult::Violated);
}

TEST_CASE("malware hop: async holds, sync violated") {
  Trace t = base_trace(2, true, msw());
  t.events.push_back({0, ev::Compromise{0}});
  t.events.push_back({3, ev::Restore{0}});
  t.events.push_back({3, ev::Compromise{1}});
  t.events.push_back(claim_ind(2, {{0, Status::Healthy}, {1, Status::Healthy}},
                               {0, 6}, 7));
  CHECK(check::check_individual(t, false, false).result == VerdictResult::Holds);
  CHECK(check::check_individual(t, true, false).result == VerdictResult::Violated);
}

TEST_CASE("unknown statuses stay outside the claimed set") {
  Trace t = base_trace(2, true, sw_only());
  t.events.push_back({1, ev::Compromise{1}});
  t.events.push_back(claim_ind(2, {{0, Status::Healthy}, {1, Status::Unknown}},
                               {1, 5}, 6));
  // P1 is compromised but only carried as Unknown, so it is not judged.
  CHECK(check::check_individual(t, false, true).result == VerdictResult::Holds);
}

TEST_CASE("an empty claim holds vacuously") {
  Trace t = base_trace(1, true, sw_only());
  t.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  t.events.push_back(claim_ind(1, {}, {1, 4}, 5));
  CHECK(check::check_individual(t, true, true).result == VerdictResult::Holds);
}

TEST_CASE("no claims of a kind make the property inapplicable") {
  Trace t = base_trace(1);
  t.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  CHECK(check::check_individual(t, false, false).result ==
        VerdictResult::Inapplicable);
  CHECK(check::check_group(t, {}, false, false).result ==
        VerdictResult::Inapplicable);
}

TEST_CASE("claim interval beyond the trace horizon is a trace error") {
  Trace t = base_trace(1, true, sw_only());
  t.events.push_back(claim_ind(1, {{0, Status::Healthy}}, {0, 9}, 3));
  CHECK_THROWS_AS((void)check::check_individual(t, false, false), Error);
}

TEST_CASE("group checks follow the weak/strong and threshold clauses") {
  Trace t = base_trace(3, true, sw_only());
  t.events.push_back({2, ev::Compromise{1}});
  t.events.push_back(
      claim_grp(3, {ev::GroupStatus{{0, 1, 2}, Status::Healthy}}, {0, 5}, 6));

  // Weak async: every member had a valid time (P1 valid before 2).
  CHECK(check::check_group(t, {}, false, false).result == VerdictResult::Holds);

  // Strict sync at t=0 or 1 works too.
  CHECK(check::check_group(t, {}, true, false).result == VerdictResult::Holds);

  // Shrink the window so P1 is invalid throughout.
  Trace t2 = base_trace(3, true, sw_only());
  t2.events.push_back({2, ev::Compromise{1}});
  t2.events.push_back(
      claim_grp(3, {ev::GroupStatus{{0, 1, 2}, Status::Healthy}}, {3, 5}, 6));
  CHECK(check::check_group(t2, {}, false, false).result == VerdictResult::Violated);
  GroupSpec relaxed;
  relaxed.threshold = 1;
  CHECK(check::check_group(t2, relaxed, false, false).result == VerdictResult::Holds);
}

TEST_CASE("strong group clause needs enough invalid members") {
  Trace t = base_trace(2, true, sw_only());
  t.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  t.events.push_back(
      claim_grp(2, {ev::GroupStatus{{0, 1}, Status::Unhealthy}}, {1, 5}, 6));
  // Nobody is invalid: the unhealthy group claim has no justification.
  CHECK(check::check_group(t, {}, false, false).result == VerdictResult::Holds);
  CHECK(check::check_group(t, {}, false, true).result == VerdictResult::Violated);

  Trace t2 = base_trace(2, true, sw_only());
  t2.events.push_back({2, ev::Compromise{0}});
  t2.events.push_back(
      claim_grp(2, {ev::GroupStatus{{0, 1}, Status::Unhealthy}}, {1, 5}, 6));
  CHECK(check::check_group(t2, {}, false, true).result == VerdictResult::Holds);
  // At threshold 1 a single invalid member no longer justifies it.
  GroupSpec relaxed;
  relaxed.threshold = 1;
  CHECK(check::check_group(t2, relaxed, false, true).result ==
        VerdictResult::Violated);
}

TEST_CASE("spec groups must match the claimed universe") {
  Trace t = base_trace(2, true, sw_only());
  t.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  t.events.push_back(
      claim_grp(2, {ev::GroupStatus{{0}, Status::Healthy}}, {1, 4}, 5));
  GroupSpec spec;
  spec.groups = {{0, 1}};  // member 1 is not in the claimed universe
  CHECK_THROWS_AS((void)check::check_group(t, spec, false, false), Error);
}

TEST_CASE("qosa classification from claim shape") {
  Trace list_trace = base_trace(2, true, sw_only());
  list_trace.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  list_trace.events.push_back(claim_ind(2, {{0, Status::Healthy}}, {0, 1}, 2));
  CHECK(check::classify_qosa(list_trace) == check::Qosa::List);

  Trace bin_trace = base_trace(2, true, sw_only());
  bin_trace.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  bin_trace.events.push_back(
      claim_grp(2, {ev::GroupStatus{{0, 1}, Status::Healthy}}, {0, 1}, 2));
  CHECK(check::classify_qosa(bin_trace) == check::Qosa::Binary);

  Trace mid_trace = base_trace(4, true, sw_only());
  mid_trace.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  mid_trace.events.push_back(
      claim_grp(4,
                {ev::GroupStatus{{0, 1}, Status::Healthy},
                 ev::GroupStatus{{2, 3}, Status::Healthy}},
                {0, 1}, 2));
  CHECK(check::classify_qosa(mid_trace) == check::Qosa::Intermediate);

  Trace none = base_trace(1);
  none.events.push_back({1, ev::MeasureTaken{0, {"good"}}});
  try {
    (void)check::classify_qosa(none);
    FAIL("expected NoClaims");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoClaims);
  }

  // Classification ignores the statuses themselves.
  Trace bin2 = bin_trace;
  std::get<ev::ClaimGroup>(bin2.events.back().data).groups[0].status =
      Status::Unhealthy;
  CHECK(check::classify_qosa(bin2) == check::Qosa::Binary);
}

TEST_CASE("multiple claims are checked independently") {
  Trace t = base_trace(1, true, sw_only());
  t.events.push_back(claim_ind(1, {{0, Status::Healthy}}, {0, 1}, 2, 1));
  t.events.push_back({3, ev::Compromise{0}});
  t.events.push_back(claim_ind(1, {{0, Status::Healthy}}, {3, 5}, 6, 2));
  // Second claim is wrong even though the first was fine.
  CHECK(check::check_individual(t, false, false).result == VerdictResult::Violated);
}

TEST_CASE("strength ordering helper spots inversions") {
  using check::Verdict;
  std::vector<Verdict> fine;
  fine.push_back({PropertyId::ISS, VerdictResult::Violated, std::nullopt});
  fine.push_back({PropertyId::IAW, VerdictResult::Holds, std::nullopt});
  CHECK(check::strength_ordering_ok(fine));

  std::vector<Verdict> broken;
  broken.push_back({PropertyId::ISS, VerdictResult::Holds, std::nullopt});
  broken.push_back({PropertyId::IAW, VerdictResult::Violated, std::nullopt});
  CHECK(!check::strength_ordering_ok(broken));
}
