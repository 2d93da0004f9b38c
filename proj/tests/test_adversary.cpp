#include "doctest.h"

#include "helpers.hpp"

#include "crasim/adversary.hpp"
#include "crasim/engine.hpp"
#include "crasim/state.hpp"

using namespace crasim;
using namespace crasim::test;
using sym::Term;

TEST_CASE("sw compromise invalidates the device") {
  Scenario s = simpleplus_chain(2);
  s.adversary.sw = true;
  s.script = {compromise_at("P0", 2)};
  Trace t = net::Engine(s).run();
  DeviceId p0 = *t.device_by_name("P0");
  CHECK(!is_valid_state(t, p0, 3));
  CHECK(is_valid_state(t, p0, 1));
}

TEST_CASE("restore requires the msw flag") {
  Scenario s = simpleplus_chain(1);
  s.adversary.sw = true;
  s.script = {compromise_at("P0", 2), restore_at("P0", 4)};
  Trace t = net::Engine(s).run();
  bool rejected = false;
  for (const auto& f : t.meta.faults) {
    if (f.find("RejectedRestore") != std::string::npos) rejected = true;
  }
  CHECK(rejected);
  CHECK(!is_valid_state(t, *t.device_by_name("P0"), 5));
}

TEST_CASE("msw compromise and restore round-trips") {
  Scenario s = simpleplus_chain(1);
  s.adversary.msw = s.adversary.sw = true;
  s.script = {compromise_at("P0", 2), restore_at("P0", 4)};
  Trace t = net::Engine(s).run();
  DeviceId p0 = *t.device_by_name("P0");
  CHECK(!is_valid_state(t, p0, 3));
  CHECK(is_valid_state(t, p0, 5));
}

TEST_CASE("restore of a never-compromised device warns and does nothing") {
  Scenario s = simpleplus_chain(1);
  s.adversary.msw = s.adversary.sw = true;
  s.script = {restore_at("P0", 3)};
  Trace t = net::Engine(s).run();
  CHECK(count_events<ev::Restore>(t) == 0);
  bool warned = false;
  for (const auto& f : t.meta.faults) {
    if (f.find("no-op") != std::string::npos) warned = true;
  }
  CHECK(warned);
}

TEST_CASE("malware hop: no single moment with both devices invalid") {
  Scenario s = simpleplus_chain(2);
  s.adversary.msw = s.adversary.sw = true;
  s.rounds = 0;  // no protocol traffic needed
  s.script = {compromise_at("P0", 1), restore_at("P0", 3), compromise_at("P1", 4)};
  s.horizon = 10;
  Trace t = net::Engine(s).run();
  DeviceId p0 = *t.device_by_name("P0");
  DeviceId p1 = *t.device_by_name("P1");
  bool both_invalid_somewhere = false;
  bool each_invalid_somewhere_p0 = false, each_invalid_somewhere_p1 = false;
  for (TimePoint tp = 0; tp <= 8; ++tp) {
    bool v0 = is_valid_state(t, p0, tp);
    bool v1 = is_valid_state(t, p1, tp);
    if (!v0) each_invalid_somewhere_p0 = true;
    if (!v1) each_invalid_somewhere_p1 = true;
    if (!v0 && !v1) both_invalid_somewhere = true;
  }
  CHECK(each_invalid_somewhere_p0);
  CHECK(each_invalid_somewhere_p1);
  CHECK(!both_invalid_somewhere);
}

TEST_CASE("read_secrets needs pni or pi") {
  Scenario s = simpleplus_chain(1);
  net::Engine eng(s);
  try {
    eng.adversary().read_secrets(eng, 1);
    FAIL("expected RejectedCapability");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RejectedCapability);
  }
}

TEST_CASE("read_secrets exposes the shared keys") {
  Scenario s = simpleplus_chain(2);
  s.adversary.pni = true;
  net::Engine eng(s);
  eng.adversary().read_secrets(eng, 1);
  CHECK(eng.adversary().knowledge().contains(Term::key("auth")));
  CHECK(eng.adversary().knowledge().contains(Term::key("att")));
  // Shared-key deployment: a report mac for any prover is now forgeable.
  Term body = Term::pair(Term::atom("rep"),
                         Term::pair(Term::counter(1),
                                    Term::bitvec({Term::bit(true), Term::bit(true)})));
  CHECK(sym::can_derive(eng.adversary().knowledge(),
                        Term::mac(Term::key("auth"), body), 8));
}

TEST_CASE("unique keys stop cross-device forgery") {
  Scenario s = simpleplus_chain(2);
  s.key_policy = proto::KeyPolicyKind::PerDevice;
  s.adversary.pni = true;
  net::Engine eng(s);
  DeviceId p0 = *eng.device_by_name("P0");
  eng.adversary().read_secrets(eng, p0);
  CHECK(sym::can_derive(eng.adversary().knowledge(),
                        Term::sign(Term::key("dev:P0"), Term::atom("rep")), 4));
  CHECK(!sym::can_derive(eng.adversary().knowledge(),
                         Term::sign(Term::key("dev:P1"), Term::atom("rep")), 4));
}

TEST_CASE("capture window must cover t_attack") {
  Scenario s = simpleplus_chain(1);
  s.adversary.pi = true;
  s.t_attack = 5;
  net::Engine eng(s);
  try {
    eng.adversary().capture(eng, 1, 2, 5, false);
    FAIL("expected RejectedWindow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RejectedWindow);
  }
}

TEST_CASE("captured device is offline for the window") {
  Scenario s = simpleplus_chain(1);
  s.adversary.pi = true;
  s.t_attack = 3;
  s.rounds = 0;
  s.script = {capture_between("P0", 2, 6, true)};
  s.horizon = 10;
  Trace t = net::Engine(s).run();
  CHECK(count_events<ev::CaptureBegin>(t) == 1);
  CHECK(count_events<ev::CaptureEnd>(t) == 1);
  DeviceId p0 = *t.device_by_name("P0");
  CHECK(is_valid_state(t, p0, 5));   // commit happens at the end
  CHECK(!is_valid_state(t, p0, 6));  // rewrite applied
}

TEST_CASE("compromise during an attestation section is rejected") {
  Scenario s = simpleplus_chain(1);
  s.adversary.sw = true;
  s.attest_duration = 3;
  s.script = {compromise_at("P0", 2)};  // request arrives at 1, section [1,4)
  Trace t = net::Engine(s).run();
  // The engine defers the scripted compromise past the section end.
  TimePoint comp_at = 0;
  for (const auto& e : t.events) {
    if (e.as<ev::Compromise>()) comp_at = e.at;
  }
  CHECK(comp_at == 4);
  // And the direct call reports RejectedAtomic.
  Scenario s2 = simpleplus_chain(1);
  s2.adversary.sw = true;
  s2.attest_duration = 5;
  net::Engine eng(s2);
  eng.device(1).atomic_until = 5;
  try {
    eng.adversary().compromise(eng, 1);
    FAIL("expected RejectedAtomic");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RejectedAtomic);
  }
}

TEST_CASE("trusted-environment writes need an active capture") {
  Scenario s = simpleplus_chain(1);
  s.adversary.sw = true;
  net::Engine eng(s);
  try {
    eng.adversary().compromise(eng, 1, /*target_trusted=*/true);
    FAIL("expected RejectedTrusted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RejectedTrusted);
  }
}

TEST_CASE("knowledge never shrinks during a run") {
  Scenario s = simpleplus_chain(2, 2);
  s.adversary.dy = true;
  net::Engine eng(s);
  std::size_t before = eng.adversary().knowledge().size();
  eng.run();
  CHECK(eng.adversary().knowledge().size() >= before);
}

TEST_CASE("linter accepts engine traces and catches capability violations") {
  Scenario s = simpleplus_chain(2);
  s.adversary.sw = true;
  s.script = {compromise_at("P0", 2)};
  Trace t = net::Engine(s).run();
  CHECK(adv::lint_trace(t).empty());

  Trace bad = t;
  bad.meta.adversary = AdversaryFlags{};  // claims no capabilities
  CHECK(!adv::lint_trace(bad).empty());

  Trace recv_oota = t;
  recv_oota.events.push_back(
      Event{t.last_time() + 1, ev::MsgRecv{0, Term::atom("ghost")}});
  CHECK(!adv::lint_trace(recv_oota).empty());
}

TEST_CASE("sw+dy traces contain no physical events") {
  Scenario s = simpleplus_chain(2, 2);
  s.adversary.sw = true;
  s.adversary.dy = true;
  s.script = {compromise_at("P0", 3)};
  Trace t = net::Engine(s).run();
  CHECK(count_events<ev::SecretRead>(t) == 0);
  CHECK(count_events<ev::CaptureBegin>(t) == 0);
  CHECK(count_events<ev::CaptureEnd>(t) == 0);
}
