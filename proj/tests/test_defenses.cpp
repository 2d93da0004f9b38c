#include "doctest.h"

#include "helpers.hpp"

#include "crasim/engine.hpp"
#include "crasim/explorer.hpp"
#include "crasim/knowledge.hpp"
#include "crasim/protocols.hpp"

using namespace crasim;
using namespace crasim::test;
using sym::Term;

namespace {

Scenario hb_scenario(TimePoint t_attack, TimePoint period) {
  Scenario s = simpleplus_star(2);
  s.rounds = 0;  // heartbeat service only
  s.defense_hb = true;
  s.hb.period = period;
  s.hb.observer = "V";
  s.t_attack = t_attack;
  s.adversary.pi = true;
  s.horizon = 60;
  return s;
}

}  // namespace

TEST_CASE("a capture window longer than t_attack is flagged within one period") {
  Scenario s = hb_scenario(/*t_attack=*/6, /*period=*/3);
  s.script = {capture_between("P0", 10, 16)};
  Trace t = net::Engine(s).run();
  REQUIRE(t.meta.flags.size() == 1);
  const DetectorFlag& f = t.meta.flags[0];
  CHECK(f.device == *t.device_by_name("P0"));
  CHECK(f.reason == "hb-silence");
  // Last beat before the capture is at t=9; silence exceeds t_attack at 16,
  // and the flag lands within one period of that.
  CHECK(f.at > 9 + 6);
  CHECK(f.at <= 9 + 6 + 3);
}

TEST_CASE("an always-online prover is never flagged") {
  Scenario s = hb_scenario(6, 3);
  s.horizon = 200;
  Trace t = net::Engine(s).run();
  CHECK(t.meta.flags.empty());
  CHECK(count_events<ev::HeartbeatSend>(t) > 50);
}

TEST_CASE("a single dropped heartbeat below the threshold is not flagged") {
  Scenario s = hb_scenario(/*t_attack=*/9, /*period=*/3);
  s.adversary.dy = true;
  s.net_script = {"deliver", "deliver", "drop"};  // P0's second beat lost
  Trace t = explore::scripted_run(s);
  CHECK(t.meta.flags.empty());
}

TEST_CASE("replayed heartbeats do not refresh liveness") {
  Scenario s = hb_scenario(/*t_attack=*/6, /*period=*/3);
  s.adversary.dy = true;
  s.script = {capture_between("P0", 10, 22)};
  // Replay P0's first recorded beat during the capture window.
  Trace honest = net::Engine(hb_scenario(6, 3)).run();
  std::string beat;
  for (const auto& e : honest.events) {
    if (const auto* m = e.as<ev::MsgSend>()) {
      beat = m->body.to_text();
      break;
    }
  }
  REQUIRE(!beat.empty());
  ScriptAction inject;
  inject.kind = ScriptAction::Kind::Inject;
  inject.device = "V";
  inject.at = 17;
  inject.body = beat;
  s.script.push_back(inject);
  s.explore.bounds.max_inject_depth = 12;
  Trace t = explore::scripted_run(s);
  REQUIRE(t.meta.flags.size() == 1);
}

TEST_CASE("secret update locks a captured device out of the next round") {
  Scenario s = simpleplus_chain(2, 2);
  s.defense_su = true;
  s.su.epoch_len = 4;
  s.t_attack = 4;
  s.adversary.pi = true;
  s.round_period = 12;
  // Window covers the epoch rotations before round 2; P1 misses them.
  s.script = {capture_between("P1", 5, 11)};
  Trace t = net::Engine(s).run();
  auto claims = events_of<ev::ClaimIndividual>(t);
  REQUIRE(claims.size() == 2);
  DeviceId p1 = *t.device_by_name("P1");
  CHECK(claims[0].statuses.at(p1) == Status::Healthy);
  CHECK(claims[1].statuses.at(p1) == Status::Unhealthy);
  CHECK(count_events<ev::EpochKeyUpdate>(t) >= 1);
}

TEST_CASE("with everyone online the rotation is transparent") {
  Scenario s = simpleplus_chain(2, 2);
  s.defense_su = true;
  s.su.epoch_len = 4;
  s.t_attack = 4;
  s.round_period = 12;
  Trace t = net::Engine(s).run();
  auto claims = events_of<ev::ClaimIndividual>(t);
  REQUIRE(claims.size() == 2);
  for (const auto& c : claims) {
    for (const auto& [p, status] : c.statuses) {
      CHECK(status == Status::Healthy);
    }
  }
}

TEST_CASE("a pre-capture key cannot forge a post-epoch mac") {
  Scenario s = simpleplus_chain(2, 2);
  s.defense_su = true;
  s.su.epoch_len = 4;
  s.t_attack = 4;
  s.adversary.pi = true;  // capture only; no dy eavesdropping
  s.script = {capture_between("P1", 5, 11)};
  net::Engine eng(s);
  Trace t = eng.run();
  (void)t;
  // The capture starts as the first rotation lands, so the stolen key is
  // still the initial one; nothing after the rotation is forgeable.
  const auto& k = eng.adversary().knowledge();
  CHECK(sym::can_derive(k, Term::key("epoch:0"), 6));
  CHECK(!sym::can_derive(k, Term::key("epoch:1"), 6));
  CHECK(!sym::can_derive(k, Term::key("epoch:2"), 6));
  CHECK(!sym::can_derive(k, Term::mac(Term::key("epoch:2"), Term::atom("rep")), 6));
}

TEST_CASE("attestation frequency monitor flags capture-induced gaps") {
  Scenario s = simpleplus_chain(1, 3);
  s.defense_att = true;
  s.t_attack = 10;
  s.adversary.pi = true;
  s.round_period = 8;  // measurements at 1, 9, 17
  s.script = {capture_between("P0", 2, 18)};  // misses rounds 2 and 3
  Trace t = net::Engine(s).run();
  auto flags = proto::attestation_frequency_monitor(t, s.t_attack);
  REQUIRE(flags.size() == 1);
  CHECK(flags[0].device == *t.device_by_name("P0"));

  Scenario honest_s = simpleplus_chain(1, 3);
  honest_s.round_period = 8;
  Trace honest = net::Engine(honest_s).run();
  CHECK(proto::attestation_frequency_monitor(honest, 10).empty());
}

TEST_CASE("a gap of exactly t_attack is not flagged") {
  Trace t;
  t.meta.protocol = "none";
  DeviceMeta d;
  d.id = 0;
  d.name = "P0";
  d.roles.add(Role::Prover);
  d.initial_state = "good";
  d.acceptable = {"good"};
  t.meta.devices.push_back(d);
  t.events.push_back({0, ev::MeasureTaken{0, {"good"}}});
  t.events.push_back({10, ev::MeasureTaken{0, {"good"}}});
  CHECK(proto::attestation_frequency_monitor(t, 10).empty());
  t.events.push_back({21, ev::MeasureTaken{0, {"good"}}});
  CHECK(proto::attestation_frequency_monitor(t, 10).size() == 1);
}
