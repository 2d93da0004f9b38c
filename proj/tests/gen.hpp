#pragma once

// Random small-trace generator for checker cross-validation. Traces are
// capability-consistent with their adversary flags but otherwise
// unconstrained: arbitrary compromise/restore patterns, claim windows and
// statuses, both claim kinds, occasional unknown entries and empty claims.

#include <random>

#include "crasim/event.hpp"

namespace crasim::test {

struct GenConfig {
  std::size_t max_provers = 4;
  TimePoint max_ticks = 60;
  bool allow_restores = true;  // msw traces when true, sw-only otherwise
};

inline Trace random_trace(std::mt19937_64& rng, const GenConfig& cfg = {}) {
  auto pick = [&](std::uint64_t n) { return n ? rng() % n : 0; };

  Trace t;
  t.meta.protocol = "none";
  t.meta.interactive = true;
  t.meta.adversary.sw = true;
  bool msw = cfg.allow_restores && pick(2) == 0;
  t.meta.adversary.msw = msw;

  std::size_t provers = 1 + pick(cfg.max_provers);
  for (std::size_t i = 0; i < provers; ++i) {
    DeviceMeta d;
    d.id = static_cast<DeviceId>(i);
    d.name = "P" + std::to_string(i);
    d.roles.add(Role::Prover);
    d.initial_state = "good";
    d.acceptable = {"good"};
    t.meta.devices.push_back(d);
  }
  DeviceMeta rp;
  rp.id = static_cast<DeviceId>(provers);
  rp.name = "RP";
  rp.roles.add(Role::RelyingParty);
  rp.initial_state = "good";
  rp.acceptable = {"good"};
  t.meta.devices.push_back(rp);

  TimePoint horizon = 10 + pick(cfg.max_ticks - 10);

  // Compromise/restore timeline per prover.
  std::vector<bool> down(provers, false);
  std::vector<Event> events;
  std::size_t mutations = pick(2 * provers + 2);
  for (std::size_t i = 0; i < mutations; ++i) {
    DeviceId p = static_cast<DeviceId>(pick(provers));
    TimePoint at = pick(horizon + 1);
    if (!down[p]) {
      events.push_back({at, ev::Compromise{p}});
      down[p] = true;
    } else if (msw) {
      events.push_back({at, ev::Restore{p}});
      down[p] = false;
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.at < b.at; });
  // Chronological consistency per prover: drop out-of-order flips.
  {
    std::vector<bool> state(provers, false);
    std::vector<Event> kept;
    for (auto& e : events) {
      if (const auto* c = e.as<ev::Compromise>()) {
        if (state[c->prover]) continue;
        state[c->prover] = true;
      } else if (const auto* r = e.as<ev::Restore>()) {
        if (!state[r->prover]) continue;
        state[r->prover] = false;
      }
      kept.push_back(e);
    }
    events = std::move(kept);
  }

  // Claims near the end, windows anywhere before them.
  std::size_t claims = 1 + pick(3);
  for (std::size_t c = 0; c < claims; ++c) {
    TimePoint at = horizon - pick(3);
    TimePoint end = at > 0 ? at - pick(std::min<TimePoint>(at, 4)) : 0;
    TimePoint start = end - pick(std::min<TimePoint>(end + 1, 20));
    Interval w{start, end};
    if (pick(2) == 0) {
      std::map<DeviceId, Status> statuses;
      for (std::size_t p = 0; p < provers; ++p) {
        switch (pick(4)) {
          case 0: statuses[static_cast<DeviceId>(p)] = Status::Healthy; break;
          case 1: statuses[static_cast<DeviceId>(p)] = Status::Unhealthy; break;
          case 2: statuses[static_cast<DeviceId>(p)] = Status::Unknown; break;
          default: break;  // not claimed at all
        }
      }
      events.push_back({at, ev::ClaimIndividual{rp.id, std::move(statuses), w,
                                                c + 1}});
    } else {
      std::vector<ev::GroupStatus> groups;
      std::size_t ngroups = 1 + pick(2);
      std::size_t per = std::max<std::size_t>(1, provers / ngroups);
      std::size_t next = 0;
      for (std::size_t g = 0; g < ngroups && next < provers; ++g) {
        ev::GroupStatus gs;
        for (std::size_t k = 0; k < per && next < provers; ++k) {
          gs.provers.push_back(static_cast<DeviceId>(next++));
        }
        gs.status = pick(2) == 0 ? Status::Healthy : Status::Unhealthy;
        groups.push_back(std::move(gs));
      }
      events.push_back({at, ev::ClaimGroup{rp.id, std::move(groups), w, c + 1}});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.at < b.at; });
  // Terminal marker so claim windows stay inside the horizon.
  events.push_back({horizon, ev::MeasureTaken{0, {"good"}}});
  t.events = std::move(events);
  return t;
}

}  // namespace crasim::test
