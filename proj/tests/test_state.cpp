#include "doctest.h"

#include "helpers.hpp"

#include "crasim/state.hpp"

using namespace crasim;

namespace {

Trace make_trace(AdversaryFlags flags, std::vector<Event> events,
                 std::size_t provers = 2) {
  Trace t;
  t.meta.protocol = "none";
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
  t.events = std::move(events);
  return t;
}

AdversaryFlags sw_flags() {
  AdversaryFlags f;
  f.sw = true;
  return f;
}

AdversaryFlags msw_flags() {
  AdversaryFlags f;
  f.sw = f.msw = true;
  return f;
}

}  // namespace

TEST_CASE("unmodified state stays acceptable") {
  Trace t = make_trace(sw_flags(), {{9, ev::MeasureTaken{0, {"good"}}}});
  for (TimePoint tp : {0, 3, 9}) {
    CHECK(is_valid_state(t, 0, tp));
  }
}

TEST_CASE("software compromise is permanent without msw") {
  Trace t = make_trace(sw_flags(), {{3, ev::Compromise{0}}, {9, ev::MeasureTaken{0, {"bad"}}}});
  CHECK(is_valid_state(t, 0, 2));
  CHECK(!is_valid_state(t, 0, 3));
  CHECK(!is_valid_state(t, 0, 5));
  CHECK(!is_valid_state(t, 0, 9));
  CHECK(is_valid_state(t, 1, 9));
}

TEST_CASE("mobile software can restore") {
  Trace t = make_trace(msw_flags(),
                       {{3, ev::Compromise{0}}, {4, ev::Restore{0}},
                        {9, ev::MeasureTaken{0, {"good"}}}});
  CHECK(!is_valid_state(t, 0, 3));
  CHECK(is_valid_state(t, 0, 5));
}

TEST_CASE("capture commit flips state at the window end") {
  AdversaryFlags f;
  f.pi = true;
  Trace t = make_trace(f, {{2, ev::CaptureBegin{0, true}},
                           {8, ev::CaptureEnd{0, true}},
                           {10, ev::MeasureTaken{0, {"bad"}}}});
  CHECK(is_valid_state(t, 0, 5));
  CHECK(!is_valid_state(t, 0, 8));
  CHECK(!is_valid_state(t, 0, 10));
}

TEST_CASE("unknown device is an error") {
  Trace t = make_trace(sw_flags(), {{1, ev::MeasureTaken{0, {"good"}}}});
  CHECK_THROWS_AS((void)is_valid_state(t, 9, 0), Error);
  try {
    (void)is_valid_state(t, 9, 0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownDevice);
  }
}

TEST_CASE("change points: no events in the window") {
  Trace t = make_trace(sw_flags(), {{9, ev::MeasureTaken{0, {"good"}}}});
  CHECK(state_change_points(t, 0, {2, 7}) == std::vector<TimePoint>{2, 7});
}

TEST_CASE("change points: one compromise inside the window") {
  Trace t = make_trace(sw_flags(), {{4, ev::Compromise{0}}, {9, ev::MeasureTaken{0, {"good"}}}});
  CHECK(state_change_points(t, 0, {2, 7}) == std::vector<TimePoint>{2, 4, 7});
}

TEST_CASE("change points: compromise then restore") {
  Trace t = make_trace(msw_flags(),
                       {{4, ev::Compromise{0}}, {6, ev::Restore{0}},
                        {9, ev::MeasureTaken{0, {"good"}}}});
  CHECK(state_change_points(t, 0, {2, 7}) == std::vector<TimePoint>{2, 4, 6, 7});
}

TEST_CASE("change points on an empty trace is an error") {
  Trace t = make_trace(sw_flags(), {});
  try {
    (void)state_change_points(t, 0, {0, 1});
    FAIL("expected EmptyTrace");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyTrace);
  }
}

TEST_CASE("replay is deterministic") {
  Trace t = make_trace(msw_flags(),
                       {{1, ev::Compromise{0}}, {3, ev::Restore{0}},
                        {5, ev::Compromise{1}}, {9, ev::MeasureTaken{0, {"good"}}}});
  for (TimePoint tp = 0; tp <= 9; ++tp) {
    CHECK(is_valid_state(t, 0, tp) == is_valid_state(t, 0, tp));
    CHECK(is_valid_state(t, 1, tp) == is_valid_state(t, 1, tp));
  }
}

TEST_CASE("validity is monotone non-increasing under sw only") {
  Trace t = make_trace(sw_flags(), {{2, ev::Compromise{0}}, {6, ev::Compromise{1}},
                                    {9, ev::MeasureTaken{0, {"bad"}}}});
  for (DeviceId p : {0u, 1u}) {
    bool prev = true;
    for (TimePoint tp = 0; tp <= 9; ++tp) {
      bool v = is_valid_state(t, p, tp);
      CHECK((prev || !v));  // once false, never true again
      prev = v;
    }
  }
  TraceStateIndex idx(t);
  CHECK(idx.monotone_non_increasing());
  TraceStateIndex idx2(make_trace(msw_flags(), {{9, ev::MeasureTaken{0, {"good"}}}}));
  CHECK(!idx2.monotone_non_increasing());
}

TEST_CASE("validity is constant between consecutive change points") {
  Trace t = make_trace(msw_flags(),
                       {{2, ev::Compromise{0}}, {4, ev::Restore{0}},
                        {6, ev::Compromise{0}}, {9, ev::MeasureTaken{0, {"good"}}}});
  Interval w{0, 9};
  auto points = state_change_points(t, 0, w);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    bool v = is_valid_state(t, 0, points[i]);
    for (TimePoint tp = points[i]; tp < points[i + 1]; ++tp) {
      CHECK(is_valid_state(t, 0, tp) == v);
    }
  }
}

TEST_CASE("timeline index agrees with direct replay") {
  Trace t = make_trace(msw_flags(),
                       {{1, ev::Compromise{1}}, {3, ev::Restore{1}},
                        {4, ev::Compromise{0}}, {8, ev::MeasureTaken{0, {"bad"}}}});
  TraceStateIndex idx(t);
  for (DeviceId p : {0u, 1u}) {
    for (TimePoint tp = 0; tp <= 8; ++tp) {
      CHECK(idx.valid_at(p, tp) == is_valid_state(t, p, tp));
    }
    CHECK(idx.change_points(p, {0, 8}) == state_change_points(t, p, {0, 8}));
  }
}

TEST_CASE("acceptable lists can change at configured boundaries") {
  AcceptableStates acc;
  acc.set_initial(0, {"v1"});
  acc.add_update(0, 10, {"v2"});
  CHECK(acc.contains(0, "v1", 9));
  CHECK(!acc.contains(0, "v1", 10));
  CHECK(acc.contains(0, "v2", 10));
  CHECK(acc.update_times(0, {0, 20}) == std::vector<TimePoint>{10});
}
