#include "doctest.h"

#include <random>

#include "gen.hpp"
#include "helpers.hpp"

#include "crasim/engine.hpp"
#include "crasim/explorer.hpp"
#include "crasim/trace_io.hpp"

#include "json.hpp"

using namespace crasim;
using namespace crasim::test;

TEST_CASE("the header line carries scenario metadata") {
  Scenario s = simpleplus_chain(2);
  s.adversary.sw = true;
  s.seed = 5;
  Trace t = net::Engine(s).run();
  std::string text = trace_to_jsonl(t);
  std::istringstream is(text);
  std::string header;
  std::getline(is, header);
  auto j = nlohmann::json::parse(header);
  CHECK(j.at("protocol") == "simpleplus");
  CHECK(j.at("seed") == 5);
  CHECK(j.at("adversary") == nlohmann::json::array({"sw"}));
  CHECK(j.at("devices").size() == 3);

  // Every subsequent line is exactly {at, kind, args}.
  std::string line;
  std::size_t lines = 0;
  while (std::getline(is, line)) {
    auto e = nlohmann::json::parse(line);
    CHECK(e.size() == 3);
    CHECK(e.contains("at"));
    CHECK(e.contains("kind"));
    CHECK(e.contains("args"));
    ++lines;
  }
  CHECK(lines == t.events.size());
}

TEST_CASE("engine traces round-trip through jsonl") {
  Scenario s = simpleplus_chain(2, 2);
  s.adversary.sw = true;
  s.adversary.dy = true;
  s.script = {compromise_at("P0", 3)};
  Trace t = explore::scripted_run(s);
  Trace back = trace_from_jsonl(trace_to_jsonl(t));
  CHECK(trace_to_jsonl(back) == trace_to_jsonl(t));
}

TEST_CASE("synthetic traces with every claim shape round-trip") {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 50; ++i) {
    Trace t = random_trace(rng);
    std::string a = trace_to_jsonl(t);
    Trace back = trace_from_jsonl(a);
    CHECK(trace_to_jsonl(back) == a);
  }
}

TEST_CASE("defense and capture events round-trip") {
  Scenario s = simpleplus_chain(1, 2);
  s.defense_hb = true;
  s.hb.period = 3;
  s.hb.observer = "V";
  s.defense_su = true;
  s.su.epoch_len = 4;
  s.t_attack = 5;
  s.adversary.pi = true;
  s.script = {capture_between("P0", 6, 12, true)};
  Trace t = net::Engine(s).run();
  CHECK(count_events<ev::HeartbeatSend>(t) > 0);
  CHECK(count_events<ev::EpochKeyUpdate>(t) > 0);
  CHECK(count_events<ev::CaptureBegin>(t) == 1);
  Trace back = trace_from_jsonl(trace_to_jsonl(t));
  CHECK(trace_to_jsonl(back) == trace_to_jsonl(t));
  CHECK(back.meta.flags.size() == t.meta.flags.size());
}

TEST_CASE("parse failures carry the offending line") {
  CHECK_THROWS_AS((void)trace_from_jsonl("not json\n"), Error);
  CHECK_THROWS_AS((void)trace_from_jsonl(""), Error);
  try {
    (void)trace_from_jsonl("{}\n{\"at\": 1}\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
  }
}
