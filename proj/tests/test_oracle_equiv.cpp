#include "doctest.h"

#include "gen.hpp"
#include "helpers.hpp"

#include "crasim/checker.hpp"
#include "crasim/oracle.hpp"

using namespace crasim;
using namespace crasim::test;
using check::GroupSpec;
using check::VerdictResult;

namespace {

void expect_agreement(const Trace& t, const GroupSpec& spec) {
  for (bool sync : {false, true}) {
    for (bool strong : {false, true}) {
      auto fast = check::check_individual(t, sync, strong);
      auto slow = check::oracle_check_individual(t, sync, strong);
      CHECK(fast.result == slow.result);
      auto gfast = check::check_group(t, spec, sync, strong);
      auto gslow = check::oracle_check_group(t, spec, sync, strong);
      CHECK(gfast.result == gslow.result);
    }
  }
}

}  // namespace

TEST_CASE("optimized and oracle checkers agree on random traces") {
  std::mt19937_64 rng(2024);
  GroupSpec spec;
  for (int i = 0; i < 1500; ++i) {
    GenConfig cfg;
    cfg.allow_restores = i % 2 == 0;
    Trace t = random_trace(rng, cfg);
    spec.threshold = i % 3 == 0 ? 1 : 0;
    expect_agreement(t, spec);
  }
}

TEST_CASE("the endpoint shortcut matches full enumeration on sw traces") {
  std::mt19937_64 rng(99);
  GenConfig cfg;
  cfg.allow_restores = false;  // monotone validity: shortcut active
  for (int i = 0; i < 500; ++i) {
    Trace t = random_trace(rng, cfg);
    REQUIRE(!t.meta.adversary.restores_possible());
    expect_agreement(t, {});
  }
}

TEST_CASE("restore traces disable the shortcut but stay equivalent") {
  std::mt19937_64 rng(77);
  GenConfig cfg;
  cfg.allow_restores = true;
  int with_restores = 0;
  for (int i = 0; i < 500; ++i) {
    Trace t = random_trace(rng, cfg);
    bool has_restore = false;
    for (const auto& e : t.events) {
      if (e.as<ev::Restore>()) has_restore = true;
    }
    if (has_restore) ++with_restores;
    expect_agreement(t, {});
  }
  CHECK(with_restores > 50);
}

TEST_CASE("violated verdicts replay to the same violation") {
  std::mt19937_64 rng(31337);
  int replayed = 0;
  for (int i = 0; i < 800 && replayed < 60; ++i) {
    Trace t = random_trace(rng);
    for (bool sync : {false, true}) {
      for (bool strong : {false, true}) {
        auto v = check::check_individual(t, sync, strong);
        if (v.result == VerdictResult::Violated) {
          REQUIRE(v.witness.has_value());
          Trace sub = check::witness_subtrace(t, *v.witness);
          CHECK(check::check_individual(sub, sync, strong).result ==
                VerdictResult::Violated);
          ++replayed;
        }
        auto g = check::check_group(t, {}, sync, strong);
        if (g.result == VerdictResult::Violated) {
          REQUIRE(g.witness.has_value());
          Trace sub = check::witness_subtrace(t, *g.witness);
          CHECK(check::check_group(sub, {}, sync, strong).result ==
                VerdictResult::Violated);
          ++replayed;
        }
      }
    }
  }
  CHECK(replayed >= 60);
}

TEST_CASE("strength ordering holds across random traces") {
  std::mt19937_64 rng(555);
  for (int i = 0; i < 800; ++i) {
    Trace t = random_trace(rng);
    std::vector<check::Verdict> verdicts;
    for (check::PropertyId p : check::kAllProperties) {
      verdicts.push_back(check::check_property(t, p, {}));
    }
    CHECK(check::strength_ordering_ok(verdicts));
  }
}
