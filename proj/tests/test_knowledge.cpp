#include "doctest.h"

#include <random>

#include "crasim/knowledge.hpp"

using namespace crasim;
using sym::KnowledgeSet;
using sym::Term;

TEST_CASE("mac with a known key is constructible") {
  KnowledgeSet k({Term::key("a"), Term::atom("m")});
  auto closed = sym::dy_close(k, 3);
  CHECK(closed.contains(Term::mac(Term::key("a"), Term::atom("m"))));
  CHECK(sym::can_derive(k, Term::mac(Term::key("a"), Term::atom("m")), 3));
}

TEST_CASE("perfect encryption: no key, no plaintext") {
  KnowledgeSet k({Term::sym_enc(Term::key("a"), Term::atom("m"))});
  auto closed = sym::dy_close(k, 6);
  CHECK(!closed.contains(Term::atom("m")));
  CHECK(!sym::can_derive(k, Term::atom("m"), 6));
  CHECK(!sym::can_derive(k, Term::key("a"), 6));
}

TEST_CASE("decrypt then project") {
  KnowledgeSet k({Term::key("a"),
                  Term::sym_enc(Term::key("a"),
                                Term::pair(Term::atom("m1"), Term::atom("m2")))});
  auto closed = sym::dy_close(k, 3);
  CHECK(closed.contains(Term::atom("m1")));
  CHECK(closed.contains(Term::atom("m2")));
  CHECK(sym::can_derive(k, Term::atom("m1"), 3));
}

TEST_CASE("fresh nonce is not derivable from nothing") {
  KnowledgeSet empty;
  CHECK(!sym::can_derive(empty, Term::nonce("n"), 6));
  KnowledgeSet k({Term::key("k1")});
  CHECK(sym::can_derive(k, Term::key("k1"), 6));
}

TEST_CASE("shared swarm key lets the adversary forge any report mac") {
  // After reading one prover's secrets in a shared-key deployment, macs for
  // arbitrary bodies verify for every other prover too.
  KnowledgeSet k({Term::key("auth"), Term::atom("rep"), Term::bit(true),
                  Term::bit(false), Term::counter(0)});
  Term body = Term::pair(Term::atom("rep"),
                         Term::pair(Term::counter(2),
                                    Term::bitvec({Term::bit(true), Term::bit(true)})));
  CHECK(sym::can_derive(k, Term::mac(Term::key("auth"), body), 8));
}

TEST_CASE("unique keys confine forgery to the captured device") {
  KnowledgeSet k({Term::key("dev:P0"), Term::atom("rep")});
  CHECK(sym::can_derive(k, Term::sign(Term::key("dev:P0"), Term::atom("rep")), 4));
  CHECK(!sym::can_derive(k, Term::sign(Term::key("dev:P1"), Term::atom("rep")), 4));
}

TEST_CASE("signatures reveal their body") {
  KnowledgeSet k({Term::sign(Term::key("dev:P0"), Term::atom("m"))});
  CHECK(sym::can_derive(k, Term::atom("m"), 4));
  CHECK(!sym::can_derive(k, Term::key("dev:P0"), 4));
}

TEST_CASE("hash is one-way") {
  KnowledgeSet k({Term::hash(Term::atom("m"))});
  CHECK(!sym::can_derive(k, Term::atom("m"), 6));
  KnowledgeSet k2({Term::atom("m")});
  CHECK(sym::can_derive(k2, Term::hash(Term::atom("m")), 6));
}

TEST_CASE("counters are reachable from any known counter") {
  KnowledgeSet k({Term::counter(2)});
  CHECK(sym::can_derive(k, Term::counter(0), 6));
  CHECK(sym::can_derive(k, Term::counter(5), 6));
  CHECK(!sym::can_derive(k, Term::counter(9), 6));  // depth-bounded
}

namespace {

// Small pool: closures grow combinatorially in the leaf count, so the
// property tests stay at depth 3 over a handful of leaves.
std::vector<Term> atom_pool() {
  return {Term::atom("a"), Term::atom("b"), Term::key("k1"), Term::key("k2"),
          Term::nonce("n1")};
}

Term random_term(std::mt19937_64& rng, int depth) {
  auto pool = atom_pool();
  if (depth == 0 || rng() % 3 == 0) return pool[rng() % pool.size()];
  switch (rng() % 4) {
    case 0:
      return Term::pair(random_term(rng, depth - 1), random_term(rng, depth - 1));
    case 1:
      return Term::mac(pool[2 + rng() % 2], random_term(rng, depth - 1));
    case 2:
      return Term::sym_enc(pool[2 + rng() % 2], random_term(rng, depth - 1));
    default:
      return Term::hash(random_term(rng, depth - 1));
  }
}

}  // namespace

TEST_CASE("closure is monotone and idempotent") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 10; ++round) {
    KnowledgeSet k1, k2;
    for (int i = 0; i < 2; ++i) k1.add(random_term(rng, 1));
    for (const auto& t : k1.terms()) k2.add(t);
    k2.add(random_term(rng, 1));

    auto c1 = sym::dy_close(k1, 3);
    auto c2 = sym::dy_close(k2, 3);
    for (const auto& t : c1.terms()) {
      CHECK(c2.contains(t));
    }
    auto again = sym::dy_close(c1, 3);
    CHECK(again.size() == c1.size());
  }
}

TEST_CASE("can_derive agrees with closure membership") {
  std::mt19937_64 rng(13);
  for (int round = 0; round < 10; ++round) {
    KnowledgeSet k;
    for (int i = 0; i < 2; ++i) k.add(random_term(rng, 1));
    auto closed = sym::dy_close(k, 3);
    for (const auto& t : closed.terms()) {
      CHECK(sym::can_derive(k, t, 3));
    }
    for (int i = 0; i < 20; ++i) {
      Term probe = random_term(rng, 2);
      if (probe.depth() > 3) continue;
      CHECK(sym::can_derive(k, probe, 3) == closed.contains(probe));
    }
  }
}

TEST_CASE("no key, no forgery") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 30; ++round) {
    KnowledgeSet k;
    for (int i = 0; i < 4; ++i) k.add(random_term(rng, 2));
    Term secret = Term::key("hidden");
    Term target = Term::mac(secret, random_term(rng, 1));
    if (!sym::can_derive(k, secret, 6) && !k.contains(target)) {
      CHECK(!sym::can_derive(k, target, 6));
    }
  }
}
