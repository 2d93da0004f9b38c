#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "crasim/types.hpp"

namespace crasim::sym {

enum class TermKind : std::uint8_t {
  Atom,     // public constant
  Nonce,    // fresh value
  Key,      // symmetric or signing key, identified by name
  Counter,  // multiset of units; compares by cardinality
  Pair,
  Mac,      // mac(key, body); body not recoverable
  SymEnc,   // enc(key, body); body recoverable with key
  Sign,     // sign(key, body); body recoverable, key needed to produce
  Hash,     // one-way, no equations
  Bit,      // one | zero
  BitVec,   // list of bit-valued terms
  Or,       // reducible by the bit equations
  And,      // reducible by the bit equations
};

// Immutable symbolic message term. Copies share the underlying node, so
// terms are cheap to pass by value and safe to use concurrently.
// The algebra is free except for the or/and equations applied by
// normalize(); counters compare by cardinality only.
class Term {
 public:
  Term() = default;  // empty; only valid as a placeholder

  static Term atom(const std::string& name);
  static Term nonce(const std::string& name);
  static Term key(const std::string& name);
  static Term counter(std::uint64_t value);
  static Term pair(Term first, Term second);
  static Term mac(Term key, Term body);
  static Term sym_enc(Term key, Term body);
  static Term sign(Term key, Term body);
  static Term hash(Term body);
  static Term bit(bool one);
  static Term bitvec(std::vector<Term> elems);
  static Term bor(Term a, Term b);
  static Term band(Term a, Term b);

  bool empty() const { return node_ == nullptr; }
  TermKind kind() const;
  const std::string& name() const;       // Atom/Nonce/Key
  std::uint64_t counter_value() const;    // Counter
  bool bit_value() const;                 // Bit
  const std::vector<Term>& args() const;  // compound kinds

  // Tree height; Counter and BitVec count as flat containers.
  std::uint32_t depth() const;
  std::size_t hash() const;

  bool operator==(const Term& rhs) const;
  bool operator!=(const Term& rhs) const { return !(*this == rhs); }
  // Total order used for canonical listings.
  bool operator<(const Term& rhs) const;

  std::string to_text() const;
  static Term from_text(const std::string& s);  // throws ParseError

 private:
  struct Node;
  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Term make(Node n);

  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

// Applies the or/and equations pointwise to Bit and BitVec terms until
// fixpoint; all other constructors are untouched. or/and over operands that
// do not reduce to bits raises TypeMismatch.
Term normalize(const Term& t);

}  // namespace crasim::sym
