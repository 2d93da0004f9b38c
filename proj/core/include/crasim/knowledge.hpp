#pragma once

#include <unordered_set>
#include <vector>

#include "crasim/term.hpp"

namespace crasim::sym {

// What the network adversary has observed or extracted. Grows monotonically
// over a run; never shrinks.
class KnowledgeSet {
 public:
  KnowledgeSet() = default;
  explicit KnowledgeSet(std::vector<Term> terms);

  void add(const Term& t);
  bool contains(const Term& t) const { return terms_.count(t) != 0; }
  std::size_t size() const { return terms_.size(); }

  const std::unordered_set<Term, TermHash>& terms() const { return terms_; }
  // Deterministic listing for canonical enumeration.
  std::vector<Term> sorted() const;

 private:
  std::unordered_set<Term, TermHash> terms_;
};

// Closure of k under pairing/projection, encryption/decryption with known
// keys, mac/signature construction with known keys, hashing, counter
// increment, bitvec assembly and the or/and equations. Construction is
// bounded to terms of depth <= depth; decomposition is unbounded.
KnowledgeSet dy_close(const KnowledgeSet& k, std::uint32_t depth);

// Membership in dy_close(k, depth), decided target-directed without
// materializing the closure.
bool can_derive(const KnowledgeSet& k, const Term& t, std::uint32_t depth);

// Analysis half of the closure only: everything extractable from k by
// projection, decryption with known keys, signature opening and counter
// splitting. Useful on its own for replay-candidate enumeration.
KnowledgeSet decompose(const KnowledgeSet& k);

}  // namespace crasim::sym
