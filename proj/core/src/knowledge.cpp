#include "crasim/knowledge.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

namespace crasim::sym {

KnowledgeSet::KnowledgeSet(std::vector<Term> terms) {
  for (auto& t : terms) add(t);
}

void KnowledgeSet::add(const Term& t) { terms_.insert(t); }

std::vector<Term> KnowledgeSet::sorted() const {
  std::vector<Term> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool try_normalize(const Term& t, Term& out) {
  try {
    out = normalize(t);
    return true;
  } catch (const Error&) {
    return false;  // or/and over non-bits: not a usable value
  }
}

bool is_bitlike(const Term& t) {
  return t.kind() == TermKind::Bit || t.kind() == TermKind::BitVec;
}

}  // namespace

KnowledgeSet decompose(const KnowledgeSet& k) {
  KnowledgeSet out;
  std::deque<Term> work(k.terms().begin(), k.terms().end());
  auto push = [&](const Term& t) {
    Term n;
    if (!try_normalize(t, n)) n = t;
    if (!out.contains(n)) {
      out.add(n);
      work.push_back(n);
    }
  };
  for (const auto& t : k.terms()) push(t);

  // Decryption needs the key, so saturate until no new term appears.
  bool changed = true;
  while (changed) {
    changed = false;
    std::size_t before = out.size();
    std::deque<Term> round;
    round.swap(work);
    for (const auto& t : round) {
      switch (t.kind()) {
        case TermKind::Pair:
        case TermKind::Or:
        case TermKind::And:
          push(t.args()[0]);
          push(t.args()[1]);
          break;
        case TermKind::Sign:
          push(t.args()[1]);  // signatures reveal the signed body
          break;
        case TermKind::SymEnc:
          if (out.contains(t.args()[0])) push(t.args()[1]);
          break;
        case TermKind::BitVec:
          for (const auto& e : t.args()) push(e);
          break;
        case TermKind::Counter:
          if (t.counter_value() > 0) push(Term::counter(t.counter_value() - 1));
          break;
        default:
          break;  // Mac and Hash are one-way; atoms/keys/nonces are leaves
      }
    }
    // Re-scan undecrypted ciphertexts whose key may have appeared.
    for (const auto& t : out.terms()) {
      if (t.kind() == TermKind::SymEnc && out.contains(t.args()[0]) &&
          !out.contains(t.args()[1])) {
        work.push_back(t);
      }
    }
    changed = out.size() != before || !work.empty();
  }
  return out;
}

KnowledgeSet dy_close(const KnowledgeSet& k, std::uint32_t depth) {
  KnowledgeSet out = decompose(k);

  auto add_if = [&](const Term& t) -> bool {
    if (t.depth() > depth || out.contains(t)) return false;
    out.add(t);
    return true;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Term> snapshot = out.sorted();
    for (const auto& a : snapshot) {
      if (a.depth() + 1 <= depth) {
        if (add_if(Term::hash(a))) changed = true;
      }
      if (a.kind() == TermKind::Counter) {
        if (add_if(Term::counter(a.counter_value() + 1))) changed = true;
      }
      for (const auto& b : snapshot) {
        std::uint32_t d = std::max(a.depth(), b.depth()) + 1;
        if (d <= depth) {
          if (add_if(Term::pair(a, b))) changed = true;
          if (a.kind() == TermKind::Key) {
            if (add_if(Term::mac(a, b))) changed = true;
            if (add_if(Term::sym_enc(a, b))) changed = true;
            if (add_if(Term::sign(a, b))) changed = true;
          }
        }
        if (is_bitlike(a) && is_bitlike(b)) {
          Term n;
          if (try_normalize(Term::bor(a, b), n) && add_if(n)) changed = true;
          if (try_normalize(Term::band(a, b), n) && add_if(n)) changed = true;
        }
      }
    }
    // Bitvec assembly from known bits, widths up to the depth bound.
    bool have_one = out.contains(Term::bit(true));
    bool have_zero = out.contains(Term::bit(false));
    if (have_one || have_zero) {
      std::vector<Term> bits;
      if (have_one) bits.push_back(Term::bit(true));
      if (have_zero) bits.push_back(Term::bit(false));
      std::vector<std::vector<Term>> vecs = {{}};
      for (std::uint32_t len = 1; len + 1 <= depth; ++len) {
        std::vector<std::vector<Term>> next;
        for (const auto& v : vecs) {
          for (const auto& b : bits) {
            auto w = v;
            w.push_back(b);
            if (add_if(Term::bitvec(w))) changed = true;
            next.push_back(std::move(w));
          }
        }
        vecs = std::move(next);
      }
    }
  }
  return out;
}

namespace {

class Deriver {
 public:
  Deriver(const KnowledgeSet& analyzed, std::uint32_t depth)
      : analyzed_(analyzed), depth_(depth) {}

  bool derivable(const Term& t) {
    if (t.depth() <= depth_ && analyzed_.contains(t)) return true;
    Term n;
    if (!try_normalize(t, n)) return false;
    if (n.depth() > depth_) return false;
    return synth(n);
  }

 private:
  bool synth(const Term& t) {
    auto it = memo_.find(t);
    if (it != memo_.end()) return it->second;
    memo_[t] = false;  // cut cycles conservatively
    bool r = synth_inner(t);
    memo_[t] = r;
    return r;
  }

  bool synth_inner(const Term& t) {
    if (analyzed_.contains(t)) return true;
    switch (t.kind()) {
      case TermKind::Atom:
      case TermKind::Nonce:
      case TermKind::Key:
        return false;
      case TermKind::Bit:
        return false;  // bits must come from knowledge (usually public)
      case TermKind::Counter:
        // Any counter is reachable from any known counter by inc/dec.
        return has_counter_;
      case TermKind::Pair:
        return synth(t.args()[0]) && synth(t.args()[1]);
      case TermKind::Mac:
      case TermKind::SymEnc:
      case TermKind::Sign:
        // Construction only with proper key terms, matching dy_close.
        return t.args()[0].kind() == TermKind::Key && synth(t.args()[0]) &&
               synth(t.args()[1]);
      case TermKind::Hash:
        return synth(t.args()[0]);
      case TermKind::BitVec: {
        for (const auto& e : t.args()) {
          if (!synth(e)) return false;
        }
        return true;
      }
      case TermKind::Or:
      case TermKind::And:
        return false;  // normalized input cannot still contain or/and
    }
    return false;
  }

 public:
  void scan_counters() {
    for (const auto& t : analyzed_.terms()) {
      if (t.kind() == TermKind::Counter) {
        has_counter_ = true;
        return;
      }
    }
  }

 private:
  const KnowledgeSet& analyzed_;
  std::uint32_t depth_;
  bool has_counter_ = false;
  std::unordered_map<Term, bool, TermHash> memo_;
};

}  // namespace

bool can_derive(const KnowledgeSet& k, const Term& t, std::uint32_t depth) {
  KnowledgeSet analyzed = decompose(k);
  Deriver d(analyzed, depth);
  d.scan_counters();
  return d.derivable(t);
}

}  // namespace crasim::sym
