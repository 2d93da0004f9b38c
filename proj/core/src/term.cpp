#include "crasim/term.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace crasim::sym {

struct Term::Node {
  TermKind kind;
  bool bit = false;
  std::uint64_t count = 0;
  std::string name;
  std::vector<Term> args;
  std::size_t hash = 0;
  std::uint32_t depth = 1;
};

namespace {

std::size_t combine(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace

Term Term::make(Node n) {
  std::size_t h = static_cast<std::size_t>(n.kind) * 0x9e3779b97f4a7c15ULL;
  h = combine(h, std::hash<std::string>{}(n.name));
  h = combine(h, n.count);
  h = combine(h, n.bit ? 2 : 1);
  std::uint32_t d = 1;
  for (const auto& a : n.args) {
    h = combine(h, a.hash());
    d = std::max(d, a.depth() + 1);
  }
  // A counter is a flat multiset of units; its depth grows with cardinality
  // so the closure bound caps counter forgery. Same idea for bitvec width.
  if (n.kind == TermKind::Counter) {
    d = 1 + static_cast<std::uint32_t>(std::min<std::uint64_t>(n.count, 1u << 20));
  }
  if (n.kind == TermKind::BitVec) {
    d = std::max(d, 1 + static_cast<std::uint32_t>(n.args.size()));
  }
  n.hash = h;
  n.depth = d;
  return Term(std::make_shared<const Node>(std::move(n)));
}

Term Term::atom(const std::string& name) {
  Node n;
  n.kind = TermKind::Atom;
  n.name = name;
  return make(std::move(n));
}

Term Term::nonce(const std::string& name) {
  Node n;
  n.kind = TermKind::Nonce;
  n.name = name;
  return make(std::move(n));
}

Term Term::key(const std::string& name) {
  Node n;
  n.kind = TermKind::Key;
  n.name = name;
  return make(std::move(n));
}

Term Term::counter(std::uint64_t value) {
  Node n;
  n.kind = TermKind::Counter;
  n.count = value;
  return make(std::move(n));
}

Term Term::pair(Term a, Term b) {
  Node n;
  n.kind = TermKind::Pair;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

Term Term::mac(Term key, Term body) {
  Node n;
  n.kind = TermKind::Mac;
  n.args = {std::move(key), std::move(body)};
  return make(std::move(n));
}

Term Term::sym_enc(Term key, Term body) {
  Node n;
  n.kind = TermKind::SymEnc;
  n.args = {std::move(key), std::move(body)};
  return make(std::move(n));
}

Term Term::sign(Term key, Term body) {
  Node n;
  n.kind = TermKind::Sign;
  n.args = {std::move(key), std::move(body)};
  return make(std::move(n));
}

Term Term::hash(Term body) {
  Node n;
  n.kind = TermKind::Hash;
  n.args = {std::move(body)};
  return make(std::move(n));
}

Term Term::bit(bool one) {
  Node n;
  n.kind = TermKind::Bit;
  n.bit = one;
  return make(std::move(n));
}

Term Term::bitvec(std::vector<Term> elems) {
  Node n;
  n.kind = TermKind::BitVec;
  n.args = std::move(elems);
  return make(std::move(n));
}

Term Term::bor(Term a, Term b) {
  Node n;
  n.kind = TermKind::Or;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

Term Term::band(Term a, Term b) {
  Node n;
  n.kind = TermKind::And;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

TermKind Term::kind() const { return node_->kind; }
const std::string& Term::name() const { return node_->name; }
std::uint64_t Term::counter_value() const { return node_->count; }
bool Term::bit_value() const { return node_->bit; }
const std::vector<Term>& Term::args() const { return node_->args; }
std::uint32_t Term::depth() const { return node_->depth; }
std::size_t Term::hash() const { return node_ ? node_->hash : 0; }

bool Term::operator==(const Term& rhs) const {
  if (node_ == rhs.node_) return true;
  if (!node_ || !rhs.node_) return false;
  if (node_->hash != rhs.node_->hash) return false;
  if (node_->kind != rhs.node_->kind) return false;
  if (node_->bit != rhs.node_->bit) return false;
  if (node_->count != rhs.node_->count) return false;
  if (node_->name != rhs.node_->name) return false;
  if (node_->args.size() != rhs.node_->args.size()) return false;
  for (std::size_t i = 0; i < node_->args.size(); ++i) {
    if (node_->args[i] != rhs.node_->args[i]) return false;
  }
  return true;
}

bool Term::operator<(const Term& rhs) const {
  if (node_ == rhs.node_) return false;
  if (!node_) return rhs.node_ != nullptr;
  if (!rhs.node_) return false;
  if (node_->kind != rhs.node_->kind) return node_->kind < rhs.node_->kind;
  if (node_->bit != rhs.node_->bit) return node_->bit < rhs.node_->bit;
  if (node_->count != rhs.node_->count) return node_->count < rhs.node_->count;
  if (node_->name != rhs.node_->name) return node_->name < rhs.node_->name;
  if (node_->args.size() != rhs.node_->args.size()) {
    return node_->args.size() < rhs.node_->args.size();
  }
  for (std::size_t i = 0; i < node_->args.size(); ++i) {
    if (node_->args[i] < rhs.node_->args[i]) return true;
    if (rhs.node_->args[i] < node_->args[i]) return false;
  }
  return false;
}

namespace {

void print(const Term& t, std::ostream& os) {
  switch (t.kind()) {
    case TermKind::Atom:
      os << t.name();
      return;
    case TermKind::Nonce:
      os << "n(" << t.name() << ")";
      return;
    case TermKind::Key:
      os << "k(" << t.name() << ")";
      return;
    case TermKind::Counter:
      os << "ctr(" << t.counter_value() << ")";
      return;
    case TermKind::Bit:
      os << (t.bit_value() ? "1" : "0");
      return;
    case TermKind::Pair: os << "pair("; break;
    case TermKind::Mac: os << "mac("; break;
    case TermKind::SymEnc: os << "enc("; break;
    case TermKind::Sign: os << "sign("; break;
    case TermKind::Hash: os << "h("; break;
    case TermKind::BitVec: os << "bv("; break;
    case TermKind::Or: os << "or("; break;
    case TermKind::And: os << "and("; break;
  }
  bool first = true;
  for (const auto& a : t.args()) {
    if (!first) os << ", ";
    first = false;
    print(a, os);
  }
  os << ")";
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  Term parse() {
    Term t = term();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return t;
  }

 private:
  Term term() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::uint64_t v = number();
      if (v == 0) return Term::bit(false);
      if (v == 1) return Term::bit(true);
      fail("bare integers other than 0/1 are not terms");
    }
    std::string id = ident();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      std::vector<Term> args;
      if (id == "n" || id == "k") {
        std::string name = ident();
        expect(')');
        return id == "n" ? Term::nonce(name) : Term::key(name);
      }
      if (id == "ctr") {
        std::uint64_t v = number();
        expect(')');
        return Term::counter(v);
      }
      args.push_back(term());
      while (true) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          args.push_back(term());
          continue;
        }
        break;
      }
      expect(')');
      return apply(id, std::move(args));
    }
    if (id == "one") return Term::bit(true);
    if (id == "zero") return Term::bit(false);
    return Term::atom(id);
  }

  Term apply(const std::string& id, std::vector<Term> args) {
    auto want = [&](std::size_t n) {
      if (args.size() != n) fail(id + " expects " + std::to_string(n) + " arguments");
    };
    if (id == "pair") { want(2); return Term::pair(args[0], args[1]); }
    if (id == "mac") { want(2); return Term::mac(args[0], args[1]); }
    if (id == "enc") { want(2); return Term::sym_enc(args[0], args[1]); }
    if (id == "sign") { want(2); return Term::sign(args[0], args[1]); }
    if (id == "h") { want(1); return Term::hash(args[0]); }
    if (id == "or") { want(2); return Term::bor(args[0], args[1]); }
    if (id == "and") { want(2); return Term::band(args[0], args[1]); }
    if (id == "bv") {
      if (args.empty()) fail("bv needs at least one element");
      return Term::bitvec(std::move(args));
    }
    fail("unknown constructor: " + id);
    return Term();
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
            s_[pos_] == '_' || s_[pos_] == ':' || s_[pos_] == '.' ||
            s_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected identifier");
    return s_.substr(start, pos_ - start);
  }

  std::uint64_t number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) fail("expected number");
    return std::stoull(s_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw Error(Errc::ParseError, "term: " + msg + " at offset " + std::to_string(pos_));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Term::to_text() const {
  std::ostringstream os;
  print(*this, os);
  return os.str();
}

Term Term::from_text(const std::string& s) { return Parser(s).parse(); }

namespace {

// Reduces a term to a Bit if the equations allow it; empty otherwise.
Term as_bit(const Term& t) {
  if (t.kind() == TermKind::Bit) return t;
  return Term();
}

}  // namespace

Term normalize(const Term& t) {
  switch (t.kind()) {
    case TermKind::Atom:
    case TermKind::Nonce:
    case TermKind::Key:
    case TermKind::Counter:
    case TermKind::Bit:
      return t;
    case TermKind::Pair:
      return Term::pair(normalize(t.args()[0]), normalize(t.args()[1]));
    case TermKind::Mac:
      return Term::mac(normalize(t.args()[0]), normalize(t.args()[1]));
    case TermKind::SymEnc:
      return Term::sym_enc(normalize(t.args()[0]), normalize(t.args()[1]));
    case TermKind::Sign:
      return Term::sign(normalize(t.args()[0]), normalize(t.args()[1]));
    case TermKind::Hash:
      return Term::hash(normalize(t.args()[0]));
    case TermKind::BitVec: {
      std::vector<Term> elems;
      elems.reserve(t.args().size());
      for (const auto& e : t.args()) elems.push_back(normalize(e));
      return Term::bitvec(std::move(elems));
    }
    case TermKind::Or:
    case TermKind::And: {
      Term a = normalize(t.args()[0]);
      Term b = normalize(t.args()[1]);
      bool is_or = t.kind() == TermKind::Or;
      Term ba = as_bit(a), bb = as_bit(b);
      if (!ba.empty() && !bb.empty()) {
        bool v = is_or ? (ba.bit_value() || bb.bit_value())
                       : (ba.bit_value() && bb.bit_value());
        return Term::bit(v);
      }
      if (a.kind() == TermKind::BitVec && b.kind() == TermKind::BitVec &&
          a.args().size() == b.args().size()) {
        std::vector<Term> elems;
        elems.reserve(a.args().size());
        for (std::size_t i = 0; i < a.args().size(); ++i) {
          elems.push_back(normalize(is_or ? Term::bor(a.args()[i], b.args()[i])
                                          : Term::band(a.args()[i], b.args()[i])));
        }
        return Term::bitvec(std::move(elems));
      }
      throw Error(Errc::TypeMismatch,
                  std::string(is_or ? "or" : "and") +
                      " applied to non-bit operands: " + a.to_text() + " / " +
                      b.to_text());
    }
  }
  return t;
}

}  // namespace crasim::sym
