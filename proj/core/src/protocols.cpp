#include "crasim/protocols.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace crasim::proto {

using net::Device;
using net::Engine;
using sym::Term;

sym::Term wire_mac(const Term& key, const Term& body) {
  return Term::pair(body, Term::mac(key, body));
}

bool open_mac(const Term& wire, const Term& key, Term* body) {
  if (wire.kind() != sym::TermKind::Pair) return false;
  const Term& b = wire.args()[0];
  if (wire.args()[1] != Term::mac(key, b)) return false;
  *body = b;
  return true;
}

sym::Term wire_sign(const Term& key, const Term& body) {
  return Term::pair(body, Term::sign(key, body));
}

bool open_sign(const Term& wire, const std::string& key_name, Term* body) {
  if (wire.kind() != sym::TermKind::Pair) return false;
  const Term& b = wire.args()[0];
  if (wire.args()[1] != Term::sign(Term::key(key_name), b)) return false;
  *body = b;
  return true;
}

std::string message_tag(const Term& body) {
  const Term* cur = &body;
  if (cur->kind() == sym::TermKind::SymEnc) {
    cur = &cur->args()[1];
  }
  if (cur->kind() == sym::TermKind::Pair) {
    const Term& head = cur->args()[0];
    if (head.kind() == sym::TermKind::Atom) return head.name();
    if (head.kind() == sym::TermKind::Pair &&
        head.args()[0].kind() == sym::TermKind::Atom) {
      return head.args()[0].name();
    }
  }
  return "";
}

sym::Term term_list(const std::vector<Term>& elems) {
  Term out = Term::atom("nil");
  for (auto it = elems.rbegin(); it != elems.rend(); ++it) {
    out = Term::pair(*it, out);
  }
  return out;
}

std::vector<sym::Term> term_list_elems(const Term& list) {
  std::vector<Term> out;
  const Term* cur = &list;
  while (cur->kind() == sym::TermKind::Pair) {
    out.push_back(cur->args()[0]);
    cur = &cur->args()[1];
  }
  return out;
}

namespace {

constexpr std::uint64_t kTagRound = 1;
constexpr std::uint64_t kTagClaimDeadline = 2;
constexpr std::uint64_t kTagChildDeadline = 3;
constexpr std::uint64_t kTagMeasure = 4;
constexpr std::uint64_t kTagSelf = 5;
constexpr std::uint64_t kTagGossip = 6;
constexpr std::uint64_t kTagQuery = 7;
constexpr std::uint64_t kTagFinish = 8;

std::uint64_t timer_tag(std::uint64_t code, std::uint64_t arg) {
  return (code << 56) | (arg & 0x00ffffffffffffffULL);
}
std::uint64_t timer_code(std::uint64_t tag) { return tag >> 56; }
std::uint64_t timer_arg(std::uint64_t tag) { return tag & 0x00ffffffffffffffULL; }

// The key a device authenticates its reports and requests with: the rotating
// epoch key when secret updates are on, otherwise per the key policy.
Term auth_key(Engine& eng, const Device& dev) {
  if (eng.scenario().defense_su) return dev.keys.at("epoch");
  switch (eng.scenario().key_policy) {
    case KeyPolicyKind::SwarmShared:
      return dev.keys.at("auth");
    case KeyPolicyKind::PerDevice:
      return dev.keys.at("dev:" + dev.name);
    case KeyPolicyKind::PerLink:
      throw Error(Errc::ConfigError, "per-link keys need an explicit link");
  }
  return Term();
}

bool per_device_keys(const Engine& eng) {
  return eng.scenario().key_policy == KeyPolicyKind::PerDevice &&
         !eng.scenario().defense_su;
}

// Opens an authenticated wire from `claimed_src` under the scenario policy.
// Under secret updates, reports sealed with the immediately preceding epoch
// key are still accepted: rotation would otherwise race in-flight traffic.
bool open_authenticated(Engine& eng, DeviceId self, DeviceId claimed_src,
                        const Term& wire, Term* body) {
  if (per_device_keys(eng)) {
    return open_sign(wire, "dev:" + eng.device(claimed_src).name, body);
  }
  const Device& dev = eng.device(self);
  if (open_mac(wire, auth_key(eng, dev), body)) return true;
  if (eng.scenario().defense_su) {
    auto prev = dev.keys.find("epoch_prev");
    if (prev != dev.keys.end() && open_mac(wire, prev->second, body)) return true;
  }
  return false;
}

Term seal(Engine& eng, const Device& sender, const Term& body) {
  if (per_device_keys(eng)) {
    return wire_sign(sender.keys.at("dev:" + sender.name), body);
  }
  return wire_mac(auth_key(eng, sender), body);
}

std::uint64_t extract_counter(const Term& t) {
  if (t.kind() != sym::TermKind::Counter) {
    throw Error(Errc::TypeMismatch, "expected a counter: " + t.to_text());
  }
  return t.counter_value();
}

// --- SIMPLE+ ----------------------------------------------------------
//
// Verifier-supplied expected state (Self-V): the request carries the
// expected label and the attestation-set selector; each prover measures,
// compares against the supplied label, and contributes one bit at its
// prover index. Aggregators OR child reports; the verifier claims per
// prover after all direct children report or the deadline passes, plus a
// derived whole-swarm group claim (AND of the bits).
class SimplePlus : public net::Handler {
 public:
  void on_start(Engine& eng) override {
    for (DeviceId i = 0; i < eng.device_count(); ++i) {
      if (eng.device(i).roles.has(Role::Initiator)) {
        verifier_ = i;
        break;
      }
    }
    for (std::uint32_t r = 1; r <= eng.scenario().rounds; ++r) {
      eng.set_timer(verifier_, (r - 1) * eng.scenario().round_period,
                    timer_tag(kTagRound, r));
    }
  }

  bool on_message(Engine& eng, DeviceId self, DeviceId claimed_src,
                  const Term& wire, TimePoint now) override {
    Term body;
    if (!open_authenticated(eng, self, claimed_src, wire, &body)) return false;
    std::string tag = message_tag(body);
    if (tag == "req") {
      on_request(eng, self, wire, body, now);
      return true;
    }
    if (tag == "rep") {
      on_report(eng, self, claimed_src, body, now);
      return true;
    }
    return false;
  }

  void on_timer(Engine& eng, DeviceId self, std::uint64_t tag,
                TimePoint now) override {
    switch (timer_code(tag)) {
      case kTagRound:
        start_round(eng, timer_arg(tag), now);
        break;
      case kTagClaimDeadline:
        if (timer_arg(tag) == round_ && !claimed_) claim(eng, now);
        break;
      case kTagChildDeadline: {
        auto& n = nodes_[self];
        if (n.round == timer_arg(tag) && !n.sent && n.own_done) {
          send_up(eng, self, now);
        }
        break;
      }
      case kTagFinish: {
        auto& n = nodes_[self];
        if (n.round == timer_arg(tag)) finish_own(eng, self, now);
        break;
      }
      default:
        break;
    }
  }

 private:
  struct Node {
    std::uint64_t round = 0;
    Term request;       // accepted wire, reported in RunComplete
    Term agg;           // accumulated OR of own + child reports
    bool own_done = false;
    bool measured_early = false;
    bool sent = false;
    std::set<DeviceId> pending_children;
    Term expected;
    bool in_set = false;
  };

  Term zero_vec(Engine& eng) {
    std::vector<Term> bits(eng.provers().size(), Term::bit(false));
    return Term::bitvec(std::move(bits));
  }

  void start_round(Engine& eng, std::uint64_t r, TimePoint now) {
    const Scenario& s = eng.scenario();
    round_ = r;
    claimed_ = false;
    att_start_ = now;
    acc_ = zero_vec(eng);
    reported_children_.clear();
    eng.device(verifier_).last_counter = r;

    sample_ = eng.provers();
    if (s.attestation_set.sample && s.attestation_set.size < sample_.size()) {
      // Seeded Fisher-Yates prefix.
      for (std::uint32_t i = 0; i < s.attestation_set.size; ++i) {
        std::size_t j = i + eng.rand_below(sample_.size() - i);
        std::swap(sample_[i], sample_[j]);
      }
      sample_.resize(s.attestation_set.size);
      std::sort(sample_.begin(), sample_.end());
    }

    Term sample_term = Term::atom("all");
    if (sample_.size() != eng.provers().size()) {
      std::vector<Term> names;
      for (DeviceId p : sample_) names.push_back(Term::atom(eng.device(p).name));
      sample_term = term_list(names);
    }
    // One expected label for the whole swarm; heterogeneous swarms are
    // rejected at load.
    std::string expected = eng.scenario().devices[eng.provers()[0]].acceptable[0];
    eng.acceptable_contains(verifier_, eng.provers()[0], expected);
    Term body = Term::pair(
        Term::atom("req"),
        Term::pair(Term::counter(r),
                   Term::pair(Term::atom(expected), sample_term)));
    Term wire = seal(eng, eng.device(verifier_), body);

    eng.emit_att_start(verifier_, r);
    for (DeviceId p : sample_) eng.emit_send_request(verifier_, p, wire);
    for (DeviceId c : eng.topology().children(verifier_)) {
      eng.send(verifier_, c, wire);
    }
    eng.set_timer(verifier_, now + eng.scenario().effective_deadline(),
                  timer_tag(kTagClaimDeadline, r));
  }

  void on_request(Engine& eng, DeviceId self, const Term& wire, const Term& body,
                  TimePoint now) {
    if (self == verifier_) return;
    Device& dev = eng.device(self);
    const auto& rest = body.args()[1];  // pair(ctr, pair(expected, sample))
    std::uint64_t c = extract_counter(rest.args()[0]);
    if (!eng.scenario().counterless) {
      if (c <= dev.last_counter) return;  // stale or replayed
      dev.last_counter = c;
    }
    eng.emit_recv_request(self, wire);

    Node n;
    n.round = c;
    n.request = wire;
    n.expected = rest.args()[1].args()[0];
    n.agg = zero_vec(eng);
    const Term& sample_term = rest.args()[1].args()[1];
    n.in_set = true;
    if (!(sample_term.kind() == sym::TermKind::Atom &&
          sample_term.name() == "all")) {
      n.in_set = false;
      for (const Term& t : term_list_elems(sample_term)) {
        if (t.kind() == sym::TermKind::Atom && t.name() == dev.name) {
          n.in_set = true;
        }
      }
    }
    for (DeviceId ch : eng.topology().children(self)) {
      n.pending_children.insert(ch);
    }
    nodes_[self] = std::move(n);

    for (DeviceId ch : eng.topology().children(self)) {
      eng.send(self, ch, wire);
    }
    if (!nodes_[self].pending_children.empty()) {
      TimePoint wait = child_wait(eng, self);
      eng.set_timer(self, now + wait, timer_tag(kTagChildDeadline, c));
    }
    if (nodes_[self].in_set && dev.roles.has(Role::Prover)) {
      if (eng.scenario().attest_duration == 0) {
        finish_own(eng, self, now);
      } else {
        eng.measure(self);  // opens the atomic section; result re-read at end
        nodes_[self].measured_early = true;
        eng.set_timer(self, now + eng.scenario().attest_duration,
                      timer_tag(kTagFinish, c));
      }
    } else {
      nodes_[self].own_done = true;
      maybe_send_up(eng, self, now);
    }
  }

  void finish_own(Engine& eng, DeviceId self, TimePoint now) {
    Node& n = nodes_[self];
    Device& dev = eng.device(self);
    SoftwareState measured =
        n.measured_early ? SoftwareState{dev.sw_label} : eng.measure(self);
    bool ok = n.expected.kind() == sym::TermKind::Atom &&
              measured.label == n.expected.name();
    std::vector<Term> bits(eng.provers().size(), Term::bit(false));
    bits[eng.prover_index(self)] = Term::bit(ok);
    n.agg = sym::normalize(Term::bor(n.agg, Term::bitvec(std::move(bits))));
    n.own_done = true;
    maybe_send_up(eng, self, now);
  }

  void on_report(Engine& eng, DeviceId self, DeviceId claimed_src,
                 const Term& body, TimePoint now) {
    const auto& rest = body.args()[1];  // pair(ctr, bitvec)
    std::uint64_t c = extract_counter(rest.args()[0]);
    const Term& vec = rest.args()[1];
    if (self == verifier_) {
      if (c != round_ || claimed_) return;  // stale counter: discarded
      acc_ = sym::normalize(Term::bor(acc_, vec));
      reported_children_.insert(claimed_src);
      if (reported_children_.size() >= eng.topology().children(verifier_).size()) {
        claim(eng, now);
      }
      return;
    }
    Node& n = nodes_[self];
    if (n.round != c || n.sent) return;
    n.agg = sym::normalize(Term::bor(n.agg, vec));
    n.pending_children.erase(claimed_src);
    maybe_send_up(eng, self, now);
  }

  void maybe_send_up(Engine& eng, DeviceId self, TimePoint now) {
    Node& n = nodes_[self];
    if (!n.own_done || n.sent) return;
    if (!n.pending_children.empty()) return;
    send_up(eng, self, now);
  }

  void send_up(Engine& eng, DeviceId self, TimePoint now) {
    (void)now;
    Node& n = nodes_[self];
    n.sent = true;
    Term body = Term::pair(Term::atom("rep"),
                           Term::pair(Term::counter(n.round), n.agg));
    Term wire = seal(eng, eng.device(self), body);
    eng.send(self, eng.topology().parent(self), wire);
    if (n.in_set && eng.device(self).roles.has(Role::Prover)) {
      eng.emit_run_complete(self, verifier_, n.request);
    }
  }

  TimePoint child_wait(Engine& eng, DeviceId self) {
    TimePoint rd = eng.scenario().effective_deadline();
    TimePoint used = 2 * eng.scenario().latency * eng.topology().node_depth(self);
    return rd > used + 1 ? rd - used : 1;
  }

  void claim(Engine& eng, TimePoint now) {
    claimed_ = true;
    std::map<DeviceId, Status> statuses;
    bool all_one = true;
    const auto& bits = acc_.args();
    for (DeviceId p : sample_) {
      std::size_t i = eng.prover_index(p);
      bool one = bits[i].kind() == sym::TermKind::Bit && bits[i].bit_value();
      statuses[p] = one ? Status::Healthy : Status::Unhealthy;
      if (!one) all_one = false;
    }
    Interval window{att_start_, now};
    eng.emit_claim_individual(verifier_, statuses, window, round_);
    // Derived whole-set group view: AND of the individual bits.
    eng.emit_claim_group(
        verifier_,
        {ev::GroupStatus{sample_, all_one ? Status::Healthy : Status::Unhealthy}},
        window, round_);
  }

  DeviceId verifier_ = 0;
  std::uint64_t round_ = 0;
  bool claimed_ = false;
  TimePoint att_start_ = 0;
  Term acc_;
  std::set<DeviceId> reported_children_;
  std::vector<DeviceId> sample_;
  std::map<DeviceId, Node> nodes_;
};

// --- SEDA --------------------------------------------------------------
//
// Spanning tree with per-link keys. Parents validate children against their
// own stored acceptable lists (Self-L) and sum (attested, total) counts over
// the subtree; the verifier checks both counts equal s-1 and the root
// prover's state, then claims one group status for the whole swarm.
class Seda : public net::Handler {
 public:
  void on_start(Engine& eng) override {
    for (DeviceId i = 0; i < eng.device_count(); ++i) {
      if (eng.device(i).roles.has(Role::Initiator)) {
        verifier_ = i;
        break;
      }
    }
    for (std::uint32_t r = 1; r <= eng.scenario().rounds; ++r) {
      eng.set_timer(verifier_, (r - 1) * eng.scenario().round_period,
                    timer_tag(kTagRound, r));
    }
  }

  bool on_message(Engine& eng, DeviceId self, DeviceId claimed_src,
                  const Term& wire, TimePoint now) override {
    Term body;
    if (!open_link(eng, self, claimed_src, wire, &body)) return false;
    std::string tag = message_tag(body);
    if (tag == "req") {
      on_request(eng, self, claimed_src, wire, body, now);
      return true;
    }
    if (tag == "rep") {
      on_report(eng, self, claimed_src, body, now);
      return true;
    }
    return false;
  }

  void on_timer(Engine& eng, DeviceId self, std::uint64_t tag,
                TimePoint now) override {
    switch (timer_code(tag)) {
      case kTagRound:
        start_round(eng, timer_arg(tag), now);
        break;
      case kTagClaimDeadline:
        if (timer_arg(tag) == round_ && !claimed_) {
          claim(eng, now, Status::Unhealthy);  // no root report in time
        }
        break;
      case kTagChildDeadline: {
        auto& n = nodes_[self];
        if (n.round == timer_arg(tag) && !n.sent) send_up(eng, self, now);
        break;
      }
      default:
        break;
    }
  }

 private:
  struct Node {
    std::uint64_t round = 0;
    Term request;
    std::string measured;
    std::uint64_t count_attested = 0;
    std::uint64_t count_total = 0;
    std::set<DeviceId> pending_children;
    bool sent = false;
  };

  std::string link_name(Engine& eng, DeviceId parent, DeviceId child) {
    return "link:" + eng.device(parent).name + ":" + eng.device(child).name;
  }

  bool open_link(Engine& eng, DeviceId self, DeviceId src, const Term& wire,
                 Term* body) {
    const Device& dev = eng.device(self);
    for (DeviceId peer : {src}) {
      std::string up = "link:" + eng.device(peer).name + ":" + dev.name;
      std::string down = "link:" + dev.name + ":" + eng.device(peer).name;
      for (const auto& name : {up, down}) {
        auto it = dev.keys.find(name);
        if (it != dev.keys.end() && open_mac(wire, it->second, body)) return true;
      }
    }
    return false;
  }

  void start_round(Engine& eng, std::uint64_t r, TimePoint now) {
    round_ = r;
    claimed_ = false;
    att_start_ = now;
    eng.device(verifier_).last_counter = r;
    eng.emit_att_start(verifier_, r);
    Term body = Term::pair(Term::atom("req"), Term::counter(r));
    for (DeviceId p : eng.provers()) {
      eng.emit_send_request(verifier_, p, body);
    }
    for (DeviceId c : eng.topology().children(verifier_)) {
      Term wire = wire_mac(eng.device(verifier_).keys.at(link_name(eng, verifier_, c)),
                           body);
      eng.send(verifier_, c, wire);
    }
    eng.set_timer(verifier_, now + eng.scenario().effective_deadline(),
                  timer_tag(kTagClaimDeadline, r));
  }

  void on_request(Engine& eng, DeviceId self, DeviceId parent, const Term& wire,
                  const Term& body, TimePoint now) {
    (void)parent;
    if (self == verifier_) return;
    Device& dev = eng.device(self);
    std::uint64_t c = extract_counter(body.args()[1]);
    if (c <= dev.last_counter) return;
    dev.last_counter = c;
    eng.emit_recv_request(self, wire);

    Node n;
    n.round = c;
    n.request = wire;
    n.measured = eng.measure(self).label;
    for (DeviceId ch : eng.topology().children(self)) n.pending_children.insert(ch);
    nodes_[self] = std::move(n);

    for (DeviceId ch : eng.topology().children(self)) {
      Term fwd = wire_mac(dev.keys.at(link_name(eng, self, ch)), body);
      eng.send(self, ch, fwd);
    }
    if (nodes_[self].pending_children.empty()) {
      send_up(eng, self, now);
    } else {
      TimePoint rd = eng.scenario().effective_deadline();
      TimePoint used = 2 * eng.scenario().latency * eng.topology().node_depth(self);
      eng.set_timer(self, now + (rd > used + 1 ? rd - used : 1),
                    timer_tag(kTagChildDeadline, c));
    }
  }

  void on_report(Engine& eng, DeviceId self, DeviceId child, const Term& body,
                 TimePoint now) {
    // body = pair(rep, pair(ctr, pair(label, pair(ctr(a), ctr(t)))))
    const Term& rest = body.args()[1];
    std::uint64_t c = extract_counter(rest.args()[0]);
    const Term& payload = rest.args()[1];
    std::string label = payload.args()[0].name();
    std::uint64_t a = extract_counter(payload.args()[1].args()[0]);
    std::uint64_t t = extract_counter(payload.args()[1].args()[1]);

    if (self == verifier_) {
      if (c != round_ || claimed_) return;
      // Self-L at the verifier for the root prover's own measurement.
      bool root_ok = eng.acceptable_contains(self, child, label);
      std::uint64_t s = eng.provers().size();
      bool healthy = root_ok && a == s - 1 && t == s - 1;
      claim(eng, now, healthy ? Status::Healthy : Status::Unhealthy);
      return;
    }
    Node& n = nodes_[self];
    if (n.round != c || n.sent) return;
    if (!n.pending_children.count(child)) return;
    n.pending_children.erase(child);
    // Self-L: the parent judges the child's reported measurement against
    // its locally stored list.
    bool ok = eng.acceptable_contains(self, child, label);
    n.count_attested += a + (ok ? 1 : 0);
    n.count_total += t + 1;
    if (n.pending_children.empty()) send_up(eng, self, now);
  }

  void send_up(Engine& eng, DeviceId self, TimePoint now) {
    (void)now;
    Node& n = nodes_[self];
    if (n.sent) return;
    n.sent = true;
    Device& dev = eng.device(self);
    DeviceId parent = eng.topology().parent(self);
    Term body = Term::pair(
        Term::atom("rep"),
        Term::pair(Term::counter(n.round),
                   Term::pair(Term::atom(n.measured),
                              Term::pair(Term::counter(n.count_attested),
                                         Term::counter(n.count_total)))));
    Term wire = wire_mac(dev.keys.at(link_name(eng, parent, self)), body);
    eng.send(self, parent, wire);
    eng.emit_run_complete(self, verifier_, n.request);
  }

  void claim(Engine& eng, TimePoint now, Status status) {
    claimed_ = true;
    eng.emit_claim_group(verifier_, {ev::GroupStatus{eng.provers(), status}},
                         Interval{att_start_, now}, round_);
  }

  DeviceId verifier_ = 0;
  std::uint64_t round_ = 0;
  bool claimed_ = false;
  TimePoint att_start_ = 0;
  std::map<DeviceId, Node> nodes_;
};

// --- PADS ---------------------------------------------------------------
//
// Non-interactive: every prover self-attests on its own timer, judges
// itself against its local list (Self-LC), and gossips its knowledge
// vector. Merge prefers fresher entries; unhealthy wins ties. A relying
// party query to any prover produces the individual claim over the entries
// with a known status.
class Pads : public net::Handler {
 public:
  void on_start(Engine& eng) override {
    const Scenario& s = eng.scenario();
    for (DeviceId p : eng.provers()) {
      views_[p] = {};
      eng.set_timer(p, 0, timer_tag(kTagSelf, 0));
      eng.set_timer(p, s.pads_gossip_period, timer_tag(kTagGossip, 0));
    }
    if (s.pads_query_at > 0) {
      for (DeviceId i = 0; i < eng.device_count(); ++i) {
        if (eng.device(i).roles.has(Role::RelyingParty)) {
          rp_ = i;
          eng.set_timer(i, s.pads_query_at, timer_tag(kTagQuery, 0));
          break;
        }
      }
    }
  }

  bool on_message(Engine& eng, DeviceId self, DeviceId claimed_src,
                  const Term& wire, TimePoint now) override {
    (void)claimed_src;
    std::string tag;
    if (wire.kind() == sym::TermKind::Pair) tag = message_tag(wire.args()[0]);
    if (tag == "gsp") {
      on_gossip(eng, self, wire);
      return true;
    }
    if (tag == "qrep") {
      if (self == rp_) on_query_reply(eng, wire, now);
      return true;
    }
    if (message_tag(wire) == "qry") {
      on_query(eng, self, now);
      return true;
    }
    return false;
  }

  void on_timer(Engine& eng, DeviceId self, std::uint64_t tag,
                TimePoint now) override {
    const Scenario& s = eng.scenario();
    switch (timer_code(tag)) {
      case kTagSelf: {
        SoftwareState measured = eng.measure(self);
        // Self-LC: local validation of the local measurement.
        bool ok = eng.acceptable_contains(self, self, measured.label);
        views_[self][self] = {ok ? Status::Healthy : Status::Unhealthy, now};
        eng.set_timer(self, now + s.pads_self_period, timer_tag(kTagSelf, 0));
        break;
      }
      case kTagGossip: {
        broadcast(eng, self);
        eng.set_timer(self, now + s.pads_gossip_period, timer_tag(kTagGossip, 0));
        break;
      }
      case kTagQuery: {
        DeviceId target = eng.scenario().device_id(s.pads_query_prover);
        ++query_counter_;
        eng.emit_att_start(rp_, query_counter_);
        eng.send(rp_, target, Term::pair(Term::atom("qry"), Term::counter(query_counter_)));
        break;
      }
      default:
        break;
    }
  }

 private:
  struct Entry {
    Status status = Status::Unknown;
    TimePoint fresh = 0;
  };

  Term view_term(Engine& eng, DeviceId self) {
    std::vector<Term> entries;
    for (const auto& [p, e] : views_[self]) {
      entries.push_back(Term::pair(
          Term::atom(eng.device(p).name),
          Term::pair(Term::atom(status_name(e.status)), Term::counter(e.fresh))));
    }
    return term_list(entries);
  }

  void broadcast(Engine& eng, DeviceId self) {
    Term body = Term::pair(Term::atom("gsp"),
                           Term::pair(Term::atom(eng.device(self).name),
                                      view_term(eng, self)));
    Term wire = wire_sign(eng.device(self).keys.at("dev:" + eng.device(self).name),
                          body);
    for (DeviceId nb : eng.topology().neighbors(self)) {
      eng.send(self, nb, wire);
    }
  }

  void on_gossip(Engine& eng, DeviceId self, const Term& wire) {
    Term body;
    std::string origin;
    if (wire.kind() == sym::TermKind::Pair &&
        wire.args()[0].kind() == sym::TermKind::Pair) {
      const Term& b = wire.args()[0];
      if (b.args()[1].kind() == sym::TermKind::Pair &&
          b.args()[1].args()[0].kind() == sym::TermKind::Atom) {
        origin = b.args()[1].args()[0].name();
      }
    }
    if (origin.empty() || !open_sign(wire, "dev:" + origin, &body)) {
      eng.warn("pads: malformed or unauthenticated gossip ignored");
      return;
    }
    auto& view = views_[self];
    for (const Term& entry : term_list_elems(body.args()[1].args()[1])) {
      if (entry.kind() != sym::TermKind::Pair ||
          entry.args()[1].kind() != sym::TermKind::Pair) {
        eng.warn("pads: malformed vector entry ignored");
        continue;
      }
      auto dev = eng.device_by_name(entry.args()[0].name());
      if (!dev) {
        eng.warn("pads: vector entry for unknown device ignored");
        continue;
      }
      Status st;
      try {
        st = status_from_name(entry.args()[1].args()[0].name());
      } catch (const Error&) {
        eng.warn("pads: malformed status ignored");
        continue;
      }
      if (st == Status::Unknown) continue;
      TimePoint fresh = entry.args()[1].args()[1].counter_value();
      Entry& local = view[*dev];
      bool take = fresh > local.fresh ||
                  (fresh == local.fresh && st == Status::Unhealthy &&
                   local.status != Status::Unhealthy) ||
                  local.status == Status::Unknown;
      if (take) local = Entry{st, fresh};
    }
  }

  void on_query(Engine& eng, DeviceId self, TimePoint now) {
    (void)now;
    Term body = Term::pair(Term::atom("qrep"),
                           Term::pair(Term::atom(eng.device(self).name),
                                      view_term(eng, self)));
    Term wire = wire_sign(eng.device(self).keys.at("dev:" + eng.device(self).name),
                          body);
    eng.send(self, rp_, wire);
  }

  void on_query_reply(Engine& eng, const Term& wire, TimePoint now) {
    Term body;
    std::string origin;
    const Term& b = wire.args()[0];
    if (b.args()[1].kind() == sym::TermKind::Pair &&
        b.args()[1].args()[0].kind() == sym::TermKind::Atom) {
      origin = b.args()[1].args()[0].name();
    }
    if (origin.empty() || !open_sign(wire, "dev:" + origin, &body)) {
      eng.warn("pads: unauthenticated query reply ignored");
      return;
    }
    std::map<DeviceId, Status> statuses;
    TimePoint min_fresh = now;
    for (const Term& entry : term_list_elems(body.args()[1].args()[1])) {
      auto dev = eng.device_by_name(entry.args()[0].name());
      if (!dev) continue;
      Status st = status_from_name(entry.args()[1].args()[0].name());
      if (st == Status::Unknown) continue;  // only reported provers enter P
      statuses[*dev] = st;
      min_fresh = std::min(min_fresh, entry.args()[1].args()[1].counter_value());
    }
    eng.emit_claim_individual(rp_, std::move(statuses),
                              Interval{min_fresh, now}, query_counter_);
  }

  std::map<DeviceId, std::map<DeviceId, Entry>> views_;
  DeviceId rp_ = 0;
  std::uint64_t query_counter_ = 0;
};

// --- SAP ----------------------------------------------------------------
//
// Balanced binary tree rooted at the verifier. The request carries a target
// time t*; every prover measures at its local t*. Raw labels bundle up the
// tree and the verifier validates them (Verifier-side validation), claiming
// one group status over [t*-eps, t*+eps].
class Sap : public net::Handler {
 public:
  void on_start(Engine& eng) override {
    verifier_ = eng.topology().root();
    for (std::uint32_t r = 1; r <= eng.scenario().rounds; ++r) {
      eng.set_timer(verifier_, (r - 1) * eng.scenario().round_period,
                    timer_tag(kTagRound, r));
    }
  }

  bool on_message(Engine& eng, DeviceId self, DeviceId claimed_src,
                  const Term& wire, TimePoint now) override {
    (void)claimed_src;
    Term body;
    if (!open_mac(wire, eng.device(self).keys.at("auth"), &body)) return false;
    std::string tag = message_tag(body);
    if (tag == "req") {
      on_request(eng, self, wire, body, now);
      return true;
    }
    if (tag == "rep") {
      on_report(eng, self, claimed_src, body, now);
      return true;
    }
    return false;
  }

  void on_timer(Engine& eng, DeviceId self, std::uint64_t tag,
                TimePoint now) override {
    switch (timer_code(tag)) {
      case kTagRound:
        start_round(eng, timer_arg(tag), now);
        break;
      case kTagMeasure: {
        auto& n = nodes_[self];
        if (n.round == timer_arg(tag)) do_measure(eng, self, now);
        break;
      }
      case kTagChildDeadline: {
        auto& n = nodes_[self];
        if (n.round == timer_arg(tag) && !n.sent) send_up(eng, self, now);
        break;
      }
      case kTagClaimDeadline:
        if (timer_arg(tag) == round_ && !claimed_) claim(eng, now);
        break;
      default:
        break;
    }
  }

 private:
  struct Node {
    std::uint64_t round = 0;
    Term request;
    TimePoint t_star = 0;
    std::vector<std::pair<DeviceId, std::string>> entries;
    std::set<DeviceId> pending_children;
    bool measured = false;
    bool sent = false;
  };

  void start_round(Engine& eng, std::uint64_t r, TimePoint now) {
    const Scenario& s = eng.scenario();
    round_ = r;
    claimed_ = false;
    t_star_ = s.sap_t_star != 0
                  ? s.sap_t_star
                  : now + eng.topology().depth() * s.latency + 1;
    collected_.clear();
    pending_root_children_.clear();
    eng.device(verifier_).last_counter = r;
    eng.emit_att_start(verifier_, r);

    Term body = Term::pair(
        Term::atom("req"),
        Term::pair(Term::counter(r), Term::counter(t_star_)));
    Term wire = wire_mac(eng.device(verifier_).keys.at("auth"), body);
    for (DeviceId p : eng.provers()) eng.emit_send_request(verifier_, p, body);
    for (DeviceId c : eng.topology().children(verifier_)) {
      pending_root_children_.insert(c);
      eng.send(verifier_, c, wire);
    }
    eng.set_timer(verifier_,
                  t_star_ + eng.topology().depth() * s.latency + s.sap_epsilon + 2,
                  timer_tag(kTagClaimDeadline, r));
  }

  void on_request(Engine& eng, DeviceId self, const Term& wire, const Term& body,
                  TimePoint now) {
    if (self == verifier_) return;
    Device& dev = eng.device(self);
    std::uint64_t c = extract_counter(body.args()[1].args()[0]);
    if (c <= dev.last_counter) return;
    dev.last_counter = c;
    eng.emit_recv_request(self, wire);

    Node n;
    n.round = c;
    n.request = wire;
    n.t_star = body.args()[1].args()[1].counter_value();
    for (DeviceId ch : eng.topology().children(self)) n.pending_children.insert(ch);
    nodes_[self] = std::move(n);

    for (DeviceId ch : eng.topology().children(self)) eng.send(self, ch, wire);

    // Local clock reads t* when global time is t* - offset.
    std::int64_t fire_signed =
        static_cast<std::int64_t>(n.t_star) - dev.clock_offset;
    TimePoint fire = fire_signed < 0 ? 0 : static_cast<TimePoint>(fire_signed);
    if (fire < now) {
      eng.warn("sap: " + dev.name + " received request after t*");
      do_measure(eng, self, now);
    } else {
      eng.set_timer(self, fire, timer_tag(kTagMeasure, c));
    }
    TimePoint deadline = n.t_star +
                         (eng.topology().subtree_height(self) + 1) *
                             eng.scenario().latency +
                         1;
    if (!nodes_[self].pending_children.empty()) {
      eng.set_timer(self, deadline, timer_tag(kTagChildDeadline, c));
    }
  }

  void do_measure(Engine& eng, DeviceId self, TimePoint now) {
    Node& n = nodes_[self];
    if (n.measured) return;
    n.measured = true;
    SoftwareState measured = eng.measure(self);
    n.entries.emplace_back(self, measured.label);
    if (n.pending_children.empty()) send_up(eng, self, now);
  }

  void on_report(Engine& eng, DeviceId self, DeviceId claimed_src,
                 const Term& body, TimePoint now) {
    const Term& rest = body.args()[1];
    std::uint64_t c = extract_counter(rest.args()[0]);
    std::vector<std::pair<DeviceId, std::string>> entries;
    for (const Term& e : term_list_elems(rest.args()[1])) {
      auto dev = eng.device_by_name(e.args()[0].name());
      if (!dev) continue;
      entries.emplace_back(*dev, e.args()[1].name());
    }
    if (self == verifier_) {
      if (c != round_ || claimed_) return;
      for (auto& e : entries) collected_.push_back(e);
      pending_root_children_.erase(claimed_src);
      if (pending_root_children_.empty()) claim(eng, now);
      return;
    }
    Node& n = nodes_[self];
    if (n.round != c || n.sent) return;
    n.pending_children.erase(claimed_src);
    for (auto& e : entries) n.entries.push_back(e);
    if (n.pending_children.empty() && n.measured) send_up(eng, self, now);
  }

  void send_up(Engine& eng, DeviceId self, TimePoint now) {
    (void)now;
    Node& n = nodes_[self];
    if (n.sent) return;
    n.sent = true;
    std::vector<Term> list;
    for (const auto& [d, label] : n.entries) {
      list.push_back(Term::pair(Term::atom(eng.device(d).name), Term::atom(label)));
    }
    Term body = Term::pair(
        Term::atom("rep"),
        Term::pair(Term::counter(n.round), term_list(list)));
    Term wire = wire_mac(eng.device(self).keys.at("auth"), body);
    eng.send(self, eng.topology().parent(self), wire);
    eng.emit_run_complete(self, verifier_, n.request);
  }

  void claim(Engine& eng, TimePoint now) {
    (void)now;
    claimed_ = true;
    // Verifier-side validation of every collected label.
    std::map<DeviceId, bool> seen;
    bool all_ok = true;
    for (const auto& [d, label] : collected_) {
      seen[d] = true;
      if (!eng.acceptable_contains(verifier_, d, label)) all_ok = false;
    }
    for (DeviceId p : eng.provers()) {
      if (!seen.count(p)) all_ok = false;  // unresponsive counts unhealthy
    }
    TimePoint eps = eng.scenario().sap_epsilon;
    Interval window{t_star_ >= eps ? t_star_ - eps : 0, t_star_ + eps};
    eng.emit_claim_group(
        verifier_,
        {ev::GroupStatus{eng.provers(),
                         all_ok ? Status::Healthy : Status::Unhealthy}},
        window, round_);
  }

  DeviceId verifier_ = 0;
  std::uint64_t round_ = 0;
  bool claimed_ = false;
  TimePoint t_star_ = 0;
  std::vector<std::pair<DeviceId, std::string>> collected_;
  std::set<DeviceId> pending_root_children_;
  std::map<DeviceId, Node> nodes_;
};

}  // namespace

std::unique_ptr<net::Handler> make_heartbeat_service(const Scenario& s);
std::unique_ptr<net::Handler> make_secret_update_service(const Scenario& s);

std::vector<std::unique_ptr<net::Handler>> make_handlers(const Scenario& s) {
  std::vector<std::unique_ptr<net::Handler>> out;
  if (s.defense_hb) out.push_back(make_heartbeat_service(s));
  if (s.defense_su) out.push_back(make_secret_update_service(s));
  switch (s.protocol) {
    case ProtocolId::SimplePlus:
      out.push_back(std::make_unique<SimplePlus>());
      break;
    case ProtocolId::Seda:
      out.push_back(std::make_unique<Seda>());
      break;
    case ProtocolId::Pads:
      out.push_back(std::make_unique<Pads>());
      break;
    case ProtocolId::Sap:
      out.push_back(std::make_unique<Sap>());
      break;
    case ProtocolId::None:
      break;
  }
  return out;
}

std::vector<DetectorFlag> attestation_frequency_monitor(const Trace& trace,
                                                        TimePoint t_attack) {
  std::vector<DetectorFlag> flags;
  TimePoint end = trace.last_time();
  for (const auto& dev : trace.meta.devices) {
    if (!dev.roles.has(Role::Prover)) continue;
    std::vector<TimePoint> measures;
    for (const auto& e : trace.events) {
      if (const auto* m = e.as<ev::MeasureTaken>()) {
        if (m->prover == dev.id) measures.push_back(e.at);
      }
    }
    TimePoint prev = 0;
    bool flagged = false;
    auto scan = [&](TimePoint t) {
      if (!flagged && t - prev > t_attack) {
        flags.push_back(DetectorFlag{dev.id, t, "att-gap"});
        flagged = true;
      }
      prev = t;
    };
    for (TimePoint m : measures) scan(m);
    scan(end);
  }
  return flags;
}

}  // namespace crasim::proto
