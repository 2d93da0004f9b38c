#include "crasim/protocols.hpp"

#include <map>
#include <set>

namespace crasim::proto {

using net::Device;
using net::Engine;
using sym::Term;

namespace {

constexpr std::uint64_t kTagBeat = 20;
constexpr std::uint64_t kTagScan = 21;
constexpr std::uint64_t kTagEpoch = 22;

std::uint64_t timer_tag(std::uint64_t code, std::uint64_t arg) {
  return (code << 56) | (arg & 0x00ffffffffffffffULL);
}
std::uint64_t timer_code(std::uint64_t tag) { return tag >> 56; }

// Online-liveness detector: provers beat every `period`; the observer flags
// a prover once its silence strictly exceeds t_attack.
class HeartbeatService : public net::Handler {
 public:
  void on_start(Engine& eng) override {
    const Scenario& s = eng.scenario();
    observer_ = eng.scenario().device_id(s.hb.observer);
    for (DeviceId p : eng.provers()) {
      last_heard_[p] = 0;
      last_seq_[p] = 0;
      eng.set_timer(p, s.hb.period, timer_tag(kTagBeat, 0));
    }
    eng.set_timer(observer_, s.hb.period, timer_tag(kTagScan, 0));
  }

  bool on_message(Engine& eng, DeviceId self, DeviceId claimed_src,
                  const Term& wire, TimePoint now) override {
    (void)claimed_src;
    if (self != observer_) return false;
    if (wire.kind() != sym::TermKind::Pair) return false;
    const Term& body = wire.args()[0];
    if (message_tag(body) != "hb") return false;
    // body = pair(hb, pair(name, ctr(seq)))
    const Term& rest = body.args()[1];
    auto dev = eng.device_by_name(rest.args()[0].name());
    if (!dev) return true;
    auto key_it = eng.device(self).keys.find("hbk:" + rest.args()[0].name());
    Term opened;
    if (key_it == eng.device(self).keys.end() ||
        !open_mac(wire, key_it->second, &opened)) {
      eng.warn("hb: bad authentication, beat ignored");
      return true;
    }
    std::uint64_t seq = rest.args()[1].counter_value();
    if (seq <= last_seq_[*dev]) return true;  // replayed beat
    // A beat arriving after a silence longer than t_attack still means the
    // device was unreachable long enough for an intrusive attack.
    if (!flagged_.count(*dev) &&
        now - last_heard_[*dev] > eng.adversary().t_attack()) {
      flagged_.insert(*dev);
      eng.add_flag(DetectorFlag{*dev, now, "hb-silence"});
    }
    last_seq_[*dev] = seq;
    last_heard_[*dev] = now;
    eng.emit_heartbeat_recv(self, *dev);
    return true;
  }

  void on_timer(Engine& eng, DeviceId self, std::uint64_t tag,
                TimePoint now) override {
    const Scenario& s = eng.scenario();
    switch (timer_code(tag)) {
      case kTagBeat: {
        eng.emit_heartbeat_send(self);
        Term body = Term::pair(
            Term::atom("hb"),
            Term::pair(Term::atom(eng.device(self).name),
                       Term::counter(++beat_seq_[self])));
        eng.send(self, observer_,
                 wire_mac(eng.device(self).keys.at("hbk:" + eng.device(self).name),
                          body));
        eng.set_timer(self, now + s.hb.period, timer_tag(kTagBeat, 0));
        break;
      }
      case kTagScan: {
        for (DeviceId p : eng.provers()) {
          if (flagged_.count(p)) continue;
          if (now - last_heard_[p] > eng.adversary().t_attack()) {
            flagged_.insert(p);
            eng.add_flag(DetectorFlag{p, now, "hb-silence"});
          }
        }
        eng.set_timer(self, now + s.hb.period, timer_tag(kTagScan, 0));
        break;
      }
      default:
        break;
    }
  }

 private:
  DeviceId observer_ = 0;
  std::map<DeviceId, TimePoint> last_heard_;
  std::map<DeviceId, std::uint64_t> last_seq_;
  std::map<DeviceId, std::uint64_t> beat_seq_;
  std::set<DeviceId> flagged_;
};

// Epoch key rotation: the verifier derives a fresh swarm key every epoch and
// distributes it encrypted under the previous one. A device that misses an
// update can no longer authenticate reports.
class SecretUpdateService : public net::Handler {
 public:
  void on_start(Engine& eng) override {
    for (DeviceId i = 0; i < eng.device_count(); ++i) {
      if (eng.device(i).roles.has(Role::Verifier)) {
        verifier_ = i;
        break;
      }
    }
    eng.set_timer(verifier_, eng.scenario().su.epoch_len, timer_tag(kTagEpoch, 1));
  }

  bool on_message(Engine& eng, DeviceId self, DeviceId claimed_src,
                  const Term& wire, TimePoint now) override {
    (void)claimed_src;
    (void)now;
    if (wire.kind() != sym::TermKind::SymEnc) return false;
    if (message_tag(wire) != "epk") return false;
    Device& dev = eng.device(self);
    if (wire.args()[0] != dev.keys.at("epoch")) {
      eng.warn("su: " + dev.name + " cannot decrypt epoch update");
      return true;
    }
    const Term& payload = wire.args()[1];  // pair(epk, pair(ctr(e), key))
    std::uint64_t e = payload.args()[1].args()[0].counter_value();
    if (e <= dev.epoch) return true;
    dev.epoch = e;
    dev.keys["epoch_prev"] = dev.keys["epoch"];
    dev.keys["epoch"] = payload.args()[1].args()[1];
    return true;
  }

  void on_timer(Engine& eng, DeviceId self, std::uint64_t tag,
                TimePoint now) override {
    if (timer_code(tag) != kTagEpoch) return;
    std::uint64_t e = tag & 0x00ffffffffffffffULL;
    Device& ver = eng.device(self);
    Term prev = ver.keys.at("epoch");
    Term new_key = Term::key("epoch:" + std::to_string(e));
    Term payload = Term::pair(Term::atom("epk"),
                              Term::pair(Term::counter(e), new_key));
    // Sealed under the pre-rotation key: whoever missed an earlier update
    // cannot recover this one either.
    for (DeviceId i = 0; i < eng.device_count(); ++i) {
      if (i == self) continue;
      eng.send(self, i, Term::sym_enc(prev, payload));
    }
    ver.epoch = e;
    ver.keys["epoch_prev"] = prev;
    ver.keys["epoch"] = new_key;
    eng.emit_epoch_update(e);
    eng.set_timer(self, now + eng.scenario().su.epoch_len,
                  timer_tag(kTagEpoch, e + 1));
  }

 private:
  DeviceId verifier_ = 0;
};

}  // namespace

std::unique_ptr<net::Handler> make_heartbeat_service(const Scenario&) {
  return std::make_unique<HeartbeatService>();
}

std::unique_ptr<net::Handler> make_secret_update_service(const Scenario&) {
  return std::make_unique<SecretUpdateService>();
}

}  // namespace crasim::proto
