#include "crasim/engine.hpp"

#include <algorithm>

#include "crasim/protocols.hpp"

namespace crasim::net {

std::string NetAction::to_text() const {
  switch (kind) {
    case Kind::Deliver: return "deliver";
    case Kind::Drop: return "drop";
    case Kind::Delay: return "delay:" + std::to_string(delay);
    case Kind::Duplicate: return "duplicate";
  }
  return "?";
}

NetAction NetAction::from_text(const std::string& s) {
  if (s == "deliver") return {Kind::Deliver, 0};
  if (s == "drop") return {Kind::Drop, 0};
  if (s == "duplicate") return {Kind::Duplicate, 0};
  if (s.rfind("delay:", 0) == 0) {
    return {Kind::Delay, std::stoull(s.substr(6))};
  }
  throw Error(Errc::ParseError, "bad net action: " + s);
}

Engine::Engine(const Scenario& scenario, proto::Topology topology)
    : scenario_(scenario), topology_(std::move(topology)) {
  adversary_ = std::make_unique<adv::Adversary>(scenario_.adversary,
                                                scenario_.t_attack);
  setup_devices();
  setup_keys();
  rng_state_ = scenario_.seed ^ 0x9e3779b97f4a7c15ULL;
}

Engine::Engine(const Scenario& scenario)
    : Engine(scenario, scenario.devices.empty()
                           ? proto::Topology()
                           : scenario.build_topology()) {}

Engine::~Engine() = default;

void Engine::setup_devices() {
  trace_.meta.version = 1;
  trace_.meta.scenario = scenario_.name;
  trace_.meta.protocol = protocol_name(scenario_.protocol);
  trace_.meta.interactive = scenario_.protocol != ProtocolId::Pads;
  trace_.meta.seed = scenario_.seed;
  trace_.meta.adversary = scenario_.adversary;
  trace_.meta.t_attack = scenario_.t_attack;

  for (DeviceId i = 0; i < scenario_.devices.size(); ++i) {
    const DeviceSpec& spec = scenario_.devices[i];
    Device d;
    d.id = i;
    d.name = spec.name;
    d.roles = spec.roles;
    d.clock_offset = spec.clock_offset;
    d.sw_label = spec.initial_state;
    d.original_label = spec.initial_state;
    devices_.push_back(std::move(d));
    bool participates = topology_.device_count() == 0 || topology_.in_topology(i);
    if (spec.roles.has(Role::Prover) && participates) provers_.push_back(i);

    DeviceMeta meta;
    meta.id = i;
    meta.name = spec.name;
    meta.roles = spec.roles;
    meta.initial_state = spec.initial_state;
    meta.acceptable = spec.acceptable;
    meta.clock_offset = spec.clock_offset;
    trace_.meta.devices.push_back(std::move(meta));
  }
  acceptable_ = AcceptableStates(trace_.meta);

  // Public constants: tags, device names, state labels, bits, zero counter.
  auto& k = adversary_->knowledge();
  for (const char* tag : {"req", "rep", "hb", "gsp", "qry", "qrep", "epk", "nil"}) {
    k.add(sym::Term::atom(tag));
  }
  for (const auto& d : scenario_.devices) {
    k.add(sym::Term::atom(d.name));
    for (const auto& l : d.acceptable) k.add(sym::Term::atom(l));
  }
  k.add(sym::Term::bit(true));
  k.add(sym::Term::bit(false));
  k.add(sym::Term::counter(0));
  for (const char* st : {"Healthy", "Unhealthy", "Unknown"}) {
    k.add(sym::Term::atom(st));
  }
}

void Engine::setup_keys() {
  using sym::Term;
  switch (scenario_.key_policy) {
    case proto::KeyPolicyKind::SwarmShared: {
      Term att = Term::key("att");
      Term auth = Term::key("auth");
      for (auto& d : devices_) {
        d.keys["att"] = att;
        d.keys["auth"] = auth;
      }
      break;
    }
    case proto::KeyPolicyKind::PerLink: {
      if (topology_.device_count() == 0) break;
      for (DeviceId a = 0; a < devices_.size(); ++a) {
        for (DeviceId b : topology_.kind() == proto::TopologyKind::DistributedGraph
                              ? topology_.neighbors(a)
                              : topology_.children(a)) {
          std::string name = "link:" + devices_[a].name + ":" + devices_[b].name;
          Term key = Term::key(name);
          devices_[a].keys[name] = key;
          devices_[b].keys[name] = key;
        }
      }
      break;
    }
    case proto::KeyPolicyKind::PerDevice: {
      for (auto& d : devices_) {
        std::string name = "dev:" + d.name;
        d.keys[name] = Term::key(name);
      }
      break;
    }
  }
  if (scenario_.defense_su) {
    Term epoch0 = Term::key("epoch:0");
    for (auto& d : devices_) d.keys["epoch"] = epoch0;
  }
  if (scenario_.defense_hb) {
    DeviceId observer = scenario_.device_id(scenario_.hb.observer);
    for (auto& d : devices_) {
      if (!d.roles.has(Role::Prover)) continue;
      std::string name = "hbk:" + d.name;
      Term key = Term::key(name);
      d.keys[name] = key;
      devices_[observer].keys[name] = key;
    }
  }
}

void Engine::schedule_script() {
  for (const auto& a : scenario_.script) {
    push(a.at, 0, ScriptStep{a, false});
  }
}

void Engine::push(TimePoint at, std::uint8_t cls,
                  std::variant<Delivery, TimerFire, ScriptStep> payload) {
  payloads_.push_back(std::move(payload));
  queue_.push(QueueEntry{at, cls, seq_++, payloads_.size() - 1});
}

void Engine::add_handler(std::unique_ptr<Handler> handler) {
  extra_handlers_.push_back(std::move(handler));
}

Trace Engine::run(TimePoint horizon) {
  schedule_script();
  handlers_ = proto::make_handlers(scenario_);
  for (auto& h : extra_handlers_) handlers_.push_back(std::move(h));
  extra_handlers_.clear();
  for (auto& h : handlers_) {
    try {
      h->on_start(*this);
    } catch (const Error& e) {
      warn(std::string("on_start fault: ") + e.what());
    }
  }
  const bool permute = scenario_.explore.permute_deliveries && policy_;
  while (!queue_.empty()) {
    QueueEntry entry = queue_.top();
    if (entry.at > horizon) break;
    queue_.pop();
    now_ = entry.at;
    if (permute && entry.cls == 1) {
      // Validation mode: the delivery order of same-tick messages becomes a
      // decision point instead of the canonical FIFO order.
      std::vector<QueueEntry> batch{entry};
      while (!queue_.empty() && queue_.top().at == now_ && queue_.top().cls == 1) {
        batch.push_back(queue_.top());
        queue_.pop();
      }
      while (!batch.empty()) {
        std::uint32_t pick = 0;
        if (batch.size() > 1) {
          pick = policy_->on_order(*this, static_cast<std::uint32_t>(batch.size()));
          log_decision("ord:" + std::to_string(pick));
        }
        QueueEntry chosen = batch[pick];
        batch.erase(batch.begin() + pick);
        try {
          dispatch_delivery(std::get<Delivery>(payloads_[chosen.payload_index]));
        } catch (const Error& e) {
          warn(std::string("fault: ") + e.what());
        }
        // Sends triggered by this delivery may queue more same-tick
        // deliveries; they keep their canonical position.
      }
      continue;
    }
    const auto& payload = payloads_[entry.payload_index];
    try {
      if (const auto* d = std::get_if<Delivery>(&payload)) {
        dispatch_delivery(*d);
      } else if (const auto* t = std::get_if<TimerFire>(&payload)) {
        dispatch_timer(*t);
      } else {
        dispatch_script(std::get<ScriptStep>(payload));
      }
    } catch (const Error& e) {
      warn(std::string("fault: ") + e.what());
    }
  }
  return trace_;
}

void Engine::dispatch_delivery(const Delivery& d) {
  Device& dev = devices_.at(d.dst);
  if (dev.offline && now_ < dev.offline_until) return;  // captured: lost
  record_event(ev::MsgRecv{d.dst, d.body});
  for (auto& h : handlers_) {
    if (h->on_message(*this, d.dst, d.src, d.body, now_)) return;
  }
}

void Engine::dispatch_timer(const TimerFire& t) {
  Device& dev = devices_.at(t.dev);
  if (dev.offline && now_ < dev.offline_until) {
    // Defer past the capture window; fires when the device is back.
    push(dev.offline_until, 2, TimerFire{t.dev, t.tag});
    return;
  }
  for (auto& h : handlers_) {
    h->on_timer(*this, t.dev, t.tag, now_);
  }
}

void Engine::dispatch_script(const ScriptStep& s) {
  const ScriptAction& a = s.action;
  if (s.capture_phase == 1) {
    adversary_->capture_begin(*this, scenario_.device_id(a.device), a.until,
                              a.write);
    return;
  }
  if (s.capture_phase == 2) {
    adversary_->capture_end(*this, scenario_.device_id(a.device), a.write);
    return;
  }
  switch (a.kind) {
    case ScriptAction::Kind::Compromise: {
      DeviceId p = scenario_.device_id(a.device);
      // Engine-scheduled compromises defer past atomic sections instead of
      // failing: the adversary simply acts when the section ends.
      if (devices_.at(p).in_atomic_section(now_)) {
        push(devices_.at(p).atomic_until, 0, ScriptStep{a, false});
        return;
      }
      adversary_->compromise(*this, p);
      log_decision("script:compromise:" + a.device + "@" + std::to_string(now_));
      break;
    }
    case ScriptAction::Kind::Restore:
      adversary_->restore(*this, scenario_.device_id(a.device));
      log_decision("script:restore:" + a.device + "@" + std::to_string(now_));
      break;
    case ScriptAction::Kind::ReadSecrets:
      adversary_->read_secrets(*this, scenario_.device_id(a.device));
      log_decision("script:read_secrets:" + a.device + "@" + std::to_string(now_));
      break;
    case ScriptAction::Kind::Capture:
      adversary_->capture(*this, scenario_.device_id(a.device), a.at, a.until,
                          a.write);
      log_decision("script:capture:" + a.device + ":" + std::to_string(a.at) +
                   ":" + std::to_string(a.until) + (a.write ? ":write" : ""));
      break;
    case ScriptAction::Kind::Inject: {
      DeviceId dst = scenario_.device_id(a.device);
      inject(dst, dst, sym::Term::from_text(a.body));
      break;
    }
  }
}

void Engine::send(DeviceId src, DeviceId dst, const sym::Term& body) {
  record_event(ev::MsgSend{src, dst, body});
  observed_.push_back(body);
  const bool dy = scenario_.adversary.dy;
  if (dy) adversary_->observe(body);

  if (dst >= devices_.size()) {
    // Unknown destination: the network has nowhere to put it; the adversary
    // still saw it.
    log_decision("net:drop");
    return;
  }

  PendingMessage msg{src, dst, body, now_};
  NetAction action{NetAction::Kind::Deliver, 0};
  if (dy && policy_) {
    std::size_t idx = send_index_++;
    policy_->pre_decision(*this, idx);
    action = policy_->on_send(*this, msg, idx);
    log_decision("net:" + action.to_text());
    apply_net_action(msg, action);
    policy_->post_decision(*this, idx);
    return;
  }
  if (dy) log_decision("net:deliver");
  apply_net_action(msg, action);
}

void Engine::apply_net_action(const PendingMessage& msg, const NetAction& action) {
  const TimePoint latency = scenario_.latency;
  switch (action.kind) {
    case NetAction::Kind::Deliver:
      push(now_ + latency, 1, Delivery{msg.src, msg.dst, msg.body});
      break;
    case NetAction::Kind::Drop:
      break;
    case NetAction::Kind::Delay:
      push(now_ + latency + action.delay, 1, Delivery{msg.src, msg.dst, msg.body});
      break;
    case NetAction::Kind::Duplicate:
      push(now_ + latency, 1, Delivery{msg.src, msg.dst, msg.body});
      push(now_ + latency + 1, 1, Delivery{msg.src, msg.dst, msg.body});
      break;
  }
}

void Engine::inject(DeviceId dst, DeviceId claimed_src, const sym::Term& body) {
  if (!scenario_.adversary.dy) {
    throw Error(Errc::RejectedCapability, "inject requires the dy flag");
  }
  if (!sym::can_derive(adversary_->knowledge(), body,
                       scenario_.explore.bounds.max_inject_depth)) {
    throw Error(Errc::RejectedCapability,
                "inject body not derivable: " + body.to_text());
  }
  log_decision("inject:" + devices_.at(dst).name + ":" + body.to_text());
  push(now_ + scenario_.latency, 1, Delivery{claimed_src, dst, body});
}

void Engine::set_timer(DeviceId dev, TimePoint fire_at, std::uint64_t tag) {
  if (fire_at < now_) {
    throw Error(Errc::InvalidTimer,
                "timer for " + devices_.at(dev).name + " in the past");
  }
  push(fire_at, 2, TimerFire{dev, tag});
}

SoftwareState Engine::measure(DeviceId prover) {
  Device& d = devices_.at(prover);
  d.atomic_until = now_ + scenario_.attest_duration;
  SoftwareState s{d.sw_label};
  record_event(ev::MeasureTaken{prover, s});
  return s;
}

bool Engine::acceptable_contains(DeviceId judge, DeviceId judged,
                                 const std::string& label) {
  consult_log_.emplace_back(judge, judged);
  return acceptable_.contains(judged, label, now_);
}

void Engine::record_event(EventData data) {
  trace_.events.push_back(Event{now_, std::move(data)});
}

void Engine::emit_send_request(DeviceId initiator, DeviceId prover,
                               const sym::Term& req) {
  record_event(ev::SendRequest{initiator, prover, req});
}
void Engine::emit_recv_request(DeviceId prover, const sym::Term& req) {
  record_event(ev::RecvRequest{prover, req});
}
void Engine::emit_run_complete(DeviceId prover, DeviceId initiator,
                               const sym::Term& req) {
  record_event(ev::RunComplete{prover, initiator, req});
}
void Engine::emit_att_start(DeviceId verifier, std::uint64_t counter) {
  record_event(ev::AttStart{verifier, counter});
}
void Engine::emit_claim_individual(DeviceId party,
                                   std::map<DeviceId, Status> statuses,
                                   Interval window, std::uint64_t counter) {
  record_event(ev::ClaimIndividual{party, std::move(statuses), window, counter});
}
void Engine::emit_claim_group(DeviceId party, std::vector<ev::GroupStatus> groups,
                              Interval window, std::uint64_t counter) {
  record_event(ev::ClaimGroup{party, std::move(groups), window, counter});
}
void Engine::emit_heartbeat_send(DeviceId prover) {
  record_event(ev::HeartbeatSend{prover});
}
void Engine::emit_heartbeat_recv(DeviceId observer, DeviceId prover) {
  record_event(ev::HeartbeatRecv{observer, prover});
}
void Engine::emit_epoch_update(std::uint64_t epoch) {
  record_event(ev::EpochKeyUpdate{epoch});
}

void Engine::warn(const std::string& message) {
  trace_.meta.faults.push_back("t=" + std::to_string(now_) + ": " + message);
}

void Engine::add_flag(DetectorFlag flag) {
  trace_.meta.flags.push_back(std::move(flag));
}

void Engine::log_decision(const std::string& decision) {
  trace_.meta.schedule.push_back(decision);
}

Device& Engine::device(DeviceId id) {
  if (id >= devices_.size()) {
    throw Error(Errc::UnknownDevice, "device id " + std::to_string(id));
  }
  return devices_[id];
}

const Device& Engine::device(DeviceId id) const {
  if (id >= devices_.size()) {
    throw Error(Errc::UnknownDevice, "device id " + std::to_string(id));
  }
  return devices_[id];
}

std::optional<DeviceId> Engine::device_by_name(const std::string& name) const {
  for (const auto& d : devices_) {
    if (d.name == name) return d.id;
  }
  return std::nullopt;
}

std::size_t Engine::prover_index(DeviceId p) const {
  for (std::size_t i = 0; i < provers_.size(); ++i) {
    if (provers_[i] == p) return i;
  }
  throw Error(Errc::UnknownDevice, "not a prover: " + std::to_string(p));
}

std::uint64_t Engine::rand_below(std::uint64_t n) {
  // splitmix64; portable and stable across platforms.
  rng_state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = rng_state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return n == 0 ? 0 : z % n;
}

void Engine::schedule_capture(DeviceId p, TimePoint begin, TimePoint end,
                              bool write) {
  ScriptAction a;
  a.kind = ScriptAction::Kind::Capture;
  a.device = devices_.at(p).name;
  a.at = begin;
  a.until = end;
  a.write = write;
  if (begin <= now_) {
    adversary_->capture_begin(*this, p, end, write);
  } else {
    push(begin, 0, ScriptStep{a, 1});
  }
  push(end, 0, ScriptStep{a, 2});
}

}  // namespace crasim::net
