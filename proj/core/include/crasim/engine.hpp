#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "crasim/adversary.hpp"
#include "crasim/event.hpp"
#include "crasim/knowledge.hpp"
#include "crasim/scenario.hpp"
#include "crasim/state.hpp"
#include "crasim/topology.hpp"

namespace crasim::net {

class Engine;

struct PendingMessage {
  DeviceId src = 0;
  DeviceId dst = 0;
  sym::Term body;
  TimePoint sent_at = 0;
};

struct NetAction {
  enum class Kind : std::uint8_t { Deliver, Drop, Delay, Duplicate };
  Kind kind = Kind::Deliver;
  TimePoint delay = 0;  // Delay only

  std::string to_text() const;
  static NetAction from_text(const std::string& s);
};

// Consulted on every mediated send while the Dolev-Yao flag is active.
// pre_decision may mutate adversary state through the engine (compromise,
// restore, injection); on_send picks the network action for the message.
class AdversaryPolicy {
 public:
  virtual ~AdversaryPolicy() = default;
  virtual void pre_decision(Engine&, std::size_t send_index) { (void)send_index; }
  virtual NetAction on_send(Engine&, const PendingMessage& msg,
                            std::size_t send_index) = 0;
  virtual void post_decision(Engine&, std::size_t send_index) { (void)send_index; }
  // Only consulted in the permute_deliveries validation mode: picks which of
  // n same-tick deliveries to dispatch next.
  virtual std::uint32_t on_order(Engine&, std::uint32_t n) {
    (void)n;
    return 0;
  }
};

// Runtime state of one device. The trusted environment holds keys, the
// round counter and the epoch; the untrusted environment is the software
// label. Offline devices receive no messages and fire no timers.
struct Device {
  DeviceId id = 0;
  std::string name;
  RoleSet roles;
  std::int64_t clock_offset = 0;

  std::string sw_label;
  std::string original_label;

  std::map<std::string, sym::Term> keys;
  std::uint64_t last_counter = 0;
  std::uint64_t epoch = 0;

  bool offline = false;
  TimePoint offline_until = 0;
  TimePoint atomic_until = 0;  // attestation section runs in [start, atomic_until)

  bool compromised() const { return is_compromised_label(sw_label); }
  bool in_atomic_section(TimePoint t) const { return t < atomic_until; }
};

// Handler interface shared by protocols and defense services. Handlers are
// invoked by the single-threaded engine and must route all effects through
// the engine API.
class Handler {
 public:
  virtual ~Handler() = default;
  virtual void on_start(Engine&) {}
  // Return true when the message was consumed.
  virtual bool on_message(Engine&, DeviceId self, DeviceId claimed_src,
                          const sym::Term& body, TimePoint now) = 0;
  virtual void on_timer(Engine&, DeviceId self, std::uint64_t tag,
                        TimePoint now) {
    (void)self; (void)tag; (void)now;
  }
};

// Deterministic discrete-event engine. Same (scenario, policy decisions,
// seed) always produces a byte-identical trace. Tie-break at equal
// timestamps: scripted adversary steps, then message deliveries, then timer
// fires, each FIFO.
class Engine {
 public:
  Engine(const Scenario& scenario, proto::Topology topology);
  explicit Engine(const Scenario& scenario);
  ~Engine();

  void set_policy(AdversaryPolicy* policy) { policy_ = policy; }
  // Extra handler dispatched after the protocol's own; test hook.
  void add_handler(std::unique_ptr<Handler> handler);

  Trace run(TimePoint horizon);
  Trace run() { return run(scenario_.horizon); }

  // --- handler-facing API ---
  TimePoint now() const { return now_; }
  void send(DeviceId src, DeviceId dst, const sym::Term& body);
  void set_timer(DeviceId dev, TimePoint fire_at, std::uint64_t tag);
  // Injected traffic; body must be derivable from adversary knowledge.
  void inject(DeviceId dst, DeviceId claimed_src, const sym::Term& body);

  SoftwareState measure(DeviceId prover);
  // Acceptable-state lookup, recorded as (judge, judged) for the
  // validator-taxonomy assertions.
  bool acceptable_contains(DeviceId judge, DeviceId judged,
                           const std::string& label);

  void emit_send_request(DeviceId initiator, DeviceId prover, const sym::Term& req);
  void emit_recv_request(DeviceId prover, const sym::Term& req);
  void emit_run_complete(DeviceId prover, DeviceId initiator, const sym::Term& req);
  void emit_att_start(DeviceId verifier, std::uint64_t counter);
  void emit_claim_individual(DeviceId party, std::map<DeviceId, Status> statuses,
                             Interval window, std::uint64_t counter);
  void emit_claim_group(DeviceId party, std::vector<ev::GroupStatus> groups,
                        Interval window, std::uint64_t counter);
  void emit_heartbeat_send(DeviceId prover);
  void emit_heartbeat_recv(DeviceId observer, DeviceId prover);
  void emit_epoch_update(std::uint64_t epoch);
  void record_event(EventData data);

  void warn(const std::string& message);
  void add_flag(DetectorFlag flag);
  void log_decision(const std::string& decision);

  Device& device(DeviceId id);
  const Device& device(DeviceId id) const;
  std::size_t device_count() const { return devices_.size(); }
  std::optional<DeviceId> device_by_name(const std::string& name) const;

  const Scenario& scenario() const { return scenario_; }
  const proto::Topology& topology() const { return topology_; }
  adv::Adversary& adversary() { return *adversary_; }
  const std::vector<DeviceId>& provers() const { return provers_; }
  // Prover bit position in aggregate reports; width = swarm size.
  std::size_t prover_index(DeviceId p) const;

  // Seeded engine-local randomness (attestation sampling only).
  std::uint64_t rand_below(std::uint64_t n);

  const std::vector<std::pair<DeviceId, DeviceId>>& consult_log() const {
    return consult_log_;
  }

  // Observed wire bodies in send order, for replay candidate enumeration.
  const std::vector<sym::Term>& observed_bodies() const { return observed_; }

  // Internal: scheduled adversary steps (scripted or explorer-driven).
  void schedule_capture(DeviceId p, TimePoint begin, TimePoint end, bool write);

 private:
  friend class adv::Adversary;

  struct Delivery {
    DeviceId src, dst;
    sym::Term body;
  };
  struct TimerFire {
    DeviceId dev;
    std::uint64_t tag;
  };
  struct ScriptStep {
    ScriptAction action;
    // 0: run the action; 1: capture window begin; 2: capture window end.
    std::uint8_t capture_phase = 0;
  };
  struct QueueEntry {
    TimePoint at;
    std::uint8_t cls;  // 0 script step, 1 delivery, 2 timer
    std::uint64_t seq;
    std::size_t payload_index;
  };
  struct EntryOrder {
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
      if (a.at != b.at) return a.at > b.at;
      if (a.cls != b.cls) return a.cls > b.cls;
      return a.seq > b.seq;
    }
  };

  void setup_devices();
  void setup_keys();
  void schedule_script();
  void push(TimePoint at, std::uint8_t cls,
            std::variant<Delivery, TimerFire, ScriptStep> payload);
  void dispatch_delivery(const Delivery& d);
  void dispatch_timer(const TimerFire& t);
  void dispatch_script(const ScriptStep& s);
  void apply_net_action(const PendingMessage& msg, const NetAction& action);

  Scenario scenario_;
  proto::Topology topology_;
  AcceptableStates acceptable_;
  std::unique_ptr<adv::Adversary> adversary_;
  AdversaryPolicy* policy_ = nullptr;

  std::vector<Device> devices_;
  std::vector<DeviceId> provers_;
  std::vector<std::unique_ptr<Handler>> handlers_;  // services first, protocol last
  std::vector<std::unique_ptr<Handler>> extra_handlers_;

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, EntryOrder> queue_;
  // Deque: handlers enqueue while a payload reference is live.
  std::deque<std::variant<Delivery, TimerFire, ScriptStep>> payloads_;
  std::uint64_t seq_ = 0;
  TimePoint now_ = 0;
  std::size_t send_index_ = 0;
  std::uint64_t rng_state_ = 0;

  Trace trace_;
  std::vector<sym::Term> observed_;
  std::vector<std::pair<DeviceId, DeviceId>> consult_log_;
};

}  // namespace crasim::net
