#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crasim/checker.hpp"
#include "crasim/event.hpp"
#include "crasim/topology.hpp"

namespace crasim {

enum class ProtocolId : std::uint8_t { SimplePlus, Seda, Pads, Sap, None };

std::string protocol_name(ProtocolId p);
ProtocolId protocol_from_name(const std::string& s);

struct DeviceSpec {
  std::string name;
  RoleSet roles;
  std::string initial_state = "good";
  std::vector<std::string> acceptable = {"good"};
  std::int64_t clock_offset = 0;
};

// One scripted adversary step, executed at a fixed time.
struct ScriptAction {
  enum class Kind { Compromise, Restore, ReadSecrets, Capture, Inject };
  Kind kind = Kind::Compromise;
  std::string device;       // target (dst for Inject)
  TimePoint at = 0;         // Capture: window begin
  TimePoint until = 0;      // Capture: window end
  bool write = false;       // Capture: rewrite state at commit
  std::string body;         // Inject: term text
};

struct ExploreBounds {
  std::uint32_t max_provers = 2;
  std::uint32_t max_rounds = 2;
  std::uint32_t max_inject_depth = 4;
  std::uint32_t max_delay = 3;
};

// Menu of network decisions the exploration may take per mediated send.
struct NetMenu {
  bool deliver = true;
  bool drop = false;
  bool delay = false;      // Delay(1..max_delay)
  bool duplicate = false;
};

struct TopologySpec {
  proto::TopologyKind kind = proto::TopologyKind::SpanningTree;
  std::string root;
  std::vector<std::pair<std::string, std::string>> edges;
};

struct ExploreConfig {
  ExploreBounds bounds;
  NetMenu menu;
  bool allow_compromise = false;  // schedule Compromise at decision points
  bool allow_restore = false;     // requires msw
  std::uint32_t max_injects = 0;
  std::vector<std::string> inject_shapes;  // "request" | "report" | "replay"
  std::uint64_t cap = 10'000'000;
  // Test-only: enumerate same-tick delivery orders instead of the canonical
  // FIFO order, to validate the delivery-commutation reduction.
  bool permute_deliveries = false;
  std::vector<TopologySpec> variants;  // extra topologies to explore
};

struct HbConfig {
  TimePoint period = 0;
  std::string observer;
};

struct SuConfig {
  TimePoint epoch_len = 0;
};

struct SampleConfig {
  bool sample = false;     // false: attest all provers
  std::uint32_t size = 0;  // uniform random sample size per round
};

struct Scenario {
  int version = 1;
  std::string name;
  ProtocolId protocol = ProtocolId::None;
  std::vector<DeviceSpec> devices;
  TopologySpec topology;
  proto::KeyPolicyKind key_policy = proto::KeyPolicyKind::SwarmShared;

  bool defense_hb = false;
  bool defense_su = false;
  bool defense_att = false;
  HbConfig hb;
  SuConfig su;

  AdversaryFlags adversary;
  TimePoint t_attack = 5;
  std::vector<ScriptAction> script;
  std::vector<std::string> net_script;  // per-send: deliver|drop|delay:N|duplicate

  std::uint32_t rounds = 1;
  TimePoint round_period = 10;
  TimePoint latency = 1;
  TimePoint response_deadline = 0;  // 0: 3 * latency * tree depth
  TimePoint attest_duration = 0;    // atomic-section length
  bool counterless = false;         // deliberately drop freshness checks

  TimePoint pads_self_period = 2;
  TimePoint pads_gossip_period = 2;
  TimePoint pads_query_at = 0;  // 0: no query
  std::string pads_query_prover;

  TimePoint sap_epsilon = 0;
  TimePoint sap_t_star = 0;  // 0: att_start + depth * latency + 1

  SampleConfig attestation_set;
  std::uint64_t group_threshold = 0;

  std::uint64_t seed = 0;
  TimePoint horizon = 100;

  ExploreConfig explore;
  std::vector<check::PropertyId> properties;
  std::map<check::PropertyId, check::VerdictResult> expected;

  DeviceId device_id(const std::string& name) const;
  proto::Topology build_topology() const;
  proto::Topology build_topology(const TopologySpec& spec) const;
  std::vector<DeviceId> provers() const;
  TimePoint effective_deadline() const;
};

// Strict parse: schema-validated, unknown fields rejected.
Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario(const std::string& path);

}  // namespace crasim
