#include "crasim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace crasim {

using nlohmann::json;

std::string protocol_name(ProtocolId p) {
  switch (p) {
    case ProtocolId::SimplePlus: return "simpleplus";
    case ProtocolId::Seda: return "seda";
    case ProtocolId::Pads: return "pads";
    case ProtocolId::Sap: return "sap";
    case ProtocolId::None: return "none";
  }
  return "?";
}

ProtocolId protocol_from_name(const std::string& s) {
  if (s == "simpleplus") return ProtocolId::SimplePlus;
  if (s == "seda") return ProtocolId::Seda;
  if (s == "pads") return ProtocolId::Pads;
  if (s == "sap") return ProtocolId::Sap;
  if (s == "none") return ProtocolId::None;
  throw Error(Errc::ParseError, "unknown protocol: " + s);
}

DeviceId Scenario::device_id(const std::string& name) const {
  for (DeviceId i = 0; i < devices.size(); ++i) {
    if (devices[i].name == name) return i;
  }
  throw Error(Errc::ConfigError, "unknown device name: " + name);
}

proto::Topology Scenario::build_topology() const { return build_topology(topology); }

proto::Topology Scenario::build_topology(const TopologySpec& spec) const {
  std::vector<std::pair<DeviceId, DeviceId>> edges;
  edges.reserve(spec.edges.size());
  for (const auto& [a, b] : spec.edges) {
    edges.emplace_back(device_id(a), device_id(b));
  }
  DeviceId root = spec.root.empty() ? 0 : device_id(spec.root);
  proto::Topology t(spec.kind, root, std::move(edges), devices.size());
  t.validate();
  return t;
}

std::vector<DeviceId> Scenario::provers() const {
  std::vector<DeviceId> out;
  for (DeviceId i = 0; i < devices.size(); ++i) {
    if (devices[i].roles.has(Role::Prover)) out.push_back(i);
  }
  return out;
}

TimePoint Scenario::effective_deadline() const {
  if (response_deadline != 0) return response_deadline;
  TimePoint depth = 1;
  try {
    depth = std::max<TimePoint>(1, build_topology().depth());
  } catch (const Error&) {
    // fall back for graph topologies
  }
  return 3 * latency * depth;
}

namespace {

class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) {
      throw Error(Errc::ParseError, where_ + ": expected an object");
    }
  }

  ~StrictObject() = default;

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = get(key);
    if (!v) throw Error(Errc::ParseError, where_ + ": missing field '" + key + "'");
    return *v;
  }

  // Call after all fields were read; rejects anything unexpected.
  void finish() {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key)) {
        throw Error(Errc::ParseError, where_ + ": unknown field '" + key + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, where + ": " + e.what());
  }
}

TopologySpec parse_topology(const json& j, const std::string& where) {
  StrictObject o(j, where);
  TopologySpec spec;
  spec.kind = proto::topology_kind_from_name(
      get_as<std::string>(o.require("kind"), where + ".kind"));
  if (const json* r = o.get("root")) spec.root = get_as<std::string>(*r, where + ".root");
  for (const auto& e : o.require("edges")) {
    if (!e.is_array() || e.size() != 2) {
      throw Error(Errc::ParseError, where + ".edges: each edge is a [from, to] pair");
    }
    spec.edges.emplace_back(get_as<std::string>(e[0], where),
                            get_as<std::string>(e[1], where));
  }
  o.finish();
  return spec;
}

ScriptAction parse_action(const json& j, const std::string& where) {
  StrictObject o(j, where);
  ScriptAction a;
  std::string kind = get_as<std::string>(o.require("action"), where);
  if (kind == "compromise") a.kind = ScriptAction::Kind::Compromise;
  else if (kind == "restore") a.kind = ScriptAction::Kind::Restore;
  else if (kind == "read_secrets") a.kind = ScriptAction::Kind::ReadSecrets;
  else if (kind == "capture") a.kind = ScriptAction::Kind::Capture;
  else if (kind == "inject") a.kind = ScriptAction::Kind::Inject;
  else throw Error(Errc::ParseError, where + ": unknown action '" + kind + "'");
  a.device = get_as<std::string>(o.require("device"), where);
  a.at = get_as<TimePoint>(o.require("at"), where);
  if (const json* u = o.get("until")) a.until = get_as<TimePoint>(*u, where);
  if (const json* w = o.get("write")) a.write = get_as<bool>(*w, where);
  if (const json* b = o.get("body")) a.body = get_as<std::string>(*b, where);
  o.finish();
  if (a.kind == ScriptAction::Kind::Capture && a.until <= a.at) {
    throw Error(Errc::ParseError, where + ": capture needs until > at");
  }
  if (a.kind == ScriptAction::Kind::Inject && a.body.empty()) {
    throw Error(Errc::ParseError, where + ": inject needs a body");
  }
  return a;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("scenario: ") + e.what());
  }
  StrictObject o(j, "scenario");
  Scenario s;
  s.version = get_as<int>(o.require("version"), "version");
  if (s.version != 1) {
    throw Error(Errc::ParseError, "unsupported scenario version " +
                                      std::to_string(s.version));
  }
  s.name = get_as<std::string>(o.require("name"), "name");
  s.protocol = protocol_from_name(get_as<std::string>(o.require("protocol"), "protocol"));

  for (const auto& jd : o.require("devices")) {
    StrictObject od(jd, "devices[]");
    DeviceSpec d;
    d.name = get_as<std::string>(od.require("name"), "devices[].name");
    for (const auto& r : od.require("roles")) {
      d.roles.add(role_from_name(get_as<std::string>(r, "devices[].roles")));
    }
    if (const json* v = od.get("initial_state")) {
      d.initial_state = get_as<std::string>(*v, "initial_state");
    }
    if (const json* v = od.get("acceptable")) {
      d.acceptable = get_as<std::vector<std::string>>(*v, "acceptable");
    }
    if (const json* v = od.get("clock_offset")) {
      d.clock_offset = get_as<std::int64_t>(*v, "clock_offset");
    }
    od.finish();
    if (d.acceptable.empty()) {
      throw Error(Errc::ParseError, "device " + d.name + ": acceptable set empty");
    }
    for (const auto& l : d.acceptable) {
      if (is_compromised_label(l)) {
        throw Error(Errc::ParseError,
                    "device " + d.name + ": compromised label in acceptable set");
      }
    }
    s.devices.push_back(std::move(d));
  }
  {
    std::set<std::string> names;
    for (const auto& d : s.devices) {
      if (!names.insert(d.name).second) {
        throw Error(Errc::ParseError, "duplicate device name: " + d.name);
      }
    }
  }

  if (const json* t = o.get("topology")) s.topology = parse_topology(*t, "topology");
  if (const json* k = o.get("key_policy")) {
    s.key_policy = proto::key_policy_from_name(get_as<std::string>(*k, "key_policy"));
  }

  if (const json* d = o.get("defenses")) {
    for (const auto& v : *d) {
      std::string n = get_as<std::string>(v, "defenses");
      if (n == "hb") s.defense_hb = true;
      else if (n == "su") s.defense_su = true;
      else if (n == "att") s.defense_att = true;
      else throw Error(Errc::ParseError, "unknown defense: " + n);
    }
  }
  if (const json* h = o.get("hb")) {
    StrictObject oh(*h, "hb");
    s.hb.period = get_as<TimePoint>(oh.require("period"), "hb.period");
    s.hb.observer = get_as<std::string>(oh.require("observer"), "hb.observer");
    oh.finish();
  }
  if (const json* u = o.get("su")) {
    StrictObject ou(*u, "su");
    s.su.epoch_len = get_as<TimePoint>(ou.require("epoch_len"), "su.epoch_len");
    ou.finish();
  }

  if (const json* a = o.get("adversary")) {
    StrictObject oa(*a, "adversary");
    for (const auto& f : oa.require("flags")) {
      std::string n = get_as<std::string>(f, "adversary.flags");
      if (n == "sw") s.adversary.sw = true;
      else if (n == "msw") { s.adversary.msw = true; s.adversary.sw = true; }
      else if (n == "pni") s.adversary.pni = true;
      else if (n == "pi") s.adversary.pi = true;
      else if (n == "dy") s.adversary.dy = true;
      else throw Error(Errc::ParseError, "unknown adversary flag: " + n);
    }
    if (const json* t = oa.get("t_attack")) {
      s.t_attack = get_as<TimePoint>(*t, "t_attack");
    }
    if (const json* sc = oa.get("script")) {
      for (const auto& ja : *sc) s.script.push_back(parse_action(ja, "adversary.script[]"));
    }
    if (const json* ns = oa.get("net_script")) {
      s.net_script = get_as<std::vector<std::string>>(*ns, "net_script");
    }
    oa.finish();
  }

  auto opt_num = [&](const char* field, auto& target) {
    if (const json* v = o.get(field)) {
      target = get_as<std::decay_t<decltype(target)>>(*v, field);
    }
  };
  opt_num("rounds", s.rounds);
  opt_num("round_period", s.round_period);
  opt_num("latency", s.latency);
  opt_num("response_deadline", s.response_deadline);
  opt_num("attest_duration", s.attest_duration);
  opt_num("group_threshold", s.group_threshold);
  opt_num("seed", s.seed);
  opt_num("horizon", s.horizon);
  if (const json* v = o.get("counterless")) {
    s.counterless = get_as<bool>(*v, "counterless");
  }

  if (const json* p = o.get("pads")) {
    StrictObject op(*p, "pads");
    if (const json* v = op.get("self_period")) s.pads_self_period = get_as<TimePoint>(*v, "pads");
    if (const json* v = op.get("gossip_period")) s.pads_gossip_period = get_as<TimePoint>(*v, "pads");
    if (const json* v = op.get("query_at")) s.pads_query_at = get_as<TimePoint>(*v, "pads");
    if (const json* v = op.get("query_prover")) s.pads_query_prover = get_as<std::string>(*v, "pads");
    op.finish();
  }
  if (const json* p = o.get("sap")) {
    StrictObject op(*p, "sap");
    if (const json* v = op.get("epsilon")) s.sap_epsilon = get_as<TimePoint>(*v, "sap");
    if (const json* v = op.get("t_star")) s.sap_t_star = get_as<TimePoint>(*v, "sap");
    op.finish();
  }
  if (const json* p = o.get("attestation_set")) {
    StrictObject op(*p, "attestation_set");
    std::string policy = get_as<std::string>(op.require("policy"), "attestation_set.policy");
    if (policy == "all") {
      s.attestation_set.sample = false;
    } else if (policy == "sample") {
      s.attestation_set.sample = true;
      s.attestation_set.size = get_as<std::uint32_t>(op.require("size"), "attestation_set.size");
    } else {
      throw Error(Errc::ParseError, "unknown attestation_set policy: " + policy);
    }
    op.finish();
  }

  if (const json* e = o.get("explore")) {
    StrictObject oe(*e, "explore");
    if (const json* b = oe.get("bounds")) {
      StrictObject ob(*b, "explore.bounds");
      if (const json* v = ob.get("max_provers")) s.explore.bounds.max_provers = get_as<std::uint32_t>(*v, "bounds");
      if (const json* v = ob.get("max_rounds")) s.explore.bounds.max_rounds = get_as<std::uint32_t>(*v, "bounds");
      if (const json* v = ob.get("max_inject_depth")) s.explore.bounds.max_inject_depth = get_as<std::uint32_t>(*v, "bounds");
      if (const json* v = ob.get("max_delay")) s.explore.bounds.max_delay = get_as<std::uint32_t>(*v, "bounds");
      ob.finish();
    }
    if (const json* m = oe.get("net_actions")) {
      s.explore.menu = NetMenu{false, false, false, false};
      for (const auto& v : *m) {
        std::string n = get_as<std::string>(v, "net_actions");
        if (n == "deliver") s.explore.menu.deliver = true;
        else if (n == "drop") s.explore.menu.drop = true;
        else if (n == "delay") s.explore.menu.delay = true;
        else if (n == "duplicate") s.explore.menu.duplicate = true;
        else throw Error(Errc::ParseError, "unknown net action: " + n);
      }
      if (!s.explore.menu.deliver) {
        throw Error(Errc::ParseError, "net_actions must include deliver");
      }
    }
    if (const json* v = oe.get("allow_compromise")) s.explore.allow_compromise = get_as<bool>(*v, "explore");
    if (const json* v = oe.get("allow_restore")) s.explore.allow_restore = get_as<bool>(*v, "explore");
    if (const json* v = oe.get("max_injects")) s.explore.max_injects = get_as<std::uint32_t>(*v, "explore");
    if (const json* v = oe.get("inject_shapes")) s.explore.inject_shapes = get_as<std::vector<std::string>>(*v, "explore");
    if (const json* v = oe.get("cap")) s.explore.cap = get_as<std::uint64_t>(*v, "explore");
    if (const json* v = oe.get("permute_deliveries")) s.explore.permute_deliveries = get_as<bool>(*v, "explore");
    if (const json* vs = oe.get("variants")) {
      for (const auto& jv : *vs) {
        StrictObject ov(jv, "explore.variants[]");
        s.explore.variants.push_back(parse_topology(ov.require("topology"), "variants[].topology"));
        ov.finish();
      }
    }
    oe.finish();
  }

  if (const json* p = o.get("properties")) {
    for (const auto& v : *p) {
      s.properties.push_back(check::property_from_name(get_as<std::string>(v, "properties")));
    }
  }
  if (const json* e = o.get("expected")) {
    for (const auto& [key, val] : e->items()) {
      s.expected[check::property_from_name(key)] =
          check::verdict_result_from_name(get_as<std::string>(val, "expected"));
    }
  }
  o.finish();

  // Cross-field checks.
  if (s.protocol == ProtocolId::Sap &&
      s.topology.kind != proto::TopologyKind::BalancedBinaryTree) {
    throw Error(Errc::ConfigError, "sap requires a balanced_binary_tree topology");
  }
  if (s.protocol == ProtocolId::Pads &&
      s.topology.kind != proto::TopologyKind::DistributedGraph) {
    throw Error(Errc::ConfigError, "pads requires a distributed_graph topology");
  }
  if (s.protocol == ProtocolId::Sap) {
    for (const auto& d : s.devices) {
      if (static_cast<TimePoint>(std::abs(d.clock_offset)) > s.sap_epsilon) {
        throw Error(Errc::ConfigError,
                    "device " + d.name + " clock offset exceeds sap epsilon");
      }
    }
  }
  if (s.adversary.msw && !s.adversary.sw) s.adversary.sw = true;
  if (!s.devices.empty() && s.protocol != ProtocolId::None) {
    s.build_topology();  // validates structure against devices
  }
  if (s.defense_hb) {
    if (s.hb.period == 0 || s.hb.observer.empty()) {
      throw Error(Errc::ConfigError, "hb defense needs hb.period and hb.observer");
    }
    if (s.hb.period > s.t_attack) {
      throw Error(Errc::ConfigError, "hb.period must be <= t_attack");
    }
  }
  if (s.defense_su) {
    if (s.su.epoch_len == 0) {
      throw Error(Errc::ConfigError, "su defense needs su.epoch_len");
    }
    if (s.su.epoch_len > s.t_attack) {
      throw Error(Errc::ConfigError, "su.epoch_len must be <= t_attack");
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ParseError, "cannot read scenario " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return scenario_from_json_text(ss.str());
}

}  // namespace crasim
