#pragma once

#include <string>
#include <vector>

#include "crasim/scenario.hpp"
#include "crasim/trace_io.hpp"

namespace crasim::test {

inline DeviceSpec device(const std::string& name, std::vector<Role> roles) {
  DeviceSpec d;
  d.name = name;
  for (Role r : roles) d.roles.add(r);
  return d;
}

// Verifier root with a chain of provers below it: V - P0 - P1 - ...
inline Scenario simpleplus_chain(std::size_t provers, std::uint32_t rounds = 1) {
  Scenario s;
  s.name = "simpleplus_chain";
  s.protocol = ProtocolId::SimplePlus;
  s.devices.push_back(device("V", {Role::Initiator, Role::Verifier, Role::RelyingParty}));
  std::string prev = "V";
  for (std::size_t i = 0; i < provers; ++i) {
    std::string name = "P" + std::to_string(i);
    auto d = device(name, {Role::Prover, Role::Aggregator});
    s.devices.push_back(d);
    s.topology.edges.emplace_back(prev, name);
    prev = name;
  }
  s.topology.kind = proto::TopologyKind::SpanningTree;
  s.topology.root = "V";
  s.key_policy = proto::KeyPolicyKind::SwarmShared;
  s.rounds = rounds;
  s.round_period = 12;
  s.horizon = 20 + rounds * 12;
  return s;
}

// V with all provers as direct children.
inline Scenario simpleplus_star(std::size_t provers, std::uint32_t rounds = 1) {
  Scenario s = simpleplus_chain(0, rounds);
  for (std::size_t i = 0; i < provers; ++i) {
    std::string name = "P" + std::to_string(i);
    s.devices.push_back(device(name, {Role::Prover}));
    s.topology.edges.emplace_back("V", name);
  }
  return s;
}

// V - R - {C0, C1, ...}: root prover R with leaf children.
inline Scenario seda_tree(std::size_t leaves, std::uint32_t rounds = 1) {
  Scenario s;
  s.name = "seda_tree";
  s.protocol = ProtocolId::Seda;
  s.devices.push_back(device("V", {Role::Initiator, Role::Verifier, Role::RelyingParty}));
  s.devices.push_back(device("R", {Role::Prover, Role::Aggregator}));
  s.topology.kind = proto::TopologyKind::SpanningTree;
  s.topology.root = "V";
  s.topology.edges.emplace_back("V", "R");
  for (std::size_t i = 0; i < leaves; ++i) {
    std::string name = "C" + std::to_string(i);
    s.devices.push_back(device(name, {Role::Prover}));
    s.topology.edges.emplace_back("R", name);
  }
  s.key_policy = proto::KeyPolicyKind::PerLink;
  s.rounds = rounds;
  s.round_period = 12;
  s.horizon = 20 + rounds * 12;
  return s;
}

inline Scenario pads_clique(std::size_t provers, TimePoint query_at = 9) {
  Scenario s;
  s.name = "pads_clique";
  s.protocol = ProtocolId::Pads;
  s.topology.kind = proto::TopologyKind::DistributedGraph;
  for (std::size_t i = 0; i < provers; ++i) {
    s.devices.push_back(device("P" + std::to_string(i), {Role::Prover}));
  }
  s.devices.push_back(device("RP", {Role::RelyingParty, Role::Verifier}));
  for (std::size_t i = 0; i < provers; ++i) {
    for (std::size_t j = i + 1; j < provers; ++j) {
      s.topology.edges.emplace_back("P" + std::to_string(i), "P" + std::to_string(j));
    }
  }
  s.topology.edges.emplace_back("P0", "RP");
  s.key_policy = proto::KeyPolicyKind::PerDevice;
  s.pads_self_period = 2;
  s.pads_gossip_period = 2;
  s.pads_query_at = query_at;
  s.pads_query_prover = "P0";
  s.horizon = query_at + 10;
  return s;
}

// Balanced binary tree: V root, provers breadth-first below.
inline Scenario sap_tree(std::size_t provers, std::uint32_t rounds = 1) {
  Scenario s;
  s.name = "sap_tree";
  s.protocol = ProtocolId::Sap;
  s.topology.kind = proto::TopologyKind::BalancedBinaryTree;
  s.topology.root = "V";
  s.devices.push_back(device("V", {Role::Initiator, Role::Verifier, Role::RelyingParty}));
  std::vector<std::string> names{"V"};
  for (std::size_t i = 0; i < provers; ++i) {
    std::string name = "P" + std::to_string(i);
    s.devices.push_back(device(name, {Role::Prover, Role::Aggregator}));
    s.topology.edges.emplace_back(names[(names.size() - 1) / 2], name);
    names.push_back(name);
  }
  s.key_policy = proto::KeyPolicyKind::SwarmShared;
  s.rounds = rounds;
  s.round_period = 16;
  s.horizon = 20 + rounds * 16;
  return s;
}

inline ScriptAction compromise_at(const std::string& dev, TimePoint t) {
  ScriptAction a;
  a.kind = ScriptAction::Kind::Compromise;
  a.device = dev;
  a.at = t;
  return a;
}

inline ScriptAction restore_at(const std::string& dev, TimePoint t) {
  ScriptAction a;
  a.kind = ScriptAction::Kind::Restore;
  a.device = dev;
  a.at = t;
  return a;
}

inline ScriptAction capture_between(const std::string& dev, TimePoint begin,
                                    TimePoint end, bool write = false) {
  ScriptAction a;
  a.kind = ScriptAction::Kind::Capture;
  a.device = dev;
  a.at = begin;
  a.until = end;
  a.write = write;
  return a;
}

template <class EventT>
inline std::vector<EventT> events_of(const Trace& trace) {
  std::vector<EventT> out;
  for (const auto& e : trace.events) {
    if (const auto* v = e.template as<EventT>()) out.push_back(*v);
  }
  return out;
}

template <class EventT>
inline std::size_t count_events(const Trace& trace) {
  return events_of<EventT>(trace).size();
}

}  // namespace crasim::test
