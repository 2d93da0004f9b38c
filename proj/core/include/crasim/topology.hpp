#pragma once

#include <string>
#include <vector>

#include "crasim/types.hpp"

namespace crasim::proto {

enum class TopologyKind : std::uint8_t {
  SpanningTree,
  BalancedBinaryTree,
  DistributedGraph,
};

enum class KeyPolicyKind : std::uint8_t {
  SwarmShared,  // one attestation key and one authentication key for all
  PerLink,      // one key per tree edge
  PerDevice,    // one signing key per prover
};

// Static per-run topology. Trees are rooted and acyclic; distributed
// graphs are undirected adjacency with no root semantics.
class Topology {
 public:
  Topology() = default;
  Topology(TopologyKind kind, DeviceId root,
           std::vector<std::pair<DeviceId, DeviceId>> edges,
           std::size_t device_count);

  TopologyKind kind() const { return kind_; }
  DeviceId root() const { return root_; }
  // A device participates when it is the root or touches an edge; scenarios
  // may leave devices out of a topology variant.
  bool in_topology(DeviceId d) const;
  const std::vector<DeviceId>& children(DeviceId d) const;
  const std::vector<DeviceId>& neighbors(DeviceId d) const;
  bool has_parent(DeviceId d) const;
  DeviceId parent(DeviceId d) const;
  // Edges below `d` in the rooted tree.
  std::uint32_t subtree_height(DeviceId d) const;
  std::uint32_t depth() const { return subtree_height(root_); }
  std::uint32_t node_depth(DeviceId d) const;
  std::uint32_t diameter() const;
  std::size_t device_count() const { return neighbors_.size(); }

  // Throws ConfigError on cycles, disconnection, or an unbalanced tree
  // where balance is required.
  void validate() const;

 private:
  TopologyKind kind_ = TopologyKind::SpanningTree;
  DeviceId root_ = 0;
  std::vector<std::vector<DeviceId>> children_;
  std::vector<std::vector<DeviceId>> neighbors_;
  std::vector<DeviceId> parent_;
  std::vector<bool> has_parent_;
};

std::string topology_kind_name(TopologyKind k);
TopologyKind topology_kind_from_name(const std::string& s);
std::string key_policy_name(KeyPolicyKind k);
KeyPolicyKind key_policy_from_name(const std::string& s);

}  // namespace crasim::proto
