#include "crasim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace crasim::proto {

Topology::Topology(TopologyKind kind, DeviceId root,
                   std::vector<std::pair<DeviceId, DeviceId>> edges,
                   std::size_t device_count)
    : kind_(kind), root_(root) {
  children_.resize(device_count);
  neighbors_.resize(device_count);
  parent_.resize(device_count, 0);
  has_parent_.resize(device_count, false);
  for (auto [a, b] : edges) {
    if (a >= device_count || b >= device_count) {
      throw Error(Errc::ConfigError, "topology edge references unknown device");
    }
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
    if (kind_ != TopologyKind::DistributedGraph) {
      // Tree edges are given parent-first.
      children_[a].push_back(b);
      if (has_parent_[b]) {
        throw Error(Errc::ConfigError, "tree node has two parents");
      }
      parent_[b] = a;
      has_parent_[b] = true;
    }
  }
}

bool Topology::in_topology(DeviceId d) const {
  if (d >= neighbors_.size()) return false;
  return d == root_ || !neighbors_[d].empty();
}

const std::vector<DeviceId>& Topology::children(DeviceId d) const {
  return children_.at(d);
}

const std::vector<DeviceId>& Topology::neighbors(DeviceId d) const {
  return neighbors_.at(d);
}

bool Topology::has_parent(DeviceId d) const { return has_parent_.at(d); }

DeviceId Topology::parent(DeviceId d) const {
  if (!has_parent_.at(d)) {
    throw Error(Errc::ConfigError, "device has no parent");
  }
  return parent_[d];
}

std::uint32_t Topology::subtree_height(DeviceId d) const {
  std::uint32_t h = 0;
  for (DeviceId c : children_.at(d)) {
    h = std::max(h, subtree_height(c) + 1);
  }
  return h;
}

std::uint32_t Topology::node_depth(DeviceId d) const {
  std::uint32_t depth = 0;
  while (has_parent_.at(d)) {
    d = parent_[d];
    ++depth;
  }
  return depth;
}

namespace {

// Longest shortest path, by BFS from every node.
std::uint32_t bfs_ecc(const std::vector<std::vector<DeviceId>>& adj, DeviceId s) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<DeviceId> q{s};
  dist[s] = 0;
  std::uint32_t ecc = 0;
  while (!q.empty()) {
    DeviceId u = q.front();
    q.pop_front();
    for (DeviceId v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        ecc = std::max<std::uint32_t>(ecc, dist[v]);
        q.push_back(v);
      }
    }
  }
  return ecc;
}

}  // namespace

std::uint32_t Topology::diameter() const {
  std::uint32_t d = 0;
  for (DeviceId s = 0; s < neighbors_.size(); ++s) {
    d = std::max(d, bfs_ecc(neighbors_, s));
  }
  return d;
}

void Topology::validate() const {
  if (neighbors_.empty()) return;
  std::size_t members = 0;
  for (DeviceId d = 0; d < neighbors_.size(); ++d) {
    if (in_topology(d)) ++members;
  }
  // Connectivity over the participating devices, from the root (or the
  // first member for graphs).
  std::vector<bool> seen(neighbors_.size(), false);
  DeviceId start = root_;
  if (kind_ == TopologyKind::DistributedGraph) {
    for (DeviceId d = 0; d < neighbors_.size(); ++d) {
      if (in_topology(d)) {
        start = d;
        break;
      }
    }
  }
  std::deque<DeviceId> q{start};
  seen[start] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    DeviceId u = q.front();
    q.pop_front();
    for (DeviceId v : neighbors_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push_back(v);
      }
    }
  }
  if (count != members) throw Error(Errc::ConfigError, "topology is not connected");

  if (kind_ != TopologyKind::DistributedGraph) {
    std::size_t edges = 0;
    for (const auto& cs : children_) edges += cs.size();
    if (edges != members - 1) {
      throw Error(Errc::ConfigError, "tree must have n-1 edges");
    }
    if (has_parent_.at(root_)) {
      throw Error(Errc::ConfigError, "tree root must have no parent");
    }
  }
  if (kind_ == TopologyKind::BalancedBinaryTree) {
    std::uint32_t want =
        static_cast<std::uint32_t>(std::ceil(std::log2(members + 1))) - 1;
    if (depth() != want) {
      throw Error(Errc::ConfigError,
                  "balanced binary tree depth " + std::to_string(depth()) +
                      " != " + std::to_string(want));
    }
    for (const auto& cs : children_) {
      if (cs.size() > 2) {
        throw Error(Errc::ConfigError, "binary tree node has >2 children");
      }
    }
  }
}

std::string topology_kind_name(TopologyKind k) {
  switch (k) {
    case TopologyKind::SpanningTree: return "spanning_tree";
    case TopologyKind::BalancedBinaryTree: return "balanced_binary_tree";
    case TopologyKind::DistributedGraph: return "distributed_graph";
  }
  return "?";
}

TopologyKind topology_kind_from_name(const std::string& s) {
  if (s == "spanning_tree") return TopologyKind::SpanningTree;
  if (s == "balanced_binary_tree") return TopologyKind::BalancedBinaryTree;
  if (s == "distributed_graph") return TopologyKind::DistributedGraph;
  throw Error(Errc::ParseError, "unknown topology kind: " + s);
}

std::string key_policy_name(KeyPolicyKind k) {
  switch (k) {
    case KeyPolicyKind::SwarmShared: return "swarm_shared";
    case KeyPolicyKind::PerLink: return "per_link";
    case KeyPolicyKind::PerDevice: return "per_device";
  }
  return "?";
}

KeyPolicyKind key_policy_from_name(const std::string& s) {
  if (s == "swarm_shared") return KeyPolicyKind::SwarmShared;
  if (s == "per_link") return KeyPolicyKind::PerLink;
  if (s == "per_device") return KeyPolicyKind::PerDevice;
  throw Error(Errc::ParseError, "unknown key policy: " + s);
}

}  // namespace crasim::proto
