#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eeflow/errors.hpp"

namespace eeflow {

enum class NodeKind { Macro, Small };

// mmWave backhaul carrier: 73 GHz (E) between macro and cluster heads,
// 60 GHz (V) among small cells.
enum class Band { EBand, VBand };

inline const char* band_name(Band b) {
  return b == Band::EBand ? "e" : "v";
}

struct Node {
  int id = 0;  // 0 is the macro base station, 1..D are small cells
  NodeKind kind = NodeKind::Small;
  std::optional<int> cluster_id;
  bool is_cluster_head = false;
  double max_power_watts = 0.0;  // budget for access + outgoing backhaul
};

struct Link {
  int id = 0;  // 1-based; 0 means "assign from position"
  int from = 0;
  int to = 0;
  Band band = Band::EBand;
  double distance_km = 0.0;
  double capacity_bps = 0.0;
  double max_power_watts = 0.0;
};

// Directed backhaul graph plus its node-link incidence matrix.
// Immutable after construction; safe to share across threads.
class Topology {
 public:
  Topology() = default;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int link_count() const { return static_cast<int>(links_.size()); }
  // Number of potential destinations D = N - 1 (every small cell).
  int dest_count() const { return node_count() - 1; }

  // +1 if `node` is the origin of link `link_idx` (0-based), -1 if its
  // endpoint, 0 otherwise.
  int incidence(int node, int link_idx) const {
    return incidence_[static_cast<size_t>(node) * links_.size() +
                      static_cast<size_t>(link_idx)];
  }

  // Link indices (0-based) leaving / entering a node.
  const std::vector<int>& out_links(int node) const { return out_[node]; }
  const std::vector<int>& in_links(int node) const { return in_[node]; }

 private:
  friend Topology build_incidence(std::vector<Node> nodes,
                                  std::vector<Link> links);

  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<int8_t> incidence_;  // row-major N x L
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

// Validates the node/link set and assembles the incidence matrix.
// Pure: equal inputs give bit-identical matrices.
inline Topology build_incidence(std::vector<Node> nodes,
                                std::vector<Link> links) {
  if (nodes.empty()) fail(errc::validation_error, "topology has no nodes");

  const int n = static_cast<int>(nodes.size());
  std::vector<bool> seen(static_cast<size_t>(n), false);
  for (const Node& node : nodes) {
    if (node.id < 0 || node.id >= n)
      fail(errc::validation_error,
           "node ids must be contiguous 0..N-1, got " +
               std::to_string(node.id));
    if (seen[static_cast<size_t>(node.id)])
      fail(errc::validation_error,
           "duplicate node id " + std::to_string(node.id));
    seen[static_cast<size_t>(node.id)] = true;
    if ((node.id == 0) != (node.kind == NodeKind::Macro))
      fail(errc::validation_error,
           "node 0 must be the unique macro base station");
    if (node.max_power_watts < 0.0)
      fail(errc::validation_error,
           "node " + std::to_string(node.id) + " has negative power budget");
  }

  // Sort by id so nodes_[i].id == i.
  std::vector<Node> ordered(static_cast<size_t>(n));
  for (Node& node : nodes) ordered[static_cast<size_t>(node.id)] = node;

  // Each cluster must contain exactly one head.
  {
    std::set<int> clusters;
    for (const Node& node : ordered)
      if (node.cluster_id) clusters.insert(*node.cluster_id);
    for (int c : clusters) {
      int heads = 0;
      for (const Node& node : ordered)
        if (node.cluster_id && *node.cluster_id == c && node.is_cluster_head)
          ++heads;
      if (heads != 1)
        fail(errc::validation_error, "cluster " + std::to_string(c) +
                                         " has " + std::to_string(heads) +
                                         " heads, expected exactly 1");
    }
  }

  const int l = static_cast<int>(links.size());
  for (int idx = 0; idx < l; ++idx) {
    Link& link = links[static_cast<size_t>(idx)];
    if (link.id == 0) link.id = idx + 1;
    if (link.id != idx + 1)
      fail(errc::validation_error,
           "link ids must be 1..L in order, got " + std::to_string(link.id));
    if (link.from < 0 || link.from >= n)
      fail(errc::dangling_link, "link " + std::to_string(link.id) +
                                    " references unknown node " +
                                    std::to_string(link.from));
    if (link.to < 0 || link.to >= n)
      fail(errc::dangling_link, "link " + std::to_string(link.id) +
                                    " references unknown node " +
                                    std::to_string(link.to));
    if (link.from == link.to)
      fail(errc::self_loop,
           "link " + std::to_string(link.id) + " is a self loop");
    if (link.distance_km < 0.0)
      fail(errc::validation_error,
           "link " + std::to_string(link.id) + " has negative distance");
    if (link.capacity_bps <= 0.0)
      fail(errc::validation_error,
           "link " + std::to_string(link.id) + " needs capacity_bps > 0");
    if (link.max_power_watts <= 0.0)
      fail(errc::validation_error,
           "link " + std::to_string(link.id) + " needs max_power_watts > 0");
  }

  Topology topo;
  topo.nodes_ = std::move(ordered);
  topo.links_ = std::move(links);
  topo.incidence_.assign(static_cast<size_t>(n) * static_cast<size_t>(l), 0);
  topo.out_.assign(static_cast<size_t>(n), {});
  topo.in_.assign(static_cast<size_t>(n), {});
  for (int idx = 0; idx < l; ++idx) {
    const Link& link = topo.links_[static_cast<size_t>(idx)];
    topo.incidence_[static_cast<size_t>(link.from) * static_cast<size_t>(l) +
                    static_cast<size_t>(idx)] = 1;
    topo.incidence_[static_cast<size_t>(link.to) * static_cast<size_t>(l) +
                    static_cast<size_t>(idx)] = -1;
    topo.out_[static_cast<size_t>(link.from)].push_back(idx);
    topo.in_[static_cast<size_t>(link.to)].push_back(idx);
  }
  return topo;
}

// Small-cell ids reachable from the macro following link directions.
// Feasibility precheck: a destination outside this set cannot carry flow.
inline std::set<int> reachable_destinations(const Topology& topo) {
  std::vector<bool> visited(static_cast<size_t>(topo.node_count()), false);
  std::vector<int> stack = {0};
  visited[0] = true;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int idx : topo.out_links(u)) {
      int v = topo.links()[static_cast<size_t>(idx)].to;
      if (!visited[static_cast<size_t>(v)]) {
        visited[static_cast<size_t>(v)] = true;
        stack.push_back(v);
      }
    }
  }
  std::set<int> out;
  for (int v = 1; v < topo.node_count(); ++v)
    if (visited[static_cast<size_t>(v)]) out.insert(v);
  return out;
}

}  // namespace eeflow
