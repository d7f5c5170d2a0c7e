#pragma once

#include <string>
#include <vector>

#include "eeflow/radio.hpp"
#include "eeflow/rng.hpp"
#include "eeflow/topology.hpp"

namespace eeflow {

enum class TopoKind { Line, Star, RandomTree };

inline const char* topo_kind_name(TopoKind k) {
  switch (k) {
    case TopoKind::Line: return "line";
    case TopoKind::Star: return "star";
    case TopoKind::RandomTree: return "random_tree";
  }
  return "?";
}

struct TopologyGenSpec {
  TopoKind kind = TopoKind::Star;
  int small_cells = 4;  // D
  double min_distance_km = 0.2;
  double max_distance_km = 0.8;
  double bs_power_dbm = 43.0;   // per-station MTP
  double capacity_scale = 1.0;  // multiplies derived link capacities
  uint64_t seed = 0;
};

// Deterministic topology generator. Macro is node 0; every small cell ends
// up reachable (line / star / random tree all guarantee it). Links leaving
// the macro run on E band, links among small cells on V band; capacity and
// max power come from the link budget at the drawn distance.
inline Topology generate_topology(const TopologyGenSpec& spec,
                                  const RadioConfig& radio) {
  if (spec.small_cells < 1)
    fail(errc::validation_error, "generator needs at least one small cell");
  if (spec.min_distance_km <= 0.0 ||
      spec.max_distance_km < spec.min_distance_km)
    fail(errc::validation_error, "bad distance range");
  if (spec.capacity_scale <= 0.0)
    fail(errc::validation_error, "capacity_scale must be positive");

  const int d = spec.small_cells;
  const double node_power = dbm_to_watts(spec.bs_power_dbm);
  SplitMix64 gen(derive_seed(spec.seed, 17));

  // parent[v] for v = 1..D; parent 0 is the macro.
  std::vector<int> parent(static_cast<size_t>(d) + 1, 0);
  switch (spec.kind) {
    case TopoKind::Line:
      for (int v = 1; v <= d; ++v) parent[static_cast<size_t>(v)] = v - 1;
      break;
    case TopoKind::Star:
      break;  // everyone hangs off the macro
    case TopoKind::RandomTree:
      for (int v = 1; v <= d; ++v)
        parent[static_cast<size_t>(v)] =
            static_cast<int>(gen.next_below(static_cast<uint64_t>(v)));
      break;
  }

  // Cluster = subtree under each direct child of the macro; the child is
  // the head (it owns the E-band hop).
  std::vector<int> cluster(static_cast<size_t>(d) + 1, 0);
  for (int v = 1; v <= d; ++v) {
    int walk = v;
    while (parent[static_cast<size_t>(walk)] != 0)
      walk = parent[static_cast<size_t>(walk)];
    cluster[static_cast<size_t>(v)] = walk;
  }

  std::vector<Node> nodes;
  nodes.push_back(Node{0, NodeKind::Macro, std::nullopt, false, node_power});
  for (int v = 1; v <= d; ++v) {
    Node node;
    node.id = v;
    node.kind = NodeKind::Small;
    node.cluster_id = cluster[static_cast<size_t>(v)];
    node.is_cluster_head = cluster[static_cast<size_t>(v)] == v;
    node.max_power_watts = node_power;
    nodes.push_back(node);
  }

  std::vector<Link> links;
  for (int v = 1; v <= d; ++v) {
    Link link;
    link.id = v;
    link.from = parent[static_cast<size_t>(v)];
    link.to = v;
    link.band = link.from == 0 ? Band::EBand : Band::VBand;
    link.distance_km = gen.uniform(spec.min_distance_km,
                                   spec.max_distance_km);
    const LinkBudget budget =
        compute_link_budget(radio, link.band, link.distance_km);
    link.capacity_bps = budget.capacity_bps * spec.capacity_scale;
    link.max_power_watts = budget.max_power_watts;
    links.push_back(link);
  }

  return build_incidence(std::move(nodes), std::move(links));
}

}  // namespace eeflow
