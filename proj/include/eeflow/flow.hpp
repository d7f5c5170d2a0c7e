#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <vector>

#include "eeflow/errors.hpp"
#include "eeflow/topology.hpp"

namespace eeflow {

// All rates, demands and flows are kept on a fixed 2^-10 bps grid. Grid
// numbers below ~4 Tbps are closed under +/- in double precision, so flow
// conservation residuals cancel exactly instead of accumulating ulps.
constexpr double kFlowQuantum = 0x1.0p-10;

inline double snap_rate(double x) {
  if (std::abs(x) > 0x1.0p42) return std::floor(x);
  return std::round(x / kFlowQuantum) * kFlowQuantum;
}

inline double snap_down(double x) {
  if (std::abs(x) > 0x1.0p42) return std::floor(x);
  return std::floor(x / kFlowQuantum) * kFlowQuantum;
}

// Aggregate rate demand per destination small cell; index d-1 holds the
// demand of node d. Only the macro injects flow.
struct DemandVector {
  std::vector<double> demand_bps;

  double total() const {
    double sum = 0.0;
    for (double v : demand_bps) sum += v;
    return sum;
  }
};

// chi[l][d]: flow on link l (0-based index) toward destination node d.
struct FlowAssignment {
  int num_links = 0;
  int num_dests = 0;
  std::vector<double> chi;

  FlowAssignment() = default;
  FlowAssignment(int links, int dests)
      : num_links(links),
        num_dests(dests),
        chi(static_cast<size_t>(links) * static_cast<size_t>(dests), 0.0) {}

  double at(int link_idx, int dest_id) const {
    return chi[static_cast<size_t>(link_idx) * num_dests + (dest_id - 1)];
  }
  double& at(int link_idx, int dest_id) {
    return chi[static_cast<size_t>(link_idx) * num_dests + (dest_id - 1)];
  }
};

struct LinkLoads {
  std::vector<double> t;
};

struct CapacityViolation {
  int link_id = 0;  // 1-based
  double load_bps = 0.0;
  double capacity_bps = 0.0;
  double excess_bps = 0.0;
};

// A*chi^(d) - s^(d) per destination; a valid assignment returns all zeros.
inline std::vector<std::vector<double>> conservation_residual(
    const Topology& topo, const FlowAssignment& chi,
    const DemandVector& demands) {
  const int n = topo.node_count();
  const int l = topo.link_count();
  const int d_count = topo.dest_count();
  if (chi.num_links != l || chi.num_dests != d_count ||
      static_cast<int>(demands.demand_bps.size()) != d_count)
    fail(errc::dimension_mismatch, "flow/demand dimensions do not match");

  std::vector<std::vector<double>> residual(
      static_cast<size_t>(d_count),
      std::vector<double>(static_cast<size_t>(n), 0.0));
  for (int dest = 1; dest <= d_count; ++dest) {
    auto& r = residual[static_cast<size_t>(dest - 1)];
    for (int node = 0; node < n; ++node) {
      double acc = 0.0;
      for (int idx : topo.out_links(node)) acc += chi.at(idx, dest);
      for (int idx : topo.in_links(node)) acc -= chi.at(idx, dest);
      r[static_cast<size_t>(node)] = acc;
    }
    const double s = demands.demand_bps[static_cast<size_t>(dest - 1)];
    r[0] -= s;
    r[static_cast<size_t>(dest)] += s;
  }
  return residual;
}

inline LinkLoads link_loads(const FlowAssignment& chi) {
  LinkLoads loads;
  loads.t.assign(static_cast<size_t>(chi.num_links), 0.0);
  for (int l = 0; l < chi.num_links; ++l)
    for (int d = 1; d <= chi.num_dests; ++d)
      loads.t[static_cast<size_t>(l)] += chi.at(l, d);
  return loads;
}

// Links where the load exceeds capacity beyond 1e-9 relative slack.
inline std::vector<CapacityViolation> check_capacity(
    const LinkLoads& loads, const std::vector<double>& capacities) {
  if (loads.t.size() != capacities.size())
    fail(errc::dimension_mismatch, "loads/capacities length mismatch");
  std::vector<CapacityViolation> out;
  for (size_t l = 0; l < loads.t.size(); ++l) {
    if (loads.t[l] > capacities[l] + 1e-9 * capacities[l]) {
      out.push_back(CapacityViolation{static_cast<int>(l) + 1, loads.t[l],
                                      capacities[l],
                                      loads.t[l] - capacities[l]});
    }
  }
  return out;
}

namespace detail {

struct McfArc {
  int to = 0;
  double cap = 0.0;  // residual
  double cost = 0.0;
  int link_idx = -1;  // -1 for destination arcs
};

struct McfGraph {
  std::vector<McfArc> arcs;
  std::vector<std::vector<int>> adj;

  explicit McfGraph(int nodes) : adj(static_cast<size_t>(nodes)) {}

  void add(int u, int v, double cap, double cost, int link_idx) {
    adj[static_cast<size_t>(u)].push_back(static_cast<int>(arcs.size()));
    arcs.push_back(McfArc{v, cap, cost, link_idx});
    adj[static_cast<size_t>(v)].push_back(static_cast<int>(arcs.size()));
    arcs.push_back(McfArc{u, 0.0, -cost, link_idx});
  }
};

// Dijkstra on reduced costs; ties broken toward the smaller node id so the
// routing is deterministic.
inline bool mcf_dijkstra(const McfGraph& g, const std::vector<double>& h,
                         int source, int sink, std::vector<double>& dist,
                         std::vector<int>& parent_arc) {
  const double inf = std::numeric_limits<double>::infinity();
  dist.assign(g.adj.size(), inf);
  parent_arc.assign(g.adj.size(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[static_cast<size_t>(source)] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<size_t>(u)]) continue;
    for (int arc_id : g.adj[static_cast<size_t>(u)]) {
      const McfArc& arc = g.arcs[static_cast<size_t>(arc_id)];
      if (arc.cap <= 0.0) continue;
      const double reduced = arc.cost + h[static_cast<size_t>(u)] -
                             h[static_cast<size_t>(arc.to)];
      const double cand = d + std::max(0.0, reduced);
      if (cand < dist[static_cast<size_t>(arc.to)]) {
        dist[static_cast<size_t>(arc.to)] = cand;
        parent_arc[static_cast<size_t>(arc.to)] = arc_id;
        pq.emplace(cand, arc.to);
      }
    }
  }
  return dist[static_cast<size_t>(sink)] < inf;
}

}  // namespace detail

// Minimum-cost multi-commodity routing. All commodities originate at the
// macro and share only the link capacities, so the aggregate problem is a
// single-source min-cost flow toward a super-sink with one zero-cost arc
// per destination; successive shortest paths solve it, and a path
// decomposition recovers the per-destination split.
inline FlowAssignment min_cost_route(const Topology& topo,
                                     const DemandVector& demands,
                                     const std::vector<double>& unit_costs,
                                     const std::vector<double>& capacities) {
  const int n = topo.node_count();
  const int l = topo.link_count();
  const int d_count = topo.dest_count();
  if (static_cast<int>(demands.demand_bps.size()) != d_count ||
      static_cast<int>(unit_costs.size()) != l ||
      static_cast<int>(capacities.size()) != l)
    fail(errc::dimension_mismatch, "routing input dimensions do not match");
  for (double c : unit_costs)
    if (c < 0.0) fail(errc::validation_error, "negative routing cost");

  FlowAssignment chi(l, d_count);

  std::vector<double> snapped(static_cast<size_t>(d_count), 0.0);
  double total = 0.0;
  for (int d = 1; d <= d_count; ++d) {
    double s = snap_rate(demands.demand_bps[static_cast<size_t>(d - 1)]);
    if (s < 0.0)
      fail(errc::validation_error, "negative demand at destination " +
                                       std::to_string(d));
    snapped[static_cast<size_t>(d - 1)] = s;
    total += s;
  }
  if (total == 0.0) return chi;

  // Zero-demand destinations are dropped; unreachable demanded ones are a
  // hard error before any flow is pushed.
  const std::set<int> reachable = reachable_destinations(topo);
  for (int d = 1; d <= d_count; ++d)
    if (snapped[static_cast<size_t>(d - 1)] > 0.0 && !reachable.count(d))
      fail(errc::unroutable,
           "destination " + std::to_string(d) + " unreachable from macro");

  const int sink = n;
  detail::McfGraph g(n + 1);
  for (int idx = 0; idx < l; ++idx) {
    const Link& link = topo.links()[static_cast<size_t>(idx)];
    g.add(link.from, link.to, snap_down(capacities[static_cast<size_t>(idx)]),
          unit_costs[static_cast<size_t>(idx)], idx);
  }
  for (int d = 1; d <= d_count; ++d)
    if (snapped[static_cast<size_t>(d - 1)] > 0.0)
      g.add(d, sink, snapped[static_cast<size_t>(d - 1)], 0.0, -1);

  std::vector<double> h(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> dist;
  std::vector<int> parent_arc;
  double remaining = total;
  while (remaining > 0.0) {
    if (!detail::mcf_dijkstra(g, h, 0, sink, dist, parent_arc))
      fail(errc::capacity_infeasible,
           "capacities cannot carry the demanded flow (" +
               std::to_string(remaining) + " bps unrouted)");
    for (size_t v = 0; v < h.size(); ++v)
      if (dist[v] < std::numeric_limits<double>::infinity()) h[v] += dist[v];

    double push = remaining;
    for (int v = sink; v != 0;) {
      const detail::McfArc& arc =
          g.arcs[static_cast<size_t>(parent_arc[static_cast<size_t>(v)])];
      push = std::min(push, arc.cap);
      v = g.arcs[static_cast<size_t>(parent_arc[static_cast<size_t>(v)] ^ 1)]
              .to;
    }
    for (int v = sink; v != 0;) {
      const int arc_id = parent_arc[static_cast<size_t>(v)];
      g.arcs[static_cast<size_t>(arc_id)].cap -= push;
      g.arcs[static_cast<size_t>(arc_id ^ 1)].cap += push;
      v = g.arcs[static_cast<size_t>(arc_id ^ 1)].to;
    }
    remaining -= push;
  }

  // Path-strip the aggregate flow into per-destination columns. Flow on a
  // forward arc equals the residual of its twin.
  std::vector<double> flow(g.arcs.size() / 2, 0.0);
  for (size_t a = 0; a + 1 < g.arcs.size(); a += 2)
    flow[a / 2] = g.arcs[a + 1].cap;

  auto out_arc_with_flow = [&](int u) -> int {
    for (int arc_id : g.adj[static_cast<size_t>(u)]) {
      if (arc_id % 2 != 0) continue;  // forward arcs only
      if (flow[static_cast<size_t>(arc_id) / 2] > 0.0) return arc_id;
    }
    return -1;
  };

  while (true) {
    int start = out_arc_with_flow(0);
    if (start < 0) break;
    std::vector<int> path;
    std::vector<int> where(static_cast<size_t>(n) + 1, -1);
    int u = 0;
    where[0] = 0;
    while (u != sink) {
      const int arc_id = out_arc_with_flow(u);
      path.push_back(arc_id);
      u = g.arcs[static_cast<size_t>(arc_id)].to;
      if (u != sink && where[static_cast<size_t>(u)] >= 0) {
        // Cycle of zero-cost flow; cancel it and restart the walk.
        const size_t cycle_begin = static_cast<size_t>(
            where[static_cast<size_t>(u)]);
        double q = std::numeric_limits<double>::infinity();
        for (size_t i = cycle_begin; i < path.size(); ++i)
          q = std::min(q, flow[static_cast<size_t>(path[i]) / 2]);
        for (size_t i = cycle_begin; i < path.size(); ++i)
          flow[static_cast<size_t>(path[i]) / 2] -= q;
        path.clear();
        std::fill(where.begin(), where.end(), -1);
        u = 0;
        where[0] = 0;
        continue;
      }
      if (u != sink) where[static_cast<size_t>(u)] = static_cast<int>(path.size());
    }
    double q = std::numeric_limits<double>::infinity();
    for (int arc_id : path) q = std::min(q, flow[static_cast<size_t>(arc_id) / 2]);
    const int dest =
        g.arcs[static_cast<size_t>(path.back() ^ 1)].to;  // tail of dest arc
    for (int arc_id : path) {
      flow[static_cast<size_t>(arc_id) / 2] -= q;
      const int link_idx = g.arcs[static_cast<size_t>(arc_id)].link_idx;
      if (link_idx >= 0) chi.at(link_idx, dest) += q;
    }
  }

  return chi;
}

// Cheapest per-bps route cost from the macro to `dest_id`, capacities
// ignored. Equals the slack-capacity marginal cost of one more unit.
inline double marginal_route_cost(const Topology& topo,
                                  const std::vector<double>& unit_costs,
                                  int dest_id) {
  const int n = topo.node_count();
  if (static_cast<int>(unit_costs.size()) != topo.link_count())
    fail(errc::dimension_mismatch, "unit cost length mismatch");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<size_t>(n), inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[0] = 0.0;
  pq.emplace(0.0, 0);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<size_t>(u)]) continue;
    for (int idx : topo.out_links(u)) {
      const Link& link = topo.links()[static_cast<size_t>(idx)];
      const double cand = d + unit_costs[static_cast<size_t>(idx)];
      if (cand < dist[static_cast<size_t>(link.to)]) {
        dist[static_cast<size_t>(link.to)] = cand;
        pq.emplace(cand, link.to);
      }
    }
  }
  if (dest_id < 0 || dest_id >= n || dist[static_cast<size_t>(dest_id)] == inf)
    fail(errc::unroutable,
         "destination " + std::to_string(dest_id) + " unreachable");
  return dist[static_cast<size_t>(dest_id)];
}

// Marginal cost of one extra bps toward every node under an existing flow:
// shortest paths in the residual graph (backward arcs carry negative cost,
// hence Bellman-Ford). Unreachable nodes get +inf.
inline std::vector<double> residual_marginal_costs(
    const Topology& topo, const std::vector<double>& unit_costs,
    const std::vector<double>& capacities, const LinkLoads& loads) {
  const int n = topo.node_count();
  const int l = topo.link_count();
  if (static_cast<int>(unit_costs.size()) != l ||
      static_cast<int>(capacities.size()) != l ||
      static_cast<int>(loads.t.size()) != l)
    fail(errc::dimension_mismatch, "residual cost input length mismatch");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<size_t>(n), inf);
  dist[0] = 0.0;
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (int idx = 0; idx < l; ++idx) {
      const Link& link = topo.links()[static_cast<size_t>(idx)];
      const double w = unit_costs[static_cast<size_t>(idx)];
      const double load = loads.t[static_cast<size_t>(idx)];
      if (load < capacities[static_cast<size_t>(idx)] &&
          dist[static_cast<size_t>(link.from)] + w <
              dist[static_cast<size_t>(link.to)] - 1e-15) {
        dist[static_cast<size_t>(link.to)] =
            dist[static_cast<size_t>(link.from)] + w;
        changed = true;
      }
      if (load > 0.0 && dist[static_cast<size_t>(link.to)] - w <
                            dist[static_cast<size_t>(link.from)] - 1e-15) {
        dist[static_cast<size_t>(link.from)] =
            dist[static_cast<size_t>(link.to)] - w;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist;
}

// CSV export consumed by the experiment harness: link_id,dest_id,flow_bps.
inline void write_flows_csv(std::ostream& os, const Topology& topo,
                            const FlowAssignment& chi) {
  os << "link_id,dest_id,flow_bps\n";
  char buf[64];
  for (int l = 0; l < chi.num_links; ++l) {
    for (int d = 1; d <= chi.num_dests; ++d) {
      std::snprintf(buf, sizeof(buf), "%.12g", chi.at(l, d));
      os << topo.links()[static_cast<size_t>(l)].id << ',' << d << ',' << buf
         << '\n';
    }
  }
}

}  // namespace eeflow
