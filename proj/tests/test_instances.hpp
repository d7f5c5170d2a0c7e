// Shared builders for optimizer-facing tests: synthetic radio with clean
// round numbers (1 MHz carriers, unit noise) and a seeded generator for
// small random instances the brute-force oracle can still swallow.
#pragma once

#include <vector>

#include "eeflow/optimizer.hpp"
#include "eeflow/rng.hpp"
#include "eeflow/topology.hpp"

namespace test_instances {

using namespace eeflow;

// delta_b = 1 MHz on both tiers, sigma^2 = 1, no sensor cap unless asked.
inline RadioConfig synthetic_radio(double y_min = 1e5, double y_max = 4e6,
                                   double sensor_cap_w = 1e12) {
  RadioConfig radio;
  radio.f_m_hz = 1e6;
  radio.z_m = 1;
  radio.f_s_hz = 1e6;
  radio.z_s = 1;
  radio.sigma_sq_m_watts = 1.0;
  radio.sigma_sq_s_watts = 1.0;
  radio.y_min_bps = y_min;
  radio.y_max_bps = y_max;
  radio.sensor_power_max_watts = sensor_cap_w;
  return radio;
}

inline Node make_node(int id, double power_w) {
  Node n;
  n.id = id;
  n.kind = id == 0 ? NodeKind::Macro : NodeKind::Small;
  n.max_power_watts = power_w;
  return n;
}

inline Link make_link(int from, int to, double cap_bps, double power_w) {
  Link l;
  l.from = from;
  l.to = to;
  l.band = from == 0 ? Band::EBand : Band::VBand;
  l.distance_km = 0.3;
  l.capacity_bps = cap_bps;
  l.max_power_watts = power_w;
  return l;
}

inline UserSpec make_user(int id, int bs, double gain_sq) {
  UserSpec u;
  u.channel.user_id = id;
  u.channel.attached_bs = bs;
  u.channel.gain_sq = gain_sq;
  return u;
}

// One user on one small cell behind one link; the smallest nontrivial
// instance.
inline ProblemInstance single_user_instance(double link_cap = 1e12,
                                            double link_power = 5.0,
                                            double y_max = 4e6) {
  ProblemInstance inst;
  inst.radio = synthetic_radio(1e5, y_max);
  inst.topology =
      build_incidence({make_node(0, 100.0), make_node(1, 100.0)},
                      {make_link(0, 1, link_cap, link_power)});
  inst.users = {make_user(0, 1, 1.0)};
  return inst;
}

// Random instance within the oracle limits (<=3 cells, <=6 users,
// <=6 links). Feasible at the rate floor by construction; capacities are
// slack most of the time and moderately tight otherwise.
inline ProblemInstance random_small_instance(uint64_t seed,
                                             bool allow_tight = true) {
  SplitMix64 rng(derive_seed(seed, 5));
  const int cells = 1 + static_cast<int>(rng.next_below(3));
  const int users = 1 + static_cast<int>(rng.next_below(6));

  const double y_min = 5e4 * (1.0 + rng.next_double());
  const double y_max = y_min * (8.0 + 20.0 * rng.next_double());
  ProblemInstance inst;
  inst.radio = synthetic_radio(y_min, y_max);

  std::vector<Node> nodes = {make_node(0, 0.0)};
  for (int v = 1; v <= cells; ++v) nodes.push_back(make_node(v, 0.0));

  // random tree plus at most one extra arc
  std::vector<Link> links;
  for (int v = 1; v <= cells; ++v)
    links.push_back(make_link(
        static_cast<int>(rng.next_below(static_cast<uint64_t>(v))), v, 0.0,
        2.0 + 4.0 * rng.next_double()));
  if (cells >= 2 && rng.next_double() < 0.5) {
    const int to = 2;
    const int from = 0;
    bool dup = false;
    for (const Link& l : links)
      if (l.from == from && l.to == to) dup = true;
    if (!dup)
      links.push_back(
          make_link(from, to, 0.0, 2.0 + 4.0 * rng.next_double()));
  }

  for (int j = 0; j < users; ++j) {
    const double gain = std::pow(10.0, rng.uniform(-1.0, 1.0));
    inst.users.push_back(
        make_user(j, static_cast<int>(rng.next_below(
                         static_cast<uint64_t>(cells) + 1)),
                  gain));
  }

  // Capacity: slack or moderately tight against the worst-case demand.
  const double demand_ceiling = y_max * users;
  for (Link& l : links) {
    if (allow_tight && rng.next_double() < 0.3)
      l.capacity_bps = demand_ceiling * (0.6 + 0.7 * rng.next_double());
    else
      l.capacity_bps = demand_ceiling * (2.0 + 3.0 * rng.next_double());
  }

  // Budgets: comfortably above the floor usage, sometimes near the
  // ceiling usage so baselines may spend it all.
  inst.topology = build_incidence(nodes, links);
  std::vector<double> ceiling_power(
      static_cast<size_t>(inst.topology.node_count()), 0.0);
  for (size_t j = 0; j < inst.users.size(); ++j)
    ceiling_power[static_cast<size_t>(
        inst.users[j].channel.attached_bs)] +=
        inst.access_power(j, inst.y_hi(j));
  std::vector<Node> budgeted = nodes;
  for (Node& n : budgeted) {
    double bh = 0.0;
    for (int idx : inst.topology.out_links(n.id))
      bh += inst.topology.links()[static_cast<size_t>(idx)].max_power_watts;
    n.max_power_watts =
        (ceiling_power[static_cast<size_t>(n.id)] + bh) *
            (1.1 + rng.next_double()) +
        1.0;
  }
  inst.topology = build_incidence(budgeted, inst.topology.links());
  return inst;
}

}  // namespace test_instances
