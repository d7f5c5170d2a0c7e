#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "eeflow/flow.hpp"
#include "eeflow/radio.hpp"
#include "eeflow/rng.hpp"
#include "eeflow/topology.hpp"

namespace eeflow {

// One user plus its private overrides. The rate box can be narrowed per
// user; p_min_watts only feeds the energy-per-bit bracket.
struct UserSpec {
  UserChannel channel;
  std::optional<double> y_min_bps;
  std::optional<double> y_max_bps;
  std::optional<double> p_min_watts;
};

struct ProblemInstance {
  Topology topology;
  RadioConfig radio;
  std::vector<UserSpec> users;

  size_t user_count() const { return users.size(); }

  double delta_b_hz(size_t j) const {
    return users[j].channel.attached_bs == 0 ? radio.delta_b_m_hz()
                                             : radio.delta_b_s_hz();
  }
  double sigma_sq(size_t j) const {
    return users[j].channel.attached_bs == 0 ? radio.sigma_sq_m_watts
                                             : radio.sigma_sq_s_watts;
  }

  double nominal_y_min(size_t j) const {
    return users[j].y_min_bps.value_or(radio.y_min_bps);
  }
  double nominal_y_max(size_t j) const {
    return users[j].y_max_bps.value_or(radio.y_max_bps);
  }

  // Effective rate box. The sensor power ceiling caps the top through the
  // rate curve; ends are snapped onto the flow grid.
  double y_lo(size_t j) const {
    const double y = nominal_y_min(j);
    return std::ceil(y / kFlowQuantum) * kFlowQuantum;
  }
  double y_hi(size_t j) const {
    const double cap_rate =
        access_rate(radio.sensor_power_max_watts, users[j].channel.gain_sq,
                    delta_b_hz(j), sigma_sq(j));
    const double y = std::min(nominal_y_max(j), cap_rate);
    return std::floor(y / kFlowQuantum) * kFlowQuantum;
  }

  double access_power(size_t j, double rate_bps) const {
    return access_power_for_rate(rate_bps, users[j].channel.gain_sq,
                                 delta_b_hz(j), sigma_sq(j));
  }
  double rate_for_power(size_t j, double power_watts) const {
    return access_rate(power_watts, users[j].channel.gain_sq, delta_b_hz(j),
                       sigma_sq(j));
  }

  double p_min(size_t j) const {
    return users[j].p_min_watts.value_or(access_power(j, y_lo(j)));
  }
};

inline void validate_instance(const ProblemInstance& inst) {
  validate_radio(inst.radio);
  const int n = inst.topology.node_count();
  for (size_t j = 0; j < inst.users.size(); ++j) {
    const UserSpec& u = inst.users[j];
    if (u.channel.attached_bs < 0 || u.channel.attached_bs >= n)
      fail(errc::validation_error,
           "user " + std::to_string(u.channel.user_id) +
               " attached to unknown node " +
               std::to_string(u.channel.attached_bs));
    if (u.channel.gain_sq <= 0.0)
      fail(errc::validation_error,
           "user " + std::to_string(u.channel.user_id) +
               " needs gain_sq > 0");
    if (inst.y_lo(j) > inst.y_hi(j))
      fail(errc::rate_box_infeasible,
           "user " + std::to_string(u.channel.user_id) +
               " has an empty rate box");
  }
  for (const Node& node : inst.topology.nodes())
    if (node.max_power_watts <= 0.0)
      fail(errc::validation_error, "node " + std::to_string(node.id) +
                                       " needs a positive power budget");
}

// Per-link routing cost: full backhaul power per unit of capacity, so the
// backhaul term of the power model is cost * load.
inline std::vector<double> unit_costs(const Topology& topo) {
  std::vector<double> w;
  w.reserve(static_cast<size_t>(topo.link_count()));
  for (const Link& link : topo.links())
    w.push_back(link.max_power_watts / link.capacity_bps);
  return w;
}

inline std::vector<double> capacities(const Topology& topo) {
  std::vector<double> c;
  c.reserve(static_cast<size_t>(topo.link_count()));
  for (const Link& link : topo.links()) c.push_back(link.capacity_bps);
  return c;
}

inline DemandVector demands_for_rates(const ProblemInstance& inst,
                                      const std::vector<double>& rates) {
  DemandVector demands;
  demands.demand_bps.assign(
      static_cast<size_t>(inst.topology.dest_count()), 0.0);
  for (size_t j = 0; j < inst.users.size(); ++j) {
    const int bs = inst.users[j].channel.attached_bs;
    if (bs > 0) demands.demand_bps[static_cast<size_t>(bs - 1)] += rates[j];
  }
  return demands;
}

struct Solution {
  std::vector<double> rates_bps;
  FlowAssignment flows;
  LinkLoads loads;
  std::vector<double> access_powers_watts;
  std::vector<double> backhaul_powers_watts;
};

struct EEReport {
  double f1_bps = 0.0;
  double f2_watts = 0.0;
  double ee_bps_per_watt = 0.0;
  double alpha_joules_per_bit = 0.0;
  int iterations = 0;
  double bracket_width = 0.0;
};

// Total delivered throughput (both tiers).
inline double eval_f1(const ProblemInstance& inst,
                      const std::vector<double>& rates) {
  if (rates.size() != inst.users.size())
    fail(errc::dimension_mismatch, "one rate per user required");
  double sum = 0.0;
  for (double y : rates) sum += y;
  return sum;
}

// Total consumed power: exact access-power inverses plus the load-
// proportional backhaul share max_power * t / c per link.
inline double eval_f2(const ProblemInstance& inst,
                      const std::vector<double>& rates,
                      const LinkLoads& loads) {
  if (rates.size() != inst.users.size())
    fail(errc::dimension_mismatch, "one rate per user required");
  if (static_cast<int>(loads.t.size()) != inst.topology.link_count())
    fail(errc::dimension_mismatch, "one load per link required");
  double sum = 0.0;
  for (size_t j = 0; j < rates.size(); ++j)
    sum += inst.access_power(j, rates[j]);
  for (int l = 0; l < inst.topology.link_count(); ++l) {
    const Link& link = inst.topology.links()[static_cast<size_t>(l)];
    sum += link.max_power_watts * loads.t[static_cast<size_t>(l)] /
           link.capacity_bps;
  }
  return sum;
}

namespace detail {

inline Solution assemble_solution(const ProblemInstance& inst,
                                  std::vector<double> rates,
                                  FlowAssignment chi) {
  Solution sol;
  sol.loads = link_loads(chi);
  sol.flows = std::move(chi);
  sol.access_powers_watts.reserve(rates.size());
  for (size_t j = 0; j < rates.size(); ++j)
    sol.access_powers_watts.push_back(inst.access_power(j, rates[j]));
  sol.backhaul_powers_watts.reserve(
      static_cast<size_t>(inst.topology.link_count()));
  for (int l = 0; l < inst.topology.link_count(); ++l) {
    const Link& link = inst.topology.links()[static_cast<size_t>(l)];
    sol.backhaul_powers_watts.push_back(link.max_power_watts *
                                        sol.loads.t[static_cast<size_t>(l)] /
                                        link.capacity_bps);
  }
  sol.rates_bps = std::move(rates);
  return sol;
}

// Node power usage under given rates and loads: own access power plus the
// backhaul power of outgoing links.
inline std::vector<double> node_usage(const ProblemInstance& inst,
                                      const std::vector<double>& rates,
                                      const LinkLoads& loads) {
  std::vector<double> usage(
      static_cast<size_t>(inst.topology.node_count()), 0.0);
  for (size_t j = 0; j < rates.size(); ++j)
    usage[static_cast<size_t>(inst.users[j].channel.attached_bs)] +=
        inst.access_power(j, rates[j]);
  for (int node = 0; node < inst.topology.node_count(); ++node) {
    for (int idx : inst.topology.out_links(node)) {
      const Link& link = inst.topology.links()[static_cast<size_t>(idx)];
      usage[static_cast<size_t>(node)] +=
          link.max_power_watts * loads.t[static_cast<size_t>(idx)] /
          link.capacity_bps;
    }
  }
  return usage;
}

}  // namespace detail

struct ConstraintCheck {
  std::string name;
  bool pass = false;
  double worst_residual = 0.0;
};

struct ConstraintReport {
  std::vector<ConstraintCheck> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const ConstraintCheck& operator[](size_t i) const { return checks[i]; }
  std::string first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return c.name;
    return "";
  }
};

// Per-constraint audit of a candidate solution against the instance.
inline ConstraintReport validate(const ProblemInstance& inst,
                                 const Solution& sol) {
  const int n = inst.topology.node_count();
  const int l = inst.topology.link_count();
  const int d_count = inst.topology.dest_count();
  if (static_cast<int>(sol.loads.t.size()) != l ||
      sol.flows.num_links != l || sol.flows.num_dests != d_count ||
      sol.rates_bps.size() != inst.users.size())
    fail(errc::dimension_mismatch, "solution shape does not fit instance");

  ConstraintReport report;
  auto add = [&report](const std::string& name, double residual,
                       double tolerance) {
    report.checks.push_back(
        ConstraintCheck{name, residual <= tolerance, residual});
  };

  const DemandVector demands = demands_for_rates(inst, sol.rates_bps);
  const auto residual = conservation_residual(inst.topology, sol.flows,
                                              demands);
  double c1 = 0.0, c2 = 0.0;
  for (int d = 1; d <= d_count; ++d) {
    for (int node = 0; node < n; ++node) {
      const double r =
          std::abs(residual[static_cast<size_t>(d - 1)][static_cast<size_t>(
              node)]);
      if (node == d)
        c1 = std::max(c1, r);
      else
        c2 = std::max(c2, r);
    }
  }
  const double demand_scale = std::max(1.0, demands.total());
  add("C1", c1, 1e-9 * demand_scale);
  add("C2", c2, 1e-9 * demand_scale);

  const LinkLoads recomputed = link_loads(sol.flows);
  double c3 = 0.0;
  for (int idx = 0; idx < l; ++idx)
    c3 = std::max(c3, std::abs(recomputed.t[static_cast<size_t>(idx)] -
                               sol.loads.t[static_cast<size_t>(idx)]));
  add("C3", c3, 1e-9 * demand_scale);

  double c4 = 0.0, c4_tol = 0.0;
  for (int idx = 0; idx < l; ++idx) {
    const double cap =
        inst.topology.links()[static_cast<size_t>(idx)].capacity_bps;
    c4 = std::max(c4, sol.loads.t[static_cast<size_t>(idx)] - cap);
    c4_tol = std::max(c4_tol, 1e-9 * cap);
  }
  add("C4", std::max(0.0, c4), std::max(c4_tol, 1e-9));

  const auto usage = detail::node_usage(inst, sol.rates_bps, sol.loads);
  double c5 = 0.0, c5_tol = 1e-12, c6 = 0.0, c6_tol = 1e-12;
  for (const Node& node : inst.topology.nodes()) {
    const double over =
        usage[static_cast<size_t>(node.id)] - node.max_power_watts;
    if (node.id == 0) {
      c6 = std::max(c6, over);
      c6_tol = std::max(c6_tol, 1e-9 * node.max_power_watts);
    } else {
      c5 = std::max(c5, over);
      c5_tol = std::max(c5_tol, 1e-9 * node.max_power_watts);
    }
  }
  add("C5", std::max(0.0, c5), c5_tol);
  add("C6", std::max(0.0, c6), c6_tol);

  double c7 = 0.0;
  for (double x : sol.flows.chi) c7 = std::max(c7, -x);
  add("C7", c7, 0.0);

  double c8 = 0.0, c9 = 0.0, box_tol = 1e-12;
  for (size_t j = 0; j < sol.rates_bps.size(); ++j) {
    c8 = std::max(c8, sol.rates_bps[j] - inst.y_hi(j));
    c9 = std::max(c9, inst.y_lo(j) - sol.rates_bps[j]);
    box_tol = std::max(box_tol, 1e-9 * inst.y_hi(j));
  }
  add("C8", std::max(0.0, c8), box_tol);
  add("C9", std::max(0.0, c9), box_tol);

  return report;
}

// Energy-per-bit bracket. The lower end divides the per-user power floors
// by the largest reachable throughput; the upper end divides the full
// backhaul plus access power ceiling by the smallest admissible
// throughput. Any admissible point lands inside.
inline std::pair<double, double> alpha_bounds(const ProblemInstance& inst) {
  if (inst.users.empty())
    fail(errc::degenerate_instance, "no users, bounds undefined");
  double sum_p_min = 0.0, sum_p_max = 0.0, sum_y_min = 0.0, sum_y_max = 0.0;
  for (size_t j = 0; j < inst.users.size(); ++j) {
    const double y_min = inst.nominal_y_min(j);
    if (y_min <= 0.0)
      fail(errc::degenerate_instance,
           "y_min must be positive for a finite upper bound");
    sum_y_min += y_min;
    sum_y_max += inst.nominal_y_max(j);
    sum_p_min += inst.p_min(j);
    sum_p_max += inst.access_power(j, inst.y_hi(j));
  }
  double sum_bh = 0.0;
  for (const Link& link : inst.topology.links())
    sum_bh += link.max_power_watts;
  return {sum_p_min / sum_y_max, (sum_bh + sum_p_max) / sum_y_min};
}

struct Feasibility {
  bool feasible = false;
  std::optional<Solution> solution;
  double gap = 0.0;  // best f2 - alpha_hat * f1 found
};

namespace detail {

// Rate minimizing P_access(y) + (kappa - alpha_hat) * y over the box:
// the access power inverse is convex, so the stationary point is
// delta_b * log2((alpha_hat - kappa) * delta_b * g / (sigma^2 ln 2)).
inline double inner_rate(const ProblemInstance& inst, size_t j,
                         double alpha_hat, double kappa) {
  const double lo = inst.y_lo(j);
  const double hi = inst.y_hi(j);
  if (alpha_hat <= kappa) return lo;
  const double delta_b = inst.delta_b_hz(j);
  const double g = inst.users[j].channel.gain_sq;
  const double s2 = inst.sigma_sq(j);
  const double arg =
      (alpha_hat - kappa) * delta_b * g / (s2 * std::numbers::ln2);
  if (arg <= 1.0) return lo;
  const double y = delta_b * std::log2(arg);
  return std::clamp(snap_rate(y), lo, hi);
}

// Largest theta in [0,1] such that rates y_lo + theta * (y - y_lo) route
// under the capacities. theta = 0 must be routable before calling.
inline double largest_routable_theta(const ProblemInstance& inst,
                                     const std::vector<double>& rates,
                                     const std::vector<double>& w,
                                     const std::vector<double>& caps) {
  auto routable = [&](double theta) {
    std::vector<double> scaled(rates.size());
    for (size_t j = 0; j < rates.size(); ++j) {
      const double lo = inst.y_lo(j);
      scaled[j] = snap_rate(lo + theta * (rates[j] - lo));
    }
    try {
      (void)min_cost_route(inst.topology, demands_for_rates(inst, scaled), w,
                           caps);
      return true;
    } catch (const Error& e) {
      if (e.code() == errc::capacity_infeasible) return false;
      throw;
    }
  };
  double lo = 0.0, hi = 1.0;
  if (routable(1.0)) return 1.0;
  for (int iter = 0; iter < 50; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (routable(mid) ? lo : hi) = mid;
  }
  return lo;
}

// Minimize f2 - alpha_hat*f1 along the segment between two routable rate
// vectors. The objective is convex along any segment (routing cost is
// convex in the demands), so golden section nails it.
inline std::pair<std::vector<double>, FlowAssignment> polish_between(
    const ProblemInstance& inst, double alpha_hat,
    const std::vector<double>& from, const std::vector<double>& to,
    const std::vector<double>& w, const std::vector<double>& caps) {
  auto rates_at = [&](double theta) {
    std::vector<double> mixed(from.size());
    for (size_t j = 0; j < from.size(); ++j)
      mixed[j] = std::clamp(snap_rate(from[j] + theta * (to[j] - from[j])),
                            inst.y_lo(j), inst.y_hi(j));
    return mixed;
  };
  auto h_at = [&](double theta) {
    const std::vector<double> mixed = rates_at(theta);
    const FlowAssignment chi = min_cost_route(
        inst.topology, demands_for_rates(inst, mixed), w, caps);
    return eval_f2(inst, mixed, link_loads(chi)) -
           alpha_hat * eval_f1(inst, mixed);
  };
  double a = 0.0, b = 1.0;
  constexpr double phi = 0.6180339887498949;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double hc = h_at(c), hd = h_at(d);
  for (int iter = 0; iter < 40; ++iter) {
    if (hc < hd) {
      b = d;
      d = c;
      hd = hc;
      c = b - phi * (b - a);
      hc = h_at(c);
    } else {
      a = c;
      c = d;
      hc = hd;
      d = a + phi * (b - a);
      hd = h_at(d);
    }
  }
  const double theta = hc < hd ? c : d;
  std::vector<double> mixed = rates_at(theta);
  FlowAssignment chi = min_cost_route(
      inst.topology, demands_for_rates(inst, mixed), w, caps);
  return {std::move(mixed), std::move(chi)};
}

// Minimize f2 - alpha_hat*f1 along the segment from the rate floor toward
// `rates`, restricted to the routable range. The objective is convex along
// the segment (routing cost is convex in the demands), so golden section
// nails it.
inline std::pair<std::vector<double>, FlowAssignment> best_point_on_segment(
    const ProblemInstance& inst, double alpha_hat,
    const std::vector<double>& rates, double theta_max,
    const std::vector<double>& w, const std::vector<double>& caps) {
  auto rates_at = [&](double theta) {
    std::vector<double> scaled(rates.size());
    for (size_t j = 0; j < rates.size(); ++j) {
      const double lo = inst.y_lo(j);
      scaled[j] = snap_rate(lo + theta * (rates[j] - lo));
    }
    return scaled;
  };
  auto h_at = [&](double theta) {
    const std::vector<double> scaled = rates_at(theta);
    const FlowAssignment chi = min_cost_route(
        inst.topology, demands_for_rates(inst, scaled), w, caps);
    return eval_f2(inst, scaled, link_loads(chi)) -
           alpha_hat * eval_f1(inst, scaled);
  };
  double a = 0.0, b = theta_max;
  constexpr double phi = 0.6180339887498949;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double hc = h_at(c), hd = h_at(d);
  for (int iter = 0; iter < 40; ++iter) {
    if (hc < hd) {
      b = d;
      d = c;
      hd = hc;
      c = b - phi * (b - a);
      hc = h_at(c);
    } else {
      a = c;
      c = d;
      hc = hd;
      d = a + phi * (b - a);
      hd = h_at(d);
    }
  }
  const double best_theta = hc < hd ? c : d;
  const double h_end = h_at(theta_max);
  const double theta = std::min(hc, hd) < h_end ? best_theta : theta_max;
  std::vector<double> scaled = rates_at(theta);
  FlowAssignment chi = min_cost_route(
      inst.topology, demands_for_rates(inst, scaled), w, caps);
  return {std::move(scaled), std::move(chi)};
}

struct InnerCandidate {
  std::vector<double> rates;
  FlowAssignment chi;
  double h = std::numeric_limits<double>::infinity();
  double f1 = 0.0, f2 = 0.0;
};

inline InnerCandidate evaluate_candidate(const ProblemInstance& inst,
                                         double alpha_hat,
                                         std::vector<double> rates,
                                         FlowAssignment chi) {
  InnerCandidate cand;
  cand.f1 = eval_f1(inst, rates);
  cand.f2 = eval_f2(inst, rates, link_loads(chi));
  cand.h = cand.f2 - alpha_hat * cand.f1;
  cand.rates = std::move(rates);
  cand.chi = std::move(chi);
  return cand;
}

// Scale the rates feeding a node's power budget until the budget holds.
// Covers both the node's own users (access power) and users of
// destinations routed through its outgoing links (backhaul share).
inline bool repair_node_budget(const ProblemInstance& inst, int node,
                               const std::vector<double>& w,
                               const std::vector<double>& caps,
                               std::vector<double>& rates,
                               FlowAssignment& chi) {
  const double budget =
      inst.topology.nodes()[static_cast<size_t>(node)].max_power_watts;

  std::vector<bool> dest_through(
      static_cast<size_t>(inst.topology.dest_count()) + 1, false);
  for (int idx : inst.topology.out_links(node))
    for (int d = 1; d <= chi.num_dests; ++d)
      if (chi.at(idx, d) > 0.0) dest_through[static_cast<size_t>(d)] = true;

  std::vector<size_t> involved;
  for (size_t j = 0; j < rates.size(); ++j) {
    const int bs = inst.users[j].channel.attached_bs;
    if (bs == node || (bs > 0 && dest_through[static_cast<size_t>(bs)]))
      involved.push_back(j);
  }
  if (involved.empty()) return false;

  auto usage_at = [&](double theta, std::vector<double>& scaled,
                      FlowAssignment& flows) {
    scaled = rates;
    for (size_t j : involved) {
      const double lo = inst.y_lo(j);
      scaled[j] = snap_rate(lo + theta * (rates[j] - lo));
    }
    flows = min_cost_route(inst.topology, demands_for_rates(inst, scaled), w,
                           caps);
    const auto usage = node_usage(inst, scaled, link_loads(flows));
    return usage[static_cast<size_t>(node)];
  };

  std::vector<double> scaled;
  FlowAssignment flows;
  if (usage_at(0.0, scaled, flows) > budget * (1.0 + 1e-9)) return false;
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (usage_at(mid, scaled, flows) <= budget * (1.0 + 1e-10) ? lo : hi) = mid;
  }
  (void)usage_at(lo, scaled, flows);
  rates = std::move(scaled);
  chi = std::move(flows);
  return true;
}

// Enforce every node budget on a candidate point; conservative, gives up
// after a fixed number of passes.
inline bool enforce_budgets(const ProblemInstance& inst,
                            const std::vector<double>& w,
                            const std::vector<double>& caps,
                            std::vector<double>& rates,
                            FlowAssignment& chi) {
  for (int round = 0; round < 50; ++round) {
    const auto usage = node_usage(inst, rates, link_loads(chi));
    int worst = -1;
    double worst_over = 0.0;
    for (const Node& node : inst.topology.nodes()) {
      const double over = usage[static_cast<size_t>(node.id)] -
                          node.max_power_watts *
                              (1.0 + 1e-9);
      if (over > worst_over) {
        worst_over = over;
        worst = node.id;
      }
    }
    if (worst < 0) return true;
    if (!repair_node_budget(inst, worst, w, caps, rates, chi)) return false;
  }
  return false;
}

}  // namespace detail

// Parametric feasibility test: does any admissible point satisfy
// f2 - alpha_hat * f1 <= 0? Minimizes the left side by
// decomposition: marginal routing costs price each destination, each
// user's rate then solves a 1-D convex problem in closed form, and
// capacity or budget violations are repaired by rescaling toward the rate
// floor. The all-floors point is always evaluated too, which certifies
// feasibility for any alpha_hat at or above the upper bound.
inline Feasibility feasibility_subproblem(const ProblemInstance& inst,
                                          double alpha_hat) {
  if (alpha_hat <= 0.0)
    fail(errc::validation_error, "alpha_hat must be positive");
  if (inst.users.empty())
    fail(errc::degenerate_instance, "no users to schedule");

  const std::vector<double> w = unit_costs(inst.topology);
  const std::vector<double> caps = capacities(inst.topology);

  // Floor point; its failure means the instance itself is infeasible.
  std::vector<double> floor_rates(inst.users.size());
  for (size_t j = 0; j < inst.users.size(); ++j)
    floor_rates[j] = inst.y_lo(j);
  FlowAssignment floor_chi;
  try {
    floor_chi = min_cost_route(inst.topology,
                               demands_for_rates(inst, floor_rates), w, caps);
  } catch (const Error& e) {
    if (e.code() == errc::capacity_infeasible)
      fail(errc::rate_box_infeasible,
           "minimum rates already exceed link capacities (C4)");
    throw;
  }
  {
    const auto usage =
        detail::node_usage(inst, floor_rates, link_loads(floor_chi));
    for (const Node& node : inst.topology.nodes())
      if (usage[static_cast<size_t>(node.id)] >
          node.max_power_watts * (1.0 + 1e-9))
        fail(errc::rate_box_infeasible,
             "minimum rates already exceed the power budget of node " +
                 std::to_string(node.id) + (node.id == 0 ? " (C6)" : " (C5)"));
  }

  detail::InnerCandidate best =
      detail::evaluate_candidate(inst, alpha_hat, floor_rates, floor_chi);

  // Destination prices: slack-capacity marginal route costs to start.
  std::vector<double> kappa(inst.users.size(), 0.0);
  for (size_t j = 0; j < inst.users.size(); ++j) {
    const int bs = inst.users[j].channel.attached_bs;
    if (bs > 0) kappa[j] = marginal_route_cost(inst.topology, w, bs);
  }

  std::vector<double> prev_rates;
  int stagnant = 0;
  for (int round = 0; round < 50 && stagnant < 3; ++round) {
    std::vector<double> rates(inst.users.size());
    for (size_t j = 0; j < inst.users.size(); ++j)
      rates[j] = detail::inner_rate(inst, j, alpha_hat, kappa[j]);

    FlowAssignment chi;
    try {
      chi = min_cost_route(inst.topology, demands_for_rates(inst, rates), w,
                           caps);
    } catch (const Error& e) {
      if (e.code() != errc::capacity_infeasible) throw;
      const double theta =
          detail::largest_routable_theta(inst, rates, w, caps);
      std::tie(rates, chi) = detail::best_point_on_segment(
          inst, alpha_hat, rates, theta, w, caps);
    }

    if (!detail::enforce_budgets(inst, w, caps, rates, chi))
      break;  // budgets unfixable at this price level; keep the incumbent

    const LinkLoads round_loads = link_loads(chi);
    auto cand = detail::evaluate_candidate(inst, alpha_hat, std::move(rates),
                                           std::move(chi));
    const bool improved = cand.h < best.h - 1e-15 * (1.0 + std::abs(best.h));
    if (improved) {
      stagnant = 0;
      best = std::move(cand);
    } else {
      // Price oscillation around a routing-cost kink; the optimum lies on
      // the chord between the last two iterates, and h is convex there.
      ++stagnant;
      if (!prev_rates.empty() && prev_rates != cand.rates) {
        auto [mixed, mixed_chi] = detail::polish_between(
            inst, alpha_hat, prev_rates, cand.rates, w, caps);
        if (detail::enforce_budgets(inst, w, caps, mixed, mixed_chi)) {
          auto polished = detail::evaluate_candidate(
              inst, alpha_hat, std::move(mixed), std::move(mixed_chi));
          if (polished.h < best.h - 1e-15 * (1.0 + std::abs(best.h))) {
            stagnant = 0;
            best = std::move(polished);
          }
        }
      }
      prev_rates = cand.rates;
    }
    if (improved) prev_rates = best.rates;

    // Reprice with the capacitated marginals of this round's point; stop
    // once the prices settle.
    const auto dist =
        residual_marginal_costs(inst.topology, w, caps, round_loads);
    double delta = 0.0;
    for (size_t j = 0; j < inst.users.size(); ++j) {
      const int bs = inst.users[j].channel.attached_bs;
      if (bs <= 0) continue;
      double next = dist[static_cast<size_t>(bs)];
      if (!std::isfinite(next)) next = kappa[j];
      delta = std::max(delta, std::abs(next - kappa[j]));
      kappa[j] = next;
    }
    if (delta <= 1e-12 * (1.0 + alpha_hat)) break;
  }

  Feasibility result;
  result.gap = best.h;
  result.feasible = best.h <= 1e-9 * std::max(best.f2, 1e-30);
  if (result.feasible)
    result.solution = detail::assemble_solution(inst, std::move(best.rates),
                                                std::move(best.chi));
  return result;
}

struct SolveOptions {
  double tol = 1e-4;       // relative width target on the bracket
  int max_bisections = 200;
};

// Maximize f1/f2 by bisecting the energy-per-bit parameter between its
// analytic bounds; each probe is one feasibility subproblem. Returns the
// last feasible point and its report.
inline std::pair<Solution, EEReport> solve_min_alpha(
    const ProblemInstance& inst, const SolveOptions& opts = {}) {
  validate_instance(inst);
  if (inst.users.empty())
    fail(errc::degenerate_instance, "no users to schedule");
  if (opts.tol <= 0.0) fail(errc::validation_error, "tol must be positive");

  const auto [alpha_lo, alpha_hi] = alpha_bounds(inst);

  double lo = alpha_lo, hi = alpha_hi;
  Feasibility upper;
  try {
    upper = feasibility_subproblem(inst, hi);
  } catch (const Error& e) {
    if (e.code() == errc::rate_box_infeasible ||
        e.code() == errc::unroutable ||
        e.code() == errc::capacity_infeasible)
      fail(errc::instance_infeasible, e.what());
    throw;
  }
  if (!upper.feasible)
    fail(errc::non_convergence,
         "feasibility failed at the analytic upper bound");

  Feasibility at_lo = feasibility_subproblem(inst, lo);
  int iterations = 0;
  Feasibility last = at_lo.feasible ? std::move(at_lo) : std::move(upper);
  if (!at_lo.feasible) {
    const double target = opts.tol * alpha_lo;
    while (hi - lo > target) {
      if (++iterations > opts.max_bisections)
        fail(errc::non_convergence,
             "bisection cap reached; tolerance too tight");
      const double mid = 0.5 * (lo + hi);
      Feasibility probe = feasibility_subproblem(inst, mid);
      if (probe.feasible) {
        hi = mid;
        last = std::move(probe);
      } else {
        lo = mid;
      }
    }
  } else {
    hi = lo;
  }

  Solution sol = std::move(*last.solution);
  EEReport report;
  report.f1_bps = eval_f1(inst, sol.rates_bps);
  report.f2_watts = eval_f2(inst, sol.rates_bps, sol.loads);
  report.ee_bps_per_watt = report.f1_bps / report.f2_watts;
  report.alpha_joules_per_bit = report.f2_watts / report.f1_bps;
  report.iterations = iterations;
  report.bracket_width = hi - lo;
  return {std::move(sol), report};
}

// Exhaustive grid oracle over the rate boxes, refined around the incumbent.
// Test-scale instances only.
inline EEReport brute_force_oracle(const ProblemInstance& inst,
                                   int grid_points, int refine_levels = 6) {
  validate_instance(inst);
  const size_t j_count = inst.users.size();
  if (inst.topology.dest_count() > 3 || j_count > 6 ||
      inst.topology.link_count() > 6)
    fail(errc::too_large, "oracle accepts <=3 cells, <=6 users, <=6 links");
  if (grid_points < 1)
    fail(errc::validation_error, "grid_points must be >= 1");
  double combos = 1.0;
  for (size_t j = 0; j < j_count; ++j) combos *= grid_points;
  if (combos > 2e6) fail(errc::too_large, "grid too fine");

  const std::vector<double> w = unit_costs(inst.topology);
  const std::vector<double> caps = capacities(inst.topology);

  std::vector<double> lo(j_count), hi(j_count);
  for (size_t j = 0; j < j_count; ++j) {
    lo[j] = inst.y_lo(j);
    hi[j] = inst.y_hi(j);
  }

  double best_ee = -1.0, best_f1 = 0.0, best_f2 = 0.0;

  for (int level = 0; level < std::max(1, refine_levels); ++level) {
    std::vector<int> idx(j_count, 0);
    std::vector<double> rates(j_count);
    bool done = false;
    std::vector<double> level_best_rates;
    double level_best_ee = -1.0;
    while (!done) {
      for (size_t j = 0; j < j_count; ++j) {
        const double frac =
            grid_points == 1 ? 0.0
                             : static_cast<double>(idx[j]) / (grid_points - 1);
        rates[j] = snap_rate(lo[j] + frac * (hi[j] - lo[j]));
      }
      bool ok = true;
      FlowAssignment chi;
      try {
        chi = min_cost_route(inst.topology, demands_for_rates(inst, rates),
                             w, caps);
      } catch (const Error& e) {
        if (e.code() == errc::capacity_infeasible)
          ok = false;
        else
          throw;
      }
      if (ok) {
        const LinkLoads loads = link_loads(chi);
        const auto usage = detail::node_usage(inst, rates, loads);
        for (const Node& node : inst.topology.nodes())
          if (usage[static_cast<size_t>(node.id)] >
              node.max_power_watts * (1.0 + 1e-9))
            ok = false;
        if (ok) {
          const double f1 = eval_f1(inst, rates);
          const double f2 = eval_f2(inst, rates, loads);
          const double ee = f1 / f2;
          if (ee > level_best_ee) {
            level_best_ee = ee;
            level_best_rates = rates;
          }
          if (ee > best_ee) {
            best_ee = ee;
            best_f1 = f1;
            best_f2 = f2;
          }
        }
      }
      // odometer over the grid
      done = true;
      for (size_t j = 0; j < j_count; ++j) {
        if (++idx[j] < grid_points) {
          done = false;
          break;
        }
        idx[j] = 0;
      }
    }
    if (level == 0 && best_ee < 0.0)
      fail(errc::instance_infeasible, "no feasible grid point");
    if (grid_points == 1 || level_best_rates.empty()) break;
    // Shrink each box around the level incumbent; the objective is
    // quasiconcave, so the optimum stays within one grid step.
    for (size_t j = 0; j < j_count; ++j) {
      const double step = (hi[j] - lo[j]) / (grid_points - 1);
      const double center = level_best_rates[j];
      lo[j] = std::max(inst.y_lo(j), center - 1.2 * step);
      hi[j] = std::min(inst.y_hi(j), center + 1.2 * step);
    }
  }

  EEReport report;
  report.f1_bps = best_f1;
  report.f2_watts = best_f2;
  report.ee_bps_per_watt = best_ee;
  report.alpha_joules_per_bit = best_f2 / best_f1;
  report.iterations = refine_levels;
  report.bracket_width = 0.0;
  return report;
}

namespace detail {

// Shared tail of the two baselines: fair-share powers per node after
// setting aside the backhaul cost of routing everyone at the box top.
inline std::pair<Solution, EEReport> finish_power_baseline(
    const ProblemInstance& inst, const std::vector<double>& powers) {
  const std::vector<double> w = unit_costs(inst.topology);
  const std::vector<double> caps = capacities(inst.topology);
  std::vector<double> rates(inst.users.size());
  for (size_t j = 0; j < inst.users.size(); ++j)
    rates[j] = std::clamp(snap_rate(inst.rate_for_power(j, powers[j])),
                          inst.y_lo(j), inst.y_hi(j));
  FlowAssignment chi;
  try {
    chi = min_cost_route(inst.topology, demands_for_rates(inst, rates), w,
                         caps);
  } catch (const Error& e) {
    if (e.code() == errc::capacity_infeasible)
      fail(errc::instance_infeasible,
           "baseline rates exceed link capacities (C4)");
    throw;
  }
  Solution sol = assemble_solution(inst, std::move(rates), std::move(chi));
  const ConstraintReport check = validate(inst, sol);
  if (!check.all_pass())
    fail(errc::instance_infeasible,
         "baseline violates constraint " + check.first_failure());
  EEReport report;
  report.f1_bps = eval_f1(inst, sol.rates_bps);
  report.f2_watts = eval_f2(inst, sol.rates_bps, sol.loads);
  report.ee_bps_per_watt = report.f1_bps / report.f2_watts;
  report.alpha_joules_per_bit = report.f2_watts / report.f1_bps;
  return {std::move(sol), report};
}

// Fair share per node: budget net of the backhaul power at full demand,
// split equally over the node's users.
inline std::vector<double> fair_share_powers(const ProblemInstance& inst) {
  const std::vector<double> w = unit_costs(inst.topology);
  const std::vector<double> caps = capacities(inst.topology);
  std::vector<double> full(inst.users.size());
  for (size_t j = 0; j < inst.users.size(); ++j) full[j] = inst.y_hi(j);

  FlowAssignment chi;
  try {
    chi = min_cost_route(inst.topology, demands_for_rates(inst, full), w,
                         caps);
  } catch (const Error& e) {
    if (e.code() != errc::capacity_infeasible) throw;
    const double theta = largest_routable_theta(inst, full, w, caps);
    for (size_t j = 0; j < full.size(); ++j) {
      const double lo = inst.y_lo(j);
      full[j] = snap_rate(lo + theta * (full[j] - lo));
    }
    chi = min_cost_route(inst.topology, demands_for_rates(inst, full), w,
                         caps);
  }

  std::vector<double> bh(static_cast<size_t>(inst.topology.node_count()),
                         0.0);
  const LinkLoads loads = link_loads(chi);
  for (int node = 0; node < inst.topology.node_count(); ++node)
    for (int idx : inst.topology.out_links(node)) {
      const Link& link = inst.topology.links()[static_cast<size_t>(idx)];
      bh[static_cast<size_t>(node)] +=
          link.max_power_watts * loads.t[static_cast<size_t>(idx)] /
          link.capacity_bps;
    }

  std::vector<int> users_at(static_cast<size_t>(inst.topology.node_count()),
                            0);
  for (const UserSpec& u : inst.users)
    ++users_at[static_cast<size_t>(u.channel.attached_bs)];

  std::vector<double> share(static_cast<size_t>(inst.topology.node_count()),
                            0.0);
  for (const Node& node : inst.topology.nodes()) {
    const int count = users_at[static_cast<size_t>(node.id)];
    if (count > 0)
      share[static_cast<size_t>(node.id)] = std::max(
          0.0, (node.max_power_watts - bh[static_cast<size_t>(node.id)]) /
                   count);
  }
  std::vector<double> powers(inst.users.size());
  for (size_t j = 0; j < inst.users.size(); ++j)
    powers[j] =
        share[static_cast<size_t>(inst.users[j].channel.attached_bs)];
  return powers;
}

}  // namespace detail

// MTP split equally across a station's users, net of its backhaul share.
inline std::pair<Solution, EEReport> baseline_equal_power(
    const ProblemInstance& inst) {
  validate_instance(inst);
  if (inst.users.empty())
    fail(errc::degenerate_instance, "no users to schedule");
  try {
    return detail::finish_power_baseline(inst,
                                         detail::fair_share_powers(inst));
  } catch (const Error& e) {
    if (e.code() == errc::capacity_infeasible ||
        e.code() == errc::unroutable)
      fail(errc::instance_infeasible, e.what());
    throw;
  }
}

// Per-user power drawn uniformly from [0, fair share]; deterministic per
// seed.
inline std::pair<Solution, EEReport> baseline_random_power(
    const ProblemInstance& inst, uint64_t seed) {
  validate_instance(inst);
  if (inst.users.empty())
    fail(errc::degenerate_instance, "no users to schedule");
  try {
    std::vector<double> powers = detail::fair_share_powers(inst);
    SplitMix64 rng(derive_seed(seed, 29));
    for (double& p : powers) p *= rng.next_double();
    return detail::finish_power_baseline(inst, powers);
  } catch (const Error& e) {
    if (e.code() == errc::capacity_infeasible ||
        e.code() == errc::unroutable)
      fail(errc::instance_infeasible, e.what());
    throw;
  }
}

}  // namespace eeflow
