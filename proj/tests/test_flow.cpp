#include <catch2/catch.hpp>
#include <cmath>
#include <sstream>

#include "eeflow/flow.hpp"
#include "eeflow/rng.hpp"
#include "eeflow/topology.hpp"
#include "lp_oracle.hpp"

using namespace eeflow;

namespace {

Node node(int id, NodeKind kind) {
  Node n;
  n.id = id;
  n.kind = kind;
  n.max_power_watts = 20.0;
  return n;
}

Link link(int from, int to, double cap = 1e9) {
  Link l;
  l.from = from;
  l.to = to;
  l.band = Band::VBand;
  l.distance_km = 0.3;
  l.capacity_bps = cap;
  l.max_power_watts = 5.0;
  return l;
}

Topology chain3() {
  return build_incidence(
      {node(0, NodeKind::Macro), node(1, NodeKind::Small),
       node(2, NodeKind::Small)},
      {link(0, 1), link(1, 2)});
}

// 0->1->2 two-hop plus a direct 0->2 link.
Topology two_path(double cap01 = 1e9) {
  return build_incidence(
      {node(0, NodeKind::Macro), node(1, NodeKind::Small),
       node(2, NodeKind::Small)},
      {link(0, 1, cap01), link(1, 2), link(0, 2)});
}

double objective(const Topology& topo, const FlowAssignment& chi,
                 const std::vector<double>& costs) {
  const LinkLoads loads = link_loads(chi);
  double obj = 0.0;
  for (int l = 0; l < topo.link_count(); ++l)
    obj += costs[(size_t)l] * loads.t[(size_t)l];
  return obj;
}

double max_abs_residual(const std::vector<std::vector<double>>& residual) {
  double worst = 0.0;
  for (const auto& row : residual)
    for (double v : row) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace

TEST_CASE("conservation residual on a single link") {
  Topology topo = build_incidence(
      {node(0, NodeKind::Macro), node(1, NodeKind::Small)}, {link(0, 1)});
  DemandVector demands{{5.0}};
  FlowAssignment chi(1, 1);
  chi.at(0, 1) = 5.0;
  auto residual = conservation_residual(topo, chi, demands);
  REQUIRE(residual[0][0] == 0.0);
  REQUIRE(residual[0][1] == 0.0);

  chi.at(0, 1) = 4.0;
  residual = conservation_residual(topo, chi, demands);
  REQUIRE(residual[0][0] == Approx(-1.0));
  REQUIRE(residual[0][1] == Approx(1.0));
}

TEST_CASE("conservation holds through a relay") {
  Topology topo = chain3();
  DemandVector demands{{3.0, 2.0}};
  FlowAssignment chi(2, 2);
  chi.at(0, 1) = 3.0;  // dest 1 rides only the first hop
  chi.at(0, 2) = 2.0;  // dest 2 rides both
  chi.at(1, 2) = 2.0;
  REQUIRE(max_abs_residual(conservation_residual(topo, chi, demands)) == 0.0);
}

TEST_CASE("dimension mismatch is rejected") {
  Topology topo = chain3();
  DemandVector demands{{3.0}};
  FlowAssignment chi(2, 2);
  REQUIRE_THROWS_AS(conservation_residual(topo, chi, demands), Error);
}

TEST_CASE("link loads sum the destination columns") {
  FlowAssignment chi(2, 2);
  chi.at(0, 1) = 3.0;
  chi.at(0, 2) = 2.0;
  chi.at(1, 2) = 2.0;
  const LinkLoads loads = link_loads(chi);
  REQUIRE(loads.t[0] == Approx(5.0));
  REQUIRE(loads.t[1] == Approx(2.0));

  FlowAssignment zero(3, 2);
  for (double t : link_loads(zero).t) REQUIRE(t == 0.0);
}

TEST_CASE("capacity check flags only true violations") {
  REQUIRE(check_capacity(LinkLoads{{5.0, 2.0}}, {10.0, 10.0}).empty());
  const auto violations = check_capacity(LinkLoads{{5.0, 2.0}}, {4.0, 10.0});
  REQUIRE(violations.size() == 1);
  REQUIRE(violations[0].link_id == 1);
  REQUIRE(violations[0].excess_bps == Approx(1.0));
  // closed constraint: exactly at capacity is feasible
  REQUIRE(check_capacity(LinkLoads{{10.0}}, {10.0}).empty());
}

TEST_CASE("min cost routing prefers the cheap two-hop path") {
  Topology topo = two_path();
  const std::vector<double> costs = {1.0, 1.0, 3.0};
  const std::vector<double> caps = {1e9, 1e9, 1e9};
  DemandVector demands{{0.0, 5.0}};
  const FlowAssignment chi = min_cost_route(topo, demands, costs, caps);
  REQUIRE(chi.at(0, 2) == Approx(5.0));
  REQUIRE(chi.at(1, 2) == Approx(5.0));
  REQUIRE(chi.at(2, 2) == Approx(0.0).margin(1e-12));
  REQUIRE(objective(topo, chi, costs) == Approx(10.0));
}

TEST_CASE("min cost routing splits at the bottleneck") {
  Topology topo = two_path(3.0);
  const std::vector<double> costs = {1.0, 1.0, 3.0};
  const std::vector<double> caps = {3.0, 1e9, 1e9};
  DemandVector demands{{0.0, 5.0}};
  const FlowAssignment chi = min_cost_route(topo, demands, costs, caps);
  REQUIRE(chi.at(0, 2) == Approx(3.0));
  REQUIRE(chi.at(1, 2) == Approx(3.0));
  REQUIRE(chi.at(2, 2) == Approx(2.0));
  REQUIRE(objective(topo, chi, costs) == Approx(12.0));
}

TEST_CASE("zero demand routes nothing") {
  Topology topo = two_path();
  const FlowAssignment chi = min_cost_route(
      topo, DemandVector{{0.0, 0.0}}, {1.0, 1.0, 3.0}, {1e9, 1e9, 1e9});
  for (double v : chi.chi) REQUIRE(v == 0.0);
}

TEST_CASE("unroutable demand is a hard error") {
  Topology topo = build_incidence(
      {node(0, NodeKind::Macro), node(1, NodeKind::Small),
       node(2, NodeKind::Small)},
      {link(1, 2)});
  REQUIRE_THROWS_MATCHES(
      min_cost_route(topo, DemandVector{{0.0, 1.0}}, {1.0}, {1e9}), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == errc::unroutable; }));
}

TEST_CASE("insufficient capacity is detected") {
  Topology topo = chain3();
  REQUIRE_THROWS_MATCHES(
      min_cost_route(topo, DemandVector{{0.0, 10.0}}, {1.0, 1.0}, {4.0, 4.0}),
      Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.code() == errc::capacity_infeasible;
      }));
}

TEST_CASE("marginal route cost is the cheapest path") {
  Topology topo = two_path();
  REQUIRE(marginal_route_cost(topo, {1.0, 1.0, 3.0}, 2) == Approx(2.0));
  REQUIRE(marginal_route_cost(topo, {1.0, 1.0, 3.0}, 1) == Approx(1.0));

  Topology direct = build_incidence(
      {node(0, NodeKind::Macro), node(1, NodeKind::Small)}, {link(0, 1)});
  REQUIRE(marginal_route_cost(direct, {7.0}, 1) == Approx(7.0));
}

TEST_CASE("marginal cost ignores link labeling") {
  // same graph, links listed in a different order
  Topology a = build_incidence(
      {node(0, NodeKind::Macro), node(1, NodeKind::Small),
       node(2, NodeKind::Small)},
      {link(0, 1), link(1, 2), link(0, 2)});
  Topology b = build_incidence(
      {node(0, NodeKind::Macro), node(1, NodeKind::Small),
       node(2, NodeKind::Small)},
      {link(0, 2), link(0, 1), link(1, 2)});
  REQUIRE(marginal_route_cost(a, {1.0, 1.0, 3.0}, 2) ==
          Approx(marginal_route_cost(b, {3.0, 1.0, 1.0}, 2)));
}

namespace {

struct RandomCase {
  Topology topo;
  DemandVector demands;
  std::vector<double> costs;
  std::vector<double> caps;
};

RandomCase random_case(uint64_t seed) {
  SplitMix64 rng(seed);
  const int cells = 2 + static_cast<int>(rng.next_below(3));  // 2..4
  std::vector<Node> nodes = {node(0, NodeKind::Macro)};
  for (int v = 1; v <= cells; ++v) nodes.push_back(node(v, NodeKind::Small));

  std::vector<Link> links;
  for (int v = 1; v <= cells; ++v)
    links.push_back(link(static_cast<int>(rng.next_below((uint64_t)v)), v));
  while (links.size() < 6 && rng.next_double() < 0.6) {
    const int from = static_cast<int>(rng.next_below((uint64_t)cells));
    const int to = 1 + static_cast<int>(rng.next_below((uint64_t)cells));
    if (from == to) continue;
    bool dup = false;
    for (const Link& l : links)
      if (l.from == from && l.to == to) dup = true;
    if (!dup) links.push_back(link(from, to));
  }
  for (size_t i = 0; i < links.size(); ++i) links[i].id = 0;

  RandomCase out{build_incidence(nodes, links), {}, {}, {}};
  for (int d = 1; d <= cells; ++d)
    out.demands.demand_bps.push_back(
        rng.next_double() < 0.25 ? 0.0 : snap_rate(rng.uniform(1e5, 2e6)));
  for (size_t l = 0; l < links.size(); ++l) {
    out.costs.push_back(rng.uniform(0.1, 5.0));
    out.caps.push_back(rng.uniform(5e5, 4e6));
  }
  return out;
}

}  // namespace

TEST_CASE("routing matches the LP oracle on random small graphs") {
  int solved = 0, infeasible = 0;
  for (uint64_t seed = 1; seed <= 200; ++seed) {
    RandomCase rc = random_case(seed);
    bool ssp_ok = true;
    FlowAssignment chi;
    try {
      chi = min_cost_route(rc.topo, rc.demands, rc.costs, rc.caps);
    } catch (const Error& e) {
      REQUIRE((e.code() == errc::capacity_infeasible ||
               e.code() == errc::unroutable));
      ssp_ok = false;
    }
    const auto oracle =
        lp_oracle::min_cost_oracle(rc.topo, rc.demands, rc.costs, rc.caps);
    // Reachability mismatch cases: the LP also reports them infeasible.
    REQUIRE(ssp_ok == oracle.feasible);
    if (!ssp_ok) {
      ++infeasible;
      continue;
    }
    ++solved;
    const double obj = objective(rc.topo, chi, rc.costs);
    REQUIRE(obj == Approx(oracle.objective)
                       .epsilon(1e-6)
                       .margin(1e-9 * std::max(1.0, oracle.objective)));
    REQUIRE(max_abs_residual(
                conservation_residual(rc.topo, chi, rc.demands)) < 1e-9);
    REQUIRE(check_capacity(link_loads(chi), rc.caps).empty());
    for (double v : chi.chi) REQUIRE(v >= 0.0);
  }
  // the generator must exercise both outcomes
  REQUIRE(solved > 50);
  REQUIRE(infeasible > 0);
}

TEST_CASE("slack-capacity optimum decomposes over shortest paths") {
  for (uint64_t seed = 300; seed < 330; ++seed) {
    RandomCase rc = random_case(seed);
    for (double& c : rc.caps) c = 1e12;  // force slack
    const FlowAssignment chi =
        min_cost_route(rc.topo, rc.demands, rc.costs, rc.caps);
    const double obj = objective(rc.topo, chi, rc.costs);
    double expect = 0.0;
    for (int d = 1; d <= rc.topo.dest_count(); ++d) {
      const double s = rc.demands.demand_bps[(size_t)(d - 1)];
      if (s > 0.0) expect += s * marginal_route_cost(rc.topo, rc.costs, d);
    }
    REQUIRE(obj == Approx(expect).epsilon(1e-12).margin(1e-9));
  }
}

TEST_CASE("slack-capacity optimum scales linearly with demand") {
  RandomCase rc = random_case(77);
  for (double& c : rc.caps) c = 1e12;
  const double obj1 = objective(
      rc.topo, min_cost_route(rc.topo, rc.demands, rc.costs, rc.caps),
      rc.costs);
  DemandVector scaled = rc.demands;
  for (double& s : scaled.demand_bps) s = snap_rate(3.0 * s);
  const double obj3 = objective(
      rc.topo, min_cost_route(rc.topo, scaled, rc.costs, rc.caps), rc.costs);
  REQUIRE(obj3 == Approx(3.0 * obj1).epsilon(1e-9));
}

TEST_CASE("flow CSV export lists every link-destination pair") {
  Topology topo = chain3();
  const FlowAssignment chi = min_cost_route(
      topo, DemandVector{{1.0, 2.0}}, {1.0, 1.0}, {1e9, 1e9});
  std::ostringstream os;
  write_flows_csv(os, topo, chi);
  const std::string text = os.str();
  REQUIRE(text.rfind("link_id,dest_id,flow_bps\n", 0) == 0);
  size_t lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  REQUIRE(lines == 1 + 2 * 2);
}
