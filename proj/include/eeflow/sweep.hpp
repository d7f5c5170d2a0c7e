#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "eeflow/optimizer.hpp"
#include "eeflow/topology_gen.hpp"

namespace eeflow {

enum class SweepAxis { SnrDb, UserCount, Backhaul };

inline const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::SnrDb: return "snr_db";
    case SweepAxis::UserCount: return "user_count";
    case SweepAxis::Backhaul: return "backhaul";
  }
  return "?";
}

// How users are spread over the base stations.
enum class AttachPolicy { RoundRobin, MacroOnly, SmallOnly };

inline const char* attach_policy_name(AttachPolicy p) {
  switch (p) {
    case AttachPolicy::RoundRobin: return "round_robin";
    case AttachPolicy::MacroOnly: return "macro_only";
    case AttachPolicy::SmallOnly: return "small_only";
  }
  return "?";
}

struct UserGenSpec {
  int count = 6;
  double gain_db_mean = -96.0;
  double gain_db_sigma = 4.0;
  AttachPolicy attach = AttachPolicy::RoundRobin;
  std::optional<double> snr_target_db;
};

// Deterministic user placement: round-robin attachment, log-normal gains.
inline std::vector<UserSpec> generate_users(const Topology& topo,
                                            const UserGenSpec& gen,
                                            uint64_t seed) {
  if (gen.count < 1)
    fail(errc::validation_error, "user generator needs count >= 1");
  SplitMix64 rng(derive_seed(seed, 23));
  std::vector<UserSpec> users;
  users.reserve(static_cast<size_t>(gen.count));
  const int n = topo.node_count();
  for (int j = 0; j < gen.count; ++j) {
    UserSpec u;
    u.channel.user_id = j;
    switch (gen.attach) {
      case AttachPolicy::RoundRobin:
        u.channel.attached_bs = j % n;
        break;
      case AttachPolicy::MacroOnly:
        u.channel.attached_bs = 0;
        break;
      case AttachPolicy::SmallOnly:
        u.channel.attached_bs = 1 + j % (n - 1);
        break;
    }
    const double gain_db = gen.gain_db_mean + gen.gain_db_sigma * rng.normal();
    u.channel.gain_sq = std::pow(10.0, gain_db / 10.0);
    users.push_back(u);
  }
  return users;
}

// Realize a target access SNR by scaling the noise variance so the median
// user sees gain * P_fair / sigma^2 = 10^(snr/10) at the fair power share.
inline void apply_snr_target(RadioConfig& radio, const Topology& topo,
                             const std::vector<UserSpec>& users,
                             double snr_db) {
  if (users.empty()) return;
  std::vector<int> users_at(static_cast<size_t>(topo.node_count()), 0);
  for (const UserSpec& u : users)
    ++users_at[static_cast<size_t>(u.channel.attached_bs)];
  std::vector<double> gains;
  double fair_sum = 0.0;
  for (const UserSpec& u : users) {
    gains.push_back(u.channel.gain_sq);
    const Node& node =
        topo.nodes()[static_cast<size_t>(u.channel.attached_bs)];
    fair_sum +=
        node.max_power_watts /
        users_at[static_cast<size_t>(u.channel.attached_bs)];
  }
  std::sort(gains.begin(), gains.end());
  const double g_med = gains[gains.size() / 2];
  const double p_fair = fair_sum / static_cast<double>(users.size());
  const double sigma = g_med * p_fair / db_to_linear(snr_db);
  radio.sigma_sq_m_watts = sigma;
  radio.sigma_sq_s_watts = sigma;
}

// Everything needed to stamp out one randomized problem instance.
struct InstanceTemplate {
  TopoKind topo_kind = TopoKind::Star;
  int small_cells = 3;
  double min_distance_km = 0.2;
  double max_distance_km = 0.8;
  double bs_power_dbm = 43.0;
  double capacity_scale = 1.0;
  UserGenSpec users;
};

inline ProblemInstance make_instance(const RadioConfig& radio,
                                     const InstanceTemplate& tpl,
                                     uint64_t seed) {
  TopologyGenSpec topo_spec;
  topo_spec.kind = tpl.topo_kind;
  topo_spec.small_cells = tpl.small_cells;
  topo_spec.min_distance_km = tpl.min_distance_km;
  topo_spec.max_distance_km = tpl.max_distance_km;
  topo_spec.bs_power_dbm = tpl.bs_power_dbm;
  topo_spec.capacity_scale = tpl.capacity_scale;
  topo_spec.seed = derive_seed(seed, 1);

  ProblemInstance inst;
  inst.radio = radio;
  inst.topology = generate_topology(topo_spec, radio);
  inst.users = generate_users(inst.topology, tpl.users, derive_seed(seed, 2));
  if (tpl.users.snr_target_db)
    apply_snr_target(inst.radio, inst.topology, inst.users,
                     *tpl.users.snr_target_db);
  return inst;
}

// Sweep definition: one axis, its values, seeds, and the instance template
// the axis perturbs.
struct SweepSpec {
  SweepAxis axis = SweepAxis::SnrDb;
  std::vector<double> values;
  std::vector<uint64_t> seeds;
  InstanceTemplate tpl;
  double snr_db = 10.0;  // used when the axis is not SNR
  double tol = 1e-4;
};

inline void validate_sweep(const SweepSpec& spec) {
  if (spec.values.empty())
    fail(errc::validation_error, "sweep needs a nonempty value range");
  for (size_t i = 1; i < spec.values.size(); ++i)
    if (spec.values[i] <= spec.values[i - 1])
      fail(errc::validation_error, "sweep values must be strictly increasing");
  if (spec.seeds.empty())
    fail(errc::validation_error, "sweep needs at least one seed");
}

struct SweepRow {
  double axis_value = 0.0;
  std::string method;
  uint64_t seed = 0;
  double f1_bps = 0.0;
  double f2_watts = 0.0;
  double ee_bps_per_watt = 0.0;
  double max_link_util = 0.0;
  std::string status = "ok";  // or a stable error code
};

struct SweepAverage {
  double axis_value = 0.0;
  std::string method;
  double f1_bps = 0.0;
  double f2_watts = 0.0;
  double ee_bps_per_watt = 0.0;
  double max_link_util = 0.0;
  int n_ok = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepAverage> averages;
};

inline double max_link_utilization(const ProblemInstance& inst,
                                   const Solution& sol) {
  double worst = 0.0;
  for (int l = 0; l < inst.topology.link_count(); ++l)
    worst = std::max(worst,
                     sol.loads.t[static_cast<size_t>(l)] /
                         inst.topology.links()[static_cast<size_t>(l)]
                             .capacity_bps);
  return worst;
}

inline ProblemInstance instance_for_point(const SweepSpec& spec,
                                          double value, uint64_t seed,
                                          const RadioConfig& radio) {
  InstanceTemplate tpl = spec.tpl;
  double snr = spec.snr_db;
  switch (spec.axis) {
    case SweepAxis::SnrDb:
      snr = value;
      break;
    case SweepAxis::UserCount:
      tpl.users.count = static_cast<int>(value);
      break;
    case SweepAxis::Backhaul:
      tpl.capacity_scale = value;
      break;
  }
  tpl.users.snr_target_db = snr;
  return make_instance(radio, tpl, seed);
}

// One row per (axis value, method, seed), plus per-(value, method) means
// over the rows that solved. Row order is deterministic regardless of how
// the work is executed.
inline SweepResult run_sweep(const SweepSpec& spec, const RadioConfig& radio,
                             uint64_t root_seed) {
  validate_sweep(spec);
  static const char* kMethods[] = {"optimized", "equal_power",
                                   "random_power"};
  SweepResult result;
  for (size_t vi = 0; vi < spec.values.size(); ++vi) {
    const double value = spec.values[vi];
    for (size_t si = 0; si < spec.seeds.size(); ++si) {
      // One instance draw per seed, shared across the whole axis: only the
      // swept knob may differ between points of a curve.
      const uint64_t cell_seed = derive_seed(root_seed ^ spec.seeds[si], 101);
      ProblemInstance inst;
      bool built = false;
      std::string build_error;
      try {
        inst = instance_for_point(spec, value, cell_seed, radio);
        validate_instance(inst);
        built = true;
      } catch (const Error& e) {
        build_error = e.code_name();
      }
      for (int mi = 0; mi < 3; ++mi) {
        SweepRow row;
        row.axis_value = value;
        row.method = kMethods[mi];
        row.seed = spec.seeds[si];
        if (!built) {
          row.status = build_error;
        } else {
          try {
            std::pair<Solution, EEReport> out;
            if (mi == 0) {
              SolveOptions opts;
              opts.tol = spec.tol;
              out = solve_min_alpha(inst, opts);
            } else if (mi == 1) {
              out = baseline_equal_power(inst);
            } else {
              out = baseline_random_power(inst, derive_seed(cell_seed, 3));
            }
            const ConstraintReport audit = validate(inst, out.first);
            if (!audit.all_pass())
              fail(errc::validation_error,
                   "solution violates " + audit.first_failure());
            row.f1_bps = out.second.f1_bps;
            row.f2_watts = out.second.f2_watts;
            row.ee_bps_per_watt = out.second.ee_bps_per_watt;
            row.max_link_util = max_link_utilization(inst, out.first);
          } catch (const Error& e) {
            row.status = e.code_name();
          }
        }
        result.rows.push_back(std::move(row));
      }
    }
    // Means over the rows that solved, in method order.
    for (int mi = 0; mi < 3; ++mi) {
      SweepAverage avg;
      avg.axis_value = value;
      avg.method = kMethods[mi];
      for (const SweepRow& row : result.rows) {
        if (row.axis_value != value || row.method != kMethods[mi] ||
            row.status != "ok")
          continue;
        avg.f1_bps += row.f1_bps;
        avg.f2_watts += row.f2_watts;
        avg.ee_bps_per_watt += row.ee_bps_per_watt;
        avg.max_link_util += row.max_link_util;
        ++avg.n_ok;
      }
      if (avg.n_ok > 0) {
        avg.f1_bps /= avg.n_ok;
        avg.f2_watts /= avg.n_ok;
        avg.ee_bps_per_watt /= avg.n_ok;
        avg.max_link_util /= avg.n_ok;
      }
      result.averages.push_back(std::move(avg));
    }
  }
  return result;
}

namespace detail {

inline std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

inline void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "axis,method,seed,f1_bps,f2_w,ee_bps_per_w,max_link_util,status\n";
  for (const SweepRow& row : result.rows) {
    os << detail::fmt_g(row.axis_value) << ',' << row.method << ','
       << row.seed << ',' << detail::fmt_g(row.f1_bps) << ','
       << detail::fmt_g(row.f2_watts) << ','
       << detail::fmt_g(row.ee_bps_per_watt) << ','
       << detail::fmt_g(row.max_link_util) << ',' << row.status << '\n';
  }
}

inline void write_sweep_avg_csv(std::ostream& os, const SweepResult& result) {
  os << "axis,method,f1_bps,f2_w,ee_bps_per_w,max_link_util,n_ok\n";
  for (const SweepAverage& avg : result.averages) {
    os << detail::fmt_g(avg.axis_value) << ',' << avg.method << ','
       << detail::fmt_g(avg.f1_bps) << ',' << detail::fmt_g(avg.f2_watts)
       << ',' << detail::fmt_g(avg.ee_bps_per_watt) << ','
       << detail::fmt_g(avg.max_link_util) << ',' << avg.n_ok << '\n';
  }
}

}  // namespace eeflow
