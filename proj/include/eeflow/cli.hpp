#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include "eeflow/config.hpp"

namespace eeflow {

struct CliOptions {
  std::string command;  // solve | sweep | queue | validate-config | gen-topology
  std::string config_path;
  std::string out_dir = "out";
  std::optional<uint64_t> seed;
  std::optional<double> tol;
};

namespace detail {

inline bool log_enabled() {
  const char* v = std::getenv("EEFLOW_LOG");
  return v != nullptr && std::string(v) != "" && std::string(v) != "0";
}

inline void diag_error(std::ostream& diag, const Error& e) {
  diag << "error code=" << e.code_name() << " msg=\"" << e.what() << "\"\n";
}

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case errc::parse_error:
    case errc::validation_error:
    case errc::missing_file:
    case errc::io_error:
      return 2;
    default:
      return 1;  // infeasible instance or solver failure
  }
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(errc::io_error, "cannot write " + path.string());
  return os;
}

inline std::string fmt_opt(const std::optional<double>& v) {
  return fmt_g(v ? *v : std::numeric_limits<double>::quiet_NaN());
}

inline void write_solve_outputs(const std::filesystem::path& out_dir,
                                const ProblemInstance& inst,
                                const Solution& sol, const EEReport& report) {
  {
    auto os = open_out(out_dir / "report.txt");
    os << "command = solve\n";
    os << "f1_bps = " << fmt_g(report.f1_bps) << '\n';
    os << "f2_w = " << fmt_g(report.f2_watts) << '\n';
    os << "ee_bps_per_w = " << fmt_g(report.ee_bps_per_watt) << '\n';
    os << "alpha_j_per_bit = " << fmt_g(report.alpha_joules_per_bit) << '\n';
    os << "iterations = " << report.iterations << '\n';
    os << "bracket_width = " << fmt_g(report.bracket_width) << '\n';
    const ConstraintReport checks = validate(inst, sol);
    for (const ConstraintCheck& c : checks.checks)
      os << c.name << " = " << (c.pass ? "pass" : "FAIL")
         << " worst_residual=" << fmt_g(c.worst_residual) << '\n';
  }
  {
    auto os = open_out(out_dir / "solution.csv");
    os << "user_id,attached_bs,rate_bps,access_power_w\n";
    for (size_t j = 0; j < inst.users.size(); ++j) {
      os << inst.users[j].channel.user_id << ','
         << inst.users[j].channel.attached_bs << ','
         << fmt_g(sol.rates_bps[j]) << ','
         << fmt_g(sol.access_powers_watts[j]) << '\n';
    }
  }
  {
    auto os = open_out(out_dir / "flows.csv");
    write_flows_csv(os, inst.topology, sol.flows);
  }
  {
    auto os = open_out(out_dir / "links.csv");
    os << "link_id,from,to,load_bps,capacity_bps,utilization,"
          "backhaul_power_w\n";
    for (int l = 0; l < inst.topology.link_count(); ++l) {
      const Link& link = inst.topology.links()[static_cast<size_t>(l)];
      os << link.id << ',' << link.from << ',' << link.to << ','
         << fmt_g(sol.loads.t[static_cast<size_t>(l)]) << ','
         << fmt_g(link.capacity_bps) << ','
         << fmt_g(sol.loads.t[static_cast<size_t>(l)] / link.capacity_bps)
         << ',' << fmt_g(sol.backhaul_powers_watts[static_cast<size_t>(l)])
         << '\n';
    }
  }
}

inline void write_queue_outputs(const std::filesystem::path& out_dir,
                                const RunConfig& cfg) {
  auto os = open_out(out_dir / "queue_metrics.csv");
  os << "servers,queue_r,queue_tau,lambda_s,lambda_r,lambda_tau,"
        "mu_s,mu_r,mu_tau,alpha_s,alpha_v,"
        "pf1,pf2,scr1,scr2,utilization,l1,l2,d1,d2,r_interrupt\n";
  for (size_t idx = 0; idx < cfg.ctmc_runs.size(); ++idx) {
    const CtmcRun& run = cfg.ctmc_runs[idx];
    const StateSpace space = enumerate_states(run.spec);
    const Generator q = build_generator(run.spec, space);
    const std::vector<double> pi = solve_stationary(q);
    const QueueMetrics m = queue_metrics(run.spec, space, pi);
    os << run.spec.servers << ',' << run.spec.queue_r_capacity << ','
       << run.spec.queue_tau_capacity << ',' << fmt_g(run.spec.lambda_s)
       << ',' << fmt_g(run.spec.lambda_r) << ',' << fmt_g(run.spec.lambda_tau)
       << ',' << fmt_g(run.spec.mu_s) << ',' << fmt_g(run.spec.mu_r) << ','
       << fmt_g(run.spec.mu_tau) << ',' << fmt_g(run.spec.alpha_s) << ','
       << fmt_g(run.spec.alpha_v) << ',' << fmt_g(m.pf1) << ','
       << fmt_g(m.pf2) << ',' << fmt_g(m.scr1) << ',' << fmt_g(m.scr2) << ','
       << fmt_g(m.utilization) << ',' << fmt_g(m.l1) << ',' << fmt_g(m.l2)
       << ',' << fmt_opt(m.d1) << ',' << fmt_opt(m.d2) << ','
       << fmt_g(m.r_interrupt) << '\n';
    if (run.dump_pi) {
      auto pos = open_out(out_dir /
                          ("pi_" + std::to_string(idx) + ".csv"));
      pos << "i,j,k,m,n,pi\n";
      for (int s = 0; s < space.size(); ++s) {
        const CtmcState& st = space.states[static_cast<size_t>(s)];
        pos << st.i << ',' << st.j << ',' << st.k << ',' << st.m << ','
            << st.n << ',' << fmt_g(pi[static_cast<size_t>(s)]) << '\n';
      }
    }
  }
}

}  // namespace detail

// Batch command dispatch. Returns the process exit status: 0 on success, 1
// on an infeasible instance or solver failure, 2 on a configuration error.
// Every failure prints exactly one machine-parseable line on `diag`.
inline int run_command(const CliOptions& opts, std::ostream& diag) {
  RunConfig cfg;
  try {
    cfg = parse_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.tol) {
      if (*opts.tol <= 0.0)
        fail(errc::validation_error, "--tol must be positive");
      cfg.optimizer.tol = *opts.tol;
      if (cfg.sweep) cfg.sweep->tol = *opts.tol;
    }
  } catch (const Error& e) {
    detail::diag_error(diag, e);
    return 2;
  }

  try {
    if (detail::log_enabled())
      diag << "eeflow: " << opts.command << " config=" << opts.config_path
           << " seed=" << cfg.seed << '\n';

    if (opts.command == "validate-config") return 0;

    const std::filesystem::path out_dir(opts.out_dir);
    std::filesystem::create_directories(out_dir);

    if (opts.command == "gen-topology") {
      if (!cfg.topology_gen)
        fail(errc::validation_error,
             "gen-topology needs a [topology] generator section");
      TopologyGenSpec gen = *cfg.topology_gen;
      gen.seed = derive_seed(cfg.seed, 11);
      const Topology topo = generate_topology(gen, cfg.radio);
      auto os = detail::open_out(out_dir / "topology.txt");
      os << serialize_topology(topo);
      return 0;
    }

    if (opts.command == "solve") {
      const ProblemInstance inst = instance_from_config(cfg, cfg.seed);
      SolveOptions sopts;
      sopts.tol = cfg.optimizer.tol;
      sopts.max_bisections = std::min(200, cfg.optimizer.max_iterations);
      const auto [sol, report] = solve_min_alpha(inst, sopts);
      detail::write_solve_outputs(out_dir, inst, sol, report);
      return 0;
    }

    if (opts.command == "queue") {
      if (cfg.ctmc_runs.empty())
        fail(errc::validation_error, "queue needs at least one [ctmc] section");
      detail::write_queue_outputs(out_dir, cfg);
      return 0;
    }

    if (opts.command == "sweep") {
      if (!cfg.sweep)
        fail(errc::validation_error, "sweep needs a [sweep] section");
      const SweepResult result = run_sweep(*cfg.sweep, cfg.radio, cfg.seed);
      {
        auto os = detail::open_out(out_dir / "sweep.csv");
        write_sweep_csv(os, result);
      }
      {
        auto os = detail::open_out(out_dir / "sweep_avg.csv");
        write_sweep_avg_csv(os, result);
      }
      {
        auto os = detail::open_out(out_dir / "sweep_meta.txt");
        os << "# canonical configuration for this sweep\n";
        os << serialize_config(cfg);
      }
      return 0;
    }

    fail(errc::validation_error, "unknown command '" + opts.command + "'");
  } catch (const Error& e) {
    detail::diag_error(diag, e);
    return detail::exit_code_for(e);
  }
}

}  // namespace eeflow
