#include <catch2/catch.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "eeflow/cli.hpp"

using namespace eeflow;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() /
          ("eeflow_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir / name;
    std::ofstream os(p);
    os << text;
    return p;
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kSolvableConfig =
    "[general]\nseed = 3\n"
    "[radio]\ny_min_bps = 1e5\ny_max_bps = 4e6\n"
    "[topology]\nkind = star\nsmall_cells = 2\n"
    "[users]\ncount = 4\nsnr_target_db = 10\n"
    "[optimizer]\ntol = 1e-3\n";

const char* kQueueConfig =
    "[topology]\nkind = star\n"
    "[ctmc]\nservers = 1\nlambda_r = 1\nmu_r = 1\ndump_pi = true\n"
    "[ctmc]\nservers = 2\nlambda_r = 1\nmu_r = 1\n";

}  // namespace

TEST_CASE("validate-config returns zero and writes nothing") {
  Scratch s;
  const fs::path cfg = s.write("ok.cfg", kSolvableConfig);
  CliOptions opts;
  opts.command = "validate-config";
  opts.config_path = cfg.string();
  opts.out_dir = (s.dir / "out").string();
  std::ostringstream diag;
  REQUIRE(run_command(opts, diag) == 0);
  REQUIRE(diag.str().empty());
  REQUIRE_FALSE(fs::exists(s.dir / "out"));
}

TEST_CASE("bad config exits 2 with one diagnostic line") {
  Scratch s;
  const fs::path cfg = s.write("bad.cfg", "[radio]\nfoo = 1\n");
  CliOptions opts;
  opts.command = "validate-config";
  opts.config_path = cfg.string();
  std::ostringstream diag;
  REQUIRE(run_command(opts, diag) == 2);
  const std::string out = diag.str();
  REQUIRE(out.rfind("error code=E_PARSE", 0) == 0);
  REQUIRE(std::count(out.begin(), out.end(), '\n') == 1);
}

TEST_CASE("solve writes report, solution and flows") {
  Scratch s;
  const fs::path cfg = s.write("run.cfg", kSolvableConfig);
  CliOptions opts;
  opts.command = "solve";
  opts.config_path = cfg.string();
  opts.out_dir = (s.dir / "out").string();
  std::ostringstream diag;
  REQUIRE(run_command(opts, diag) == 0);
  REQUIRE(fs::exists(s.dir / "out" / "report.txt"));
  REQUIRE(fs::exists(s.dir / "out" / "solution.csv"));
  REQUIRE(fs::exists(s.dir / "out" / "flows.csv"));
  REQUIRE(fs::exists(s.dir / "out" / "links.csv"));
  const std::string report = read_file(s.dir / "out" / "report.txt");
  REQUIRE(report.find("ee_bps_per_w") != std::string::npos);
  for (const char* c : {"C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9"})
    REQUIRE(report.find(std::string(c) + " = pass") != std::string::npos);
}

TEST_CASE("infeasible instance exits 1 naming the constraint class") {
  Scratch s;
  s.write("topo.txt",
          "[node]\nid = 0\nkind = macro\npower_w = 20\n"
          "[node]\nid = 1\nkind = small\npower_w = 20\n"
          "[link]\nfrom = 0\nto = 1\nband = e\ndistance_km = 0.4\n"
          "capacity_bps = 2e4\n");
  const fs::path cfg = s.write(
      "run.cfg",
      "[topology]\nfile = topo.txt\n"
      "[user]\nid = 0\nattached_bs = 1\ngain_sq = 1e-10\n");
  CliOptions opts;
  opts.command = "solve";
  opts.config_path = cfg.string();
  opts.out_dir = (s.dir / "out").string();
  std::ostringstream diag;
  REQUIRE(run_command(opts, diag) == 1);
  REQUIRE(diag.str().find("E_INSTANCE_INFEASIBLE") != std::string::npos);
  REQUIRE(diag.str().find("C4") != std::string::npos);
}

TEST_CASE("queue writes one metrics row per spec plus pi dumps") {
  Scratch s;
  const fs::path cfg = s.write("queue.cfg", kQueueConfig);
  CliOptions opts;
  opts.command = "queue";
  opts.config_path = cfg.string();
  opts.out_dir = (s.dir / "out").string();
  std::ostringstream diag;
  REQUIRE(run_command(opts, diag) == 0);
  const std::string csv = read_file(s.dir / "out" / "queue_metrics.csv");
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
  REQUIRE(fs::exists(s.dir / "out" / "pi_0.csv"));
  REQUIRE_FALSE(fs::exists(s.dir / "out" / "pi_1.csv"));
}

TEST_CASE("gen-topology emits a file the parser accepts") {
  Scratch s;
  const fs::path cfg = s.write(
      "gen.cfg", "[topology]\nkind = random_tree\nsmall_cells = 4\n");
  CliOptions opts;
  opts.command = "gen-topology";
  opts.config_path = cfg.string();
  opts.out_dir = (s.dir / "out").string();
  std::ostringstream diag;
  REQUIRE(run_command(opts, diag) == 0);
  const std::string text = read_file(s.dir / "out" / "topology.txt");
  const Topology topo = parse_topology_text(text, RadioConfig{});
  REQUIRE(topo.node_count() == 5);
  REQUIRE(reachable_destinations(topo).size() == 4);
}

TEST_CASE("sweep produces CSV tables and metadata") {
  Scratch s;
  const fs::path cfg = s.write(
      "sweep.cfg",
      "[general]\nseed = 5\n"
      "[topology]\nkind = star\n"
      "[sweep]\naxis = snr_db\nvalues = 8,12\nseeds = 1\n"
      "small_cells = 2\nusers = 3\ntol = 1e-3\n");
  CliOptions opts;
  opts.command = "sweep";
  opts.config_path = cfg.string();
  opts.out_dir = (s.dir / "out").string();
  std::ostringstream diag;
  REQUIRE(run_command(opts, diag) == 0);
  const std::string csv = read_file(s.dir / "out" / "sweep.csv");
  REQUIRE(csv.rfind("axis,method,seed,f1_bps,f2_w,ee_bps_per_w,"
                    "max_link_util,status\n",
                    0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 3);
  REQUIRE(fs::exists(s.dir / "out" / "sweep_avg.csv"));
  const std::string meta = read_file(s.dir / "out" / "sweep_meta.txt");
  REQUIRE(meta.find("[sweep]") != std::string::npos);
}

TEST_CASE("identical seed and config give byte-identical outputs") {
  Scratch s;
  const fs::path cfg = s.write(
      "sweep.cfg",
      "[topology]\nkind = star\n"
      "[sweep]\naxis = snr_db\nvalues = 10\nseeds = 1,2\n"
      "small_cells = 2\nusers = 3\ntol = 1e-3\n");
  std::ostringstream diag;
  for (const char* out : {"out_a", "out_b"}) {
    CliOptions opts;
    opts.command = "sweep";
    opts.config_path = cfg.string();
    opts.out_dir = (s.dir / out).string();
    opts.seed = 99;
    REQUIRE(run_command(opts, diag) == 0);
  }
  REQUIRE(read_file(s.dir / "out_a" / "sweep.csv") ==
          read_file(s.dir / "out_b" / "sweep.csv"));
  REQUIRE(read_file(s.dir / "out_a" / "sweep_avg.csv") ==
          read_file(s.dir / "out_b" / "sweep_avg.csv"));
}

TEST_CASE("unknown command is a config error") {
  Scratch s;
  const fs::path cfg = s.write("ok.cfg", kSolvableConfig);
  CliOptions opts;
  opts.command = "frobnicate";
  opts.config_path = cfg.string();
  std::ostringstream diag;
  REQUIRE(run_command(opts, diag) == 2);
}
