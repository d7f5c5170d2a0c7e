#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eeflow/ctmc.hpp"
#include "eeflow/sweep.hpp"

namespace eeflow {

// ---------------------------------------------------------------------
// Flat sectioned key-value text. '#' starts a comment, sections repeat
// where lists are needed ([node], [link], [user], [ctmc]). Unknown keys
// are rejected, values are range-checked, and serialization is canonical
// so parse -> serialize -> parse is idempotent.
// ---------------------------------------------------------------------

struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
  int col = 0;
};

struct KvSection {
  std::string name;
  int line = 0;
  std::vector<KvEntry> entries;

  const KvEntry* find(const std::string& key) const {
    for (const KvEntry& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] inline void parse_fail(int line, int col,
                                    const std::string& msg) {
  fail(errc::parse_error, "line " + std::to_string(line) + ", col " +
                              std::to_string(col) + ": " + msg);
}

}  // namespace detail

inline std::vector<KvSection> parse_kv_text(const std::string& text) {
  std::vector<KvSection> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    std::string line =
        detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        detail::parse_fail(line_no, static_cast<int>(line.size()),
                           "unterminated section header");
      const std::string name = detail::trim(line.substr(1, line.size() - 2));
      if (name.empty())
        detail::parse_fail(line_no, 1, "empty section name");
      sections.push_back(KvSection{name, line_no, {}});
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      detail::parse_fail(line_no, 1, "expected key = value");
    KvEntry entry;
    entry.key = detail::trim(line.substr(0, eq));
    entry.value = detail::trim(line.substr(eq + 1));
    entry.line = line_no;
    entry.col = 1;
    if (entry.key.empty())
      detail::parse_fail(line_no, 1, "empty key");
    if (sections.empty())
      detail::parse_fail(line_no, 1,
                         "key '" + entry.key + "' outside any section");
    sections.back().entries.push_back(std::move(entry));
  }
  return sections;
}

namespace detail {

// Typed readers. Each tracks which keys were consumed so leftovers can be
// rejected with their location.
class SectionReader {
 public:
  explicit SectionReader(const KvSection& section) : section_(section) {}

  std::optional<std::string> raw(const std::string& key) {
    const KvEntry* e = section_.find(key);
    if (!e) return std::nullopt;
    used_.push_back(key);
    return e->value;
  }

  std::optional<double> number(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    char* end = nullptr;
    const double x = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0')
      fail(errc::validation_error,
           "field '" + key + "': '" + *v + "' is not a number");
    return x;
  }

  std::optional<long long> integer(const std::string& key) {
    auto v = number(key);
    if (!v) return std::nullopt;
    const long long i = static_cast<long long>(*v);
    if (static_cast<double>(i) != *v)
      fail(errc::validation_error, "field '" + key + "' must be an integer");
    return i;
  }

  std::optional<bool> boolean(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    if (*v == "true") return true;
    if (*v == "false") return false;
    fail(errc::validation_error,
         "field '" + key + "' must be true or false");
  }

  std::optional<std::vector<double>> number_list(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    std::istringstream in(*v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      tok = trim(tok);
      if (tok.empty())
        fail(errc::validation_error, "field '" + key + "': empty list item");
      char* end = nullptr;
      out.push_back(std::strtod(tok.c_str(), &end));
      if (end == tok.c_str() || *end != '\0')
        fail(errc::validation_error,
             "field '" + key + "': '" + tok + "' is not a number");
    }
    if (out.empty())
      fail(errc::validation_error, "field '" + key + "' is an empty list");
    return out;
  }

  // Every key must have been consumed.
  void finish() const {
    for (const KvEntry& e : section_.entries) {
      bool ok = false;
      for (const std::string& u : used_)
        if (u == e.key) ok = true;
      if (!ok)
        parse_fail(e.line, e.col, "unknown key '" + e.key + "' in section [" +
                                      section_.name + "]");
    }
  }

 private:
  const KvSection& section_;
  std::vector<std::string> used_;
};

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------
// Topology file: repeated [node] and [link] records.
// ---------------------------------------------------------------------

inline Topology parse_topology_text(const std::string& text,
                                    const RadioConfig& radio) {
  std::vector<Node> nodes;
  std::vector<Link> links;
  for (const KvSection& section : parse_kv_text(text)) {
    detail::SectionReader r(section);
    if (section.name == "node") {
      Node node;
      auto id = r.integer("id");
      if (!id) fail(errc::validation_error, "node record needs an id");
      node.id = static_cast<int>(*id);
      const auto kind = r.raw("kind");
      if (!kind || (*kind != "macro" && *kind != "small"))
        fail(errc::validation_error,
             "node " + std::to_string(node.id) + ": kind must be macro|small");
      node.kind = *kind == "macro" ? NodeKind::Macro : NodeKind::Small;
      if (auto c = r.integer("cluster")) node.cluster_id = static_cast<int>(*c);
      node.is_cluster_head = r.boolean("head").value_or(false);
      const auto power = r.number("power_w");
      if (!power)
        fail(errc::validation_error,
             "node " + std::to_string(node.id) + " needs power_w");
      node.max_power_watts = *power;
      r.finish();
      nodes.push_back(node);
    } else if (section.name == "link") {
      Link link;
      link.id = static_cast<int>(r.integer("id").value_or(0));
      const auto from = r.integer("from");
      const auto to = r.integer("to");
      if (!from || !to)
        fail(errc::validation_error, "link record needs from and to");
      link.from = static_cast<int>(*from);
      link.to = static_cast<int>(*to);
      const auto band = r.raw("band");
      if (!band || (*band != "e" && *band != "v"))
        fail(errc::validation_error, "link band must be e|v");
      link.band = *band == "e" ? Band::EBand : Band::VBand;
      const auto dist = r.number("distance_km");
      if (!dist || *dist <= 0.0)
        fail(errc::validation_error, "link needs distance_km > 0");
      link.distance_km = *dist;
      const auto cap = r.number("capacity_bps");
      const auto max_p = r.number("max_power_w");
      const LinkBudget budget =
          compute_link_budget(radio, link.band, link.distance_km);
      link.capacity_bps = cap.value_or(budget.capacity_bps);
      link.max_power_watts = max_p.value_or(budget.max_power_watts);
      r.finish();
      links.push_back(link);
    } else {
      fail(errc::parse_error, "line " + std::to_string(section.line) +
                                  ": unknown topology section [" +
                                  section.name + "]");
    }
  }
  return build_incidence(std::move(nodes), std::move(links));
}

inline std::string serialize_topology(const Topology& topo) {
  std::ostringstream os;
  for (const Node& node : topo.nodes()) {
    os << "[node]\n";
    os << "id = " << node.id << '\n';
    os << "kind = " << (node.kind == NodeKind::Macro ? "macro" : "small")
       << '\n';
    if (node.cluster_id) os << "cluster = " << *node.cluster_id << '\n';
    if (node.is_cluster_head) os << "head = true\n";
    os << "power_w = " << detail::fmt17(node.max_power_watts) << '\n';
  }
  for (const Link& link : topo.links()) {
    os << "[link]\n";
    os << "id = " << link.id << '\n';
    os << "from = " << link.from << '\n';
    os << "to = " << link.to << '\n';
    os << "band = " << band_name(link.band) << '\n';
    os << "distance_km = " << detail::fmt17(link.distance_km) << '\n';
    os << "capacity_bps = " << detail::fmt17(link.capacity_bps) << '\n';
    os << "max_power_w = " << detail::fmt17(link.max_power_watts) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------
// Run configuration.
// ---------------------------------------------------------------------

struct OptimizerOpts {
  double tol = 1e-4;
  int max_iterations = 2000;
};

struct CtmcRun {
  CtmcSpec spec;
  bool dump_pi = false;
};

struct RunConfig {
  uint64_t seed = 1;
  RadioConfig radio;
  std::optional<std::string> topology_file;
  std::optional<TopologyGenSpec> topology_gen;
  std::vector<UserSpec> explicit_users;
  std::optional<UserGenSpec> user_gen;
  OptimizerOpts optimizer;
  std::vector<CtmcRun> ctmc_runs;
  std::optional<SweepSpec> sweep;
};

// Full default configuration: the reference operating point (43 dBm MTP,
// 3 dB Rx/Tx loss, 5 dBm link margin, 1.5 dB backoff, 5-90 W sensor power,
// 2000-iteration cap) with a star topology, generated users, one queueing
// spec and a 10-point SNR sweep over 20 seeds.
inline RunConfig default_config() {
  RunConfig cfg;
  cfg.seed = 1;
  cfg.radio = RadioConfig{};

  TopologyGenSpec topo;
  topo.kind = TopoKind::Star;
  topo.small_cells = 3;
  cfg.topology_gen = topo;

  UserGenSpec users;
  users.count = 6;
  cfg.user_gen = users;

  cfg.optimizer = OptimizerOpts{};

  CtmcRun queue;
  queue.spec.servers = 4;
  queue.spec.queue_r_capacity = 2;
  queue.spec.queue_tau_capacity = 2;
  queue.spec.lambda_s = 1.0;
  queue.spec.lambda_r = 1.0;
  queue.spec.lambda_tau = 0.5;
  queue.spec.mu_s = 1.0;
  queue.spec.mu_r = 1.0;
  queue.spec.mu_tau = 1.0;
  cfg.ctmc_runs.push_back(queue);

  SweepSpec sweep;
  sweep.axis = SweepAxis::SnrDb;
  for (int p = 0; p < 10; ++p) sweep.values.push_back(2.0 * p);
  for (uint64_t s = 1; s <= 20; ++s) sweep.seeds.push_back(s);
  sweep.tpl.topo_kind = TopoKind::Star;
  sweep.tpl.small_cells = 3;
  sweep.tpl.users.count = 6;
  sweep.snr_db = 10.0;
  cfg.sweep = sweep;
  return cfg;
}

namespace detail {

inline RadioConfig parse_radio_section(const KvSection& section) {
  SectionReader r(section);
  RadioConfig radio;
  if (auto v = r.number("f_m_hz")) radio.f_m_hz = *v;
  if (auto v = r.integer("z_m")) radio.z_m = static_cast<int>(*v);
  if (auto v = r.number("f_s_hz")) radio.f_s_hz = *v;
  if (auto v = r.integer("z_s")) radio.z_s = static_cast<int>(*v);
  if (auto v = r.number("sigma_sq_m_watts")) radio.sigma_sq_m_watts = *v;
  if (auto v = r.number("sigma_sq_s_watts")) radio.sigma_sq_s_watts = *v;
  if (auto v = r.number("thermal_noise_dbm")) radio.thermal_noise_dbm = *v;
  if (auto v = r.number("noise_figure_db")) radio.noise_figure_db = *v;
  if (auto v = r.number("tx_loss_db")) radio.tx_loss_db = *v;
  if (auto v = r.number("rx_loss_db")) radio.rx_loss_db = *v;
  if (auto v = r.number("link_margin_db")) radio.link_margin_db = *v;
  if (auto v = r.number("rx_gain_dbi")) radio.rx_gain_dbi = *v;
  if (auto v = r.number("tx_gain_dbi_e")) radio.tx_gain_dbi_e = *v;
  if (auto v = r.number("tx_gain_dbi_v")) radio.tx_gain_dbi_v = *v;
  if (auto v = r.number("tx_backoff_db")) radio.tx_backoff_db = *v;
  if (auto v = r.number("atmos_db_per_km")) radio.atmos_db_per_km = *v;
  if (auto v = r.number("atmos_oxygen_db_per_km"))
    radio.atmos_oxygen_db_per_km = *v;
  if (auto v = r.number("atmos_vapor_db_per_km"))
    radio.atmos_vapor_db_per_km = *v;
  if (auto v = r.number("atmos_rain_db_per_km"))
    radio.atmos_rain_db_per_km = *v;
  if (auto v = r.number("freq_e_ghz")) radio.freq_e_ghz = *v;
  if (auto v = r.number("freq_v_ghz")) radio.freq_v_ghz = *v;
  if (auto v = r.number("bh_bandwidth_e_hz")) radio.bh_bandwidth_e_hz = *v;
  if (auto v = r.number("bh_bandwidth_v_hz")) radio.bh_bandwidth_v_hz = *v;
  if (auto v = r.number("y_min_bps")) radio.y_min_bps = *v;
  if (auto v = r.number("y_max_bps")) radio.y_max_bps = *v;
  if (auto v = r.number("sensor_power_min_w"))
    radio.sensor_power_min_watts = *v;
  if (auto v = r.number("sensor_power_max_w"))
    radio.sensor_power_max_watts = *v;
  r.finish();
  if (radio.y_min_bps > radio.y_max_bps)
    fail(errc::validation_error,
         "fields 'y_min_bps' and 'y_max_bps': y_min_bps exceeds y_max_bps");
  validate_radio(radio);
  return radio;
}

inline TopoKind parse_topo_kind(const std::string& s) {
  if (s == "line") return TopoKind::Line;
  if (s == "star") return TopoKind::Star;
  if (s == "random_tree") return TopoKind::RandomTree;
  fail(errc::validation_error,
       "field 'kind': expected line|star|random_tree, got '" + s + "'");
}

inline AttachPolicy parse_attach(const std::string& s) {
  if (s == "round_robin") return AttachPolicy::RoundRobin;
  if (s == "macro_only") return AttachPolicy::MacroOnly;
  if (s == "small_only") return AttachPolicy::SmallOnly;
  fail(errc::validation_error,
       "field 'attach': expected round_robin|macro_only|small_only");
}

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "snr_db") return SweepAxis::SnrDb;
  if (s == "user_count") return SweepAxis::UserCount;
  if (s == "backhaul") return SweepAxis::Backhaul;
  fail(errc::validation_error,
       "field 'axis': expected snr_db|user_count|backhaul");
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir) {
  RunConfig cfg;
  bool saw_topology = false, saw_users_gen = false;

  for (const KvSection& section : parse_kv_text(text)) {
    if (section.name == "general") {
      detail::SectionReader r(section);
      if (auto v = r.integer("seed")) {
        if (*v < 0)
          fail(errc::validation_error, "field 'seed' must be nonnegative");
        cfg.seed = static_cast<uint64_t>(*v);
      }
      r.finish();
    } else if (section.name == "radio") {
      cfg.radio = detail::parse_radio_section(section);
    } else if (section.name == "topology") {
      if (saw_topology)
        fail(errc::validation_error, "more than one [topology] section");
      saw_topology = true;
      detail::SectionReader r(section);
      const auto file = r.raw("file");
      const auto kind = r.raw("kind");
      if (file && kind)
        fail(errc::validation_error,
             "section [topology] must name exactly one source: file or kind");
      if (file) {
        std::filesystem::path p(*file);
        if (p.is_relative()) p = base_dir / p;
        if (!std::filesystem::exists(p))
          fail(errc::missing_file, "topology file not found: " + p.string());
        cfg.topology_file = p.string();
      } else if (kind) {
        TopologyGenSpec gen;
        gen.kind = detail::parse_topo_kind(*kind);
        if (auto v = r.integer("small_cells"))
          gen.small_cells = static_cast<int>(*v);
        if (auto v = r.number("min_distance_km")) gen.min_distance_km = *v;
        if (auto v = r.number("max_distance_km")) gen.max_distance_km = *v;
        if (auto v = r.number("bs_power_dbm")) gen.bs_power_dbm = *v;
        if (auto v = r.number("capacity_scale")) gen.capacity_scale = *v;
        if (gen.small_cells < 1)
          fail(errc::validation_error, "field 'small_cells' must be >= 1");
        cfg.topology_gen = gen;
      } else {
        fail(errc::validation_error,
             "section [topology] must name exactly one source: file or kind");
      }
      r.finish();
    } else if (section.name == "users") {
      if (saw_users_gen)
        fail(errc::validation_error, "more than one [users] section");
      saw_users_gen = true;
      detail::SectionReader r(section);
      UserGenSpec gen;
      if (auto v = r.integer("count")) gen.count = static_cast<int>(*v);
      if (auto v = r.number("gain_db_mean")) gen.gain_db_mean = *v;
      if (auto v = r.number("gain_db_sigma")) gen.gain_db_sigma = *v;
      if (auto v = r.raw("attach")) gen.attach = detail::parse_attach(*v);
      if (auto v = r.number("snr_target_db")) gen.snr_target_db = *v;
      if (gen.count < 1)
        fail(errc::validation_error, "field 'count' must be >= 1");
      r.finish();
      cfg.user_gen = gen;
    } else if (section.name == "user") {
      detail::SectionReader r(section);
      UserSpec u;
      if (auto v = r.integer("id")) u.channel.user_id = static_cast<int>(*v);
      const auto bs = r.integer("attached_bs");
      const auto gain = r.number("gain_sq");
      if (!bs || !gain)
        fail(errc::validation_error,
             "each [user] needs attached_bs and gain_sq");
      if (*bs < 0)
        fail(errc::validation_error, "field 'attached_bs' must be >= 0");
      if (*gain <= 0.0)
        fail(errc::validation_error, "field 'gain_sq' must be positive");
      u.channel.attached_bs = static_cast<int>(*bs);
      u.channel.gain_sq = *gain;
      if (auto v = r.raw("class")) u.channel.demand_class = *v;
      if (auto v = r.number("y_min_bps")) u.y_min_bps = *v;
      if (auto v = r.number("y_max_bps")) u.y_max_bps = *v;
      if (auto v = r.number("p_min_w")) {
        if (*v < 0.0)
          fail(errc::validation_error, "field 'p_min_w' must be >= 0");
        u.p_min_watts = *v;
      }
      r.finish();
      cfg.explicit_users.push_back(std::move(u));
    } else if (section.name == "optimizer") {
      detail::SectionReader r(section);
      if (auto v = r.number("tol")) cfg.optimizer.tol = *v;
      if (auto v = r.integer("max_iterations"))
        cfg.optimizer.max_iterations = static_cast<int>(*v);
      if (cfg.optimizer.tol <= 0.0)
        fail(errc::validation_error, "field 'tol' must be positive");
      if (cfg.optimizer.max_iterations < 1)
        fail(errc::validation_error, "field 'max_iterations' must be >= 1");
      r.finish();
    } else if (section.name == "ctmc") {
      detail::SectionReader r(section);
      CtmcRun run;
      if (auto v = r.integer("servers"))
        run.spec.servers = static_cast<int>(*v);
      if (auto v = r.integer("queue_r"))
        run.spec.queue_r_capacity = static_cast<int>(*v);
      if (auto v = r.integer("queue_tau"))
        run.spec.queue_tau_capacity = static_cast<int>(*v);
      if (auto v = r.number("lambda_s")) run.spec.lambda_s = *v;
      if (auto v = r.number("lambda_r")) run.spec.lambda_r = *v;
      if (auto v = r.number("lambda_tau")) run.spec.lambda_tau = *v;
      if (auto v = r.number("mu_s")) run.spec.mu_s = *v;
      if (auto v = r.number("mu_r")) run.spec.mu_r = *v;
      if (auto v = r.number("mu_tau")) run.spec.mu_tau = *v;
      if (auto v = r.number("alpha_s")) run.spec.alpha_s = *v;
      if (auto v = r.number("alpha_v")) run.spec.alpha_v = *v;
      if (auto v = r.boolean("dump_pi")) run.dump_pi = *v;
      r.finish();
      validate_ctmc(run.spec);
      cfg.ctmc_runs.push_back(run);
    } else if (section.name == "sweep") {
      if (cfg.sweep)
        fail(errc::validation_error, "more than one [sweep] section");
      detail::SectionReader r(section);
      SweepSpec sweep;
      const auto axis = r.raw("axis");
      if (!axis) fail(errc::validation_error, "section [sweep] needs axis");
      sweep.axis = detail::parse_axis(*axis);
      const auto values = r.number_list("values");
      if (!values) fail(errc::validation_error, "section [sweep] needs values");
      sweep.values = *values;
      const auto seeds = r.number_list("seeds");
      if (!seeds) fail(errc::validation_error, "section [sweep] needs seeds");
      for (double s : *seeds) {
        if (s < 0.0 || s != std::floor(s))
          fail(errc::validation_error,
               "field 'seeds' must hold nonnegative integers");
        sweep.seeds.push_back(static_cast<uint64_t>(s));
      }
      if (auto v = r.raw("kind"))
        sweep.tpl.topo_kind = detail::parse_topo_kind(*v);
      if (auto v = r.integer("small_cells"))
        sweep.tpl.small_cells = static_cast<int>(*v);
      if (auto v = r.number("min_distance_km"))
        sweep.tpl.min_distance_km = *v;
      if (auto v = r.number("max_distance_km"))
        sweep.tpl.max_distance_km = *v;
      if (auto v = r.number("bs_power_dbm")) sweep.tpl.bs_power_dbm = *v;
      if (auto v = r.number("capacity_scale")) sweep.tpl.capacity_scale = *v;
      if (auto v = r.integer("users"))
        sweep.tpl.users.count = static_cast<int>(*v);
      if (auto v = r.number("gain_db_mean"))
        sweep.tpl.users.gain_db_mean = *v;
      if (auto v = r.number("gain_db_sigma"))
        sweep.tpl.users.gain_db_sigma = *v;
      if (auto v = r.number("snr_db")) sweep.snr_db = *v;
      if (auto v = r.number("tol")) sweep.tol = *v;
      r.finish();
      validate_sweep(sweep);
      cfg.sweep = sweep;
    } else {
      fail(errc::parse_error, "line " + std::to_string(section.line) +
                                  ": unknown section [" + section.name + "]");
    }
  }

  if (!cfg.explicit_users.empty() && cfg.user_gen)
    fail(errc::validation_error,
         "give either [users] (generator) or [user] records, not both");
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::filesystem::path p(path);
  if (!std::filesystem::exists(p))
    fail(errc::missing_file, "config file not found: " + path);
  std::ifstream in(p);
  if (!in) fail(errc::io_error, "cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), p.parent_path());
}

// Canonical serialization: fixed section and key order, every value
// explicit, lossless number formatting.
inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  auto num = [&](const char* key, double v) {
    os << key << " = " << detail::fmt17(v) << '\n';
  };

  os << "[general]\n";
  os << "seed = " << cfg.seed << '\n';

  const RadioConfig& r = cfg.radio;
  os << "\n[radio]\n";
  num("f_m_hz", r.f_m_hz);
  os << "z_m = " << r.z_m << '\n';
  num("f_s_hz", r.f_s_hz);
  os << "z_s = " << r.z_s << '\n';
  num("sigma_sq_m_watts", r.sigma_sq_m_watts);
  num("sigma_sq_s_watts", r.sigma_sq_s_watts);
  num("thermal_noise_dbm", r.thermal_noise_dbm);
  num("noise_figure_db", r.noise_figure_db);
  num("tx_loss_db", r.tx_loss_db);
  num("rx_loss_db", r.rx_loss_db);
  num("link_margin_db", r.link_margin_db);
  num("rx_gain_dbi", r.rx_gain_dbi);
  num("tx_gain_dbi_e", r.tx_gain_dbi_e);
  num("tx_gain_dbi_v", r.tx_gain_dbi_v);
  num("tx_backoff_db", r.tx_backoff_db);
  num("atmos_db_per_km", r.atmos_total_db_per_km());
  num("freq_e_ghz", r.freq_e_ghz);
  num("freq_v_ghz", r.freq_v_ghz);
  num("bh_bandwidth_e_hz", r.bh_bandwidth_e_hz);
  num("bh_bandwidth_v_hz", r.bh_bandwidth_v_hz);
  num("y_min_bps", r.y_min_bps);
  num("y_max_bps", r.y_max_bps);
  num("sensor_power_min_w", r.sensor_power_min_watts);
  num("sensor_power_max_w", r.sensor_power_max_watts);

  if (cfg.topology_file) {
    os << "\n[topology]\n";
    os << "file = " << *cfg.topology_file << '\n';
  } else if (cfg.topology_gen) {
    const TopologyGenSpec& t = *cfg.topology_gen;
    os << "\n[topology]\n";
    os << "kind = " << topo_kind_name(t.kind) << '\n';
    os << "small_cells = " << t.small_cells << '\n';
    num("min_distance_km", t.min_distance_km);
    num("max_distance_km", t.max_distance_km);
    num("bs_power_dbm", t.bs_power_dbm);
    num("capacity_scale", t.capacity_scale);
  }

  if (cfg.user_gen) {
    const UserGenSpec& u = *cfg.user_gen;
    os << "\n[users]\n";
    os << "count = " << u.count << '\n';
    num("gain_db_mean", u.gain_db_mean);
    num("gain_db_sigma", u.gain_db_sigma);
    os << "attach = " << attach_policy_name(u.attach) << '\n';
    if (u.snr_target_db) num("snr_target_db", *u.snr_target_db);
  }
  for (const UserSpec& u : cfg.explicit_users) {
    os << "\n[user]\n";
    os << "id = " << u.channel.user_id << '\n';
    os << "attached_bs = " << u.channel.attached_bs << '\n';
    num("gain_sq", u.channel.gain_sq);
    if (u.channel.demand_class != "default")
      os << "class = " << u.channel.demand_class << '\n';
    if (u.y_min_bps) num("y_min_bps", *u.y_min_bps);
    if (u.y_max_bps) num("y_max_bps", *u.y_max_bps);
    if (u.p_min_watts) num("p_min_w", *u.p_min_watts);
  }

  os << "\n[optimizer]\n";
  num("tol", cfg.optimizer.tol);
  os << "max_iterations = " << cfg.optimizer.max_iterations << '\n';

  for (const CtmcRun& run : cfg.ctmc_runs) {
    os << "\n[ctmc]\n";
    os << "servers = " << run.spec.servers << '\n';
    os << "queue_r = " << run.spec.queue_r_capacity << '\n';
    os << "queue_tau = " << run.spec.queue_tau_capacity << '\n';
    num("lambda_s", run.spec.lambda_s);
    num("lambda_r", run.spec.lambda_r);
    num("lambda_tau", run.spec.lambda_tau);
    num("mu_s", run.spec.mu_s);
    num("mu_r", run.spec.mu_r);
    num("mu_tau", run.spec.mu_tau);
    num("alpha_s", run.spec.alpha_s);
    num("alpha_v", run.spec.alpha_v);
    os << "dump_pi = " << (run.dump_pi ? "true" : "false") << '\n';
  }

  if (cfg.sweep) {
    const SweepSpec& s = *cfg.sweep;
    os << "\n[sweep]\n";
    os << "axis = " << sweep_axis_name(s.axis) << '\n';
    os << "values = ";
    for (size_t i = 0; i < s.values.size(); ++i)
      os << (i ? "," : "") << detail::fmt17(s.values[i]);
    os << '\n';
    os << "seeds = ";
    for (size_t i = 0; i < s.seeds.size(); ++i)
      os << (i ? "," : "") << s.seeds[i];
    os << '\n';
    os << "kind = " << topo_kind_name(s.tpl.topo_kind) << '\n';
    os << "small_cells = " << s.tpl.small_cells << '\n';
    num("min_distance_km", s.tpl.min_distance_km);
    num("max_distance_km", s.tpl.max_distance_km);
    num("bs_power_dbm", s.tpl.bs_power_dbm);
    num("capacity_scale", s.tpl.capacity_scale);
    os << "users = " << s.tpl.users.count << '\n';
    num("gain_db_mean", s.tpl.users.gain_db_mean);
    num("gain_db_sigma", s.tpl.users.gain_db_sigma);
    num("snr_db", s.snr_db);
    num("tol", s.tol);
  }
  return os.str();
}

// Assemble the solver input. The topology comes from the configured file
// or generator; users come from explicit records or the generator.
inline ProblemInstance instance_from_config(const RunConfig& cfg,
                                            uint64_t seed) {
  ProblemInstance inst;
  inst.radio = cfg.radio;
  if (cfg.topology_file) {
    std::ifstream in(*cfg.topology_file);
    if (!in)
      fail(errc::io_error, "cannot read topology: " + *cfg.topology_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    inst.topology = parse_topology_text(buf.str(), cfg.radio);
  } else if (cfg.topology_gen) {
    TopologyGenSpec gen = *cfg.topology_gen;
    gen.seed = derive_seed(seed, 11);
    inst.topology = generate_topology(gen, cfg.radio);
  } else {
    fail(errc::validation_error, "config has no topology source");
  }

  if (!cfg.explicit_users.empty()) {
    inst.users = cfg.explicit_users;
  } else if (cfg.user_gen) {
    inst.users =
        generate_users(inst.topology, *cfg.user_gen, derive_seed(seed, 13));
    if (cfg.user_gen->snr_target_db)
      apply_snr_target(inst.radio, inst.topology, inst.users,
                       *cfg.user_gen->snr_target_db);
  } else {
    fail(errc::validation_error, "config has no users");
  }
  validate_instance(inst);
  return inst;
}

}  // namespace eeflow
