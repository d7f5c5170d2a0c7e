#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "eeflow/errors.hpp"
#include "eeflow/topology.hpp"
#include "eeflow/units.hpp"

namespace eeflow {

// Physical-layer configuration for both tiers and the mmWave backhaul.
// Defaults are the reference operating point used by the experiment sweeps;
// every dB/dBm/dBi field carries its unit in the name.
struct RadioConfig {
  // OFDMA spectrum split: F per tier, z sub-carriers per tier. The
  // per-carrier bandwidth is F/z.
  double f_m_hz = 2.0e7;
  int z_m = 20;
  double f_s_hz = 2.0e7;
  int z_s = 20;

  // AWGN variance per tier (-114 dBm over a 1 MHz carrier).
  double sigma_sq_m_watts = 3.9810717055349695e-15;
  double sigma_sq_s_watts = 3.9810717055349695e-15;

  // Backhaul receiver chain.
  double thermal_noise_dbm = -84.0;
  double noise_figure_db = 5.0;
  double tx_loss_db = 3.0;
  double rx_loss_db = 3.0;
  double link_margin_db = 5.0;
  double rx_gain_dbi = 40.0;
  double tx_gain_dbi_e = 50.0;
  double tx_gain_dbi_v = 51.0;
  double tx_backoff_db = 1.5;

  // Combined oxygen + vapor + rain attenuation. If any component is set,
  // the sum of the given components wins over the combined scalar.
  double atmos_db_per_km = 10.0;
  std::optional<double> atmos_oxygen_db_per_km;
  std::optional<double> atmos_vapor_db_per_km;
  std::optional<double> atmos_rain_db_per_km;

  // Carrier frequencies and channel bandwidths per backhaul band.
  double freq_e_ghz = 73.0;
  double freq_v_ghz = 60.0;
  double bh_bandwidth_e_hz = 2.0e9;
  double bh_bandwidth_v_hz = 2.16e9;

  // Per-user rate box and the sensor transmit power range.
  double y_min_bps = 5.0e4;
  double y_max_bps = 2.0e7;
  double sensor_power_min_watts = 5.0;
  double sensor_power_max_watts = 90.0;

  double delta_b_m_hz() const { return f_m_hz / z_m; }
  double delta_b_s_hz() const { return f_s_hz / z_s; }

  double atmos_total_db_per_km() const {
    if (atmos_oxygen_db_per_km || atmos_vapor_db_per_km ||
        atmos_rain_db_per_km) {
      return atmos_oxygen_db_per_km.value_or(0.0) +
             atmos_vapor_db_per_km.value_or(0.0) +
             atmos_rain_db_per_km.value_or(0.0);
    }
    return atmos_db_per_km;
  }

  double freq_ghz(Band band) const {
    return band == Band::EBand ? freq_e_ghz : freq_v_ghz;
  }
  double tx_gain_dbi(Band band) const {
    return band == Band::EBand ? tx_gain_dbi_e : tx_gain_dbi_v;
  }
  double bh_bandwidth_hz(Band band) const {
    return band == Band::EBand ? bh_bandwidth_e_hz : bh_bandwidth_v_hz;
  }
};

inline void validate_radio(const RadioConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) fail(errc::validation_error, msg);
  };
  require(cfg.f_m_hz > 0.0 && cfg.f_s_hz > 0.0, "spectrum must be positive");
  require(cfg.z_m > 0 && cfg.z_s > 0, "sub-carrier counts must be positive");
  require(cfg.sigma_sq_m_watts > 0.0 && cfg.sigma_sq_s_watts > 0.0,
          "noise variance must be positive");
  require(cfg.atmos_total_db_per_km() >= 0.0,
          "atmospheric attenuation must be nonnegative");
  require(cfg.bh_bandwidth_e_hz > 0.0 && cfg.bh_bandwidth_v_hz > 0.0,
          "backhaul bandwidths must be positive");
  require(cfg.y_min_bps <= cfg.y_max_bps,
          "y_min_bps must not exceed y_max_bps");
  require(cfg.y_min_bps >= 0.0, "y_min_bps must be nonnegative");
  require(cfg.sensor_power_max_watts > 0.0,
          "sensor_power_max_w must be positive");
}

// One user terminal attached to one base station. gain_sq is the
// dimensionless channel power gain (path loss folded in); demand_class is
// an SLA tag carried through to reports, nothing more.
struct UserChannel {
  int user_id = 0;
  int attached_bs = 0;
  double gain_sq = 1.0;
  std::string demand_class = "default";
};

// Shannon rate of one access carrier: delta_b * log2(1 + gain_sq*P/sigma^2).
inline double access_rate(double power_watts, double gain_sq,
                          double delta_b_hz, double noise_variance_watts) {
  if (delta_b_hz <= 0.0)
    fail(errc::non_positive_bandwidth, "carrier bandwidth must be positive");
  if (power_watts < 0.0)
    fail(errc::negative_power, "transmit power must be nonnegative");
  if (gain_sq <= 0.0 || noise_variance_watts <= 0.0)
    fail(errc::non_positive_input, "gain_sq and sigma^2 must be positive");
  return delta_b_hz *
         std::log2(1.0 + gain_sq * power_watts / noise_variance_watts);
}

// Exact inverse of access_rate: (2^(y/delta_b) - 1) * sigma^2 / gain_sq.
// Strictly increasing and convex in the rate.
inline double access_power_for_rate(double rate_bps, double gain_sq,
                                    double delta_b_hz,
                                    double noise_variance_watts) {
  if (delta_b_hz <= 0.0)
    fail(errc::non_positive_bandwidth, "carrier bandwidth must be positive");
  if (rate_bps < 0.0) fail(errc::negative_rate, "rate must be nonnegative");
  if (gain_sq <= 0.0 || noise_variance_watts <= 0.0)
    fail(errc::non_positive_input, "gain_sq and sigma^2 must be positive");
  return (std::exp2(rate_bps / delta_b_hz) - 1.0) * noise_variance_watts /
         gain_sq;
}

// Free-space path loss, frequency in GHz and distance in km:
// 92.4 + 20 log10(f) + 20 log10(d).
inline double fspl_db(double freq_ghz, double dist_km) {
  if (freq_ghz <= 0.0 || dist_km <= 0.0)
    fail(errc::non_positive_input,
         "frequency and distance must be positive");
  return 92.4 + 20.0 * std::log10(freq_ghz) + 20.0 * std::log10(dist_km);
}

// FSPL plus distance-proportional atmospheric loss.
inline double total_path_loss_db(double freq_ghz, double dist_km,
                                 double atmos_db_per_km) {
  if (atmos_db_per_km < 0.0)
    fail(errc::non_positive_input,
         "atmospheric attenuation must be nonnegative");
  return fspl_db(freq_ghz, dist_km) + dist_km * atmos_db_per_km;
}

// Regulatory EIRP cap: 85 dBm minus twice the transmit-gain excess over
// 51 dBi (V band) or 50 dBi (E band), excess clipped at zero.
inline double eirp_max_dbm(Band band, double tx_gain_dbi) {
  const double threshold_dbi = band == Band::VBand ? 51.0 : 50.0;
  const double excess_db = std::max(0.0, tx_gain_dbi - threshold_dbi);
  return 85.0 - 2.0 * excess_db;
}

// Maximum conducted backhaul transmit power from the EIRP cap.
inline double backhaul_max_power_dbm(double eirp_max_dbm_value,
                                     double tx_loss_db, double tx_gain_dbi) {
  return eirp_max_dbm_value + tx_loss_db - tx_gain_dbi;
}

// Receiver SNR of a backhaul link at transmit power p_dbm over a path with
// the given total loss.
inline double backhaul_snr_db(double p_dbm, const RadioConfig& cfg,
                              double tpl_db) {
  return p_dbm - cfg.thermal_noise_dbm - cfg.noise_figure_db -
         cfg.tx_loss_db - cfg.rx_loss_db + cfg.rx_gain_dbi -
         cfg.link_margin_db - tpl_db;
}

// Shannon capacity over the band's channel bandwidth.
inline double link_capacity_bps(double snr_db, double bandwidth_hz) {
  if (bandwidth_hz <= 0.0)
    fail(errc::non_positive_bandwidth, "bandwidth must be positive");
  if (std::isinf(snr_db) && snr_db < 0.0) return 0.0;
  return bandwidth_hz * std::log2(1.0 + db_to_linear(snr_db));
}

// Complete budget for one backhaul link: max conducted power from the EIRP
// cap (after backoff), path loss over the distance, SNR at full power, and
// the resulting capacity.
struct LinkBudget {
  double tpl_db = 0.0;
  double max_power_dbm = 0.0;
  double max_power_watts = 0.0;
  double snr_at_max_db = 0.0;
  double capacity_bps = 0.0;
};

inline LinkBudget compute_link_budget(const RadioConfig& cfg, Band band,
                                      double distance_km) {
  LinkBudget budget;
  budget.tpl_db = total_path_loss_db(cfg.freq_ghz(band), distance_km,
                                     cfg.atmos_total_db_per_km());
  const double eirp = eirp_max_dbm(band, cfg.tx_gain_dbi(band));
  budget.max_power_dbm = backhaul_max_power_dbm(eirp - cfg.tx_backoff_db,
                                                cfg.tx_loss_db,
                                                cfg.tx_gain_dbi(band));
  budget.max_power_watts = dbm_to_watts(budget.max_power_dbm);
  budget.snr_at_max_db =
      backhaul_snr_db(budget.max_power_dbm, cfg, budget.tpl_db);
  budget.capacity_bps =
      link_capacity_bps(budget.snr_at_max_db, cfg.bh_bandwidth_hz(band));
  return budget;
}

}  // namespace eeflow
