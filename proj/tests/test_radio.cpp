#include <catch2/catch.hpp>
#include <cmath>

#include "eeflow/radio.hpp"
#include "eeflow/rng.hpp"
#include "eeflow/units.hpp"

using namespace eeflow;

TEST_CASE("unit conversions round-trip") {
  REQUIRE(dbm_to_watts(30.0) == Approx(1.0).epsilon(1e-15));
  REQUIRE(watts_to_dbm(1.0) == Approx(30.0).margin(1e-12));
  SplitMix64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const double db = rng.uniform(-120.0, 120.0);
    REQUIRE(linear_to_db(db_to_linear(db)) == Approx(db).margin(1e-12));
    const double w = rng.uniform(1e-12, 1e3);
    REQUIRE(dbm_to_watts(watts_to_dbm(w)) ==
            Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("free-space path loss spot values") {
  REQUIRE(fspl_db(73.0, 1.0) == Approx(129.6655).margin(1e-3));
  REQUIRE(fspl_db(60.0, 0.1) == Approx(107.9631).margin(1e-3));
}

TEST_CASE("path loss grows 20 dB per distance decade") {
  const double base = fspl_db(73.0, 0.3);
  REQUIRE(fspl_db(73.0, 3.0) == Approx(base + 20.0).margin(1e-12));
  // multiplicative split identity
  REQUIRE(fspl_db(73.0, 0.3 * 2.5) ==
          Approx(fspl_db(73.0, 0.3) + 20.0 * std::log10(2.5)).margin(1e-12));
}

TEST_CASE("total path loss adds the atmospheric term") {
  REQUIRE(total_path_loss_db(73.0, 1.0, 0.0) ==
          Approx(fspl_db(73.0, 1.0)).margin(1e-15));
  REQUIRE(total_path_loss_db(73.0, 1.0, 10.0) ==
          Approx(139.6655).margin(1e-3));
  const double d = 0.7, atmos = 12.0;
  REQUIRE(total_path_loss_db(73.0, 2.0 * d, atmos) -
              total_path_loss_db(73.0, d, atmos) ==
          Approx(20.0 * std::log10(2.0) + d * atmos).margin(1e-12));
}

TEST_CASE("fspl rejects nonpositive inputs") {
  REQUIRE_THROWS_AS(fspl_db(0.0, 1.0), Error);
  REQUIRE_THROWS_AS(fspl_db(73.0, -1.0), Error);
}

TEST_CASE("EIRP cap per band") {
  REQUIRE(eirp_max_dbm(Band::VBand, 51.0) == Approx(85.0));
  REQUIRE(eirp_max_dbm(Band::VBand, 53.0) == Approx(81.0));
  REQUIRE(eirp_max_dbm(Band::EBand, 50.0) == Approx(85.0));
  // excess clipped at zero
  REQUIRE(eirp_max_dbm(Band::VBand, 40.0) == Approx(85.0));
}

TEST_CASE("max backhaul power from the EIRP cap") {
  const double p = backhaul_max_power_dbm(85.0, 3.0, 51.0);
  REQUIRE(p == Approx(37.0));
  REQUIRE(dbm_to_watts(p) == Approx(5.012).margin(1e-3));
  REQUIRE(backhaul_max_power_dbm(71.0, 0.0, 0.0) == Approx(71.0));
}

TEST_CASE("backhaul SNR budget sum") {
  RadioConfig cfg;
  cfg.thermal_noise_dbm = -84.0;
  cfg.noise_figure_db = 5.0;
  cfg.tx_loss_db = 3.0;
  cfg.rx_loss_db = 3.0;
  cfg.rx_gain_dbi = 40.0;
  cfg.link_margin_db = 5.0;
  REQUIRE(backhaul_snr_db(37.0, cfg, 129.6655) ==
          Approx(15.3345).margin(1e-9));
  // affine in the transmit power, slope one
  REQUIRE(backhaul_snr_db(38.0, cfg, 129.6655) -
              backhaul_snr_db(37.0, cfg, 129.6655) ==
          Approx(1.0).margin(1e-12));

  RadioConfig zero;
  zero.thermal_noise_dbm = 0.0;
  zero.noise_figure_db = 0.0;
  zero.tx_loss_db = 0.0;
  zero.rx_loss_db = 0.0;
  zero.rx_gain_dbi = 0.0;
  zero.link_margin_db = 0.0;
  REQUIRE(backhaul_snr_db(20.0, zero, 110.0) == Approx(20.0 - 110.0));
}

TEST_CASE("Shannon capacity of a backhaul channel") {
  REQUIRE(link_capacity_bps(-std::numeric_limits<double>::infinity(), 1e6) ==
          0.0);
  REQUIRE(link_capacity_bps(0.0, 1e6) == Approx(1e6).epsilon(1e-9));
  REQUIRE(link_capacity_bps(10.0 * std::log10(3.0), 1e6) ==
          Approx(2e6).epsilon(1e-9));
  REQUIRE_THROWS_AS(link_capacity_bps(0.0, 0.0), Error);
}

TEST_CASE("access rate spot values") {
  REQUIRE(access_rate(0.0, 1.0, 1e6, 1.0) == 0.0);
  REQUIRE(access_rate(1.0, 1.0, 1e6, 1.0) == Approx(1e6).epsilon(1e-12));
  REQUIRE(access_rate(3.0, 1.0, 1e6, 1.0) == Approx(2e6).epsilon(1e-12));
  REQUIRE_THROWS_AS(access_rate(-1.0, 1.0, 1e6, 1.0), Error);
  REQUIRE_THROWS_AS(access_rate(1.0, 1.0, 0.0, 1.0), Error);
}

TEST_CASE("access power inverse spot values") {
  REQUIRE(access_power_for_rate(0.0, 1.0, 1e6, 1.0) == 0.0);
  REQUIRE(access_power_for_rate(1e6, 1.0, 1e6, 1.0) ==
          Approx(1.0).epsilon(1e-12));
  REQUIRE_THROWS_AS(access_power_for_rate(-1.0, 1.0, 1e6, 1.0), Error);
}

TEST_CASE("rate and power are mutually inverse") {
  SplitMix64 rng(101);
  const double delta_b = 1e6;
  for (int i = 0; i < 10000; ++i) {
    const double gain = rng.uniform(1e-13, 1e-9);
    const double sigma = rng.uniform(1e-15, 1e-13);
    const double y = rng.uniform(0.0, 10.0 * delta_b);
    const double p = access_power_for_rate(y, gain, delta_b, sigma);
    const double back = access_rate(p, gain, delta_b, sigma);
    if (y > 0.0)
      REQUIRE(std::abs(back - y) / y < 1e-9);
    else
      REQUIRE(back == 0.0);
  }
}

TEST_CASE("access power is convex in the rate") {
  SplitMix64 rng(202);
  for (int i = 0; i < 2000; ++i) {
    const double y1 = rng.uniform(0.0, 8e6);
    const double y2 = rng.uniform(0.0, 8e6);
    const double lambda = rng.next_double();
    const double mix = lambda * y1 + (1.0 - lambda) * y2;
    const double lhs = access_power_for_rate(mix, 1.0, 1e6, 1.0);
    const double rhs = lambda * access_power_for_rate(y1, 1.0, 1e6, 1.0) +
                       (1.0 - lambda) * access_power_for_rate(y2, 1.0, 1e6, 1.0);
    REQUIRE(lhs <= rhs + 1e-12 * std::max(1.0, rhs));
  }
}

TEST_CASE("link budget assembles the pieces consistently") {
  RadioConfig cfg;
  const LinkBudget budget = compute_link_budget(cfg, Band::EBand, 0.5);
  REQUIRE(budget.tpl_db ==
          Approx(total_path_loss_db(73.0, 0.5, cfg.atmos_total_db_per_km())));
  const double eirp = eirp_max_dbm(Band::EBand, cfg.tx_gain_dbi_e);
  REQUIRE(budget.max_power_dbm ==
          Approx(backhaul_max_power_dbm(eirp - cfg.tx_backoff_db,
                                        cfg.tx_loss_db, cfg.tx_gain_dbi_e)));
  REQUIRE(budget.capacity_bps ==
          Approx(link_capacity_bps(budget.snr_at_max_db,
                                   cfg.bh_bandwidth_e_hz)));
  REQUIRE(budget.capacity_bps > 0.0);
}

TEST_CASE("atmospheric components override the combined scalar") {
  RadioConfig cfg;
  cfg.atmos_db_per_km = 10.0;
  REQUIRE(cfg.atmos_total_db_per_km() == 10.0);
  cfg.atmos_oxygen_db_per_km = 15.0;
  cfg.atmos_rain_db_per_km = 4.0;
  REQUIRE(cfg.atmos_total_db_per_km() == Approx(19.0));
}

TEST_CASE("radio invariants hold for the defaults") {
  RadioConfig cfg;
  REQUIRE_NOTHROW(validate_radio(cfg));
  REQUIRE(cfg.delta_b_m_hz() * cfg.z_m == Approx(cfg.f_m_hz).epsilon(1e-9));
  REQUIRE(cfg.delta_b_s_hz() * cfg.z_s == Approx(cfg.f_s_hz).epsilon(1e-9));
}
