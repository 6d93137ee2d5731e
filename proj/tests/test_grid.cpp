#include <doctest.h>

#include <cmath>
#include <vector>

#include "pemfreq/errors.hpp"
#include "pemfreq/grid.hpp"
#include "pemfreq/rng.hpp"

using namespace pemfreq;

namespace {

NetworkModel two_area() {
  NetworkModel net;
  net.f0_hz = 60.0;
  AreaParams a;
  a.inertia_h_s = 5.0;
  a.base_power_mw = 12800.0;
  a.damping_mw_per_hz = 200.0;
  a.droop_hz_per_mw = 0.0002;
  a.turbine_tau_s = 0.5;
  net.areas = {a, a};
  net.tie_lines = {{0, 1, 2000.0}};
  return net;
}

}  // namespace

TEST_CASE("steady-state deviation closed form") {
  // -500 MW over 2*(200 + 5000) MW/Hz: -48.0769 mHz
  const double df = steady_state_deviation(-500.0, 200.0, 0.0002, 0.0);
  CHECK(df == doctest::Approx(-0.0480769230769).epsilon(1e-10));

  // with an extra 3500 MW/Hz of fleet damping: -35.97 mHz
  const double df2 = steady_state_deviation(-500.0, 200.0, 0.0002, 3500.0);
  CHECK(df2 == doctest::Approx(-500.0 / 13900.0).epsilon(1e-12));
}

TEST_CASE("actual damping inverts the closed form") {
  for (double d_pem : {0.0, 1000.0, 3489.0, 8000.0}) {
    const double df = steady_state_deviation(-500.0, 200.0, 0.0002, d_pem);
    CHECK(actual_pem_damping(df, -500.0, 200.0, 0.0002) ==
          doctest::Approx(d_pem).epsilon(1e-9));
  }
  CHECK_THROWS_AS(actual_pem_damping(0.0, -500.0, 200.0, 0.0002), ConfigError);
}

TEST_CASE("tie-line flows sum to zero") {
  NetworkModel net = two_area();
  net.areas.push_back(net.areas[0]);
  net.tie_lines = {{0, 1, 2000.0}, {1, 2, 750.0}, {0, 2, 1200.0}};
  net.validate();

  GridState st = GridState::zero(3, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    for (int j = 0; j < 3; ++j)
      st.angle_rad[j] = rng::uniform_at(7, 9, j, trial) - 0.5;
    const auto flows = tie_line_flows(st, net);
    CHECK(std::abs(flows[0] + flows[1] + flows[2]) < 1e-9);
  }
}

TEST_CASE("zero state with zero inputs is a fixed point") {
  const NetworkModel net = two_area();
  GridState st = GridState::zero(2, 0.1);
  const std::vector<double> zeros(2, 0.0);
  for (int k = 0; k < 50; ++k) swing_turbine_step(st, net, zeros, zeros, 4);
  CHECK(st.is_zero());
  CHECK(st.step == 50);
}

TEST_CASE("one Euler substep matches the swing equation exactly") {
  const NetworkModel net = two_area();
  GridState st = GridState::zero(2, 0.1);
  const std::vector<double> load = {500.0, 0.0};
  const std::vector<double> zeros(2, 0.0);
  swing_turbine_step(st, net, load, zeros, 1);
  const double m = net.areas[0].inertia_mw_s_per_hz(net.f0_hz);
  CHECK(st.freq_hz[0] == doctest::Approx(-0.1 * 500.0 / m).epsilon(1e-12));
  CHECK(st.freq_hz[1] == 0.0);  // ties only act once angles move
}

TEST_CASE("symmetric two-area settles at the closed-form deviation") {
  const NetworkModel net = two_area();
  GridState st = GridState::zero(2, 0.1);
  const std::vector<double> load = {500.0, 0.0};
  const std::vector<double> zeros(2, 0.0);
  for (int k = 0; k < 600; ++k) swing_turbine_step(st, net, load, zeros, 4);
  const double expect = steady_state_deviation(-500.0, 200.0, 0.0002, 0.0);
  CHECK(st.freq_hz[0] == doctest::Approx(expect).epsilon(1e-3));
  CHECK(st.freq_hz[1] == doctest::Approx(expect).epsilon(1e-3));
}

TEST_CASE("halving the substep moves the nadir by <1 mHz") {
  const NetworkModel net = two_area();
  GridState a = GridState::zero(2, 0.1);
  GridState b = GridState::zero(2, 0.1);
  const std::vector<double> load = {500.0, 0.0};
  const std::vector<double> zeros(2, 0.0);
  const double m0 = net.areas[0].inertia_mw_s_per_hz(net.f0_hz);
  const double m1 = net.areas[1].inertia_mw_s_per_hz(net.f0_hz);
  double nadir_a = 0.0, nadir_b = 0.0;
  for (int k = 0; k < 200; ++k) {
    swing_turbine_step(a, net, load, zeros, 4);
    swing_turbine_step(b, net, load, zeros, 8);
    const double coi_a = (m0 * a.freq_hz[0] + m1 * a.freq_hz[1]) / (m0 + m1);
    const double coi_b = (m0 * b.freq_hz[0] + m1 * b.freq_hz[1]) / (m0 + m1);
    nadir_a = std::min(nadir_a, coi_a);
    nadir_b = std::min(nadir_b, coi_b);
  }
  CHECK(std::abs(nadir_a - nadir_b) < 1e-3);
}

TEST_CASE("network validation rejects bad inputs") {
  NetworkModel net = two_area();
  SUBCASE("disconnected") {
    net.tie_lines.clear();
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("self loop") {
    net.tie_lines = {{0, 0, 100.0}};
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("duplicate edge") {
    net.tie_lines = {{0, 1, 100.0}, {1, 0, 100.0}};
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("non-positive susceptance") {
    net.tie_lines = {{0, 1, 0.0}};
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("non-positive damping") {
    net.areas[1].damping_mw_per_hz = 0.0;
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("unknown tie endpoint") {
    net.tie_lines = {{0, 5, 100.0}};
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  const NetworkModel net = two_area();
  GridState st = GridState::zero(1, 0.1);
  const std::vector<double> zeros(2, 0.0);
  CHECK_THROWS_AS(swing_turbine_step(st, net, zeros, zeros, 4), ConfigError);
  CHECK_THROWS_AS(tie_line_flows(st, net), ConfigError);
}
