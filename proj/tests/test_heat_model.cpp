#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nvtherm/heat_model.hpp"
#include "nvtherm/rng.hpp"

using namespace nvtherm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("steady_state_dT point-source profile") {
  HeatScene scene;
  scene.conductivity = 1.0;
  scene.sources = {{Eigen::Vector3d::Zero(), 100e-6}};

  SECTION("closed form at one micron") {
    const double dT = steady_state_dT(scene, {1e-6, 0.0, 0.0});
    CHECK_THAT(dT, WithinRel(1e-4 / (4.0 * std::numbers::pi * 1e-6), 1e-12));
    CHECK_THAT(dT, WithinAbs(7.9577, 1e-3));
  }
  SECTION("decays to ambient in the far field") {
    CHECK(steady_state_dT(scene, {100.0, 0.0, 0.0}) < 1e-7);
  }
  SECTION("two sources superpose exactly") {
    HeatScene pair = scene;
    pair.sources.push_back({{2e-6, 0.0, 0.0}, 40e-6});
    const Eigen::Vector3d probe{0.7e-6, 0.4e-6, 0.0};
    HeatScene only_second = scene;
    only_second.sources = {pair.sources[1]};
    CHECK_THAT(steady_state_dT(pair, probe),
               WithinRel(steady_state_dT(scene, probe) +
                             steady_state_dT(only_second, probe),
                         1e-15));
  }
  SECTION("inside the clamp the profile saturates") {
    const double at_source = steady_state_dT(scene, {0.0, 0.0, 0.0});
    const double at_clamp = steady_state_dT(scene, {50e-9, 0.0, 0.0});
    CHECK(at_source == at_clamp);
  }
  SECTION("homogeneous scaling in Q, kappa and r") {
    Philox rng = Philox::substream(61, {0});
    for (int t = 0; t < 20; ++t) {
      HeatScene s;
      s.conductivity = 0.1 + uniform01(rng) * 10.0;
      const double q = 1e-6 + uniform01(rng) * 1e-3;
      s.sources = {{Eigen::Vector3d::Zero(), q}};
      const double r = 1e-6 + uniform01(rng) * 1e-5;
      const Eigen::Vector3d probe{r, 0.0, 0.0};
      const double base = steady_state_dT(s, probe);

      HeatScene sq = s;
      sq.sources[0].q_dot *= 3.0;
      CHECK_THAT(steady_state_dT(sq, probe), WithinRel(3.0 * base, 1e-12));

      HeatScene sk = s;
      sk.conductivity *= 5.0;
      CHECK_THAT(steady_state_dT(sk, probe), WithinRel(base / 5.0, 1e-12));

      CHECK_THAT(steady_state_dT(s, {2.0 * r, 0.0, 0.0}),
                 WithinRel(base / 2.0, 1e-12));
    }
  }
  SECTION("invalid parameters rejected") {
    HeatScene bad = scene;
    bad.conductivity = -1.0;
    CHECK_THROWS_AS(steady_state_dT(bad, {1e-6, 0, 0}), ValidationError);
    bad = scene;
    bad.source_radius = 0.0;
    CHECK_THROWS_AS(steady_state_dT(bad, {0, 0, 0}), ValidationError);
  }
}

TEST_CASE("laser_to_heat coupling") {
  LaserSpot spot;
  spot.position = Eigen::Vector3d::Zero();
  spot.waist = 0.3e-6;
  spot.absorption_efficiency = 0.35;

  SECTION("zero power gives zero heat") {
    spot.power = 0.0;
    CHECK(laser_to_heat(spot, Eigen::Vector3d::Zero()) == 0.0);
  }
  SECTION("centered spot transfers power times efficiency") {
    spot.power = 100e-6;
    CHECK_THAT(laser_to_heat(spot, Eigen::Vector3d::Zero()),
               WithinRel(100e-6 * 0.35, 1e-15));
  }
  SECTION("displaced spot couples negligibly") {
    spot.power = 100e-6;
    const double q = laser_to_heat(spot, {0.8e-6, 0.0, 0.0});
    const double factor = q / (spot.power * spot.absorption_efficiency);
    CHECK_THAT(factor, WithinRel(std::exp(-2.0 * std::pow(0.8 / 0.3, 2)), 1e-12));
    CHECK(factor < 1e-6);  // ~7e-7: the displaced-laser control
  }
  SECTION("strictly linear in power at fixed geometry") {
    const Eigen::Vector3d np{0.2e-6, 0.1e-6, 0.0};
    spot.power = 40e-6;
    const double base = laser_to_heat(spot, np);
    spot.power = 120e-6;
    CHECK_THAT(laser_to_heat(spot, np), WithinRel(3.0 * base, 1e-15));
  }
}

TEST_CASE("fit_heat_profile inverts the steady-state profile") {
  const double kappa = 1.0;
  const double r0 = 50e-9;

  SECTION("noiseless synthetic profile recovered exactly") {
    HeatScene scene;
    scene.conductivity = kappa;
    scene.source_radius = r0;
    scene.sources = {{Eigen::Vector3d::Zero(), 45e-6}};
    std::vector<HeatReading> readings;
    for (double r : {0.5e-6, 1.0e-6, 2.0e-6, 4.0e-6}) {
      readings.push_back({r, steady_state_dT(scene, {r, 0, 0}), 0.1});
    }
    const auto fit = fit_heat_profile(readings, kappa, r0);
    CHECK_THAT(fit.q_dot, WithinRel(45e-6, 1e-10));
    CHECK(fit.residual_norm < 1e-10);
  }
  SECTION("72 K source read through six noisy probes") {
    // dT(r) = 72 K * (50 nm / r): a probe at 0.8 um reads 4.5 K
    const double amplitude = 72.0 * r0;
    CHECK_THAT(amplitude / 0.8e-6, WithinAbs(4.5, 1e-9));

    Philox rng = Philox::substream(62, {0});
    const double sigma = 0.1;
    std::vector<HeatReading> readings;
    for (double r : {0.5e-6, 0.8e-6, 1.2e-6, 1.8e-6, 2.5e-6, 3.5e-6}) {
      const double truth = amplitude / r;
      readings.push_back({r, truth + sigma * normal_sample(rng), sigma});
    }
    const auto fit = fit_heat_profile(readings, kappa, r0);
    CHECK_THAT(fit.dT_at_source, WithinRel(72.0, 0.10));
    CHECK(fit.dT_at_source_error < 0.10 * 72.0);
  }
  SECTION("single reading determines the amplitude exactly") {
    std::vector<HeatReading> one = {{1e-6, 3.6, 0.25}};
    const auto fit = fit_heat_profile(one, kappa, r0);
    CHECK_THAT(fit.amplitude, WithinRel(3.6e-6, 1e-12));
    CHECK(fit.residual_norm < 1e-12);
    CHECK_THAT(fit.amplitude_error, WithinRel(0.25e-6, 1e-12));
  }
  SECTION("degenerate inputs rejected") {
    std::vector<HeatReading> bad = {{-1e-6, 1.0, 0.1}};
    CHECK_THROWS_AS(fit_heat_profile(bad, kappa, r0), ValidationError);
    std::vector<HeatReading> bad_sigma = {{1e-6, 1.0, 0.0}};
    CHECK_THROWS_AS(fit_heat_profile(bad_sigma, kappa, r0), ValidationError);
    CHECK_THROWS_AS(fit_heat_profile({}, kappa, r0), ValidationError);
  }
}

TEST_CASE("solution_heating surrogate") {
  SECTION("zero power means no heating") {
    CHECK(solution_heating(0.0, 0.6, 26.5e-6) == 0.0);
  }
  SECTION("a microwatt into water at the 26.5 um radius gives ~5 mK") {
    const double dT = solution_heating(1e-6, 0.6, 26.5e-6);
    CHECK_THAT(dT, WithinAbs(5e-3, 0.1e-3));
  }
  SECTION("linear scaling with power: the reduced-duty-cycle estimate") {
    const double base = solution_heating(1e-6, 0.6, 26.5e-6);
    const double reduced = solution_heating(0.01e-6, 0.6, 26.5e-6);
    CHECK_THAT(reduced, WithinRel(0.01 * base, 1e-15));
    CHECK_THAT(reduced, WithinAbs(50e-6, 1.1e-6));  // ~50 micro-kelvin
  }
  SECTION("the radius reproducing 5 mK at a microwatt is ~27 um") {
    // invert the surrogate for the calibration radius
    const double r = 1e-6 / (4.0 * std::numbers::pi * 0.6 * 5e-3);
    CHECK_THAT(r, WithinAbs(26.5e-6, 0.5e-6));
    CHECK_THAT(solution_heating(1e-6, 0.6, r), WithinRel(5e-3, 1e-12));
  }
}
