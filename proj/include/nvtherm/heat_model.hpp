#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "nvtherm/errors.hpp"

// Steady-state heat transport in an infinite homogeneous medium: point
// sources superpose as dT(r) = Q / (4 pi kappa r), a Gaussian beam-overlap
// factor couples laser power into a nanoparticle, and a weighted 1/r fit
// inverts probe readings back to the source temperature.

namespace nvtherm {

struct PointSource {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m
  double q_dot = 0.0;                                  // W
};

struct HeatScene {
  std::vector<PointSource> sources;
  double conductivity = 1.0;    // W/(m K), glass default
  double source_radius = 50e-9;  // m, evaluation cutoff at the source

  void validate() const {
    if (!(conductivity > 0.0)) {
      throw ValidationError("conductivity must be positive");
    }
    if (!(source_radius > 0.0)) {
      throw ValidationError("source_radius must be positive");
    }
    for (const auto& s : sources) {
      if (!(s.q_dot >= 0.0)) {
        throw ValidationError("q_dot must be non-negative");
      }
    }
  }
};

struct LaserSpot {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m
  double power = 0.0;                                  // W
  double waist = 0.3e-6;                               // m
  double absorption_efficiency = 1.0;

  void validate() const {
    if (!(power >= 0.0)) throw ValidationError("power must be non-negative");
    if (!(waist > 0.0)) throw ValidationError("waist must be positive");
    if (!(absorption_efficiency >= 0.0 && absorption_efficiency <= 1.0)) {
      throw ValidationError("absorption_efficiency must lie in [0, 1]");
    }
  }
};

// Temperature rise at `probe` from all sources; distances are clamped at
// source_radius to regularize the 1/r singularity.
inline double steady_state_dT(const HeatScene& scene,
                              const Eigen::Vector3d& probe) {
  scene.validate();
  double total = 0.0;
  for (const auto& s : scene.sources) {
    const double r =
        std::max((probe - s.position).norm(), scene.source_radius);
    total += s.q_dot / (4.0 * std::numbers::pi * scene.conductivity * r);
  }
  return total;
}

// Heat absorbed by a nanoparticle at `np_position`: linear in power, with a
// Gaussian beam-overlap factor exp(-2 |offset|^2 / waist^2).
inline double laser_to_heat(const LaserSpot& spot,
                            const Eigen::Vector3d& np_position) {
  spot.validate();
  const double offset2 = (np_position - spot.position).squaredNorm();
  return spot.power * spot.absorption_efficiency *
         std::exp(-2.0 * offset2 / (spot.waist * spot.waist));
}

struct HeatReading {
  double distance = 0.0;  // m, from the source
  double delta_T = 0.0;   // K
  double sigma = 1.0;     // K, one standard deviation
};

struct HeatProfileFit {
  double amplitude = 0.0;        // A = Q / (4 pi kappa), K m
  double amplitude_error = 0.0;
  double q_dot = 0.0;            // W
  double q_dot_error = 0.0;
  double dT_at_source = 0.0;     // K, amplitude / source_radius
  double dT_at_source_error = 0.0;
  double residual_norm = 0.0;    // weighted
};

// Weighted least squares of dT = A / r through the readings (exact inverse
// of steady_state_dT outside the clamp); a single reading determines A
// exactly with the error coming from its sigma alone.
inline HeatProfileFit fit_heat_profile(std::span<const HeatReading> readings,
                                       double conductivity,
                                       double source_radius) {
  if (readings.empty()) {
    throw ValidationError("need at least one reading");
  }
  if (!(conductivity > 0.0)) {
    throw ValidationError("conductivity must be positive");
  }
  if (!(source_radius > 0.0)) {
    throw ValidationError("source_radius must be positive");
  }
  double design = 0.0;  // sum (1/r)^2 / sigma^2
  double moment = 0.0;  // sum dT (1/r) / sigma^2
  for (const auto& reading : readings) {
    if (!(reading.distance > 0.0)) {
      throw ValidationError("distances must be positive");
    }
    if (!(reading.sigma > 0.0)) {
      throw ValidationError("sigma must be positive");
    }
    const double basis = 1.0 / std::max(reading.distance, source_radius);
    design += basis * basis / (reading.sigma * reading.sigma);
    moment += reading.delta_T * basis / (reading.sigma * reading.sigma);
  }

  HeatProfileFit fit;
  fit.amplitude = moment / design;
  fit.amplitude_error = 1.0 / std::sqrt(design);
  const double four_pi_kappa = 4.0 * std::numbers::pi * conductivity;
  fit.q_dot = four_pi_kappa * fit.amplitude;
  fit.q_dot_error = four_pi_kappa * fit.amplitude_error;
  fit.dT_at_source = fit.amplitude / source_radius;
  fit.dT_at_source_error = fit.amplitude_error / source_radius;

  double chi2 = 0.0;
  for (const auto& reading : readings) {
    const double basis = 1.0 / std::max(reading.distance, source_radius);
    const double r = (reading.delta_T - fit.amplitude * basis) / reading.sigma;
    chi2 += r * r;
  }
  fit.residual_norm = std::sqrt(chi2);
  return fit;
}

// Green's-function surrogate for heating of the surrounding solution by an
// absorbed microwave power, evaluated at the effective loop radius.
inline double solution_heating(double absorbed_power, double conductivity,
                               double effective_radius) {
  if (!(absorbed_power >= 0.0)) {
    throw ValidationError("absorbed_power must be non-negative");
  }
  if (!(conductivity > 0.0)) {
    throw ValidationError("conductivity must be positive");
  }
  if (!(effective_radius > 0.0)) {
    throw ValidationError("effective_radius must be positive");
  }
  return absorbed_power /
         (4.0 * std::numbers::pi * conductivity * effective_radius);
}

}  // namespace nvtherm
