#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nvtherm/rng.hpp"
#include "nvtherm/spin_model.hpp"

// Photon statistics and the CW-ESR spectrum model: population-to-rate
// readout, double-Lorentzian fluorescence dips, and shot-noise-limited
// count sampling.

namespace nvtherm {

struct PhotonModel {
  double rate_baseline = 1e5;      // off-resonant fluorescence, counts/s
  double contrast = 0.3;           // fractional dip of the |+-1> signal
  double readout_window = 300e-9;  // s
  double collection_factor = 1.0;  // lumps optics losses into one knob

  friend bool operator==(const PhotonModel&, const PhotonModel&) = default;

  void validate() const {
    if (!(rate_baseline > 0.0)) {
      throw ValidationError("rate_baseline must be positive");
    }
    if (!(contrast > 0.0 && contrast < 1.0)) {
      throw ValidationError("contrast must lie in (0, 1)");
    }
    if (!(readout_window > 0.0)) {
      throw ValidationError("readout_window must be positive");
    }
    if (!(collection_factor > 0.0)) {
      throw ValidationError("collection_factor must be positive");
    }
  }
};

struct ESRSpectrumModel {
  double center = rad_from_hz(2.87e9);    // Delta(T), rad/s
  double half_splitting = rad_from_hz(4e6);  // dips at center +- this
  double linewidth = rad_from_hz(5e6);    // Lorentzian HWHM, rad/s
  double contrast = 0.2;                  // depth of the deepest point
  double rate_baseline = 2.5e5;           // counts/s far off resonance

  friend bool operator==(const ESRSpectrumModel&,
                         const ESRSpectrumModel&) = default;

  void validate() const {
    if (!(linewidth > 0.0)) throw ValidationError("linewidth must be positive");
    if (!(contrast > 0.0 && contrast < 1.0)) {
      throw ValidationError("contrast must lie in (0, 1)");
    }
    if (!(rate_baseline > 0.0)) {
      throw ValidationError("rate_baseline must be positive");
    }
    if (!(half_splitting >= 0.0)) {
      throw ValidationError("half_splitting must be non-negative");
    }
  }
};

namespace detail {

// Unit-peak Lorentzian with half width at half maximum `hwhm`.
inline double lorentzian(double x, double hwhm) {
  return hwhm * hwhm / (x * x + hwhm * hwhm);
}

inline double golden_maximize(double lo, double hi, const auto& f,
                              int iterations = 160) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iterations && b - a > 0.0; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Sum of the two unit-peak dips at center +- half_splitting, before
// normalization.
inline double esr_dip_sum(const ESRSpectrumModel& model, double omega) {
  return detail::lorentzian(omega - (model.center - model.half_splitting),
                            model.linewidth) +
         detail::lorentzian(omega - (model.center + model.half_splitting),
                            model.linewidth);
}

// Peak value of the dip sum; the spectrum is normalized by this so the
// deepest point of the rate profile has fractional depth exactly
// `contrast`, whether the dips are resolved or merged.
inline double esr_norm(const ESRSpectrumModel& model) {
  // by symmetry the maximum lies between the center and a dip position
  const auto value = [&](double x) { return esr_dip_sum(model, x); };
  const double flank = detail::golden_maximize(
      model.center, model.center + model.half_splitting + model.linewidth,
      value);
  return std::max(value(model.center), value(flank));
}

// Fluorescence rate of the CW-ESR double-dip spectrum at drive frequency
// `omega`; smooth and strictly positive for contrast < 1.
inline double esr_rate(const ESRSpectrumModel& model, double omega) {
  model.validate();
  return model.rate_baseline *
         (1.0 - model.contrast * esr_dip_sum(model, omega) / esr_norm(model));
}

// Affine population readout: |0> fluoresces at the baseline, the |+-1>
// populations are dimmed by the contrast.
inline double readout_signal(const std::array<double, 3>& populations,
                             const PhotonModel& photon) {
  photon.validate();
  const double dim = populations[kIdxPlus] + populations[kIdxMinus];
  return photon.rate_baseline * (1.0 - photon.contrast * dim) *
         photon.collection_factor;
}

// Total photon count over `shots` readout windows at the given rate;
// Poisson-distributed with mean rate * duration * shots.
inline double sample_counts(double rate, double duration, long shots,
                            Philox& rng) {
  if (!(rate >= 0.0)) throw ValidationError("rate must be non-negative");
  if (!(duration > 0.0)) throw ValidationError("duration must be positive");
  if (shots < 1) throw ValidationError("shots must be at least 1");
  return poisson_sample(rate * duration * static_cast<double>(shots), rng);
}

inline double sample_counts(double rate, double duration, long shots,
                            std::uint64_t seed) {
  Philox rng = Philox::substream(seed, {fnv1a64("sample_counts")});
  return sample_counts(rate, duration, shots, rng);
}

// Per-frequency Poisson samples of the ESR spectrum, one dwell window per
// point. Each point draws from its own counter-based substream, so the
// result is independent of evaluation order. `noiseless` returns the exact
// expected counts instead.
inline std::vector<double> simulate_esr_scan(const ESRSpectrumModel& model,
                                             std::span<const double> freqs,
                                             double dwell, std::uint64_t seed,
                                             bool noiseless = false) {
  model.validate();
  if (freqs.empty()) throw ValidationError("frequency list must be non-empty");
  if (!(dwell > 0.0)) throw ValidationError("dwell must be positive");
  const double norm = esr_norm(model);
  std::vector<double> counts(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double rate =
        model.rate_baseline *
        (1.0 - model.contrast * esr_dip_sum(model, freqs[i]) / norm);
    if (noiseless) {
      counts[i] = rate * dwell;
    } else {
      Philox rng = Philox::substream(seed, {fnv1a64("esr_scan"), i});
      counts[i] = poisson_sample(rate * dwell, rng);
    }
  }
  return counts;
}

}  // namespace nvtherm
