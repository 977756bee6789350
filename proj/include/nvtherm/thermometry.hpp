#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <vector>

#include "nvtherm/least_squares.hpp"
#include "nvtherm/measurement.hpp"
#include "nvtherm/spin_model.hpp"

// Temperature estimators: the four-point ESR ratio, the fixed-tau echo
// readout with its accuracy formula, beat-fringe and double-dip fits, the
// sensitivity law, and the linear-fit accuracy with its gamma-function
// error bar.

namespace nvtherm {

struct EstimatorOutput {
  double delta_T = 0.0;    // K
  double std_error = 0.0;  // K
  // raw ratio pieces, reported so callers can detect near-degeneracy
  double numerator = 0.0;
  double denominator = 0.0;
};

// Probe geometry of the four-point estimator. With mirrored_ordering the
// probe carriers are (w- - dw, w- + dw, w+ + dw, w+ - dw): the offsets on
// the upper dip are mirrored so the denominator of the ratio sums the
// magnitudes of the two flank slopes instead of cancelling them. The
// textbook ordering (w+ -+ dw) is kept behind the flag for comparison; on a
// mirror-symmetric spectrum its denominator vanishes identically.
struct FourPointConfig {
  double omega_minus = 0.0;  // rad/s, anchor on the lower dip
  double omega_plus = 0.0;   // rad/s, anchor on the upper dip
  double delta_omega = 0.0;  // rad/s, probe offset
  bool mirrored_ordering = true;
  double d_delta_dT = rad_from_hz(-77.0e3);  // rad/s per K
  double degeneracy_floor_rel = 1e-6;        // of the mean probe counts

  void validate() const {
    if (!(delta_omega > 0.0)) {
      throw ValidationError("delta_omega must be positive");
    }
    if (!(omega_minus < omega_plus)) {
      throw ValidationError("omega_minus must lie below omega_plus");
    }
    if (d_delta_dT == 0.0) {
      throw ValidationError("d_delta_dT must be non-zero");
    }
    if (!(degeneracy_floor_rel > 0.0)) {
      throw ValidationError("degeneracy_floor_rel must be positive");
    }
  }

  std::array<double, 4> carriers() const {
    if (mirrored_ordering) {
      return {omega_minus - delta_omega, omega_minus + delta_omega,
              omega_plus + delta_omega, omega_plus - delta_omega};
    }
    return {omega_minus - delta_omega, omega_minus + delta_omega,
            omega_plus - delta_omega, omega_plus + delta_omega};
  }
};

// Temperature change from four fluorescence readings taken at the config's
// probe carriers:
//   dT = dw / (dDelta/dT) * ((f1+f2) - (f3+f4)) / ((f1-f2) + (f3-f4)).
// The ratio is invariant under a common gain on all four readings; the
// standard error propagates independent Poisson variances (pass raw counts
// for it to be meaningful).
inline EstimatorOutput four_point_delta_T(double f1, double f2, double f3,
                                          double f4,
                                          const FourPointConfig& cfg) {
  cfg.validate();
  EstimatorOutput out;
  out.numerator = (f1 + f2) - (f3 + f4);
  out.denominator = (f1 - f2) + (f3 - f4);
  const double mean =
      0.25 * (std::abs(f1) + std::abs(f2) + std::abs(f3) + std::abs(f4));
  if (!(std::abs(out.denominator) > cfg.degeneracy_floor_rel * mean) ||
      mean == 0.0) {
    throw EstimationError(
        "four-point denominator below the degeneracy floor: bad probe "
        "geometry or flat spectrum");
  }
  const double prefactor = cfg.delta_omega / cfg.d_delta_dT;
  out.delta_T = prefactor * out.numerator / out.denominator;

  const double d2 = out.denominator * out.denominator;
  const std::array<double, 4> f = {f1, f2, f3, f4};
  const std::array<double, 4> dn = {1.0, 1.0, -1.0, -1.0};
  const std::array<double, 4> dd = {1.0, -1.0, 1.0, -1.0};
  double var = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double g = prefactor *
                     (dn[i] * out.denominator - out.numerator * dd[i]) / d2;
    var += g * g * std::max(f[i], 0.0);
  }
  out.std_error = std::sqrt(var);
  return out;
}

namespace detail {

// d(rate)/d(omega) of the double-dip spectrum (the normalization constant
// does not depend on omega).
inline double esr_slope(const ESRSpectrumModel& model, double norm,
                        double omega) {
  auto dl = [&](double x) {
    const double g2 = model.linewidth * model.linewidth;
    const double q = x * x + g2;
    return -2.0 * g2 * x / (q * q);
  };
  const double ds = dl(omega - (model.center - model.half_splitting)) +
                    dl(omega - (model.center + model.half_splitting));
  return -model.rate_baseline * model.contrast * ds / norm;
}

}  // namespace detail

struct ProbeRequest {
  // 0 selects 0.05 linewidths. The four-point ratio is a linearization: its
  // gain is 1 - O((delta_omega/linewidth)^2), measured 0.60 at half a
  // linewidth but 0.999 at 0.05 linewidths, so the default keeps the
  // estimator in its linear regime. Larger offsets trade accuracy for
  // shot-noise leverage.
  double delta_omega = 0.0;
  double d_delta_dT = rad_from_hz(-77.0e3);
  bool mirrored_ordering = true;
  double degeneracy_floor_rel = 1e-6;
};

// Places the probe anchors at the maximum-|slope| points on the outer
// flanks of the two dips (for a merged dip: the two flanks of the single
// dip) and fills in the four-point config.
inline FourPointConfig choose_probe_points(const ESRSpectrumModel& model,
                                           const ProbeRequest& req = {}) {
  model.validate();
  const double norm = esr_norm(model);
  const double gamma = model.linewidth;
  const double dip_lo = model.center - model.half_splitting;

  // lower outer flank: rate falls toward the dip, slope is negative. The
  // double-dip model is mirror symmetric about its center by construction,
  // so the upper anchor is the exact reflection (searching both flanks
  // independently would leave a numerical-plateau asymmetry of order the
  // slope-curvature resolution).
  const double anchor_lo = detail::golden_maximize(
      dip_lo - 6.0 * gamma, dip_lo,
      [&](double w) { return -detail::esr_slope(model, norm, w); });
  const double anchor_hi = model.center + (model.center - anchor_lo);

  // a usable flank must rise a measurable fraction of the baseline per
  // linewidth, independent of how small the nominal contrast is
  const double slope_floor = 1e-12 * model.rate_baseline / gamma;
  if (!(std::abs(detail::esr_slope(model, norm, anchor_lo)) > slope_floor) ||
      !(std::abs(detail::esr_slope(model, norm, anchor_hi)) > slope_floor)) {
    throw EstimationError("spectrum has no resolvable slope structure");
  }

  FourPointConfig cfg;
  cfg.omega_minus = anchor_lo;
  cfg.omega_plus = anchor_hi;
  cfg.delta_omega = req.delta_omega > 0.0 ? req.delta_omega : 0.05 * gamma;
  cfg.mirrored_ordering = req.mirrored_ordering;
  cfg.d_delta_dT = req.d_delta_dT;
  cfg.degeneracy_floor_rel = req.degeneracy_floor_rel;
  cfg.validate();
  return cfg;
}

struct DipFitResult {
  double center = 0.0;
  double half_splitting = 0.0;
  double linewidth = 0.0;
  double contrast = 0.0;
  double baseline = 0.0;  // count units of the input data
  Eigen::Matrix<double, 5, 5> covariance;  // order as the fields above
  double residual_norm = 0.0;
  int iterations = 0;
};

// Nonlinear least squares of the double-Lorentzian dip model on a scan;
// the estimator-of-record oracle against which the four-point ratio is
// validated. Residuals are weighted by sqrt(counts) (Poisson).
inline DipFitResult fit_dip_centers(std::span<const double> freqs,
                                    std::span<const double> counts) {
  if (freqs.size() != counts.size()) {
    throw ValidationError("freqs and counts must have equal length");
  }
  const std::size_t n = freqs.size();
  if (n < 8) {
    throw ValidationError("need at least 8 points spanning both dips");
  }

  // --- initial guesses ---
  std::vector<double> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  const double baseline0 = sorted[static_cast<std::size_t>(0.9 * (n - 1))];
  const double floor0 = sorted.front();
  const double depth0 = std::max(baseline0 - floor0, 1e-12 * baseline0);
  const double contrast0 =
      std::clamp(depth0 / std::max(baseline0, 1e-300), 1e-3, 0.95);

  // contiguous runs below half depth locate the dips
  const double threshold = baseline0 - 0.5 * depth0;
  struct Run {
    double centroid = 0.0;
    double weight = 0.0;
    double min_count = 0.0;
    double width = 0.0;
  };
  std::vector<Run> runs;
  std::size_t i = 0;
  while (i < n) {
    if (counts[i] < threshold) {
      Run run;
      run.min_count = counts[i];
      double w_sum = 0.0, wx_sum = 0.0;
      const std::size_t start = i;
      while (i < n && counts[i] < threshold) {
        const double w = threshold - counts[i];
        w_sum += w;
        wx_sum += w * freqs[i];
        run.min_count = std::min(run.min_count, counts[i]);
        ++i;
      }
      run.centroid = wx_sum / w_sum;
      run.weight = w_sum;
      run.width = std::abs(freqs[i - 1 < n ? i - 1 : n - 1] - freqs[start]);
      runs.push_back(run);
    } else {
      ++i;
    }
  }

  double center0, hs0, gamma0;
  const double spacing =
      std::abs(freqs.back() - freqs.front()) / static_cast<double>(n - 1);
  if (runs.size() >= 2) {
    std::sort(runs.begin(), runs.end(),
              [](const Run& a, const Run& b) { return a.weight > b.weight; });
    const double c1 = std::min(runs[0].centroid, runs[1].centroid);
    const double c2 = std::max(runs[0].centroid, runs[1].centroid);
    center0 = 0.5 * (c1 + c2);
    hs0 = 0.5 * (c2 - c1);
    gamma0 = std::max(0.5 * 0.5 * (runs[0].width + runs[1].width), spacing);
  } else if (runs.size() == 1) {
    center0 = runs[0].centroid;
    hs0 = 0.25 * std::max(runs[0].width, spacing);
    gamma0 = std::max(0.5 * runs[0].width, spacing);
  } else {
    throw FitError("no dip structure found below the half-depth threshold");
  }

  // --- weighted residuals on the physical model ---
  std::vector<double> sigma(n);
  for (std::size_t k = 0; k < n; ++k) {
    sigma[k] = std::sqrt(std::max(counts[k], 1.0));
  }
  auto residual = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    ESRSpectrumModel trial;
    trial.center = p(0);
    trial.half_splitting = std::abs(p(1));
    trial.linewidth = std::max(std::abs(p(2)), 1e-6 * gamma0);
    trial.contrast = p(3);
    trial.rate_baseline = 1.0;  // folded into p(4)
    const double norm = esr_norm(trial);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const double value =
          p(4) * (1.0 - p(3) * esr_dip_sum(trial, freqs[k]) / norm);
      r(static_cast<Eigen::Index>(k)) = (value - counts[k]) / sigma[k];
    }
    return r;
  };

  Eigen::VectorXd p0(5);
  p0 << center0, hs0, gamma0, contrast0, baseline0;
  Eigen::VectorXd scales(5);
  scales << gamma0, gamma0, gamma0, 0.1, std::max(baseline0, 1.0);
  const LMResult lm = levenberg_marquardt(residual, p0, scales);
  if (!lm.converged) {
    throw FitError("double-dip fit did not converge after " +
                   std::to_string(lm.iterations) +
                   " iterations (residual norm " +
                   std::to_string(lm.residual_norm) + ")");
  }

  DipFitResult out;
  out.center = lm.params(0);
  out.half_splitting = std::abs(lm.params(1));
  out.linewidth = std::abs(lm.params(2));
  out.contrast = lm.params(3);
  out.baseline = lm.params(4);
  out.covariance = lm.covariance;
  out.residual_norm = lm.residual_norm;
  out.iterations = lm.iterations;
  return out;
}

struct BeatFitResult {
  double amp1 = 0.0;
  double amp2 = 0.0;
  double omega1 = 0.0;  // rad/s against the fit's time axis
  double omega2 = 0.0;
  double coherence_time = 0.0;
  double stretch = 1.0;
  double offset = 0.0;
  double residual_norm = 0.0;
  Eigen::MatrixXd covariance;  // 7x7: amp1, amp2, w1, w2, T, p, offset
};

// Least-squares fit of a two-frequency damped cosine
//   s(t) = (w1 cos(omega1 t) + w2 cos(omega2 t)) exp(-(t/T)^p) + offset.
inline BeatFitResult fit_echo_beats(std::span<const double> times,
                                    std::span<const double> signals) {
  if (times.size() != signals.size()) {
    throw ValidationError("times and signals must have equal length");
  }
  const std::size_t n = times.size();
  if (n < 12) throw ValidationError("need at least 12 samples");
  const double t_span = times.back() - times.front();
  if (!(t_span > 0.0)) throw ValidationError("times must be increasing");

  const double offset0 =
      std::accumulate(signals.begin(), signals.end(), 0.0) / n;

  // coarse periodogram for the two dominant frequencies
  const double w_min = 0.25 * two_pi / t_span;
  const double w_max = std::numbers::pi * (n - 1) / t_span;  // Nyquist-ish
  const int grid = 4000;
  auto power = [&](double w) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      acc += (signals[k] - offset0) *
             std::exp(std::complex<double>(0.0, -w * times[k]));
    }
    return std::norm(acc);
  };
  double w1 = w_min, p1 = 0.0;
  for (int g = 0; g < grid; ++g) {
    const double w = w_min + (w_max - w_min) * g / (grid - 1);
    const double pw = power(w);
    if (pw > p1) {
      p1 = pw;
      w1 = w;
    }
  }
  const double notch = 1.5 * two_pi / t_span;
  double w2 = w1, p2 = -1.0;
  for (int g = 0; g < grid; ++g) {
    const double w = w_min + (w_max - w_min) * g / (grid - 1);
    if (std::abs(w - w1) < notch) continue;
    const double pw = power(w);
    if (pw > p2) {
      p2 = pw;
      w2 = w;
    }
  }
  if (p2 < 0.0) w2 = 1.3 * w1;

  // linear amplitudes for the initial point, with the envelope folded in;
  // a coarse grid over the decay time picks the best-conditioned start
  Eigen::VectorXd lin(3);
  double t0_best = t_span;
  double lin_cost = std::numeric_limits<double>::infinity();
  for (double t0 : {0.3 * t_span, 0.7 * t_span, 1.5 * t_span, 5.0 * t_span}) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 3);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const double env = std::exp(-std::pow(std::max(times[k], 0.0) / t0, 1.5));
      design(static_cast<Eigen::Index>(k), 0) = std::cos(w1 * times[k]) * env;
      design(static_cast<Eigen::Index>(k), 1) = std::cos(w2 * times[k]) * env;
      design(static_cast<Eigen::Index>(k), 2) = 1.0;
      rhs(static_cast<Eigen::Index>(k)) = signals[k];
    }
    const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);
    const double cost = (design * sol - rhs).squaredNorm();
    if (cost < lin_cost) {
      lin_cost = cost;
      lin = sol;
      t0_best = t0;
    }
  }

  auto residual = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    const double tc = std::max(std::abs(p(4)), 1e-3 * t_span);
    const double stretch = std::clamp(p(5), 0.25, 6.0);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const double env =
          times[k] <= 0.0
              ? 1.0
              : std::exp(-std::pow(times[k] / tc, stretch));
      const double value =
          (p(0) * std::cos(p(2) * times[k]) +
           p(1) * std::cos(p(3) * times[k])) *
              env +
          p(6);
      r(static_cast<Eigen::Index>(k)) = value - signals[k];
    }
    return r;
  };

  Eigen::VectorXd p0(7);
  p0 << lin(0), lin(1), w1, w2, t0_best, 1.5, lin(2);
  Eigen::VectorXd scales(7);
  const double amp_scale = std::max(std::abs(lin(0)) + std::abs(lin(1)), 0.1);
  scales << amp_scale, amp_scale, two_pi / t_span, two_pi / t_span, t_span,
      0.5, amp_scale;
  const LMResult lm = levenberg_marquardt(residual, p0, scales);
  if (!lm.converged) {
    throw FitError("beat-fringe fit did not converge (residual norm " +
                   std::to_string(lm.residual_norm) + ")");
  }

  BeatFitResult out;
  out.amp1 = lm.params(0);
  out.amp2 = lm.params(1);
  out.omega1 = std::abs(lm.params(2));
  out.omega2 = std::abs(lm.params(3));
  out.coherence_time = std::abs(lm.params(4));
  out.stretch = std::clamp(lm.params(5), 0.25, 6.0);
  out.offset = lm.params(6);
  out.residual_norm = lm.residual_norm;
  out.covariance = lm.covariance;
  // unweighted residuals: scale covariance by the residual variance
  const std::size_t dof = n > 7 ? n - 7 : 1;
  out.covariance *= lm.residual_norm * lm.residual_norm / dof;
  if (out.omega1 > out.omega2) {
    std::swap(out.omega1, out.omega2);
    std::swap(out.amp1, out.amp2);
  }
  return out;
}

struct EchoEstimatorConfig {
  double tau = 250e-6;            // half the free evolution, s
  double fringe_amplitude = 0.0;  // c, signal units
  double signal_offset = 0.0;     // operating-point offset (diagnostic)
  double d_delta_dT = rad_from_hz(-77.0e3);

  void validate() const {
    if (!(tau > 0.0)) throw ValidationError("tau must be positive");
    if (!(fringe_amplitude > 0.0)) {
      throw ValidationError("zero fringe amplitude");
    }
    if (d_delta_dT == 0.0) {
      throw ValidationError("d_delta_dT must be non-zero");
    }
  }
};

// Fixed-tau echo readout on a fringe slope:
//   dT = (signal - reference) / (c dDelta/dT 2 tau),
//   sigma_dT = sigma_signal / (c |dDelta/dT| 2 tau).
inline EstimatorOutput echo_delta_T(double signal, double reference_signal,
                                    double sigma_signal,
                                    const EchoEstimatorConfig& cfg) {
  cfg.validate();
  if (!(sigma_signal >= 0.0)) {
    throw ValidationError("sigma_signal must be non-negative");
  }
  EstimatorOutput out;
  const double gain =
      cfg.fringe_amplitude * cfg.d_delta_dT * 2.0 * cfg.tau;
  out.numerator = signal - reference_signal;
  out.denominator = gain;
  out.delta_T = out.numerator / gain;
  out.std_error = sigma_signal / std::abs(gain);
  return out;
}

struct SensitivityReport {
  double eta = 0.0;            // K / sqrt(Hz)
  double accuracy_at_t = 0.0;  // K, equals eta / sqrt(t)
  double integration_time = 0.0;
};

// Shot-noise sensitivity law. The readout factor C degrades the
// sensitivity (eta grows as C shrinks):
//   eta = 1 / (C |dDelta/dT| sqrt(T_coh N)).
inline SensitivityReport sensitivity(const NVEnsembleParams& params,
                                     double t) {
  params.validate();
  if (!(t > 0.0)) throw ValidationError("integration time must be positive");
  SensitivityReport report;
  report.eta = 1.0 / (params.readout_factor * std::abs(params.d_delta_dT) *
                      std::sqrt(params.t_coh * params.n_nv));
  report.integration_time = t;
  report.accuracy_at_t = report.eta / std::sqrt(t);
  return report;
}

struct LinearFitReport {
  double slope = 0.0;           // K / W
  double slope_error = 0.0;     // K / W
  double accuracy = 0.0;        // K
  double accuracy_error = 0.0;  // K
  int n_points = 0;
};

// Zero-intercept least squares of temperature vs power; the accuracy is the
// rms residual with N-1 degrees of freedom and its error bar follows the
// chi-distribution gamma-function formula.
inline LinearFitReport linear_fit_accuracy(std::span<const double> powers,
                                           std::span<const double> temps) {
  if (powers.size() != temps.size()) {
    throw ValidationError("powers and temps must have equal length");
  }
  const std::size_t n = powers.size();
  if (n < 3) throw ValidationError("need at least 3 points");
  const auto [lo, hi] = std::minmax_element(powers.begin(), powers.end());
  if (!(*hi > *lo)) throw ValidationError("powers must not all be equal");

  double spp = 0.0, spt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    spp += powers[i] * powers[i];
    spt += powers[i] * temps[i];
  }
  if (!(spp > 0.0)) throw ValidationError("powers are degenerate");

  LinearFitReport report;
  report.n_points = static_cast<int>(n);
  report.slope = spt / spp;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = temps[i] - report.slope * powers[i];
    ss += r * r;
  }
  const double nd = static_cast<double>(n);
  report.accuracy = std::sqrt(ss / (nd - 1.0));
  const double log_ratio =
      std::lgamma(nd / 2.0) - std::lgamma((nd - 1.0) / 2.0);
  const double factor =
      1.0 - (2.0 / (nd - 1.0)) * std::exp(2.0 * log_ratio);
  report.accuracy_error = report.accuracy * std::sqrt(std::max(factor, 0.0));
  report.slope_error = report.accuracy / std::sqrt(spp);
  return report;
}

}  // namespace nvtherm
