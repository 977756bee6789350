#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nvtherm/heat_model.hpp"
#include "nvtherm/scenario.hpp"
#include "nvtherm/thermometry.hpp"
#include "nvtherm/version.hpp"

// Experiment orchestration: runs a scenario end to end and emits a
// report.json plus protocol-specific CSV files. Outputs are byte-identical
// for a fixed (config, seed) at any thread count: every Monte Carlo cell
// draws from its own counter-based substream keyed by (domain tag, probe id
// hash, power index, trial index), and rows are assembled in a fixed order.

namespace nvtherm {

using json = nlohmann::ordered_json;

struct RunnerOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<NoiseMode> noise_override;
};

struct RunReport {
  json summary;
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
};

namespace detail {

inline constexpr std::uint64_t kTagFourPoint = 0x666f7572ULL;   // "four"
inline constexpr std::uint64_t kTagEchoScan = 0x7363616eULL;    // "scan"
inline constexpr std::uint64_t kTagEchoTrial = 0x6563686fULL;   // "echo"
inline constexpr std::uint64_t kTagSensTime = 0x74696d65ULL;    // "time"
inline constexpr std::uint64_t kTagSensCount = 0x6e636e74ULL;   // "ncnt"

inline std::string csv_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10e", v);
  return buf;
}

inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min<int>(threads, static_cast<int>(count));
  pool.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline json provenance(const Scenario& scenario, std::uint64_t seed,
                       NoiseMode noise) {
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(scenario_hash(scenario)));
  json p;
  p["version"] = kVersion;
  p["protocol"] = to_string(scenario.protocol);
  p["label"] = scenario.label;
  p["seed"] = seed;
  p["config_hash"] = hash;
  p["noise"] = to_string(noise);
  return p;
}

struct EffectiveRun {
  std::uint64_t seed;
  NoiseMode noise;
};

inline EffectiveRun effective(const Scenario& scenario,
                              const RunnerOptions& opts) {
  return {opts.seed_override.value_or(scenario.seed),
          opts.noise_override.value_or(scenario.noise)};
}

// Sorted view of the probes; all reports list probes in id order so the
// output is invariant under reordering of the config sections.
inline std::vector<const ProbeSpec*> sorted_probes(const Scenario& scenario) {
  std::vector<const ProbeSpec*> probes;
  for (const auto& p : scenario.probes) probes.push_back(&p);
  std::sort(probes.begin(), probes.end(),
            [](const ProbeSpec* a, const ProbeSpec* b) { return a->id < b->id; });
  return probes;
}

inline HeatScene scene_at_power(const Scenario& scenario, double power) {
  HeatScene scene;
  scene.conductivity = scenario.heat.conductivity;
  scene.source_radius = scenario.heat.source_radius;
  for (const auto& src : scenario.sources) {
    LaserSpot spot;
    spot.position = Eigen::Vector3d(scenario.laser.position[0],
                                    scenario.laser.position[1],
                                    scenario.laser.position[2]);
    spot.power = power;
    spot.waist = scenario.laser.waist;
    spot.absorption_efficiency = src.absorption_efficiency;
    const Eigen::Vector3d np(src.position[0], src.position[1],
                             src.position[2]);
    scene.sources.push_back({np, laser_to_heat(spot, np)});
  }
  return scene;
}

struct FourPointReading {
  double dT_est = 0.0;
  double dT_err = 0.0;
};

// One four-point temperature readout of a probe whose spectrum is shifted
// by the scene temperature. Draws four Poisson counts from `stream`.
inline FourPointReading measure_four_point(const ProbeSpec& probe,
                                           const FourPointConfig& cfg,
                                           double d_delta_dT, double dT_true,
                                           double dwell, NoiseMode noise,
                                           Philox stream) {
  ESRSpectrumModel shifted = probe.esr;
  shifted.center += d_delta_dT * dT_true;
  std::array<double, 4> counts{};
  const auto carriers = cfg.carriers();
  for (int i = 0; i < 4; ++i) {
    const double rate = esr_rate(shifted, carriers[i]);
    counts[i] = noise == NoiseMode::Shot
                    ? sample_counts(rate, dwell, 1, stream)
                    : rate * dwell;
  }
  const auto est =
      four_point_delta_T(counts[0], counts[1], counts[2], counts[3], cfg);
  return {est.delta_T, est.std_error};
}

inline FourPointConfig probe_config(const Scenario& scenario,
                                    const ProbeSpec& probe) {
  ProbeRequest request;
  request.delta_omega = scenario.four_point.delta_omega;
  request.d_delta_dT = scenario.nv.d_delta_dT;
  return choose_probe_points(probe.esr, request);
}

}  // namespace detail

// Laser-power sweep measured through the four-point estimator, one row per
// (probe, power), plus a zero-intercept heating fit per probe.
inline RunReport run_power_sweep(const Scenario& scenario,
                                 const RunnerOptions& opts = {}) {
  scenario.validate();
  if (scenario.protocol != Protocol::FourPoint) {
    throw ValidationError("run_power_sweep expects protocol = four_point");
  }
  const auto [seed, noise] = detail::effective(scenario, opts);
  const auto probes = detail::sorted_probes(scenario);
  const auto& powers = scenario.laser.powers;

  std::vector<FourPointConfig> configs(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    configs[i] = detail::probe_config(scenario, *probes[i]);
  }

  struct Row {
    double power, dT_true, dT_est, dT_err;
  };
  std::vector<Row> rows(probes.size() * powers.size());
  std::vector<std::string> cell_errors(probes.size() * powers.size());

  detail::parallel_for(
      rows.size(), opts.threads, [&](std::size_t cell) {
        const std::size_t pi = cell / powers.size();
        const std::size_t wi = cell % powers.size();
        const ProbeSpec& probe = *probes[pi];
        const auto scene = detail::scene_at_power(scenario, powers[wi]);
        const Eigen::Vector3d pos(probe.position[0], probe.position[1],
                                  probe.position[2]);
        const double dT_true = steady_state_dT(scene, pos);
        try {
          const auto reading = detail::measure_four_point(
              probe, configs[pi], scenario.nv.d_delta_dT, dT_true,
              scenario.four_point.dwell, noise,
              Philox::substream(seed, {detail::kTagFourPoint,
                                       fnv1a64(probe.id), wi}));
          rows[cell] = {powers[wi], dT_true, reading.dT_est, reading.dT_err};
        } catch (const EstimationError& err) {
          cell_errors[cell] = "probe '" + probe.id + "' at power index " +
                              std::to_string(wi) + ": " + err.what();
        }
      });
  for (const auto& message : cell_errors) {
    if (!message.empty()) throw EstimationError(message);
  }

  std::string csv = "probe_id,power_W,dT_true_K,dT_est_K,dT_err_K\n";
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    for (std::size_t wi = 0; wi < powers.size(); ++wi) {
      const Row& row = rows[pi * powers.size() + wi];
      csv += probes[pi]->id + "," + detail::csv_num(row.power) + "," +
             detail::csv_num(row.dT_true) + "," +
             detail::csv_num(row.dT_est) + "," + detail::csv_num(row.dT_err) +
             "\n";
    }
  }

  RunReport report;
  report.summary["provenance"] = detail::provenance(scenario, seed, noise);
  json fits = json::array();
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    std::vector<double> ps, ts;
    for (std::size_t wi = 0; wi < powers.size(); ++wi) {
      ps.push_back(powers[wi]);
      ts.push_back(rows[pi * powers.size() + wi].dT_est);
    }
    const auto fit = linear_fit_accuracy(ps, ts);
    json entry;
    entry["probe_id"] = probes[pi]->id;
    entry["slope_k_per_w"] = fit.slope;
    entry["slope_error_k_per_w"] = fit.slope_error;
    entry["accuracy_k"] = fit.accuracy;
    entry["accuracy_error_k"] = fit.accuracy_error;
    entry["n_points"] = fit.n_points;
    fits.push_back(entry);
  }
  report.summary["heating_fits"] = fits;
  report.files.emplace_back("sweep.csv", csv);
  return report;
}

// Fixed-power heat profile: each probe measured via the four-point
// estimator, then the 1/r inverse fit extrapolates the source temperature.
inline RunReport run_heat_profile(const Scenario& scenario,
                                  const RunnerOptions& opts = {}) {
  scenario.validate();
  if (scenario.protocol != Protocol::HeatProfile) {
    throw ValidationError("run_heat_profile expects protocol = heat_profile");
  }
  const auto [seed, noise] = detail::effective(scenario, opts);
  const auto probes = detail::sorted_probes(scenario);
  const double power = scenario.laser.powers.front();
  const auto scene = detail::scene_at_power(scenario, power);
  const Eigen::Vector3d source(scenario.sources.front().position[0],
                               scenario.sources.front().position[1],
                               scenario.sources.front().position[2]);

  struct Row {
    double distance, dT_true, dT_est, dT_err;
  };
  std::vector<Row> rows(probes.size());
  detail::parallel_for(probes.size(), opts.threads, [&](std::size_t pi) {
    const ProbeSpec& probe = *probes[pi];
    const auto cfg = detail::probe_config(scenario, probe);
    const Eigen::Vector3d pos(probe.position[0], probe.position[1],
                              probe.position[2]);
    const double dT_true = steady_state_dT(scene, pos);
    const auto reading = detail::measure_four_point(
        probe, cfg, scenario.nv.d_delta_dT, dT_true,
        scenario.four_point.dwell, noise,
        Philox::substream(seed, {detail::kTagFourPoint, fnv1a64(probe.id), 0}));
    rows[pi] = {(pos - source).norm(), dT_true, reading.dT_est,
                reading.dT_err};
  });

  std::vector<HeatReading> readings;
  std::string csv = "probe_id,power_W,dT_true_K,dT_est_K,dT_err_K\n";
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    readings.push_back({rows[pi].distance, rows[pi].dT_est,
                        std::max(rows[pi].dT_err, 1e-12)});
    csv += probes[pi]->id + "," + detail::csv_num(power) + "," +
           detail::csv_num(rows[pi].dT_true) + "," +
           detail::csv_num(rows[pi].dT_est) + "," +
           detail::csv_num(rows[pi].dT_err) + "\n";
  }
  const auto fit = fit_heat_profile(readings, scenario.heat.conductivity,
                                    scenario.heat.source_radius);

  RunReport report;
  report.summary["provenance"] = detail::provenance(scenario, seed, noise);
  json profile;
  profile["power_w"] = power;
  profile["q_dot_w"] = fit.q_dot;
  profile["q_dot_error_w"] = fit.q_dot_error;
  profile["dt_at_source_k"] = fit.dT_at_source;
  profile["dt_at_source_error_k"] = fit.dT_at_source_error;
  profile["amplitude_k_m"] = fit.amplitude;
  profile["residual_norm_rel"] = fit.residual_norm;
  report.summary["heat_profile"] = profile;
  report.files.emplace_back("sweep.csv", csv);
  return report;
}

// Echo benchmark: a fringe trace vs total evolution time with the beat fit,
// then a fixed-tau Monte Carlo at the quadrature point for sensitivity and
// accuracy at the configured integration time.
inline RunReport run_echo_benchmark(const Scenario& scenario,
                                    const RunnerOptions& opts = {}) {
  scenario.validate();
  if (scenario.protocol != Protocol::Echo) {
    throw ValidationError("run_echo_benchmark expects protocol = echo");
  }
  const auto [seed, noise] = detail::effective(scenario, opts);
  const auto& echo = scenario.echo;
  const auto& photon = scenario.photon;
  const NVEnsembleParams& nv = scenario.nv;
  const FieldEnvironment& env = scenario.field;

  const double bright_rate =
      photon.rate_baseline * photon.collection_factor;
  const double bright_mean = bright_rate * photon.readout_window;
  auto shot_mean = [&](double signal_p0) {
    const double dim = 1.0 - signal_p0;
    return readout_signal({0.5 * dim, signal_p0, 0.5 * dim}, photon) *
           photon.readout_window;
  };

  // --- fringe trace vs 2 tau ---
  const int n_scan = echo.scan_points;
  std::vector<double> two_taus(n_scan), expected(n_scan), measured(n_scan);
  detail::parallel_for(n_scan, opts.threads, [&](std::size_t i) {
    const double two_tau = echo.scan_max_2tau * (i + 1.0) / n_scan;
    two_taus[i] = two_tau;
    const double signal = echo_fringe(0.5 * two_tau, nv, env, 0.0, 0.0);
    expected[i] = signal;
    if (noise == NoiseMode::Shot) {
      const double point_time = echo.scan_time_per_point;
      const double shot_time =
          two_tau + echo.init_dead_time + photon.readout_window;
      const double shots = std::max(1.0, std::floor(point_time / shot_time));
      Philox rng = Philox::substream(seed, {detail::kTagEchoScan, i});
      const double counts = poisson_sample(shots * shot_mean(signal), rng);
      const double rate_norm = counts / (shots * bright_mean);
      measured[i] = 1.0 - (1.0 - rate_norm) / photon.contrast;
    } else {
      measured[i] = signal;
    }
  });
  const auto beat_fit = fit_echo_beats(two_taus, measured);

  std::string csv = "two_tau_s,expected_signal,measured_signal\n";
  for (int i = 0; i < n_scan; ++i) {
    csv += detail::csv_num(two_taus[i]) + "," + detail::csv_num(expected[i]) +
           "," + detail::csv_num(measured[i]) + "\n";
  }

  // --- fixed-tau Monte Carlo at the quadrature operating point ---
  const double tau = echo.tau;
  const double two_tau = 2.0 * tau;
  const double delta_op = -std::numbers::pi / (4.0 * tau);
  auto mean_at = [&](double dT) {
    return shot_mean(echo_fringe(tau, nv, env, dT, delta_op));
  };
  const double mu_op = mean_at(0.0);
  const double fd_step = 1e-4;  // K
  const double dmu_ddT =
      (mean_at(fd_step) - mean_at(-fd_step)) / (2.0 * fd_step);
  EchoEstimatorConfig est_cfg;
  est_cfg.tau = tau;
  est_cfg.d_delta_dT = nv.d_delta_dT;
  est_cfg.signal_offset = mu_op;
  est_cfg.fringe_amplitude = dmu_ddT / (nv.d_delta_dT * two_tau);
  if (!(est_cfg.fringe_amplitude > 0.0)) {
    throw EstimationError(
        "echo operating point has no usable fringe slope (beat node?)");
  }

  const double shot_time =
      two_tau + echo.init_dead_time + photon.readout_window;
  const double n_shots = std::floor(echo.integration_time / shot_time);
  if (n_shots < 1) {
    throw ValidationError("integration time shorter than one shot");
  }

  double accuracy = 0.0;
  const double propagated =
      std::sqrt(mu_op / n_shots) /
      (est_cfg.fringe_amplitude * std::abs(nv.d_delta_dT) * two_tau);
  if (noise == NoiseMode::Shot) {
    std::vector<double> estimates(echo.mc_trials);
    detail::parallel_for(echo.mc_trials, opts.threads, [&](std::size_t t) {
      Philox rng = Philox::substream(seed, {detail::kTagEchoTrial, t});
      const double counts = poisson_sample(n_shots * mu_op, rng);
      estimates[t] =
          echo_delta_T(counts / n_shots, mu_op, 0.0, est_cfg).delta_T;
    });
    double sum = 0.0, sq = 0.0;
    for (double e : estimates) {
      sum += e;
      sq += e * e;
    }
    const double mean = sum / echo.mc_trials;
    accuracy = std::sqrt(std::max(sq / echo.mc_trials - mean * mean, 0.0));
  } else {
    accuracy = propagated;
  }
  const double eta = accuracy * std::sqrt(echo.integration_time);

  const auto shot_limit = sensitivity(nv, echo.integration_time);

  RunReport report;
  report.summary["provenance"] = detail::provenance(scenario, seed, noise);
  json fringe;
  fringe["omega1_hz"] = hz_from_rad(beat_fit.omega1);
  fringe["omega2_hz"] = hz_from_rad(beat_fit.omega2);
  fringe["amp1_signal"] = beat_fit.amp1;
  fringe["amp2_signal"] = beat_fit.amp2;
  fringe["coherence_time_s"] = beat_fit.coherence_time;
  fringe["stretch_exp"] = beat_fit.stretch;
  fringe["offset_signal"] = beat_fit.offset;
  report.summary["fringe_fit"] = fringe;
  json fixed;
  fixed["two_tau_s"] = two_tau;
  fixed["n_shots_per_trial"] = n_shots;
  fixed["mc_trials"] = echo.mc_trials;
  fixed["integration_time_s"] = echo.integration_time;
  fixed["accuracy_k"] = accuracy;
  fixed["accuracy_propagated_k"] = propagated;
  fixed["eta_k_sqrt_hz"] = eta;
  report.summary["fixed_tau"] = fixed;
  json analytic;
  analytic["eta_k_sqrt_hz"] = shot_limit.eta;
  analytic["accuracy_k"] = shot_limit.accuracy_at_t;
  analytic["integration_time_s"] = shot_limit.integration_time;
  report.summary["analytic_sensitivity"] = analytic;
  report.files.emplace_back("fringe.csv", csv);
  return report;
}

// Analytic sensitivity surface over the configured grids plus Monte Carlo
// verification of the square-root scaling laws in integration time and
// sensor size.
inline RunReport run_sensitivity_sweep(const Scenario& scenario,
                                       const RunnerOptions& opts = {}) {
  scenario.validate();
  if (scenario.protocol != Protocol::SensitivitySweep) {
    throw ValidationError(
        "run_sensitivity_sweep expects protocol = sensitivity_sweep");
  }
  const auto [seed, noise] = detail::effective(scenario, opts);
  const auto& grids = scenario.sensitivity;

  std::string csv = "n_nv,t_coh_s,time_s,eta_k_sqrt_hz,accuracy_k\n";
  for (double n : grids.n_nv_grid) {
    for (double t_coh : grids.t_coh_grid) {
      NVEnsembleParams params = scenario.nv;
      params.n_nv = static_cast<int>(n);
      params.t_coh = t_coh;
      for (double t : grids.time_grid) {
        const auto report = sensitivity(params, t);
        csv += detail::csv_num(n) + "," + detail::csv_num(t_coh) + "," +
               detail::csv_num(t) + "," + detail::csv_num(report.eta) + "," +
               detail::csv_num(report.accuracy_at_t) + "\n";
      }
    }
  }

  // Monte Carlo scaling verification on the first probe's spectrum
  const ProbeSpec& probe = *detail::sorted_probes(scenario).front();
  const auto cfg = detail::probe_config(scenario, probe);
  auto mc_std = [&](double dwell_scale, double rate_scale,
                    std::uint64_t tag, std::size_t point) {
    const int trials = grids.mc_trials;
    std::vector<double> estimates(trials);
    detail::parallel_for(trials, opts.threads, [&](std::size_t t) {
      ESRSpectrumModel scaled = probe.esr;
      scaled.rate_baseline *= rate_scale;
      std::array<double, 4> counts{};
      const auto carriers = cfg.carriers();
      Philox rng = Philox::substream(seed, {tag, point, t});
      for (int i = 0; i < 4; ++i) {
        counts[i] = sample_counts(esr_rate(scaled, carriers[i]),
                                  scenario.four_point.dwell * dwell_scale, 1,
                                  rng);
      }
      estimates[t] = four_point_delta_T(counts[0], counts[1], counts[2],
                                        counts[3], cfg)
                         .delta_T;
    });
    double sum = 0.0, sq = 0.0;
    for (double e : estimates) {
      sum += e;
      sq += e * e;
    }
    const double mean = sum / trials;
    return std::sqrt(std::max(sq / trials - mean * mean, 0.0));
  };

  auto regress = [](const std::vector<double>& x,
                    const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };

  std::vector<double> log_t, log_acc_t;
  json mc_time = json::array();
  for (std::size_t i = 0; i < grids.time_grid.size(); ++i) {
    const double scale = grids.time_grid[i] / grids.time_grid.front();
    const double acc = mc_std(scale, 1.0, detail::kTagSensTime, i);
    log_t.push_back(std::log10(grids.time_grid[i]));
    log_acc_t.push_back(std::log10(acc));
    json row;
    row["time_s"] = grids.time_grid[i];
    row["accuracy_k"] = acc;
    mc_time.push_back(row);
  }
  std::vector<double> log_n, log_acc_n;
  json mc_n = json::array();
  for (std::size_t i = 0; i < grids.n_nv_grid.size(); ++i) {
    const double scale = grids.n_nv_grid[i] / grids.n_nv_grid.front();
    const double acc = mc_std(1.0, scale, detail::kTagSensCount, i);
    log_n.push_back(std::log10(grids.n_nv_grid[i]));
    log_acc_n.push_back(std::log10(acc));
    json row;
    row["n_nv"] = grids.n_nv_grid[i];
    row["accuracy_k"] = acc;
    mc_n.push_back(row);
  }

  RunReport report;
  report.summary["provenance"] = detail::provenance(scenario, seed, noise);
  json scaling;
  scaling["exponent_time"] = regress(log_t, log_acc_t);
  scaling["exponent_n_nv"] = regress(log_n, log_acc_n);
  scaling["mc_vs_time"] = mc_time;
  scaling["mc_vs_n_nv"] = mc_n;
  report.summary["scaling"] = scaling;

  NVEnsembleParams best = scenario.nv;
  best.n_nv = static_cast<int>(grids.n_nv_grid.back());
  best.t_coh = grids.t_coh_grid.back();
  const auto ultimate = sensitivity(best, grids.time_grid.back());
  json ult;
  ult["n_nv"] = best.n_nv;
  ult["t_coh_s"] = best.t_coh;
  ult["eta_k_sqrt_hz"] = ultimate.eta;
  report.summary["ultimate"] = ult;
  report.files.emplace_back("sensitivity.csv", csv);
  return report;
}

// CW-ESR scan of the first probe with the dip fit and the chosen
// four-point probe frequencies.
inline RunReport run_esr_scan(const Scenario& scenario,
                              const RunnerOptions& opts = {}) {
  scenario.validate();
  if (scenario.protocol != Protocol::EsrScan) {
    throw ValidationError("run_esr_scan expects protocol = esr_scan");
  }
  const auto [seed, noise] = detail::effective(scenario, opts);
  const ProbeSpec& probe = *detail::sorted_probes(scenario).front();
  const auto& model = probe.esr;
  const double span =
      scenario.esr_scan.span > 0.0
          ? scenario.esr_scan.span
          : 2.0 * (model.half_splitting + 6.0 * model.linewidth);

  std::vector<double> freqs(scenario.esr_scan.points);
  for (int i = 0; i < scenario.esr_scan.points; ++i) {
    freqs[i] = model.center - 0.5 * span +
               span * i / (scenario.esr_scan.points - 1);
  }
  const auto counts =
      simulate_esr_scan(model, freqs, scenario.esr_scan.dwell, seed,
                        noise == NoiseMode::None);
  const auto fit = fit_dip_centers(freqs, counts);
  const auto cfg = detail::probe_config(scenario, probe);

  std::string csv = "freq_hz,counts\n";
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    csv += detail::csv_num(hz_from_rad(freqs[i])) + "," +
           detail::csv_num(counts[i]) + "\n";
  }

  RunReport report;
  report.summary["provenance"] = detail::provenance(scenario, seed, noise);
  json fitj;
  fitj["probe_id"] = probe.id;
  fitj["center_hz"] = hz_from_rad(fit.center);
  fitj["center_error_hz"] = hz_from_rad(std::sqrt(fit.covariance(0, 0)));
  fitj["half_splitting_hz"] = hz_from_rad(fit.half_splitting);
  fitj["linewidth_hz"] = hz_from_rad(fit.linewidth);
  fitj["contrast"] = fit.contrast;
  fitj["baseline_counts"] = fit.baseline;
  fitj["residual_norm_rel"] = fit.residual_norm;
  report.summary["dip_fit"] = fitj;
  json probes_j;
  const auto carriers = cfg.carriers();
  probes_j["f1_hz"] = hz_from_rad(carriers[0]);
  probes_j["f2_hz"] = hz_from_rad(carriers[1]);
  probes_j["f3_hz"] = hz_from_rad(carriers[2]);
  probes_j["f4_hz"] = hz_from_rad(carriers[3]);
  probes_j["delta_omega_hz"] = hz_from_rad(cfg.delta_omega);
  report.summary["four_point_probes"] = probes_j;
  report.files.emplace_back("scan.csv", csv);
  return report;
}

// Executes a user-supplied sequence program against the scenario's spin
// model (rotating frame of the first drive's carrier, or of the zero-field
// splitting when the program has no drive) and reports the end-of-sequence
// populations and signal.
inline json sequence_report(const Scenario& scenario,
                            const PulseSequence& seq) {
  double carrier = scenario.nv.delta0;
  for (const auto& element : seq.elements) {
    if (const auto* drive = std::get_if<DrivePulse>(&element)) {
      carrier = drive->carrier;
      break;
    }
  }
  const auto result = run_sequence(seq, scenario.nv, scenario.field,
                                   scenario.nv.t_ref, carrier);
  json block;
  block["label"] = seq.label;
  block["carrier_hz"] = hz_from_rad(carrier);
  block["expected_signal"] = result.expected_signal;
  block["population_minus"] = result.populations[kIdxMinus];
  block["population_zero"] = result.populations[kIdxZero];
  block["population_plus"] = result.populations[kIdxPlus];
  block["accumulated_phase_rad"] = result.accumulated_phase;
  return block;
}

inline RunReport run_scenario(const Scenario& scenario,
                              const RunnerOptions& opts = {}) {
  switch (scenario.protocol) {
    case Protocol::FourPoint: return run_power_sweep(scenario, opts);
    case Protocol::Echo: return run_echo_benchmark(scenario, opts);
    case Protocol::EsrScan: return run_esr_scan(scenario, opts);
    case Protocol::HeatProfile: return run_heat_profile(scenario, opts);
    case Protocol::SensitivitySweep:
      return run_sensitivity_sweep(scenario, opts);
  }
  throw ValidationError("unknown protocol");
}

// Provenance completeness and unit discipline: every numeric leaf key must
// end in a recognized unit (or count) suffix.
inline void validate_report(const RunReport& report) {
  const json& summary = report.summary;
  if (!summary.contains("provenance")) {
    throw ValidationError("report missing provenance");
  }
  const json& prov = summary["provenance"];
  for (const char* key : {"version", "protocol", "seed", "config_hash",
                          "noise"}) {
    if (!prov.contains(key)) {
      throw ValidationError(std::string("provenance missing ") + key);
    }
  }
  const std::vector<std::string> unit_suffixes = {
      "_k",       "_w",     "_s",     "_hz",    "_m",        "_k_per_w",
      "_k_sqrt_hz", "_k_m", "_counts", "_signal", "_rel",    "_exp",
      "_rad"};
  const std::vector<std::string> dimensionless = {
      "n_points", "n_nv",  "mc_trials", "n_shots_per_trial", "seed",
      "contrast", "exponent_time", "exponent_n_nv", "population_minus",
      "population_zero", "population_plus"};
  std::function<void(const json&, const std::string&)> walk =
      [&](const json& node, const std::string& path) {
        if (node.is_object()) {
          for (auto it = node.begin(); it != node.end(); ++it) {
            walk(it.value(), it.key());
          }
        } else if (node.is_array()) {
          for (const auto& item : node) walk(item, path);
        } else if (node.is_number()) {
          for (const auto& ok : dimensionless) {
            if (path == ok) return;
          }
          for (const auto& suffix : unit_suffixes) {
            if (path.size() > suffix.size() &&
                path.compare(path.size() - suffix.size(), suffix.size(),
                             suffix) == 0) {
              return;
            }
          }
          throw ValidationError("numeric report key '" + path +
                                "' lacks a unit suffix");
        }
      };
  walk(summary, "");
}

inline void write_report(const RunReport& report,
                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, content] : report.files) {
    std::ofstream file(out_dir / name, std::ios::binary);
    if (!file) {
      throw ValidationError("cannot write output file: " +
                            (out_dir / name).string());
    }
    file << content;
  }
  std::ofstream json_file(out_dir / "report.json", std::ios::binary);
  if (!json_file) {
    throw ValidationError("cannot write report.json under " +
                          out_dir.string());
  }
  json_file << report.summary.dump(2) << "\n";
}

}  // namespace nvtherm
