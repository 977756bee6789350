#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nvtherm/measurement.hpp"
#include "nvtherm/pulse_engine.hpp"
#include "nvtherm/spin_model.hpp"

// Scenario configuration: a nested key-value text format (sections in
// brackets, `key = value` lines, SI units with the unit spelled out in the
// key name, frequencies in Hz). Unknown sections or keys are rejected by
// name. See the shipped files under scenarios/ for complete examples.

namespace nvtherm {

enum class Protocol { FourPoint, Echo, EsrScan, HeatProfile, SensitivitySweep };
enum class NoiseMode { Shot, None };

inline std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::FourPoint: return "four_point";
    case Protocol::Echo: return "echo";
    case Protocol::EsrScan: return "esr_scan";
    case Protocol::HeatProfile: return "heat_profile";
    case Protocol::SensitivitySweep: return "sensitivity_sweep";
  }
  return "?";
}

inline std::string to_string(NoiseMode n) {
  return n == NoiseMode::Shot ? "shot" : "none";
}

struct ProbeSpec {
  std::string id;
  std::array<double, 3> position{};  // m
  ESRSpectrumModel esr;              // defaults with per-probe overrides
  friend bool operator==(const ProbeSpec&, const ProbeSpec&) = default;
};

struct SourceSpec {
  std::string id;
  std::array<double, 3> position{};  // m
  double absorption_efficiency = 0.35;
  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

struct FourPointSettings {
  double dwell = 1.0;        // s per probe frequency
  double delta_omega = 0.0;  // rad/s, 0 = auto from the probe chooser
  friend bool operator==(const FourPointSettings&,
                         const FourPointSettings&) = default;
};

struct EchoSettings {
  double tau = 250e-6;           // s, half the free evolution
  double scan_max_2tau = 1e-3;   // s
  int scan_points = 140;
  double rabi = rad_from_hz(5e6);
  int mc_trials = 100;
  double integration_time = 30.0;      // s, fixed-tau accuracy budget
  double scan_time_per_point = 120.0;  // s, fringe-trace averaging per point
  double init_dead_time = 10e-6;       // s per shot
  friend bool operator==(const EchoSettings&, const EchoSettings&) = default;
};

struct SensitivitySettings {
  std::vector<double> n_nv_grid = {1, 10, 100, 1000};
  std::vector<double> t_coh_grid = {1e-6, 1e-5, 1e-4, 3e-3};
  std::vector<double> time_grid = {1.0, 10.0, 100.0};
  int mc_trials = 400;
  friend bool operator==(const SensitivitySettings&,
                         const SensitivitySettings&) = default;
};

struct EsrScanSettings {
  double span = 0.0;  // rad/s, 0 = auto (both dips plus tails)
  int points = 161;
  double dwell = 0.1;  // s per point
  friend bool operator==(const EsrScanSettings&,
                         const EsrScanSettings&) = default;
};

struct HeatSettings {
  double conductivity = 1.0;     // W/(m K)
  double source_radius = 50e-9;  // m
  friend bool operator==(const HeatSettings&, const HeatSettings&) = default;
};

struct LaserSettings {
  std::array<double, 3> position{};  // m
  double waist = 0.3e-6;             // m
  std::vector<double> powers = {0.0};
  friend bool operator==(const LaserSettings&, const LaserSettings&) = default;
};

struct Scenario {
  Protocol protocol = Protocol::FourPoint;
  std::uint64_t seed = 0;
  std::string label;
  NoiseMode noise = NoiseMode::Shot;

  NVEnsembleParams nv;
  FieldEnvironment field;
  ESRSpectrumModel esr;  // defaults for probes
  PhotonModel photon;
  FourPointSettings four_point;
  EchoSettings echo;
  SensitivitySettings sensitivity;
  EsrScanSettings esr_scan;
  HeatSettings heat;
  LaserSettings laser;
  std::vector<SourceSpec> sources;
  std::vector<ProbeSpec> probes;

  void validate() const {
    nv.validate();
    field.validate();
    esr.validate();
    photon.validate();
    if (probes.empty()) {
      throw ValidationError("scenario needs at least one probe");
    }
    for (const auto& p : probes) p.esr.validate();
    if (laser.powers.empty()) {
      throw ValidationError("laser power schedule must be non-empty");
    }
    for (double p : laser.powers) {
      if (!(p >= 0.0)) throw ValidationError("laser powers must be >= 0");
    }
    if (!(laser.waist > 0.0)) throw ValidationError("waist must be positive");
    if (!(heat.conductivity > 0.0)) {
      throw ValidationError("conductivity must be positive");
    }
    if (!(heat.source_radius > 0.0)) {
      throw ValidationError("source_radius must be positive");
    }
    for (const auto& s : sources) {
      if (!(s.absorption_efficiency >= 0.0 &&
            s.absorption_efficiency <= 1.0)) {
        throw ValidationError("absorption_efficiency must lie in [0, 1]");
      }
    }
    if (protocol == Protocol::FourPoint && laser.powers.size() < 3) {
      throw ValidationError("power sweep needs at least 3 scheduled powers");
    }
    if (protocol == Protocol::HeatProfile && probes.size() < 2) {
      throw ValidationError("heat profile needs at least 2 probes");
    }
    if ((protocol == Protocol::FourPoint ||
         protocol == Protocol::HeatProfile) &&
        sources.empty()) {
      throw ValidationError("heating protocols need at least one source");
    }
    if (!(four_point.dwell > 0.0)) {
      throw ValidationError("dwell must be positive");
    }
    if (!(echo.tau > 0.0) || !(echo.scan_max_2tau > 0.0) ||
        echo.scan_points < 12) {
      throw ValidationError("echo scan settings are degenerate");
    }
    if (!(echo.rabi > 0.0)) throw ValidationError("rabi must be positive");
    if (echo.mc_trials < 2) {
      throw ValidationError("echo mc_trials must be at least 2");
    }
    if (!(echo.integration_time > 0.0) || !(echo.init_dead_time >= 0.0) ||
        !(echo.scan_time_per_point > 0.0)) {
      throw ValidationError("echo timing settings are degenerate");
    }
    if (esr_scan.points < 8 || !(esr_scan.dwell > 0.0)) {
      throw ValidationError("esr_scan settings are degenerate");
    }
    if (sensitivity.n_nv_grid.empty() || sensitivity.t_coh_grid.empty() ||
        sensitivity.time_grid.empty() || sensitivity.mc_trials < 2) {
      throw ValidationError("sensitivity grids are degenerate");
    }
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

namespace detail {

struct RawLine {
  std::string key;
  std::string value;
  int line_no;
};

struct RawSection {
  std::string kind;  // "", "nv", "probe", ...
  std::string id;    // for probe/source sections
  std::vector<RawLine> lines;
  int line_no = 0;
};

inline double scenario_number(const std::string& value, int line_no) {
  double out = 0.0;
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("expected a number, got '" + value + "'", line_no, 1);
  }
  return out;
}

inline std::vector<double> scenario_list(const std::string& value,
                                         int line_no) {
  std::vector<double> out;
  std::istringstream stream(value);
  std::string token;
  while (stream >> token) out.push_back(scenario_number(token, line_no));
  if (out.empty()) {
    throw ParseError("expected a list of numbers", line_no, 1);
  }
  return out;
}

inline std::array<double, 3> scenario_vec3(const std::string& value,
                                           int line_no) {
  const auto list = scenario_list(value, line_no);
  if (list.size() != 3) {
    throw ParseError("expected three coordinates", line_no, 1);
  }
  return {list[0], list[1], list[2]};
}

// Key-value consumer that rejects unknown keys by name.
class SectionReader {
 public:
  SectionReader(const RawSection& section, std::string section_name)
      : section_(section), name_(std::move(section_name)) {
    taken_.assign(section.lines.size(), false);
  }

  std::optional<std::string> take(const std::string& key) {
    std::optional<std::string> result;
    for (std::size_t i = 0; i < section_.lines.size(); ++i) {
      if (section_.lines[i].key == key) {
        if (taken_[i]) continue;
        taken_[i] = true;
        if (result) {
          throw ValidationError("duplicate key '" + key + "' in [" + name_ +
                                "]");
        }
        result = section_.lines[i].value;
        line_no_ = section_.lines[i].line_no;
      }
    }
    return result;
  }

  void number(const std::string& key, double& target) {
    if (auto v = take(key)) target = scenario_number(*v, line_no_);
  }
  void integer(const std::string& key, int& target) {
    if (auto v = take(key)) {
      target = static_cast<int>(scenario_number(*v, line_no_));
    }
  }
  void frequency(const std::string& key, double& target_rad) {
    if (auto v = take(key)) {
      target_rad = rad_from_hz(scenario_number(*v, line_no_));
    }
  }
  void list(const std::string& key, std::vector<double>& target) {
    if (auto v = take(key)) target = scenario_list(*v, line_no_);
  }
  void frequency_list(const std::string& key, std::vector<double>& target) {
    if (auto v = take(key)) {
      target = scenario_list(*v, line_no_);
      for (auto& x : target) x = rad_from_hz(x);
    }
  }
  void vec3(const std::string& key, std::array<double, 3>& target) {
    if (auto v = take(key)) target = scenario_vec3(*v, line_no_);
  }

  void finish() const {
    for (std::size_t i = 0; i < section_.lines.size(); ++i) {
      if (!taken_[i]) {
        throw ValidationError("unknown key '" + section_.lines[i].key +
                              "' in [" + name_ + "] (line " +
                              std::to_string(section_.lines[i].line_no) + ")");
      }
    }
  }

 private:
  const RawSection& section_;
  std::string name_;
  std::vector<bool> taken_;
  int line_no_ = 0;
};

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_hz(double rad) {
  return nvtherm::detail::format_frequency(rad);
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  using detail::RawLine;
  using detail::RawSection;

  std::vector<RawSection> sections;
  sections.push_back({});  // top level
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string line(text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos));
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos) {
      const auto last = line.find_last_not_of(" \t\r");
      line = line.substr(first, last - first + 1);
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw ParseError("unterminated section header", line_no, 1);
        }
        std::istringstream header(line.substr(1, line.size() - 2));
        RawSection section;
        header >> section.kind >> section.id;
        section.line_no = line_no;
        if (section.kind.empty()) {
          throw ParseError("empty section header", line_no, 1);
        }
        sections.push_back(section);
      } else {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
          throw ParseError("expected key = value", line_no, 1);
        }
        RawLine raw;
        raw.line_no = line_no;
        raw.key = line.substr(0, eq);
        raw.value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
          const auto b = s.find_first_not_of(" \t");
          const auto e = s.find_last_not_of(" \t");
          s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        trim(raw.key);
        trim(raw.value);
        if (raw.key.empty() || raw.value.empty()) {
          throw ParseError("expected key = value", line_no, 1);
        }
        sections.back().lines.push_back(raw);
      }
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }

  Scenario scenario;
  std::vector<double> trap_detunings, trap_weights;
  std::vector<const RawSection*> probe_sections;  // resolved after [esr]
  bool seen_field = false;

  for (const auto& section : sections) {
    if (section.kind.empty()) {
      detail::SectionReader reader(section, "top level");
      if (auto v = reader.take("protocol")) {
        if (*v == "four_point") scenario.protocol = Protocol::FourPoint;
        else if (*v == "echo") scenario.protocol = Protocol::Echo;
        else if (*v == "esr_scan") scenario.protocol = Protocol::EsrScan;
        else if (*v == "heat_profile") scenario.protocol = Protocol::HeatProfile;
        else if (*v == "sensitivity_sweep")
          scenario.protocol = Protocol::SensitivitySweep;
        else
          throw ValidationError("unknown protocol '" + *v + "'");
      }
      if (auto v = reader.take("seed")) {
        scenario.seed = std::stoull(*v);
      }
      if (auto v = reader.take("label")) scenario.label = *v;
      if (auto v = reader.take("noise")) {
        if (*v == "shot") scenario.noise = NoiseMode::Shot;
        else if (*v == "none") scenario.noise = NoiseMode::None;
        else throw ValidationError("noise must be 'shot' or 'none'");
      }
      reader.finish();
    } else if (section.kind == "nv") {
      detail::SectionReader reader(section, "nv");
      reader.frequency("delta0_hz", scenario.nv.delta0);
      reader.number("t_ref_k", scenario.nv.t_ref);
      reader.frequency("d_delta_dt_hz_per_k", scenario.nv.d_delta_dT);
      reader.number("t_coh_s", scenario.nv.t_coh);
      reader.number("t1_s", scenario.nv.t1);
      reader.integer("n_nv", scenario.nv.n_nv);
      reader.number("readout_factor", scenario.nv.readout_factor);
      reader.number("stretch_exp", scenario.nv.stretch_exp);
      reader.finish();
    } else if (section.kind == "field") {
      seen_field = true;
      detail::SectionReader reader(section, "field");
      reader.frequency("b_shift_hz", scenario.field.b_shift);
      reader.frequency_list("trap_detunings_hz", trap_detunings);
      reader.list("trap_weights", trap_weights);
      reader.number("gyromagnetic_rad_per_tesla",
                    scenario.field.gyromagnetic);
      reader.finish();
    } else if (section.kind == "esr") {
      detail::SectionReader reader(section, "esr");
      reader.frequency("center_hz", scenario.esr.center);
      reader.frequency("half_splitting_hz", scenario.esr.half_splitting);
      reader.frequency("linewidth_hz", scenario.esr.linewidth);
      reader.number("contrast", scenario.esr.contrast);
      reader.number("rate_baseline_cps", scenario.esr.rate_baseline);
      reader.finish();
    } else if (section.kind == "photon") {
      detail::SectionReader reader(section, "photon");
      reader.number("rate_baseline_cps", scenario.photon.rate_baseline);
      reader.number("contrast", scenario.photon.contrast);
      reader.number("readout_window_s", scenario.photon.readout_window);
      reader.number("collection_factor", scenario.photon.collection_factor);
      reader.finish();
    } else if (section.kind == "four_point") {
      detail::SectionReader reader(section, "four_point");
      reader.number("dwell_s", scenario.four_point.dwell);
      reader.frequency("delta_omega_hz", scenario.four_point.delta_omega);
      reader.finish();
    } else if (section.kind == "echo") {
      detail::SectionReader reader(section, "echo");
      reader.number("tau_s", scenario.echo.tau);
      reader.number("scan_max_2tau_s", scenario.echo.scan_max_2tau);
      reader.integer("scan_points", scenario.echo.scan_points);
      reader.frequency("rabi_hz", scenario.echo.rabi);
      reader.integer("mc_trials", scenario.echo.mc_trials);
      reader.number("integration_time_s", scenario.echo.integration_time);
      reader.number("scan_time_per_point_s", scenario.echo.scan_time_per_point);
      reader.number("init_dead_time_s", scenario.echo.init_dead_time);
      reader.finish();
    } else if (section.kind == "sensitivity") {
      detail::SectionReader reader(section, "sensitivity");
      reader.list("n_nv_grid", scenario.sensitivity.n_nv_grid);
      reader.list("t_coh_grid_s", scenario.sensitivity.t_coh_grid);
      reader.list("time_grid_s", scenario.sensitivity.time_grid);
      reader.integer("mc_trials", scenario.sensitivity.mc_trials);
      reader.finish();
    } else if (section.kind == "esr_scan") {
      detail::SectionReader reader(section, "esr_scan");
      reader.frequency("span_hz", scenario.esr_scan.span);
      reader.integer("points", scenario.esr_scan.points);
      reader.number("dwell_s", scenario.esr_scan.dwell);
      reader.finish();
    } else if (section.kind == "heat") {
      detail::SectionReader reader(section, "heat");
      reader.number("conductivity_w_per_m_k", scenario.heat.conductivity);
      reader.number("source_radius_m", scenario.heat.source_radius);
      reader.finish();
    } else if (section.kind == "laser") {
      detail::SectionReader reader(section, "laser");
      reader.vec3("position_m", scenario.laser.position);
      reader.number("waist_m", scenario.laser.waist);
      reader.list("powers_w", scenario.laser.powers);
      reader.finish();
    } else if (section.kind == "source") {
      if (section.id.empty()) {
        throw ValidationError("source section needs an id: [source <id>]");
      }
      SourceSpec source;
      source.id = section.id;
      detail::SectionReader reader(section, "source " + section.id);
      reader.vec3("position_m", source.position);
      reader.number("absorption_efficiency", source.absorption_efficiency);
      reader.finish();
      scenario.sources.push_back(source);
    } else if (section.kind == "probe") {
      if (section.id.empty()) {
        throw ValidationError("probe section needs an id: [probe <id>]");
      }
      probe_sections.push_back(&section);
    } else {
      throw ValidationError("unknown section [" + section.kind + "] (line " +
                            std::to_string(section.line_no) + ")");
    }
  }

  for (const RawSection* section : probe_sections) {
    ProbeSpec probe;
    probe.id = section->id;
    probe.esr = scenario.esr;  // defaults, then per-probe overrides
    detail::SectionReader reader(*section, "probe " + section->id);
    reader.vec3("position_m", probe.position);
    reader.frequency("center_hz", probe.esr.center);
    reader.frequency("half_splitting_hz", probe.esr.half_splitting);
    reader.frequency("linewidth_hz", probe.esr.linewidth);
    reader.number("contrast", probe.esr.contrast);
    reader.number("rate_baseline_cps", probe.esr.rate_baseline);
    reader.finish();
    scenario.probes.push_back(probe);
  }

  if (!trap_detunings.empty() || !trap_weights.empty()) {
    if (trap_detunings.size() != trap_weights.size()) {
      throw ValidationError(
          "trap_detunings_hz and trap_weights must have equal length");
    }
    scenario.field.trap_detunings.clear();
    for (std::size_t i = 0; i < trap_detunings.size(); ++i) {
      scenario.field.trap_detunings.push_back(
          {trap_detunings[i], trap_weights[i]});
    }
  } else if (seen_field) {
    scenario.field.trap_detunings.clear();
  }

  scenario.validate();
  return scenario;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open scenario file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

inline std::string serialize_scenario(const Scenario& s) {
  using detail::format_g17;
  using detail::format_hz;
  std::string out;
  out += "protocol = " + to_string(s.protocol) + "\n";
  out += "seed = " + std::to_string(s.seed) + "\n";
  if (!s.label.empty()) out += "label = " + s.label + "\n";
  out += "noise = " + to_string(s.noise) + "\n";

  out += "\n[nv]\n";
  out += "delta0_hz = " + format_hz(s.nv.delta0) + "\n";
  out += "t_ref_k = " + format_g17(s.nv.t_ref) + "\n";
  out += "d_delta_dt_hz_per_k = " + format_hz(s.nv.d_delta_dT) + "\n";
  out += "t_coh_s = " + format_g17(s.nv.t_coh) + "\n";
  out += "t1_s = " + format_g17(s.nv.t1) + "\n";
  out += "n_nv = " + std::to_string(s.nv.n_nv) + "\n";
  out += "readout_factor = " + format_g17(s.nv.readout_factor) + "\n";
  out += "stretch_exp = " + format_g17(s.nv.stretch_exp) + "\n";

  out += "\n[field]\n";
  out += "b_shift_hz = " + format_hz(s.field.b_shift) + "\n";
  if (!s.field.trap_detunings.empty()) {
    std::string det, wts;
    for (const auto& trap : s.field.trap_detunings) {
      if (!det.empty()) det += " ";
      if (!wts.empty()) wts += " ";
      det += format_hz(trap.detuning);
      wts += format_g17(trap.weight);
    }
    out += "trap_detunings_hz = " + det + "\n";
    out += "trap_weights = " + wts + "\n";
  }
  out += "gyromagnetic_rad_per_tesla = " + format_g17(s.field.gyromagnetic) +
         "\n";

  out += "\n[esr]\n";
  out += "center_hz = " + format_hz(s.esr.center) + "\n";
  out += "half_splitting_hz = " + format_hz(s.esr.half_splitting) + "\n";
  out += "linewidth_hz = " + format_hz(s.esr.linewidth) + "\n";
  out += "contrast = " + format_g17(s.esr.contrast) + "\n";
  out += "rate_baseline_cps = " + format_g17(s.esr.rate_baseline) + "\n";

  out += "\n[photon]\n";
  out += "rate_baseline_cps = " + format_g17(s.photon.rate_baseline) + "\n";
  out += "contrast = " + format_g17(s.photon.contrast) + "\n";
  out += "readout_window_s = " + format_g17(s.photon.readout_window) + "\n";
  out += "collection_factor = " + format_g17(s.photon.collection_factor) +
         "\n";

  out += "\n[four_point]\n";
  out += "dwell_s = " + format_g17(s.four_point.dwell) + "\n";
  out += "delta_omega_hz = " + format_hz(s.four_point.delta_omega) + "\n";

  out += "\n[echo]\n";
  out += "tau_s = " + format_g17(s.echo.tau) + "\n";
  out += "scan_max_2tau_s = " + format_g17(s.echo.scan_max_2tau) + "\n";
  out += "scan_points = " + std::to_string(s.echo.scan_points) + "\n";
  out += "rabi_hz = " + format_hz(s.echo.rabi) + "\n";
  out += "mc_trials = " + std::to_string(s.echo.mc_trials) + "\n";
  out += "integration_time_s = " + format_g17(s.echo.integration_time) + "\n";
  out += "scan_time_per_point_s = " + format_g17(s.echo.scan_time_per_point) +
         "\n";
  out += "init_dead_time_s = " + format_g17(s.echo.init_dead_time) + "\n";

  out += "\n[sensitivity]\n";
  auto join = [&](const std::vector<double>& v) {
    std::string joined;
    for (double x : v) {
      if (!joined.empty()) joined += " ";
      joined += format_g17(x);
    }
    return joined;
  };
  out += "n_nv_grid = " + join(s.sensitivity.n_nv_grid) + "\n";
  out += "t_coh_grid_s = " + join(s.sensitivity.t_coh_grid) + "\n";
  out += "time_grid_s = " + join(s.sensitivity.time_grid) + "\n";
  out += "mc_trials = " + std::to_string(s.sensitivity.mc_trials) + "\n";

  out += "\n[esr_scan]\n";
  out += "span_hz = " + format_hz(s.esr_scan.span) + "\n";
  out += "points = " + std::to_string(s.esr_scan.points) + "\n";
  out += "dwell_s = " + format_g17(s.esr_scan.dwell) + "\n";

  out += "\n[heat]\n";
  out += "conductivity_w_per_m_k = " + format_g17(s.heat.conductivity) + "\n";
  out += "source_radius_m = " + format_g17(s.heat.source_radius) + "\n";

  out += "\n[laser]\n";
  out += "position_m = " + format_g17(s.laser.position[0]) + " " +
         format_g17(s.laser.position[1]) + " " +
         format_g17(s.laser.position[2]) + "\n";
  out += "waist_m = " + format_g17(s.laser.waist) + "\n";
  out += "powers_w = " + join(s.laser.powers) + "\n";

  for (const auto& source : s.sources) {
    out += "\n[source " + source.id + "]\n";
    out += "position_m = " + format_g17(source.position[0]) + " " +
           format_g17(source.position[1]) + " " +
           format_g17(source.position[2]) + "\n";
    out += "absorption_efficiency = " +
           format_g17(source.absorption_efficiency) + "\n";
  }
  for (const auto& probe : s.probes) {
    out += "\n[probe " + probe.id + "]\n";
    out += "position_m = " + format_g17(probe.position[0]) + " " +
           format_g17(probe.position[1]) + " " +
           format_g17(probe.position[2]) + "\n";
    if (probe.esr.center != s.esr.center) {
      out += "center_hz = " + format_hz(probe.esr.center) + "\n";
    }
    if (probe.esr.half_splitting != s.esr.half_splitting) {
      out += "half_splitting_hz = " + format_hz(probe.esr.half_splitting) +
             "\n";
    }
    if (probe.esr.linewidth != s.esr.linewidth) {
      out += "linewidth_hz = " + format_hz(probe.esr.linewidth) + "\n";
    }
    if (probe.esr.contrast != s.esr.contrast) {
      out += "contrast = " + format_g17(probe.esr.contrast) + "\n";
    }
    if (probe.esr.rate_baseline != s.esr.rate_baseline) {
      out += "rate_baseline_cps = " + format_g17(probe.esr.rate_baseline) +
             "\n";
    }
  }
  return out;
}

inline std::uint64_t scenario_hash(const Scenario& s) {
  return fnv1a64(serialize_scenario(s));
}

}  // namespace nvtherm
