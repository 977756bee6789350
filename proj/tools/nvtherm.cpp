// nvtherm: in-silico NV-center thermometry experiments.
//
// Subcommands map onto the scenario protocols:
//   esr-scan     CW-ESR spectrum of a probe, dip fit, probe frequencies
//   echo-bench   2pi-echo fringe trace, beat fit and fixed-tau sensitivity
//   power-sweep  laser-power sweep measured via the four-point estimator
//   heat-profile multi-probe 1/r profile and source-temperature inversion
//   sensitivity  analytic sensitivity surface plus scaling verification
//
// Exit codes: 0 success, 2 configuration/validation error, 3 estimation or
// fit degeneracy.

#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nvtherm/runner.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out_dir = "out";
  std::string noise;
  std::string sequence_file;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw nvtherm::ValidationError("cannot open sequence file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the scenario seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--noise", args.noise, "shot|none")
      ->check(CLI::IsMember({"shot", "none"}));
  cmd->add_option("--threads", args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sequence-file", args.sequence_file,
                  "pulse-sequence program to evaluate against the scenario's "
                  "spin model (result lands in report.json)")
      ->check(CLI::ExistingFile);
}

int run(nvtherm::Protocol expected, const CommonArgs& args) {
  nvtherm::Scenario scenario = nvtherm::load_scenario(args.config);
  if (scenario.protocol != expected) {
    throw nvtherm::ValidationError(
        "scenario protocol is '" + nvtherm::to_string(scenario.protocol) +
        "' but this subcommand expects '" + nvtherm::to_string(expected) +
        "'");
  }
  nvtherm::RunnerOptions opts;
  opts.threads = args.threads;
  if (args.seed_set) opts.seed_override = args.seed;
  if (args.noise == "shot") opts.noise_override = nvtherm::NoiseMode::Shot;
  if (args.noise == "none") opts.noise_override = nvtherm::NoiseMode::None;

  auto report = nvtherm::run_scenario(scenario, opts);
  if (!args.sequence_file.empty()) {
    const auto seq = nvtherm::parse_sequence(slurp(args.sequence_file));
    report.summary["sequence_result"] =
        nvtherm::sequence_report(scenario, seq);
  }
  nvtherm::validate_report(report);
  nvtherm::write_report(report, args.out_dir);
  std::printf("wrote %s/report.json", args.out_dir.c_str());
  for (const auto& [name, content] : report.files) {
    std::printf(" %s/%s", args.out_dir.c_str(), name.c_str());
  }
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"in-silico NV-center thermometry"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* description;
    nvtherm::Protocol protocol;
  };
  const Sub subs[] = {
      {"esr-scan", "simulate a CW-ESR scan and fit the dips",
       nvtherm::Protocol::EsrScan},
      {"echo-bench", "echo fringe trace and fixed-tau sensitivity",
       nvtherm::Protocol::Echo},
      {"power-sweep", "four-point temperature vs laser power",
       nvtherm::Protocol::FourPoint},
      {"heat-profile", "probe the 1/r profile and invert for the source",
       nvtherm::Protocol::HeatProfile},
      {"sensitivity", "sensitivity surface and scaling exponents",
       nvtherm::Protocol::SensitivitySweep},
  };

  CommonArgs args[std::size(subs)];
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].description);
    add_common(cmd, args[i]);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < std::size(subs); ++i) {
      if (app.get_subcommand(subs[i].name)->parsed()) {
        return run(subs[i].protocol, args[i]);
      }
    }
    std::fprintf(stderr, "no subcommand selected\n");
    return 2;
  } catch (const nvtherm::EstimationError& err) {
    std::fprintf(stderr, "estimation error: %s\n", err.what());
    return 3;
  } catch (const nvtherm::FitError& err) {
    std::fprintf(stderr, "fit error: %s\n", err.what());
    return 3;
  } catch (const nvtherm::ParseError& err) {
    std::fprintf(stderr, "parse error: %s\n", err.what());
    return 2;
  } catch (const nvtherm::ValidationError& err) {
    std::fprintf(stderr, "validation error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
}
