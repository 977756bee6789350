#pragma once

#include <cctype>
#include <charconv>
#include <complex>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nvtherm/spin_model.hpp"

// Pulse-sequence representation and execution. Sequences are run in the
// rotating frame of a microwave carrier; free evolution keeps only the
// detuning of the |+-1> levels, drives couple |0> to the bright state
// |B> = (|+1>+|-1>)/sqrt(2) with a sqrt(2)-enhanced Rabi frequency, and the
// swap pulse exchanges the |+1> and |-1> amplitudes.

namespace nvtherm {

struct DrivePulse {
  double carrier = 0.0;   // rad/s
  double rabi = 0.0;      // rad/s, per |0> <-> |+-1> leg
  double phase = 0.0;     // rad
  double duration = 0.0;  // s
  friend bool operator==(const DrivePulse&, const DrivePulse&) = default;
};

struct DelayStep {
  double duration = 0.0;  // s
  friend bool operator==(const DelayStep&, const DelayStep&) = default;
};

// 2pi echo pulse: exchanges the |+1> and |-1> amplitudes.
struct SwapPulse {
  friend bool operator==(const SwapPulse&, const SwapPulse&) = default;
};

struct ReadoutMarker {
  friend bool operator==(const ReadoutMarker&, const ReadoutMarker&) = default;
};

using SequenceElement =
    std::variant<DrivePulse, DelayStep, SwapPulse, ReadoutMarker>;

struct PulseSequence {
  std::vector<SequenceElement> elements;
  std::string label;

  void validate() const {
    int readouts = 0;
    for (std::size_t i = 0; i < elements.size(); ++i) {
      const auto& e = elements[i];
      if (const auto* d = std::get_if<DrivePulse>(&e)) {
        if (!(d->duration >= 0.0)) {
          throw ValidationError("drive duration must be non-negative");
        }
        if (!(d->rabi >= 0.0)) {
          throw ValidationError("rabi frequency must be non-negative");
        }
      } else if (const auto* d = std::get_if<DelayStep>(&e)) {
        if (!(d->duration >= 0.0)) {
          throw ValidationError("delay duration must be non-negative");
        }
      } else if (std::holds_alternative<ReadoutMarker>(e)) {
        ++readouts;
        if (readouts > 1) throw ValidationError("duplicate readout");
        if (i + 1 != elements.size()) {
          throw ValidationError("readout must be the last element");
        }
      }
    }
  }

  friend bool operator==(const PulseSequence&, const PulseSequence&) = default;
};

namespace detail {

inline double parse_number(std::string_view token, int line, int column) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("expected a number, got '" + std::string(token) + "'",
                     line, column);
  }
  return value;
}

inline std::vector<std::pair<std::string_view, int>> split_tokens(
    std::string_view text) {
  std::vector<std::pair<std::string_view, int>> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    const std::size_t start = i;
    while (i < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    if (i > start) {
      tokens.emplace_back(text.substr(start, i - start),
                          static_cast<int>(start) + 1);
    }
  }
  return tokens;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Prints an angular frequency as Hz such that re-parsing (x 2pi) recovers
// the exact rad/s value whenever one of the neighbouring representable Hz
// values maps onto it; this makes parse(print(seq)) the identity for any
// sequence that originated from text.
inline std::string format_frequency(double rad) {
  const double base = hz_from_rad(rad);
  double candidates[9];
  candidates[0] = base;
  double up = base, down = base;
  for (int k = 1; k <= 4; ++k) {
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    down = std::nextafter(down, -std::numeric_limits<double>::infinity());
    candidates[2 * k - 1] = up;
    candidates[2 * k] = down;
  }
  for (double c : candidates) {
    if (rad_from_hz(c) == rad) return format_number(c);
  }
  return format_number(base);
}

}  // namespace detail

// Sequence-program grammar, one element per line (blank lines and trailing
// `#` comments allowed):
//   drive f=<Hz> rabi=<Hz> phase=<rad> dur=<s>
//   delay <s>
//   swap_pm
//   readout
// Frequencies are plain Hz in the text format and converted to rad/s here.
inline PulseSequence parse_sequence(std::string_view text) {
  PulseSequence seq;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto tokens = detail::split_tokens(line);
    if (!tokens.empty()) {
      const auto [word, col] = tokens.front();
      if (word == "delay") {
        if (tokens.size() != 2) {
          throw ParseError("delay takes exactly one duration", line_no, col);
        }
        const double dur =
            detail::parse_number(tokens[1].first, line_no, tokens[1].second);
        if (dur < 0.0) {
          throw ParseError("negative duration", line_no, tokens[1].second);
        }
        seq.elements.push_back(DelayStep{dur});
      } else if (word == "swap_pm") {
        if (tokens.size() != 1) {
          throw ParseError("swap_pm takes no arguments", line_no,
                           tokens[1].second);
        }
        seq.elements.push_back(SwapPulse{});
      } else if (word == "readout") {
        if (tokens.size() != 1) {
          throw ParseError("readout takes no arguments", line_no,
                           tokens[1].second);
        }
        seq.elements.push_back(ReadoutMarker{});
      } else if (word == "drive") {
        DrivePulse drive;
        bool have_f = false, have_rabi = false, have_phase = false,
             have_dur = false;
        for (std::size_t t = 1; t < tokens.size(); ++t) {
          const auto [tok, tcol] = tokens[t];
          const auto eq = tok.find('=');
          if (eq == std::string_view::npos) {
            throw ParseError("expected key=value, got '" + std::string(tok) +
                                 "'",
                             line_no, tcol);
          }
          const std::string_view key = tok.substr(0, eq);
          const double value = detail::parse_number(
              tok.substr(eq + 1), line_no, tcol + static_cast<int>(eq) + 1);
          if (key == "f") {
            drive.carrier = rad_from_hz(value);
            have_f = true;
          } else if (key == "rabi") {
            drive.rabi = rad_from_hz(value);
            have_rabi = true;
          } else if (key == "phase") {
            drive.phase = value;
            have_phase = true;
          } else if (key == "dur") {
            if (value < 0.0) {
              throw ParseError("negative duration", line_no, tcol);
            }
            drive.duration = value;
            have_dur = true;
          } else {
            throw ParseError("unknown drive field '" + std::string(key) + "'",
                             line_no, tcol);
          }
        }
        if (!(have_f && have_rabi && have_phase && have_dur)) {
          throw ParseError("drive requires f=, rabi=, phase= and dur=",
                           line_no, col);
        }
        seq.elements.push_back(drive);
      } else {
        throw ParseError("unknown element '" + std::string(word) + "'",
                         line_no, col);
      }
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  seq.validate();
  return seq;
}

inline std::string print_sequence(const PulseSequence& seq) {
  std::string out;
  for (const auto& e : seq.elements) {
    if (const auto* d = std::get_if<DrivePulse>(&e)) {
      out += "drive f=" + detail::format_frequency(d->carrier) +
             " rabi=" + detail::format_frequency(d->rabi) +
             " phase=" + detail::format_number(d->phase) +
             " dur=" + detail::format_number(d->duration) + "\n";
    } else if (const auto* d = std::get_if<DelayStep>(&e)) {
      out += "delay " + detail::format_number(d->duration) + "\n";
    } else if (std::holds_alternative<SwapPulse>(e)) {
      out += "swap_pm\n";
    } else {
      out += "readout\n";
    }
  }
  return out;
}

struct SequenceResult {
  std::array<double, 3> populations{};  // {p(-1), p(0), p(+1)}
  double expected_signal = 0.0;         // offset + amplitude*(p0 - p+1 - p-1)
  // Phase of the |0><B| coherence just before the final mapping pulse,
  // principal value in (-pi, pi].
  double accumulated_phase = 0.0;
};

struct RunOptions {
  // Drives are applied as instantaneous rotations of the same pulse area by
  // default; set false to integrate the finite-duration coupling instead.
  bool ideal_pulses = true;
  // 1 = exact |+1> <-> |-1> exchange; smaller values leave part of the
  // amplitudes in place (partial swap) for robustness studies.
  double swap_fidelity = 1.0;
  // Affine readout map applied to the end-of-sequence populations.
  double signal_offset = 0.5;
  double fringe_amplitude = 0.5;
};

namespace detail {

// Rotation by angle theta about the phase-phi axis on the {|0>, |B>}
// subspace; |D> = (|+1>-|-1>)/sqrt(2) is left untouched.
inline Matrix3c bright_rotation(double theta, double phi) {
  const Vector3c zero = Vector3c::Unit(kIdxZero);
  const Vector3c bright = bright_state();
  const std::complex<double> i(0.0, 1.0);
  const Matrix3c sigma_x =
      zero * bright.adjoint() + bright * zero.adjoint();
  const Matrix3c sigma_y =
      -i * (zero * bright.adjoint()) + i * (bright * zero.adjoint());
  const Matrix3c axis = std::cos(phi) * sigma_x + std::sin(phi) * sigma_y;
  // exp(-i theta/2 axis) restricted to the driven subspace
  const Matrix3c projector =
      zero * zero.adjoint() + bright * bright.adjoint();
  return Matrix3c::Identity() - projector +
         std::cos(theta / 2.0) * projector -
         i * std::sin(theta / 2.0) * axis;
}

inline Matrix3c swap_unitary(double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw ValidationError("swap_fidelity must lie in [0, 1]");
  }
  if (fidelity == 1.0) {
    Matrix3c s = Matrix3c::Zero();
    s(kIdxMinus, kIdxPlus) = 1.0;
    s(kIdxPlus, kIdxMinus) = 1.0;
    s(kIdxZero, kIdxZero) = 1.0;
    return s;
  }
  // partial exchange: phased so that fidelity 1 reduces to the exact swap
  const double half = 0.5 * std::numbers::pi * fidelity;
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> global = std::exp(-i * half);
  Matrix3c s = Matrix3c::Zero();
  s(kIdxZero, kIdxZero) = 1.0;
  s(kIdxMinus, kIdxMinus) = global * std::cos(half);
  s(kIdxPlus, kIdxPlus) = global * std::cos(half);
  s(kIdxMinus, kIdxPlus) = global * i * std::sin(half);
  s(kIdxPlus, kIdxMinus) = global * i * std::sin(half);
  return s;
}

}  // namespace detail

// Executes a sequence starting from |0> in the rotating frame of
// `mw_carrier`. Charge-trap components evolve as a static mixture: each
// component adds its detuning to the zero-field splitting and the recorded
// populations/signal are the weighted sums.
inline SequenceResult run_sequence(const PulseSequence& seq,
                                   const NVEnsembleParams& params,
                                   const FieldEnvironment& env, double temp_k,
                                   double mw_carrier,
                                   const RunOptions& opts = {}) {
  seq.validate();
  env.validate();
  const double delta_t = zfs_at_temperature(params, temp_k);

  // index of a final mapping drive (drive directly followed by readout or
  // last): the phase diagnostic is snapshotted just before it
  std::ptrdiff_t mapping_drive = -1;
  for (std::size_t i = 0; i < seq.elements.size(); ++i) {
    if (std::holds_alternative<DrivePulse>(seq.elements[i]) &&
        (i + 1 == seq.elements.size() ||
         (i + 2 == seq.elements.size() &&
          std::holds_alternative<ReadoutMarker>(seq.elements[i + 1])))) {
      mapping_drive = static_cast<std::ptrdiff_t>(i);
    }
  }

  SequenceResult result;
  std::complex<double> coherence_sum(0.0, 0.0);
  const Vector3c bright = bright_state();

  for (const auto& comp : env.components()) {
    const double detuning0 = delta_t + comp.detuning - mw_carrier;
    SpinState state = SpinState::ground();
    std::complex<double> snapshot(0.0, 0.0);
    bool snapshotted = false;

    for (std::size_t i = 0; i < seq.elements.size(); ++i) {
      if (static_cast<std::ptrdiff_t>(i) == mapping_drive) {
        snapshot = (Vector3c::Unit(kIdxZero).adjoint() * state.rho * bright);
        snapshotted = true;
      }
      const auto& e = seq.elements[i];
      if (const auto* delay = std::get_if<DelayStep>(&e)) {
        Matrix3c h = Matrix3c::Zero();
        h(kIdxMinus, kIdxMinus) = detuning0 - env.b_shift;
        h(kIdxPlus, kIdxPlus) = detuning0 + env.b_shift;
        state = evolve(state, h, delay->duration, params);
      } else if (const auto* drive = std::get_if<DrivePulse>(&e)) {
        if (opts.ideal_pulses) {
          const double theta = std::numbers::sqrt2 * drive->rabi *
                               drive->duration;
          const Matrix3c u = detail::bright_rotation(theta, drive->phase);
          state.rho = u * state.rho * u.adjoint();
        } else {
          Matrix3c h = Matrix3c::Zero();
          const double det = delta_t + comp.detuning - drive->carrier;
          h(kIdxMinus, kIdxMinus) = det - env.b_shift;
          h(kIdxPlus, kIdxPlus) = det + env.b_shift;
          const std::complex<double> coupling =
              0.5 * drive->rabi *
              std::exp(std::complex<double>(0.0, -drive->phase));
          h(kIdxPlus, kIdxZero) += coupling;
          h(kIdxMinus, kIdxZero) += coupling;
          h(kIdxZero, kIdxPlus) += std::conj(coupling);
          h(kIdxZero, kIdxMinus) += std::conj(coupling);
          state = evolve(state, h, drive->duration, params);
        }
      } else if (std::holds_alternative<SwapPulse>(e)) {
        const Matrix3c u = detail::swap_unitary(opts.swap_fidelity);
        state.rho = u * state.rho * u.adjoint();
      }
      // ReadoutMarker: populations are captured at sequence end below
    }
    if (!snapshotted) {
      snapshot = (Vector3c::Unit(kIdxZero).adjoint() * state.rho * bright);
    }

    const auto pops = state.populations();
    for (int k = 0; k < 3; ++k) result.populations[k] += comp.weight * pops[k];
    coherence_sum += comp.weight * snapshot;
  }

  result.expected_signal =
      opts.signal_offset +
      opts.fringe_amplitude * (result.populations[kIdxZero] -
                               result.populations[kIdxPlus] -
                               result.populations[kIdxMinus]);
  // the prepared coherence starts at i/2; divide that out so the diagnostic
  // reads 0 for zero accumulated detuning phase
  result.accumulated_phase =
      std::arg(coherence_sum * std::complex<double>(0.0, -1.0));
  return result;
}

// Standard 2pi-echo thermometry program: pi/2 bright-state preparation,
// free evolution tau, |+1> <-> |-1> swap, free evolution tau, mirrored pi/2
// mapping pulse, readout.
inline PulseSequence echo_sequence(double tau, double carrier, double rabi) {
  if (!(tau >= 0.0)) throw ValidationError("tau must be non-negative");
  const double pulse = (0.5 * std::numbers::pi) / (std::numbers::sqrt2 * rabi);
  PulseSequence seq;
  seq.label = "echo";
  seq.elements = {DrivePulse{carrier, rabi, 0.0, pulse}, DelayStep{tau},
                  SwapPulse{}, DelayStep{tau},
                  DrivePulse{carrier, rabi, std::numbers::pi, pulse},
                  ReadoutMarker{}};
  return seq;
}

// Ramsey control: the same program without the swap pulse.
inline PulseSequence ramsey_sequence(double tau, double carrier, double rabi) {
  if (!(tau >= 0.0)) throw ValidationError("tau must be non-negative");
  const double pulse = (0.5 * std::numbers::pi) / (std::numbers::sqrt2 * rabi);
  PulseSequence seq;
  seq.label = "ramsey";
  seq.elements = {DrivePulse{carrier, rabi, 0.0, pulse}, DelayStep{tau},
                  DelayStep{tau},
                  DrivePulse{carrier, rabi, std::numbers::pi, pulse},
                  ReadoutMarker{}};
  return seq;
}

// Closed form of the echo fringe at total evolution time 2*tau:
//   offset + amplitude * E(2 tau) * sum_k w_k cos(2 tau (detuning + m dT + trap_k))
// with E the coherence envelope. Matches run_sequence on the equivalent
// program with ideal pulses.
inline double echo_fringe(double tau, const NVEnsembleParams& params,
                          const FieldEnvironment& env, double temp_offset_k,
                          double mw_detuning, const RunOptions& opts = {}) {
  if (!(tau >= 0.0)) throw ValidationError("tau must be non-negative");
  params.validate();
  env.validate();
  const double envelope = coherence_envelope(params, 2.0 * tau);
  const double rate0 = mw_detuning + params.d_delta_dT * temp_offset_k;
  double fringe = 0.0;
  for (const auto& comp : env.components()) {
    fringe += comp.weight * std::cos(2.0 * tau * (rate0 + comp.detuning));
  }
  return opts.signal_offset + opts.fringe_amplitude * envelope * fringe;
}

}  // namespace nvtherm
