#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "nvtherm/errors.hpp"
#include "nvtherm/units.hpp"

// Spin-1 ground manifold of an NV sensor: temperature-dependent zero-field
// splitting, quasi-static magnetic shift, phenomenological charge-trap
// detunings, and propagation with a stretched-exponential coherence envelope.

namespace nvtherm {

using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;

// Basis ordering used everywhere: index 0 = |-1>, 1 = |0>, 2 = |+1>.
inline constexpr int kIdxMinus = 0;
inline constexpr int kIdxZero = 1;
inline constexpr int kIdxPlus = 2;

// |B> = (|+1> + |-1>)/sqrt(2), the superposition the drive couples to |0>.
inline Vector3c bright_state() {
  Vector3c b;
  b << 1.0 / std::numbers::sqrt2, 0.0, 1.0 / std::numbers::sqrt2;
  return b;
}

// Temperature window over which the linear zero-field-splitting model is
// trusted.
inline constexpr double kTempWindowLow = 200.0;
inline constexpr double kTempWindowHigh = 600.0;

struct NVEnsembleParams {
  double delta0 = rad_from_hz(2.87e9);       // zero-field splitting at t_ref
  double t_ref = 300.0;                      // K
  double d_delta_dT = rad_from_hz(-77.0e3);  // rad/s per kelvin
  double t_coh = 1.0e-3;                     // echo coherence time, s
  double t1 = 6.0e-3;                        // spin-lattice time, s
  int n_nv = 1;                              // color centers in the sensor
  double readout_factor = 0.03;              // C, aggregates readout losses
  double stretch_exp = 1.0;                  // decoherence envelope exponent

  friend bool operator==(const NVEnsembleParams&,
                         const NVEnsembleParams&) = default;

  void validate() const {
    if (!(delta0 > 0.0)) throw ValidationError("delta0 must be positive");
    if (!(t_coh > 0.0)) throw ValidationError("t_coh must be positive");
    if (!(t1 > 0.0)) throw ValidationError("t1 must be positive");
    if (n_nv < 1) throw ValidationError("n_nv must be at least 1");
    if (!(readout_factor > 0.0 && readout_factor <= 1.0)) {
      throw ValidationError("readout_factor must lie in (0, 1]");
    }
    if (!(d_delta_dT < 0.0)) {
      // diamond near 300 K: the splitting shrinks as temperature rises
      throw ValidationError("d_delta_dT must be negative near 300 K");
    }
    if (!(stretch_exp >= 1.0 && stretch_exp <= 3.0)) {
      throw ValidationError("stretch_exp must lie in [1, 3]");
    }
  }
};

// One quasi-static charge-trap component: an extra common-mode detuning of
// the |+-1> levels, entering the fluorescence as a weighted mixture term.
struct TrapComponent {
  double detuning = 0.0;  // rad/s
  double weight = 1.0;
  friend bool operator==(const TrapComponent&, const TrapComponent&) = default;
};

struct FieldEnvironment {
  // Quasi-static Zeeman shift of the |+-1> levels in frequency units:
  // +b_shift on |+1>, -b_shift on |-1>.
  double b_shift = 0.0;
  std::vector<TrapComponent> trap_detunings;  // empty means a single
                                              // component at zero detuning
  double gyromagnetic = nv_gyromagnetic;      // rad/s per tesla

  friend bool operator==(const FieldEnvironment&,
                         const FieldEnvironment&) = default;

  void validate() const {
    double total = 0.0;
    for (const auto& trap : trap_detunings) {
      if (!(trap.weight >= 0.0)) {
        throw ValidationError("trap weights must be non-negative");
      }
      total += trap.weight;
    }
    if (!trap_detunings.empty() && std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("trap weights must sum to 1");
    }
    if (!(gyromagnetic > 0.0)) {
      throw ValidationError("gyromagnetic must be positive");
    }
  }

  std::vector<TrapComponent> components() const {
    if (trap_detunings.empty()) return {TrapComponent{0.0, 1.0}};
    return trap_detunings;
  }

  double shift_from_field(double tesla) const { return gyromagnetic * tesla; }
};

struct SpinState {
  Matrix3c rho = Matrix3c::Zero();
  // Accumulated free-evolution time; the stretched-exponential envelope is
  // a function of this clock, which makes split evolutions compose exactly.
  double coherence_clock = 0.0;

  static SpinState ground() {
    SpinState s;
    s.rho(kIdxZero, kIdxZero) = 1.0;
    return s;
  }

  static SpinState pure(const Vector3c& psi) {
    SpinState s;
    s.rho = psi * psi.adjoint();
    return s;
  }

  std::array<double, 3> populations() const {
    return {rho(0, 0).real(), rho(1, 1).real(), rho(2, 2).real()};
  }

  void check(double tol = 1e-12) const {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) {
      throw ValidationError("spin state is not Hermitian");
    }
    if (std::abs(rho.trace().real() - 1.0) > tol ||
        std::abs(rho.trace().imag()) > tol) {
      throw ValidationError("spin state trace must be 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix3c> solver(rho);
    if (solver.eigenvalues().minCoeff() < -tol) {
      throw ValidationError("spin state has a negative eigenvalue");
    }
  }
};

// Linear model of the zero-field splitting around the reference temperature.
inline double zfs_at_temperature(const NVEnsembleParams& params,
                                 double temp_k) {
  params.validate();
  if (!(temp_k >= kTempWindowLow && temp_k <= kTempWindowHigh)) {
    throw ValidationError(
        "temperature " + std::to_string(temp_k) +
        " K outside the model validity window [200 K, 600 K]");
  }
  return params.delta0 + params.d_delta_dT * (temp_k - params.t_ref);
}

// Lab-frame Hamiltonian of the ground manifold, diagonal in the
// {|-1>, |0>, |+1>} basis: Delta(T) Sz^2 + b_shift Sz. The |0> level sits
// at zero; |+-1> sit at Delta(T) +- b_shift.
inline Matrix3c ground_hamiltonian(const NVEnsembleParams& params,
                                   const FieldEnvironment& env,
                                   double temp_k) {
  env.validate();
  const double delta = zfs_at_temperature(params, temp_k);
  Matrix3c h = Matrix3c::Zero();
  h(kIdxMinus, kIdxMinus) = delta - env.b_shift;
  h(kIdxPlus, kIdxPlus) = delta + env.b_shift;
  return h;
}

// Stretched-exponential coherence envelope exp(-(t/t_coh)^p).
inline double coherence_envelope(const NVEnsembleParams& params, double t) {
  if (t <= 0.0) return 1.0;
  return std::exp(-std::pow(t / params.t_coh, params.stretch_exp));
}

// Propagates a state for `duration` under the (constant, Hermitian)
// Hamiltonian `h`: exact unitary evolution, then the |0> <-> |+-1>
// coherences are damped by the envelope ratio accumulated on the state's
// coherence clock. Trace and Hermiticity are preserved; duration 0 is the
// identity.
inline SpinState evolve(const SpinState& state, const Matrix3c& h,
                        double duration, const NVEnsembleParams& params) {
  if (!(duration >= 0.0)) {
    throw ValidationError("evolve: duration must be non-negative");
  }
  params.validate();
  if (duration == 0.0) return state;

  SpinState out = state;
  const std::complex<double> minus_i(0.0, -1.0);

  // h is diagonal for every free-evolution segment; take the cheap exact
  // path there and fall back to an eigendecomposition otherwise.
  const double off_diag_norm = std::abs(h(0, 1)) + std::abs(h(0, 2)) +
                               std::abs(h(1, 0)) + std::abs(h(1, 2)) +
                               std::abs(h(2, 0)) + std::abs(h(2, 1));
  if (off_diag_norm == 0.0) {
    Vector3c phases;
    for (int i = 0; i < 3; ++i) {
      phases(i) = std::exp(minus_i * h(i, i).real() * duration);
    }
    out.rho = phases.asDiagonal() * state.rho *
              phases.conjugate().asDiagonal();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix3c> solver(h);
    const Matrix3c& basis = solver.eigenvectors();
    Vector3c phases;
    for (int i = 0; i < 3; ++i) {
      phases(i) = std::exp(minus_i * solver.eigenvalues()(i) * duration);
    }
    const Matrix3c u = basis * phases.asDiagonal() * basis.adjoint();
    out.rho = u * state.rho * u.adjoint();
  }

  const double before = coherence_envelope(params, state.coherence_clock);
  const double after =
      coherence_envelope(params, state.coherence_clock + duration);
  const double damp = after / before;
  out.rho(kIdxZero, kIdxMinus) *= damp;
  out.rho(kIdxMinus, kIdxZero) *= damp;
  out.rho(kIdxZero, kIdxPlus) *= damp;
  out.rho(kIdxPlus, kIdxZero) *= damp;
  out.coherence_clock = state.coherence_clock + duration;
  return out;
}

}  // namespace nvtherm
