#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>

#include "nvtherm/errors.hpp"

// Small dense Levenberg-Marquardt solver with a central-difference Jacobian,
// used by the spectrum and fringe fits. Residuals are expected in sigma
// units, so (J^T J)^-1 at the solution is the parameter covariance.

namespace nvtherm {

struct LMOptions {
  int max_iterations = 300;
  double cost_tolerance = 1e-14;   // relative cost reduction
  double step_tolerance = 1e-13;   // relative step size
  double initial_lambda = 1e-3;
};

struct LMResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;  // sqrt of the final cost
  int iterations = 0;
  bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

namespace detail {

inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn,
                                        const Eigen::VectorXd& p,
                                        const Eigen::VectorXd& scales,
                                        Eigen::Index m) {
  const Eigen::Index n = p.size();
  Eigen::MatrixXd jac(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(std::abs(p(j)), scales(j));
    Eigen::VectorXd fwd = p, bwd = p;
    fwd(j) += h;
    bwd(j) -= h;
    jac.col(j) = (fn(fwd) - fn(bwd)) / (2.0 * h);
  }
  return jac;
}

}  // namespace detail

// `scales` sets the finite-difference step floor per parameter (pass the
// natural magnitude of each parameter; zeros fall back to 1).
inline LMResult levenberg_marquardt(const ResidualFn& residual_fn,
                                    Eigen::VectorXd p,
                                    Eigen::VectorXd scales = {},
                                    const LMOptions& opts = {}) {
  const Eigen::Index n = p.size();
  if (scales.size() == 0) scales = Eigen::VectorXd::Ones(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(scales(j) > 0.0)) scales(j) = 1.0;
  }

  Eigen::VectorXd residual = residual_fn(p);
  const Eigen::Index m = residual.size();
  double cost = residual.squaredNorm();
  double lambda = opts.initial_lambda;

  LMResult result;
  bool converged = false;
  int small_drops = 0;
  int iter = 0;
  for (; iter < opts.max_iterations && !converged; ++iter) {
    const Eigen::MatrixXd jac =
        detail::numeric_jacobian(residual_fn, p, scales, m);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * residual;

    bool stepped = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index j = 0; j < n; ++j) {
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-30);
      }
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
      const Eigen::VectorXd candidate = p + step;
      const Eigen::VectorXd trial = residual_fn(candidate);
      const double trial_cost = trial.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double cost_drop = cost - trial_cost;
        double step_scale = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          step_scale = std::max(
              step_scale,
              std::abs(step(j)) / std::max(std::abs(p(j)), scales(j)));
        }
        p = candidate;
        residual = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-14);
        stepped = true;
        // declare convergence only after the improvement stays negligible
        // across consecutive accepted steps (a single barely-improving step
        // near a bad start must not stop the solve)
        if (cost_drop <= opts.cost_tolerance * std::max(cost, 1e-300) &&
            step_scale <= 1e3 * opts.step_tolerance) {
          if (++small_drops >= 2) converged = true;
        } else {
          small_drops = 0;
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped) {
      // no strictly downhill step at any damping: the cost is at its
      // numerical floor (stationary point)
      converged = true;
    }
  }

  result.params = p;
  result.residual_norm = std::sqrt(cost);
  result.iterations = iter;
  result.converged = converged;

  // covariance in scaled parameter space: the raw normal matrix can span
  // tens of decades (rad/s centers next to O(1) contrasts) and defeat
  // threshold-based rank checks
  const Eigen::MatrixXd jac =
      detail::numeric_jacobian(residual_fn, p, scales, m);
  Eigen::VectorXd units(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    units(j) = std::max(std::abs(p(j)), scales(j));
  }
  const Eigen::MatrixXd jac_scaled = jac * units.asDiagonal();
  const Eigen::MatrixXd jtj_scaled = jac_scaled.transpose() * jac_scaled;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj_scaled);
  if (lu.isInvertible()) {
    result.covariance =
        units.asDiagonal() * lu.inverse() * units.asDiagonal();
  } else {
    const Eigen::MatrixXd pinv =
        jtj_scaled.completeOrthogonalDecomposition().pseudoInverse();
    result.covariance = units.asDiagonal() * pinv * units.asDiagonal();
    // flag fully degenerate directions with an unbounded variance
    for (Eigen::Index j = 0; j < n; ++j) {
      if (jtj_scaled(j, j) == 0.0) {
        result.covariance(j, j) = std::numeric_limits<double>::infinity();
      }
    }
  }
  return result;
}

}  // namespace nvtherm
