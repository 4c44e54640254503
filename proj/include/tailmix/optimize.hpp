#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace tailmix {

struct OptimizerConfig {
  double rel_tolerance = 1e-8;
  std::size_t max_iterations = 2000;
  std::size_t restarts = 3;
};

void validate(const OptimizerConfig& cfg);

struct OptimizeResult {
  std::vector<double> x;
  double value = 0.0;  ///< objective at x (the maximum found)
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Objective to MAXIMIZE. Infeasible points return -infinity (or NaN,
/// which is treated the same way).
using Objective = std::function<double(std::span<const double>)>;

/// Derivative-free Nelder-Mead maximization with deterministic restarts.
/// Each restart rebuilds the simplex around the incumbent with a step
/// pattern that depends only on the restart index, so results are
/// reproducible. `step` gives the initial edge length per coordinate.
OptimizeResult nelder_mead_maximize(const Objective& f, std::vector<double> start,
                                    std::span<const double> step,
                                    const OptimizerConfig& cfg = {});

/// Golden-section maximization of a unimodal function on [lo, hi].
double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double x_tolerance);

/// Bisection root of a function with f(lo), f(hi) of opposite sign.
/// Returns nullopt when the bracket is invalid.
std::optional<double> bisect_root(const std::function<double(double)>& f, double lo, double hi,
                                  double x_tolerance, std::size_t max_iter = 400);

/// Central-difference Hessian of f at x with relative steps.
std::vector<std::vector<double>> numeric_hessian(const Objective& f, std::span<const double> x);

}  // namespace tailmix
