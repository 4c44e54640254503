#pragma once

#include <span>
#include <string>
#include <vector>

#include "tailmix/estimation.hpp"

namespace tailmix {

struct MrlPoint {
  double u = 0.0;
  double mean_excess = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_exceed = 0;
};

struct StabilityPoint {
  double u = 0.0;
  double xi_hat = 0.0;
  double xi_ci_low = 0.0;
  double xi_ci_high = 0.0;
  double sigma_hat = 0.0;
  double modified_scale = 0.0;  ///< sigma_hat - u * xi_hat
  double scale_ci_low = 0.0;
  double scale_ci_high = 0.0;
  std::size_t n_exceed = 0;
};

/// Threshold skipped by a diagnostic, with the reason.
struct SkippedThreshold {
  double u = 0.0;
  std::string reason;
};

template <class Point>
struct DiagnosticTable {
  std::vector<Point> points;  ///< ascending u
  std::vector<SkippedThreshold> skipped;
};

/// 40 thresholds at empirical quantiles evenly spaced over [0, 0.975].
std::vector<double> default_threshold_grid(std::span<const double> data,
                                           std::size_t count = 40, double max_prob = 0.975);

/// Mean excess over each threshold with a normal-approximation 95% interval.
/// Thresholds with fewer than 2 exceedances are skipped.
DiagnosticTable<MrlPoint> mean_residual_life(std::span<const double> data,
                                             std::span<const double> grid);

/// GPD fit per threshold; delta-method 95% intervals from the numeric Hessian.
DiagnosticTable<StabilityPoint> threshold_stability(
    std::span<const double> data, std::span<const double> grid,
    std::size_t min_exceedances = kDefaultMinExceedances, const OptimizerConfig& opt = {});

}  // namespace tailmix
