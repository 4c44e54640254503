#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tailmix/distributions.hpp"
#include "tailmix/mixture.hpp"
#include "tailmix/optimize.hpp"

namespace tailmix {

inline constexpr std::size_t kDefaultMinExceedances = 10;

/// Shape search interval for every GPD/GEV fit: (-1, 5].
inline constexpr double kXiLower = -1.0;
inline constexpr double kXiUpper = 5.0;

/// Type-7 (linear interpolation) quantile of an ascending sample.
double empirical_quantile(std::span<const double> sorted, double p);

struct GpdFit {
  GpdParams params;
  double log_likelihood = 0.0;
  std::size_t n_exceed = 0;
  bool converged = false;
};

/// MLE of (sigma_u, xi) on the exceedances x - u of the points above u.
GpdFit fit_gpd(std::span<const double> data, double u,
               std::size_t min_exceedances = kDefaultMinExceedances,
               const OptimizerConfig& opt = {});

/// GPD log-likelihood of the exceedances above u (-inf outside the support).
double gpd_log_likelihood(std::span<const double> data, const GpdParams& p);

struct ThresholdSearchConfig {
  /// Probabilities for the upper threshold.
  std::vector<double> upper_grid;
  /// Probabilities for the lower threshold (two-tailed models only).
  std::vector<double> lower_grid;
  std::size_t min_exceedances = kDefaultMinExceedances;

  ThresholdSearchConfig();
};

void validate(const ThresholdSearchConfig& cfg);

enum class TailMode { BulkBased, Parameterized };

/// Which mixture to fit and how.
struct MixtureModel {
  MixtureKind kind = MixtureKind::NormGpd;
  TailMode mode = TailMode::BulkBased;
  bool continuity = false;
  /// Hybrid Pareto: derive u from the smooth junction (otherwise u is profiled
  /// over the grid with density continuity only).
  bool smooth_junction = true;
  /// Kernel bulk: fixed bandwidth; cross-validated when empty.
  std::optional<double> bandwidth;
};

struct ProfilePoint {
  std::optional<double> lower_threshold;
  double threshold = 0.0;
  double log_likelihood = 0.0;
};

struct FitReport {
  FittedMixture best;
  std::vector<ProfilePoint> profile;  ///< grid order, infeasible candidates dropped
  double wall_time = 0.0;             ///< seconds
};

/// Profile-likelihood fit: thresholds at empirical quantiles of the grid,
/// inner simplex maximization at each candidate, best candidate returned.
/// For the kernel bulk the bulk points enter through their leave-one-out
/// density.
FitReport fit_mixture(std::span<const double> data, const MixtureModel& model,
                      const ThresholdSearchConfig& cfg = {}, const OptimizerConfig& opt = {});

struct GevFit {
  GevParams params;
  double log_likelihood = 0.0;
  std::size_t n_blocks = 0;
  bool converged = false;
};

/// MLE on the maxima of complete blocks; the partial trailing block is dropped.
GevFit fit_gev_blocks(std::span<const double> data, std::size_t block_size,
                      const OptimizerConfig& opt = {});

/// Leave-one-out likelihood bandwidth for a Gaussian KDE.
double kde_cv_bandwidth(std::span<const double> data);

/// 1.06 * s * n^(-1/5).
double kde_reference_bandwidth(std::span<const double> data);

}  // namespace tailmix
