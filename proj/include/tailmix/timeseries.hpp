#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailmix/estimation.hpp"
#include "tailmix/optimize.hpp"

namespace tailmix {

enum class ReturnKind { Log, Arithmetic, Loss };

struct PriceSeries {
  std::vector<double> values;
  std::vector<std::string> timestamps;  ///< optional, empty or one per value
};

struct ReturnSeries {
  std::vector<double> values;
  ReturnKind kind = ReturnKind::Log;
  /// Return convention the series was derived from (Log or Arithmetic).
  ReturnKind base = ReturnKind::Log;
};

ReturnSeries to_returns(const PriceSeries& prices, ReturnKind kind);

/// Elementwise negation. Applied to a loss series it gives back the returns.
ReturnSeries loss_series(const ReturnSeries& returns);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double sd = 0.0;        ///< n - 1 divisor
  double skewness = 0.0;  ///< m3 / m2^1.5
  double kurtosis = 0.0;  ///< m4 / m2^2, normal = 3
};

Summary describe(std::span<const double> values);

struct GarchParams {
  double mu = 0.0;
  double alpha0 = 1.0;
  double alpha1 = 0.0;
  double beta1 = 0.0;

  GarchParams() = default;
  /// Rejects alpha0 <= 0, negative coefficients and alpha1 + beta1 >= 1.
  GarchParams(double mu, double alpha0, double alpha1, double beta1);

  /// alpha0 / (1 - alpha1 - beta1).
  double unconditional_variance() const noexcept;
};

struct GarchFilterResult {
  std::vector<double> cond_sd;
  std::vector<double> residuals;
};

/// Variance recursion s2[t] = alpha0 + alpha1 (r[t-1] - mu)^2 + beta1 s2[t-1].
/// The presample squared deviation and variance both equal
/// `presample_variance` (the sample variance of `returns` when omitted), so
/// alpha1 = beta1 = 0 gives a constant sqrt(alpha0).
GarchFilterResult garch_filter(const GarchParams& params, std::span<const double> returns,
                               std::optional<double> presample_variance = std::nullopt);

struct GarchFit {
  GarchParams params;
  std::vector<double> cond_sd;
  std::vector<double> residuals;
  double log_likelihood = 0.0;
  double presample_variance = 0.0;
  bool converged = false;
};

/// Gaussian quasi-likelihood of the series under params.
double garch_log_likelihood(const GarchParams& params, std::span<const double> returns,
                            std::optional<double> presample_variance = std::nullopt);

GarchFit fit_garch11(std::span<const double> returns, const OptimizerConfig& opt = {});

struct GarchForecast {
  double mu_next = 0.0;
  double sigma_next = 0.0;
};

/// One step ahead from the end of the fitted sample; `last_return` is the
/// most recent observation (normally the last value fitted).
GarchForecast garch_forecast1(const GarchFit& fit, double last_return);

/// Sample autocorrelations for lags 0..max_lag (lag 0 is exactly 1).
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

/// Autocorrelation at `lag` of the squared demeaned series.
double squared_acf(std::span<const double> series, std::size_t lag = 1);

/// Series handed to the mixture fit in the second step.
enum class ResidualScale {
  Standardized,  ///< z_t = (r_t - mu) / sigma_t
  DataScale,     ///< mu + s * z_t with s the sample sd of the returns
};

struct TwoStepFit {
  GarchFit garch;
  FitReport residual_fit;
  ResidualScale scale = ResidualScale::Standardized;
  /// Mean and scale that map the fitted series back to standardized residuals.
  double center = 0.0;
  double spread = 1.0;

  /// Residual quantile z_p implied by the second-step mixture.
  double residual_quantile(double p) const;
  double residual_quantile_upper(double q) const;
};

/// fit_garch11, garch_filter, then fit_mixture on the residual series.
TwoStepFit two_step_fit(std::span<const double> returns, const MixtureModel& model,
                        const ThresholdSearchConfig& cfg = {}, const OptimizerConfig& opt = {},
                        ResidualScale scale = ResidualScale::Standardized);

}  // namespace tailmix
