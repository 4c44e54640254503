#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>

#include "tailmix/distributions.hpp"
#include "tailmix/mixture.hpp"
#include "tailmix/timeseries.hpp"

namespace tailmix {

/// Anything with a loss quantile function: a mixture, a bulk family or a
/// bare GPD.
using RiskModel = std::variant<MixtureSpec, BulkFamily, GpdParams>;

struct RiskReport {
  double var = 0.0;
  double es = 0.0;
  std::string method;
  double alpha = 0.0;
};

/// The ceil(n alpha)-th smallest loss.
double var_empirical(std::span<const double> losses, double alpha);

/// Mean of the losses at or above var_empirical(losses, alpha).
double es_empirical(std::span<const double> losses, double alpha);

/// alpha-quantile of the model.
double var_model(const RiskModel& model, double alpha);

/// (1 / (1 - alpha)) * integral of the quantile function over (alpha, 1),
/// computed after the substitution gamma = 1 - (1 - alpha) e^{-t}.
/// Throws NonIntegrableTail when the upper tail has no finite mean.
double es_numeric(const RiskModel& model, double alpha);

/// var_empirical over n model draws.
double var_monte_carlo(const RiskModel& model, double alpha, std::size_t n, std::uint64_t seed);

/// Conditional VaR/ES one step ahead: mu + sigma * (residual VaR / ES), with
/// the residual model fitted to standardized residuals.
RiskReport two_step_var_es(const GarchFit& garch, const FittedMixture& residual_model,
                           double last_return, double alpha);

/// Same, for a two-step fit on either residual scale.
RiskReport two_step_var_es(const TwoStepFit& fit, double last_return, double alpha);

}  // namespace tailmix
