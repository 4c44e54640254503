#include "tailmix/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "tailmix/error.hpp"

namespace tailmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sample_mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Unconstrained search coordinates: (mu, log alpha0, logit persistence,
// logit alpha share) with alpha1 = p s, beta1 = p (1 - s).
struct GarchCoords {
  static std::vector<double> to(const GarchParams& g) {
    const double p = g.alpha1 + g.beta1;
    return {g.mu, std::log(g.alpha0), logit(p), logit(g.alpha1 / p)};
  }
  static std::optional<GarchParams> from(std::span<const double> t) {
    if (!(std::abs(t[1]) < 700.0)) return std::nullopt;
    const double p = logistic(t[2]);
    const double s = logistic(t[3]);
    const double a1 = p * s, b1 = p * (1.0 - s);
    if (!(p < 1.0) || !(std::exp(t[1]) > 0.0)) return std::nullopt;
    return GarchParams(t[0], std::exp(t[1]), a1, b1);
  }
};

}  // namespace

ReturnSeries to_returns(const PriceSeries& prices, ReturnKind kind) {
  require(kind != ReturnKind::Loss, ErrorKind::InvalidArgument,
          "to_returns: kind must be log or arithmetic");
  const auto& p = prices.values;
  require(p.size() >= 2, ErrorKind::InvalidArgument, "to_returns: need at least two prices");
  for (double v : p)
    require(v > 0.0 && std::isfinite(v), ErrorKind::InvalidArgument,
            "to_returns: prices must be positive and finite");
  ReturnSeries r;
  r.kind = kind;
  r.base = kind;
  r.values.reserve(p.size() - 1);
  for (std::size_t t = 1; t < p.size(); ++t)
    r.values.push_back(kind == ReturnKind::Log ? std::log(p[t] / p[t - 1])
                                               : (p[t] - p[t - 1]) / p[t - 1]);
  return r;
}

ReturnSeries loss_series(const ReturnSeries& returns) {
  ReturnSeries out;
  out.values.reserve(returns.values.size());
  for (double v : returns.values) out.values.push_back(-v);
  if (returns.kind == ReturnKind::Loss) {
    out.kind = returns.base;
    out.base = returns.base;
  } else {
    out.kind = ReturnKind::Loss;
    out.base = returns.kind;
  }
  return out;
}

Summary describe(std::span<const double> values) {
  require(values.size() >= 2, ErrorKind::InvalidArgument, "describe: need at least two values");
  Summary s;
  s.n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.mean = sample_mean(values);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double nd = static_cast<double>(n);
  s.sd = std::sqrt(m2 / (nd - 1.0));
  m2 /= nd;
  m3 /= nd;
  m4 /= nd;
  s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  s.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  return s;
}

GarchParams::GarchParams(double mu_, double a0, double a1, double b1)
    : mu(mu_), alpha0(a0), alpha1(a1), beta1(b1) {
  require(std::isfinite(mu), ErrorKind::InvalidArgument, "GarchParams: mu must be finite");
  require(a0 > 0.0 && std::isfinite(a0), ErrorKind::InvalidArgument,
          "GarchParams: alpha0 must be positive");
  require(a1 >= 0.0 && b1 >= 0.0, ErrorKind::InvalidArgument,
          "GarchParams: alpha1 and beta1 must be nonnegative");
  require(a1 + b1 < 1.0, ErrorKind::InvalidArgument,
          "GarchParams: alpha1 + beta1 must be below 1");
}

double GarchParams::unconditional_variance() const noexcept {
  return alpha0 / (1.0 - alpha1 - beta1);
}

GarchFilterResult garch_filter(const GarchParams& g, std::span<const double> returns,
                               std::optional<double> presample_variance) {
  require(!returns.empty(), ErrorKind::EmptySample, "garch_filter: empty series");
  double s2_prev = presample_variance
                       ? *presample_variance
                       : (returns.size() >= 2 ? sample_variance(returns) : g.alpha0);
  require(s2_prev >= 0.0 && std::isfinite(s2_prev), ErrorKind::InvalidArgument,
          "garch_filter: presample variance must be finite and nonnegative");
  double e2_prev = s2_prev;
  GarchFilterResult out;
  out.cond_sd.reserve(returns.size());
  out.residuals.reserve(returns.size());
  for (double r : returns) {
    const double s2 = g.alpha0 + g.alpha1 * e2_prev + g.beta1 * s2_prev;
    const double sd = std::sqrt(s2);
    const double e = r - g.mu;
    out.cond_sd.push_back(sd);
    out.residuals.push_back(e / sd);
    e2_prev = e * e;
    s2_prev = s2;
  }
  return out;
}

double garch_log_likelihood(const GarchParams& g, std::span<const double> returns,
                            std::optional<double> presample_variance) {
  double s2_prev = presample_variance ? *presample_variance : sample_variance(returns);
  double e2_prev = s2_prev;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (double r : returns) {
    const double s2 = g.alpha0 + g.alpha1 * e2_prev + g.beta1 * s2_prev;
    const double e = r - g.mu;
    total += -0.5 * (log2pi + std::log(s2) + e * e / s2);
    e2_prev = e * e;
    s2_prev = s2;
  }
  return std::isfinite(total) ? total : kNegInf;
}

GarchFit fit_garch11(std::span<const double> returns, const OptimizerConfig& opt) {
  validate(opt);
  require(returns.size() >= 100, ErrorKind::InvalidArgument,
          "fit_garch11: need at least 100 observations");
  for (double v : returns)
    require(std::isfinite(v), ErrorKind::InvalidArgument, "fit_garch11: non-finite value");
  const double var = sample_variance(returns);
  require(var > 0.0, ErrorKind::DegenerateSample, "fit_garch11: zero-variance series");
  const double mean = sample_mean(returns);

  const Objective f = [&](std::span<const double> t) {
    try {
      const auto g = GarchCoords::from(t);
      return g ? garch_log_likelihood(*g, returns, var) : kNegInf;
    } catch (const Error&) {
      return kNegInf;
    }
  };
  const double sd = std::sqrt(var);
  const double step[4] = {0.1 * sd, 0.5, 0.5, 0.5};
  std::optional<OptimizeResult> best;
  // Two persistence regimes as starting points: strong and weak clustering.
  for (const auto& [a1, b1] : {std::pair{0.05, 0.90}, std::pair{0.10, 0.40}}) {
    const GarchParams start(mean, var * (1.0 - a1 - b1), a1, b1);
    auto res = nelder_mead_maximize(f, GarchCoords::to(start), step, opt);
    if (!best || res.value > best->value) best = std::move(res);
  }
  require(std::isfinite(best->value), ErrorKind::NonConvergence,
          "fit_garch11: no finite quasi-likelihood reached");
  require(best->converged, ErrorKind::NonConvergence, "fit_garch11: simplex did not converge");

  GarchFit fit;
  fit.params = *GarchCoords::from(best->x);
  fit.presample_variance = var;
  auto filtered = garch_filter(fit.params, returns, var);
  fit.cond_sd = std::move(filtered.cond_sd);
  fit.residuals = std::move(filtered.residuals);
  fit.log_likelihood = best->value;
  fit.converged = true;
  return fit;
}

GarchForecast garch_forecast1(const GarchFit& fit, double last_return) {
  require(!fit.cond_sd.empty(), ErrorKind::InvalidArgument, "garch_forecast1: empty fit");
  const auto& g = fit.params;
  const double e = last_return - g.mu;
  const double s_t = fit.cond_sd.back();
  return {g.mu, std::sqrt(g.alpha0 + g.alpha1 * e * e + g.beta1 * s_t * s_t)};
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  require(2 * max_lag < series.size(), ErrorKind::InvalidArgument,
          "acf: max_lag must be below half the series length");
  const double m = sample_mean(series);
  double denom = 0.0;
  for (double v : series) denom += (v - m) * (v - m);
  require(denom > 0.0, ErrorKind::DegenerateSample, "acf: constant series");
  std::vector<double> out(max_lag + 1);
  out[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + k < series.size(); ++t) num += (series[t] - m) * (series[t + k] - m);
    out[k] = num / denom;
  }
  return out;
}

double squared_acf(std::span<const double> series, std::size_t lag) {
  require(!series.empty(), ErrorKind::EmptySample, "squared_acf: empty series");
  const double m = sample_mean(series);
  std::vector<double> sq(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) sq[i] = (series[i] - m) * (series[i] - m);
  return acf(sq, lag)[lag];
}

double TwoStepFit::residual_quantile(double p) const {
  return (mixture_quantile(residual_fit.best.spec, p) - center) / spread;
}

double TwoStepFit::residual_quantile_upper(double q) const {
  return (mixture_quantile_upper(residual_fit.best.spec, q) - center) / spread;
}

TwoStepFit two_step_fit(std::span<const double> returns, const MixtureModel& model,
                        const ThresholdSearchConfig& cfg, const OptimizerConfig& opt,
                        ResidualScale scale) {
  TwoStepFit out;
  out.garch = fit_garch11(returns, opt);
  out.scale = scale;
  std::vector<double> series = out.garch.residuals;
  if (scale == ResidualScale::DataScale) {
    out.center = out.garch.params.mu;
    out.spread = describe(returns).sd;
    for (double& z : series) z = out.center + out.spread * z;
  }
  out.residual_fit = fit_mixture(series, model, cfg, opt);
  return out;
}

}  // namespace tailmix
