#include "tailmix/risk.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "tailmix/error.hpp"

namespace tailmix {

namespace {

void check_alpha(double alpha, const char* where) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument,
          std::string(where) + ": alpha must lie in (0, 1)");
}

double model_quantile_upper(const RiskModel& m, double q) {
  return std::visit(
      [q](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, MixtureSpec>) return mixture_quantile_upper(v, q);
        if constexpr (std::is_same_v<T, BulkFamily>) return quantile_upper(v, q);
        if constexpr (std::is_same_v<T, GpdParams>) return gpd_quantile_upper(v, q);
      },
      m);
}

void check_integrable(const RiskModel& m) {
  const double xi = std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, MixtureSpec>) return v.upper.gpd.xi;
        if constexpr (std::is_same_v<T, GpdParams>) return v.xi;
        if constexpr (std::is_same_v<T, BulkFamily>) {
          if (const auto* t = std::get_if<StudentT>(&v)) return 1.0 / t->df;
          return 0.0;
        }
      },
      m);
  require(xi < 1.0, ErrorKind::NonIntegrableTail,
          "expected shortfall: tail shape >= 1 has no finite mean");
}

// Upper-tail probabilities where the quantile function changes piece.
std::vector<double> tail_breaks(const RiskModel& m) {
  std::vector<double> out;
  if (const auto* s = std::get_if<MixtureSpec>(&m)) {
    const auto masses = tail_masses(*s);
    out.push_back(masses.upper);
    if (s->lower) out.push_back(1.0 - masses.lower);
  }
  return out;
}

}  // namespace

double var_empirical(std::span<const double> losses, double alpha) {
  require(!losses.empty(), ErrorKind::EmptySample, "var_empirical: empty sample");
  check_alpha(alpha, "var_empirical");
  const double n = static_cast<double>(losses.size());
  const double t = n * alpha;
  // n * alpha lands a few ulps off an integer for decimal alphas; snap it.
  const double r = std::round(t);
  double k = std::abs(t - r) <= 1e-9 * std::max(1.0, t) ? r : std::ceil(t);
  k = std::clamp(k, 1.0, n);
  std::vector<double> x(losses.begin(), losses.end());
  const auto idx = static_cast<std::ptrdiff_t>(k) - 1;
  std::nth_element(x.begin(), x.begin() + idx, x.end());
  return x[static_cast<std::size_t>(idx)];
}

double es_empirical(std::span<const double> losses, double alpha) {
  const double v = var_empirical(losses, alpha);
  double sum = 0.0;
  std::size_t count = 0;
  for (double x : losses)
    if (x >= v) {
      sum += x;
      ++count;
    }
  require(count > 0, ErrorKind::EmptySample, "es_empirical: no loss at or above VaR");
  return sum / static_cast<double>(count);
}

double var_model(const RiskModel& model, double alpha) {
  check_alpha(alpha, "var_model");
  return model_quantile_upper(model, 1.0 - alpha);
}

double es_numeric(const RiskModel& model, double alpha) {
  check_alpha(alpha, "es_numeric");
  check_integrable(model);
  const double tail = 1.0 - alpha;
  auto integrand = [&](double t) {
    const double q = tail * std::exp(-t);
    if (!(q > 1e-300)) return 0.0;
    return model_quantile_upper(model, q) * std::exp(-t);
  };
  std::vector<double> cuts{0.0};
  for (double b : tail_breaks(model))
    if (b > 0.0 && b < tail) cuts.push_back(std::log(tail / b));
  std::sort(cuts.begin(), cuts.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, cuts[i], cuts[i + 1], 15, 1e-12, &err);
  }
  boost::math::quadrature::exp_sinh<double> tail_rule;
  total += tail_rule.integrate(integrand, cuts.back(), std::numeric_limits<double>::infinity(),
                               1e-12);
  require(std::isfinite(total), ErrorKind::NonIntegrableTail,
          "es_numeric: quadrature did not produce a finite value");
  return total;
}

double var_monte_carlo(const RiskModel& model, double alpha, std::size_t n, std::uint64_t seed) {
  check_alpha(alpha, "var_monte_carlo");
  require(n >= 100, ErrorKind::InvalidArgument, "var_monte_carlo: need n >= 100 draws");
  const auto draws = std::visit([&](const auto& v) { return sample(v, n, seed); }, model);
  return var_empirical(draws, alpha);
}

RiskReport two_step_var_es(const GarchFit& garch, const FittedMixture& residual_model,
                           double last_return, double alpha) {
  const auto f = garch_forecast1(garch, last_return);
  RiskReport r;
  r.alpha = alpha;
  r.method = "two-step";
  r.var = f.mu_next + f.sigma_next * var_model(residual_model.spec, alpha);
  r.es = f.mu_next + f.sigma_next * es_numeric(residual_model.spec, alpha);
  return r;
}

RiskReport two_step_var_es(const TwoStepFit& fit, double last_return, double alpha) {
  const auto f = garch_forecast1(fit.garch, last_return);
  const auto& spec = fit.residual_fit.best.spec;
  RiskReport r;
  r.alpha = alpha;
  r.method = "two-step";
  const double z_var = (var_model(spec, alpha) - fit.center) / fit.spread;
  const double z_es = (es_numeric(spec, alpha) - fit.center) / fit.spread;
  r.var = f.mu_next + f.sigma_next * z_var;
  r.es = f.mu_next + f.sigma_next * z_es;
  return r;
}

}  // namespace tailmix
