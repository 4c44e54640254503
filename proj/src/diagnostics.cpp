#include "tailmix/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "tailmix/error.hpp"

namespace tailmix {

namespace {

constexpr double kZ975 = 1.959963984540054;

std::vector<double> ascending(std::span<const double> grid) {
  std::vector<double> g(grid.begin(), grid.end());
  std::sort(g.begin(), g.end());
  return g;
}

}  // namespace

std::vector<double> default_threshold_grid(std::span<const double> data, std::size_t count,
                                           double max_prob) {
  require(!data.empty(), ErrorKind::EmptySample, "default_threshold_grid: empty sample");
  require(count >= 2, ErrorKind::InvalidArgument, "default_threshold_grid: need count >= 2");
  require(max_prob > 0.0 && max_prob < 1.0, ErrorKind::InvalidArgument,
          "default_threshold_grid: max_prob must lie in (0, 1)");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> grid;
  grid.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    grid.push_back(empirical_quantile(
        sorted, max_prob * static_cast<double>(k) / static_cast<double>(count - 1)));
  return grid;
}

DiagnosticTable<MrlPoint> mean_residual_life(std::span<const double> data,
                                             std::span<const double> grid) {
  require(!data.empty(), ErrorKind::EmptySample, "mean_residual_life: empty sample");
  DiagnosticTable<MrlPoint> out;
  for (double u : ascending(grid)) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : data)
      if (x > u) {
        sum += x - u;
        ++n;
      }
    if (n < 2) {
      out.skipped.push_back({u, "fewer than 2 exceedances"});
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : data)
      if (x > u) ss += (x - u - mean) * (x - u - mean);
    const double half = kZ975 * std::sqrt(ss / static_cast<double>(n - 1)) /
                        std::sqrt(static_cast<double>(n));
    out.points.push_back({u, mean, mean - half, mean + half, n});
  }
  return out;
}

DiagnosticTable<StabilityPoint> threshold_stability(std::span<const double> data,
                                                    std::span<const double> grid,
                                                    std::size_t min_exceedances,
                                                    const OptimizerConfig& opt) {
  require(!data.empty(), ErrorKind::EmptySample, "threshold_stability: empty sample");
  DiagnosticTable<StabilityPoint> out;
  for (double u : ascending(grid)) {
    GpdFit fit;
    try {
      fit = fit_gpd(data, u, min_exceedances, opt);
    } catch (const Error& e) {
      out.skipped.push_back({u, e.what()});
      continue;
    }
    std::vector<double> y;
    for (double x : data)
      if (x > u) y.push_back(x);
    const Objective loglik = [&](std::span<const double> t) {
      if (!(t[0] > 0.0)) return -std::numeric_limits<double>::infinity();
      return gpd_log_likelihood(y, GpdParams(u, t[0], t[1]));
    };
    const double at[2] = {fit.params.sigma_u, fit.params.xi};
    const auto h = numeric_hessian(loglik, at);
    Eigen::Matrix2d info;
    info << -h[0][0], -h[0][1], -h[1][0], -h[1][1];
    const Eigen::Matrix2d cov = info.inverse();
    const Eigen::Vector2d grad(1.0, -u);  // d(sigma - u xi)/d(sigma, xi)
    const double var_xi = cov(1, 1);
    const double var_ms = grad.dot(cov * grad);
    const bool ok = info.determinant() > 0.0 && info(0, 0) > 0.0 && var_xi >= 0.0 &&
                    var_ms >= 0.0 && std::isfinite(var_xi) && std::isfinite(var_ms);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    StabilityPoint p;
    p.u = u;
    p.xi_hat = fit.params.xi;
    p.sigma_hat = fit.params.sigma_u;
    p.modified_scale = fit.params.sigma_u - u * fit.params.xi;
    const double se_xi = ok ? std::sqrt(var_xi) : nan;
    const double se_ms = ok ? std::sqrt(var_ms) : nan;
    p.xi_ci_low = p.xi_hat - kZ975 * se_xi;
    p.xi_ci_high = p.xi_hat + kZ975 * se_xi;
    p.scale_ci_low = p.modified_scale - kZ975 * se_ms;
    p.scale_ci_high = p.modified_scale + kZ975 * se_ms;
    p.n_exceed = fit.n_exceed;
    out.points.push_back(p);
  }
  return out;
}

}  // namespace tailmix
