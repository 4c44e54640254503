#include "tailmix/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tailmix/error.hpp"

namespace tailmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isnan(v) ? kNegInf : v;
}

struct Vertex {
  std::vector<double> x;
  double value;
};

// One Nelder-Mead run (maximizing). Standard coefficients: reflection 1,
// expansion 2, contraction 0.5, shrink 0.5.
OptimizeResult run_simplex(const Objective& f, const std::vector<double>& start,
                           std::span<const double> step, const OptimizerConfig& cfg) {
  const std::size_t n = start.size();
  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return safe_eval(f, x);
  };

  simplex.push_back({start, eval(start)});
  for (std::size_t i = 0; i < n; ++i) {
    auto x = start;
    x[i] += step[i];
    double v = eval(x);
    if (v == kNegInf) {
      // Try the opposite direction before giving up on this edge.
      x[i] = start[i] - step[i];
      v = eval(x);
    }
    simplex.push_back({std::move(x), v});
  }

  auto by_value_desc = [](const Vertex& a, const Vertex& b) { return a.value > b.value; };
  std::vector<double> centroid(n);
  bool converged = false;

  for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
    std::stable_sort(simplex.begin(), simplex.end(), by_value_desc);
    const double best = simplex.front().value;
    const double worst = simplex.back().value;
    if (best == kNegInf) break;

    if (worst != kNegInf) {
      const double spread = std::abs(best - worst);
      double xspread = 0.0;
      for (std::size_t v = 1; v <= n; ++v)
        for (std::size_t i = 0; i < n; ++i)
          xspread = std::max(xspread, std::abs(simplex[v].x[i] - simplex[0].x[i]) /
                                          (1.0 + std::abs(simplex[0].x[i])));
      if (spread <= cfg.rel_tolerance * (std::abs(best) + 1e-8) && xspread <= 1e-5) {
        converged = true;
        break;
      }
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);

    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = centroid[i] + t * (simplex.back().x[i] - centroid[i]);
      return x;
    };

    auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr > simplex.front().value) {
      auto xe = along(-2.0);
      const double fe = eval(xe);
      simplex.back() = fe > fr ? Vertex{std::move(xe), fe} : Vertex{std::move(xr), fr};
      continue;
    }
    if (fr > simplex[n - 1].value) {
      simplex.back() = {std::move(xr), fr};
      continue;
    }
    // Contraction: outside if the reflected point beats the worst.
    const bool outside = fr > worst;
    auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (outside ? fc >= fr : fc > worst) {
      simplex.back() = {std::move(xc), fc};
      continue;
    }
    for (std::size_t v = 1; v <= n; ++v) {
      for (std::size_t i = 0; i < n; ++i)
        simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
      simplex[v].value = eval(simplex[v].x);
    }
  }

  std::stable_sort(simplex.begin(), simplex.end(), by_value_desc);
  return {simplex.front().x, simplex.front().value, evals, converged};
}

}  // namespace

void validate(const OptimizerConfig& cfg) {
  require(cfg.rel_tolerance > 0.0, ErrorKind::InvalidArgument, "rel_tolerance must be > 0");
  require(cfg.max_iterations >= 1, ErrorKind::InvalidArgument, "max_iterations must be >= 1");
}

OptimizeResult nelder_mead_maximize(const Objective& f, std::vector<double> start,
                                    std::span<const double> step, const OptimizerConfig& cfg) {
  validate(cfg);
  require(step.size() == start.size(), ErrorKind::InvalidArgument,
          "nelder_mead: step and start sizes differ");

  OptimizeResult best = run_simplex(f, start, step, cfg);
  std::vector<double> restart_step(step.begin(), step.end());
  for (std::size_t k = 0; k < cfg.restarts; ++k) {
    if (best.value == kNegInf) break;
    // Deterministic jitter: alternate sign and shrink the edge per restart.
    for (std::size_t i = 0; i < restart_step.size(); ++i)
      restart_step[i] = step[i] * std::pow(0.5, static_cast<double>(k + 1)) *
                        (((k + i) % 2 == 0) ? 1.0 : -1.0);
    OptimizeResult next = run_simplex(f, best.x, restart_step, cfg);
    const std::size_t evals = best.evaluations + next.evaluations;
    const double gain = next.value - best.value;
    if (next.value > best.value) {
      best = std::move(next);
    } else {
      best.converged = best.converged || next.converged;
    }
    best.evaluations = evals;
    if (gain <= cfg.rel_tolerance * (std::abs(best.value) + 1e-8) && best.converged) break;
  }
  return best;
}

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double x_tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > x_tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

std::optional<double> bisect_root(const std::function<double(double)>& f, double lo, double hi,
                                  double x_tolerance, std::size_t max_iter) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(flo * fhi < 0.0)) return std::nullopt;
  for (std::size_t i = 0; i < max_iter && (hi - lo) > x_tolerance; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<std::vector<double>> numeric_hessian(const Objective& f, std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = 1e-4 * std::max(1.0, std::abs(x[i]));
  std::vector<double> p(x.begin(), x.end());
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    p.assign(x.begin(), x.end());
    p[i] += di;
    p[j] += dj;
    return f(p);
  };
  std::vector<std::vector<double>> hess(n, std::vector<double>(n));
  const double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    hess[i][i] = (at(i, h[i], i, 0.0) - 2.0 * f0 + at(i, -h[i], i, 0.0)) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) - at(i, -h[i], j, h[j]) +
                        at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      hess[i][j] = hess[j][i] = v;
    }
  }
  return hess;
}

}  // namespace tailmix
