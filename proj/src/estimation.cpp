#include "tailmix/estimation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "tailmix/error.hpp"

namespace tailmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool xi_allowed(double xi) { return xi > kXiLower && xi <= kXiUpper; }

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / (n - 1.0))};
}

std::vector<double> sorted_copy(std::span<const double> data) {
  std::vector<double> s(data.begin(), data.end());
  std::sort(s.begin(), s.end());
  return s;
}

void require_finite(std::span<const double> data, const char* where) {
  for (double v : data)
    require(std::isfinite(v), ErrorKind::InvalidArgument,
            std::string(where) + ": data contains non-finite values");
}

// GPD fit on excesses y > 0 (already shifted by the threshold).
GpdFit fit_gpd_excesses(const std::vector<double>& y, double u, const OptimizerConfig& opt) {
  const double n = static_cast<double>(y.size());
  const auto mo = moments(y);
  const double ymax = *std::max_element(y.begin(), y.end());

  auto loglik = [&](double sigma, double xi) {
    if (!(sigma > 0.0) || !std::isfinite(sigma) || !xi_allowed(xi)) return kNegInf;
    double total = 0.0;
    if (std::abs(xi) < kShapeZeroTolerance) {
      for (double v : y) total += v;
      return -n * std::log(sigma) - total / sigma;
    }
    for (double v : y) {
      const double t = xi * v / sigma;
      if (!(t > -1.0)) return kNegInf;
      total += std::log1p(t);
    }
    return -n * std::log(sigma) - (1.0 + 1.0 / xi) * total;
  };

  // Method-of-moments start, pulled back into the feasible region.
  const double r = mo.sd > 0.0 ? (mo.mean * mo.mean) / (mo.sd * mo.sd) : 1.0;
  double xi0 = std::clamp(0.5 * (1.0 - r), -0.45, 0.9);
  double sigma0 = std::max(0.5 * mo.mean * (1.0 + r), 1e-12);
  if (xi0 < 0.0 && ymax >= -sigma0 / xi0) sigma0 = -xi0 * ymax * 1.1;
  if (!std::isfinite(loglik(sigma0, xi0))) {
    xi0 = 0.0;
    sigma0 = std::max(mo.mean, 1e-12);
  }

  const Objective f = [&](std::span<const double> t) { return loglik(std::exp(t[0]), t[1]); };
  const double step[2] = {0.2, 0.1};
  const auto res = nelder_mead_maximize(f, {std::log(sigma0), xi0}, step, opt);
  require(std::isfinite(res.value), ErrorKind::NonConvergence,
          "fit_gpd: no finite likelihood reached");
  require(res.converged, ErrorKind::NonConvergence, "fit_gpd: simplex did not converge");
  GpdFit out;
  out.params = GpdParams(u, std::exp(res.x[0]), res.x[1]);
  out.log_likelihood = res.value;
  out.n_exceed = y.size();
  out.converged = res.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Mixture fitting.

bool positive_support(MixtureKind k) {
  return k == MixtureKind::GammaGpd || k == MixtureKind::WeibullGpd ||
         k == MixtureKind::LognormalGpd;
}

std::size_t bulk_dim(MixtureKind k) { return k == MixtureKind::KernelGpd ? 0 : 2; }

bool bulk_theta_ok(std::span<const double> t) {
  for (double v : t)
    if (!(std::abs(v) < 700.0)) return false;
  return true;
}

BulkFamily bulk_from(MixtureKind k, std::span<const double> t) {
  switch (k) {
    case MixtureKind::GammaGpd: return Gamma(std::exp(t[0]), std::exp(t[1]));
    case MixtureKind::WeibullGpd: return Weibull(std::exp(t[0]), std::exp(t[1]));
    case MixtureKind::LognormalGpd: return LogNormal(t[0], std::exp(t[1]));
    default: return Normal(t[0], std::exp(t[1]));
  }
}

struct BulkStart {
  std::vector<double> theta;
  std::vector<double> step;
};

BulkStart bulk_start(MixtureKind k, std::span<const double> sorted) {
  const auto mo = moments(sorted);
  switch (k) {
    case MixtureKind::GammaGpd: {
      const double v = mo.sd * mo.sd;
      return {{std::log(mo.mean * mo.mean / v), std::log(v / mo.mean)}, {0.2, 0.2}};
    }
    case MixtureKind::WeibullGpd: {
      const double shape = std::clamp(std::pow(mo.sd / mo.mean, -1.086), 0.1, 50.0);
      const double scale = mo.mean / std::tgamma(1.0 + 1.0 / shape);
      return {{std::log(shape), std::log(scale)}, {0.2, 0.2}};
    }
    case MixtureKind::LognormalGpd: {
      std::vector<double> logs(sorted.size());
      std::transform(sorted.begin(), sorted.end(), logs.begin(),
                     [](double v) { return std::log(v); });
      const auto lm = moments(logs);
      return {{lm.mean, std::log(lm.sd)}, {0.2 * lm.sd, 0.2}};
    }
    case MixtureKind::KernelGpd: return {};
    default: return {{mo.mean, std::log(mo.sd)}, {0.2 * mo.sd, 0.2}};
  }
}

// Index ranges of a sorted sample split by the thresholds: lower tail
// [0, lo_end), bulk [lo_end, hi_begin), upper tail [hi_begin, n).
struct Partition {
  std::size_t lo_end = 0;
  std::size_t hi_begin = 0;
};

Partition partition_of(const std::vector<double>& s, std::optional<double> u_lo, double u_hi) {
  Partition p;
  p.lo_end = u_lo ? static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), *u_lo) - s.begin())
                  : 0;
  p.hi_begin = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), u_hi) - s.begin());
  return p;
}

struct Candidate {
  std::optional<std::size_t> lower_index;
  std::size_t upper_index = 0;
  std::optional<double> u_lo;
  double u_hi = 0.0;
  Partition part;
};

class MixtureFitter {
 public:
  MixtureFitter(std::span<const double> data, const MixtureModel& model,
                const ThresholdSearchConfig& cfg, const OptimizerConfig& opt)
      : model_(model), cfg_(cfg), opt_(opt), x_(sorted_copy(data)) {
    if (model_.kind == MixtureKind::KernelGpd) setup_kernel();
  }

  FitReport run();

 private:
  struct Outcome {
    MixtureSpec spec;
    double loglik = kNegInf;
    bool converged = false;
  };

  void setup_kernel();
  std::vector<Candidate> candidates() const;
  std::optional<Outcome> fit_candidate(const Candidate& c);
  std::optional<Outcome> fit_separable(const Candidate& c);
  std::optional<Outcome> fit_joint(const Candidate& c, const std::optional<Outcome>& start);
  std::optional<Outcome> fit_hybrid(std::optional<double> fixed_u);
  double candidate_loglik(const MixtureSpec& spec, const Partition& part) const;
  const std::optional<GpdFit>& upper_tail_fit(const Candidate& c);
  const std::optional<GpdFit>& lower_tail_fit(const Candidate& c);
  MixtureSpec base_spec(const Candidate& c) const;

  MixtureModel model_;
  ThresholdSearchConfig cfg_;
  OptimizerConfig opt_;
  std::vector<double> x_;
  std::optional<Kernel> kernel_;
  std::vector<double> loo_log_density_;
  std::vector<std::optional<std::optional<GpdFit>>> upper_cache_, lower_cache_;
};

void MixtureFitter::setup_kernel() {
  const double lambda = model_.bandwidth ? *model_.bandwidth : kde_cv_bandwidth(x_);
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::InvalidArgument,
          "fit_mixture: kernel bandwidth must be positive");
  kernel_.emplace(x_, lambda);
  // Leave-one-out density of each sample point under the KDE of the rest.
  const std::size_t n = x_.size();
  const double reach = 40.0 * lambda;
  loo_log_density_.assign(n, kNegInf);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = i; j-- > 0;) {
      const double d = x_[i] - x_[j];
      if (d > reach) break;
      s += std_normal_pdf(d / lambda);
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = x_[j] - x_[i];
      if (d > reach) break;
      s += std_normal_pdf(d / lambda);
    }
    if (s > 0.0) loo_log_density_[i] = std::log(s / (static_cast<double>(n - 1) * lambda));
  }
}

std::vector<Candidate> MixtureFitter::candidates() const {
  std::vector<Candidate> out;
  const std::size_t n = x_.size();
  const std::size_t m = cfg_.min_exceedances;
  const bool two_tailed = model_.kind == MixtureKind::Gng;
  const std::size_t n_lower = two_tailed ? cfg_.lower_grid.size() : 1;
  for (std::size_t li = 0; li < n_lower; ++li) {
    for (std::size_t ui = 0; ui < cfg_.upper_grid.size(); ++ui) {
      Candidate c;
      c.upper_index = ui;
      c.u_hi = empirical_quantile(x_, cfg_.upper_grid[ui]);
      if (two_tailed) {
        c.lower_index = li;
        c.u_lo = empirical_quantile(x_, cfg_.lower_grid[li]);
        if (!(*c.u_lo < c.u_hi)) continue;
      }
      c.part = partition_of(x_, c.u_lo, c.u_hi);
      const std::size_t n_up = n - c.part.hi_begin;
      const std::size_t n_bulk = c.part.hi_begin - c.part.lo_end;
      if (n_up < m || n_bulk < m) continue;
      if (two_tailed && c.part.lo_end < m) continue;
      out.push_back(c);
    }
  }
  return out;
}

const std::optional<GpdFit>& MixtureFitter::upper_tail_fit(const Candidate& c) {
  auto& slot = upper_cache_[c.upper_index];
  if (!slot) {
    std::vector<double> y(x_.begin() + static_cast<std::ptrdiff_t>(c.part.hi_begin), x_.end());
    for (double& v : y) v -= c.u_hi;
    try {
      slot = std::optional<GpdFit>(fit_gpd_excesses(y, c.u_hi, opt_));
    } catch (const Error&) {
      slot = std::optional<GpdFit>();
    }
  }
  return *slot;
}

const std::optional<GpdFit>& MixtureFitter::lower_tail_fit(const Candidate& c) {
  auto& slot = lower_cache_[*c.lower_index];
  if (!slot) {
    std::vector<double> y(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(c.part.lo_end));
    for (double& v : y) v = *c.u_lo - v;
    try {
      slot = std::optional<GpdFit>(fit_gpd_excesses(y, *c.u_lo, opt_));
    } catch (const Error&) {
      slot = std::optional<GpdFit>();
    }
  }
  return *slot;
}

double MixtureFitter::candidate_loglik(const MixtureSpec& spec, const Partition& part) const {
  if (spec.kind == MixtureKind::HybridPareto) return mixture_log_likelihood(spec, x_);
  const auto masses = tail_masses(spec);
  const double w = bulk_density_weight(spec);
  if (!(w > 0.0) || !(masses.upper > 0.0) || (spec.lower && !(masses.lower > 0.0)))
    return kNegInf;
  double total = 0.0;
  if (spec.lower) {
    const double lp = std::log(masses.lower);
    const double ul = spec.lower->gpd.u;
    for (std::size_t i = 0; i < part.lo_end; ++i)
      total += lp + gpd_log_pdf(spec.lower->gpd, 2.0 * ul - x_[i]);
  }
  const double lw = std::log(w);
  for (std::size_t i = part.lo_end; i < part.hi_begin; ++i)
    total += lw + (kernel_ ? loo_log_density_[i] : log_pdf(spec.bulk, x_[i]));
  const double lu = std::log(masses.upper);
  for (std::size_t i = part.hi_begin; i < x_.size(); ++i)
    total += lu + gpd_log_pdf(spec.upper.gpd, x_[i]);
  return std::isfinite(total) ? total : kNegInf;
}

MixtureSpec MixtureFitter::base_spec(const Candidate& c) const {
  MixtureSpec spec;
  spec.kind = model_.kind;
  if (kernel_) spec.bulk = *kernel_;
  spec.upper = {GpdParams(c.u_hi, 1.0, 0.1), BulkBased{}};
  if (c.u_lo) spec.lower = TailSpec{GpdParams(*c.u_lo, 1.0, 0.1), BulkBased{}};
  spec.continuity = model_.continuity;
  return spec;
}

std::optional<MixtureFitter::Outcome> MixtureFitter::fit_separable(const Candidate& c) {
  const auto& up = upper_tail_fit(c);
  if (!up) return std::nullopt;
  const std::optional<GpdFit>* lo = nullptr;
  if (c.lower_index) {
    lo = &lower_tail_fit(c);
    if (!lo->has_value()) return std::nullopt;
  }

  const double n = static_cast<double>(x_.size());
  const double n_up = static_cast<double>(x_.size() - c.part.hi_begin);
  const double n_lo = static_cast<double>(c.part.lo_end);
  const double n_bulk = n - n_up - n_lo;
  const bool parameterized = model_.mode == TailMode::Parameterized;

  MixtureSpec spec = base_spec(c);
  spec.upper.gpd = up->params;
  if (lo) spec.lower->gpd = (*lo)->params;
  if (parameterized) {
    spec.upper.mode = Parameterized(n_up / n);
    if (spec.lower) spec.lower->mode = Parameterized(n_lo / n);
  }

  bool converged = up->converged && (!lo || (*lo)->converged);
  if (!kernel_) {
    const auto start = bulk_start(model_.kind, x_);
    const Objective f = [&](std::span<const double> t) {
      if (!bulk_theta_ok(t)) return kNegInf;
      try {
        const BulkFamily b = bulk_from(model_.kind, t);
        double total = 0.0;
        for (std::size_t i = c.part.lo_end; i < c.part.hi_begin; ++i) total += log_pdf(b, x_[i]);
        if (parameterized) {
          const double mass = cdf(b, c.u_hi) - (c.u_lo ? cdf(b, *c.u_lo) : 0.0);
          total -= n_bulk * std::log(mass);
        } else {
          total += n_up * std::log(sf(b, c.u_hi));
          if (c.u_lo) total += n_lo * std::log(cdf(b, *c.u_lo));
        }
        return std::isfinite(total) ? total : kNegInf;
      } catch (const Error&) {
        return kNegInf;
      }
    };
    const auto res = nelder_mead_maximize(f, start.theta, start.step, opt_);
    if (!std::isfinite(res.value)) return std::nullopt;
    converged = converged && res.converged;
    spec.bulk = bulk_from(model_.kind, res.x);
  }

  Outcome o;
  try {
    validate(spec);
  } catch (const Error&) {
    return std::nullopt;
  }
  o.loglik = candidate_loglik(spec, c.part);
  if (!std::isfinite(o.loglik)) return std::nullopt;
  o.spec = std::move(spec);
  o.converged = converged;
  return o;
}

std::optional<MixtureFitter::Outcome> MixtureFitter::fit_joint(const Candidate& c,
                                                               const std::optional<Outcome>& sep) {
  // Parameter vector: bulk (0 or 2), xi_u, [xi_l], [logit phi_u, [logit phi_l]].
  const bool parameterized = model_.mode == TailMode::Parameterized;
  const bool two = c.u_lo.has_value();
  const std::size_t nb = bulk_dim(model_.kind);

  std::vector<double> theta, step;
  if (sep) {
    if (!kernel_) {
      const auto start = bulk_start(model_.kind, x_);
      step = start.step;
      std::visit(
          [&](const auto& b) {
            using B = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<B, Normal>) {
              theta = {b.mean, std::log(b.sd)};
            } else if constexpr (std::is_same_v<B, Gamma> || std::is_same_v<B, Weibull>) {
              theta = {std::log(b.shape), std::log(b.scale)};
            } else if constexpr (std::is_same_v<B, LogNormal>) {
              theta = {b.log_mean, std::log(b.log_sd)};
            }
          },
          sep->spec.bulk);
    }
    theta.push_back(sep->spec.upper.gpd.xi);
    if (two) theta.push_back(sep->spec.lower->gpd.xi);
  } else {
    const auto start = bulk_start(model_.kind, x_);
    theta = start.theta;
    step = start.step;
    theta.push_back(0.1);
    if (two) theta.push_back(0.1);
  }
  step.push_back(0.1);
  if (two) step.push_back(0.1);
  const double n = static_cast<double>(x_.size());
  if (parameterized) {
    const double fu = static_cast<double>(x_.size() - c.part.hi_begin) / n;
    theta.push_back(logit(fu));
    step.push_back(0.2);
    if (two) {
      theta.push_back(logit(static_cast<double>(c.part.lo_end) / n));
      step.push_back(0.2);
    }
  }

  MixtureSpec work = base_spec(c);
  auto build = [&](std::span<const double> t) -> std::optional<MixtureSpec> {
    if (!bulk_theta_ok(t.first(nb))) return std::nullopt;
    const double xi_u = t[nb];
    const double xi_l = two ? t[nb + 1] : 0.0;
    if (!xi_allowed(xi_u) || (two && !xi_allowed(xi_l))) return std::nullopt;
    if (!kernel_) work.bulk = bulk_from(model_.kind, t.first(nb));
    work.upper.gpd.xi = xi_u;
    if (two) work.lower->gpd.xi = xi_l;
    if (parameterized) {
      const std::size_t k = nb + (two ? 2 : 1);
      const double pu = logistic(t[k]);
      const double pl = two ? logistic(t[k + 1]) : 0.0;
      if (!(pu > 0.0 && pu < 1.0) || (two && !(pl > 0.0 && pu + pl < 1.0))) return std::nullopt;
      work.upper.mode = Parameterized(pu);
      if (two) work.lower->mode = Parameterized(pl);
    }
    return solve_continuity(work);
  };

  const Objective f = [&](std::span<const double> t) {
    try {
      const auto spec = build(t);
      if (!spec) return kNegInf;
      if (!(spec->upper.gpd.u < support_upper(spec->bulk))) return kNegInf;
      return candidate_loglik(*spec, c.part);
    } catch (const Error&) {
      return kNegInf;
    }
  };
  const auto res = nelder_mead_maximize(f, theta, step, opt_);
  if (!std::isfinite(res.value)) return std::nullopt;

  Outcome o;
  try {
    auto spec = build(res.x);
    if (!spec) return std::nullopt;
    validate(*spec);
    o.spec = std::move(*spec);
  } catch (const Error&) {
    return std::nullopt;
  }
  o.loglik = candidate_loglik(o.spec, c.part);
  if (!std::isfinite(o.loglik)) return std::nullopt;
  o.converged = res.converged;
  return o;
}

std::optional<MixtureFitter::Outcome> MixtureFitter::fit_hybrid(std::optional<double> fixed_u) {
  const auto mo = moments(x_);
  auto build = [&](std::span<const double> t) {
    return fixed_u ? make_hybrid_at(t[0], std::exp(t[1]), t[2], *fixed_u)
                   : make_hybrid(t[0], std::exp(t[1]), t[2]);
  };
  const Objective f = [&](std::span<const double> t) {
    if (!xi_allowed(t[2]) || !(std::abs(t[1]) < 700.0)) return kNegInf;
    try {
      return mixture_log_likelihood(build(t), x_);
    } catch (const Error&) {
      return kNegInf;
    }
  };
  const double step[3] = {0.2 * mo.sd, 0.2, 0.1};
  std::optional<OptimizeResult> best;
  // Two shape starts guard against the light/heavy tail local optima.
  for (double xi0 : {0.0, 0.3}) {
    auto res = nelder_mead_maximize(f, {mo.mean, std::log(mo.sd), xi0}, step, opt_);
    if (!best || res.value > best->value) best = std::move(res);
  }
  if (!std::isfinite(best->value)) return std::nullopt;
  Outcome o;
  try {
    o.spec = build(best->x);
  } catch (const Error&) {
    return std::nullopt;
  }
  o.loglik = mixture_log_likelihood(o.spec, x_);
  if (!std::isfinite(o.loglik)) return std::nullopt;
  o.converged = best->converged;
  return o;
}

std::optional<MixtureFitter::Outcome> MixtureFitter::fit_candidate(const Candidate& c) {
  if (model_.kind == MixtureKind::HybridPareto) return fit_hybrid(c.u_hi);
  auto sep = fit_separable(c);
  if (!model_.continuity) return sep;
  return fit_joint(c, sep);
}

FitReport MixtureFitter::run() {
  const auto t0 = std::chrono::steady_clock::now();
  FitReport report;
  std::optional<Outcome> best;
  bool any_converged = false;

  auto consider = [&](std::optional<double> u_lo, double u_hi, std::optional<Outcome> o) {
    if (!o) return;
    report.profile.push_back({u_lo, u_hi, o->loglik});
    any_converged = any_converged || o->converged;
    if (!best || o->loglik > best->loglik) best = std::move(o);
  };

  if (model_.kind == MixtureKind::HybridPareto && model_.smooth_junction) {
    auto o = fit_hybrid(std::nullopt);
    if (o) consider(std::nullopt, o->spec.upper.gpd.u, std::move(o));
  } else {
    upper_cache_.assign(cfg_.upper_grid.size(), std::nullopt);
    lower_cache_.assign(cfg_.lower_grid.size(), std::nullopt);
    for (const auto& c : candidates()) consider(c.u_lo, c.u_hi, fit_candidate(c));
  }

  require(best.has_value(), ErrorKind::AllCandidatesInfeasible,
          "fit_mixture: no feasible threshold candidate");
  require(any_converged, ErrorKind::NonConvergence,
          "fit_mixture: inner optimizer did not converge at any candidate");

  FittedMixture& fm = report.best;
  fm.spec = std::move(best->spec);
  fm.log_likelihood = best->loglik;
  fm.converged = best->converged;
  const double u = fm.spec.upper.gpd.u;
  fm.n_exceed_upper = static_cast<std::size_t>(
      x_.end() - std::upper_bound(x_.begin(), x_.end(), u));
  if (fm.spec.lower)
    fm.n_exceed_lower = static_cast<std::size_t>(
        std::lower_bound(x_.begin(), x_.end(), fm.spec.lower->gpd.u) - x_.begin());
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<double> probability_grid(double from, double to, double by) {
  std::vector<double> g;
  const auto steps = static_cast<int>(std::lround((to - from) / by));
  for (int k = 0; k <= steps; ++k) g.push_back(from + by * k);
  return g;
}

}  // namespace

double empirical_quantile(std::span<const double> sorted, double p) {
  require(!sorted.empty(), ErrorKind::EmptySample, "empirical_quantile: empty sample");
  require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidArgument,
          "empirical_quantile: p must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double gpd_log_likelihood(std::span<const double> data, const GpdParams& p) {
  double total = 0.0;
  for (double x : data)
    if (x > p.u) total += gpd_log_pdf(p, x);
  return std::isfinite(total) ? total : kNegInf;
}

GpdFit fit_gpd(std::span<const double> data, double u, std::size_t min_exceedances,
               const OptimizerConfig& opt) {
  validate(opt);
  require(std::isfinite(u), ErrorKind::InvalidArgument, "fit_gpd: threshold must be finite");
  require_finite(data, "fit_gpd");
  std::vector<double> y;
  for (double x : data)
    if (x > u) y.push_back(x - u);
  require(y.size() >= std::max<std::size_t>(min_exceedances, 2), ErrorKind::TooFewExceedances,
          "fit_gpd: " + std::to_string(y.size()) + " exceedances, need " +
              std::to_string(min_exceedances));
  return fit_gpd_excesses(y, u, opt);
}

ThresholdSearchConfig::ThresholdSearchConfig()
    : upper_grid(probability_grid(0.50, 0.95, 0.025)),
      lower_grid(probability_grid(0.05, 0.50, 0.025)) {}

void validate(const ThresholdSearchConfig& cfg) {
  auto check = [](const std::vector<double>& g, const char* name) {
    require(!g.empty(), ErrorKind::InvalidArgument, std::string(name) + " grid is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
      require(g[i] > 0.0 && g[i] < 1.0, ErrorKind::InvalidArgument,
              std::string(name) + " grid values must lie in (0, 1)");
      if (i > 0)
        require(g[i] > g[i - 1], ErrorKind::InvalidArgument,
                std::string(name) + " grid must be strictly increasing");
    }
  };
  check(cfg.upper_grid, "upper");
  check(cfg.lower_grid, "lower");
  require(cfg.min_exceedances >= 2, ErrorKind::InvalidArgument, "min_exceedances must be >= 2");
}

FitReport fit_mixture(std::span<const double> data, const MixtureModel& model,
                      const ThresholdSearchConfig& cfg, const OptimizerConfig& opt) {
  validate(cfg);
  validate(opt);
  require_finite(data, "fit_mixture");
  require(data.size() >= 50, ErrorKind::InvalidArgument,
          "fit_mixture: need at least 50 observations");
  if (positive_support(model.kind))
    for (double v : data)
      require(v > 0.0, ErrorKind::SupportViolation,
              std::string("fit_mixture: ") + std::string(to_string(model.kind)) +
                  " requires positive data");
  if (model.kind == MixtureKind::HybridPareto)
    require(model.mode == TailMode::BulkBased, ErrorKind::InvalidArgument,
            "fit_mixture: hybrid Pareto has no parameterized tail mode");
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  require(*lo < *hi, ErrorKind::AllCandidatesInfeasible,
          "fit_mixture: zero-variance sample leaves no feasible threshold");
  MixtureFitter fitter(data, model, cfg, opt);
  return fitter.run();
}

GevFit fit_gev_blocks(std::span<const double> data, std::size_t block_size,
                      const OptimizerConfig& opt) {
  validate(opt);
  require(block_size >= 1, ErrorKind::InvalidArgument, "fit_gev_blocks: block_size must be >= 1");
  require_finite(data, "fit_gev_blocks");
  const std::size_t blocks = data.size() / block_size;
  require(blocks >= 20, ErrorKind::TooFewBlocks,
          "fit_gev_blocks: " + std::to_string(blocks) + " complete blocks, need 20");
  std::vector<double> maxima(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto first = data.begin() + static_cast<std::ptrdiff_t>(b * block_size);
    maxima[b] = *std::max_element(first, first + static_cast<std::ptrdiff_t>(block_size));
  }
  const auto mo = moments(maxima);
  require(mo.sd > 0.0, ErrorKind::DegenerateSample, "fit_gev_blocks: block maxima are constant");

  const Objective f = [&](std::span<const double> t) {
    if (!xi_allowed(t[2]) || !(std::abs(t[1]) < 700.0)) return kNegInf;
    const GevParams p(t[0], std::exp(t[1]), t[2]);
    double total = 0.0;
    for (double m : maxima) total += gev_log_pdf(p, m);
    return std::isfinite(total) ? total : kNegInf;
  };
  // Gumbel moment start.
  const double sigma0 = mo.sd * std::sqrt(6.0) / std::numbers::pi;
  const double mu0 = mo.mean - 0.5772156649015329 * sigma0;
  double best_value = kNegInf;
  OptimizeResult best;
  for (double xi0 : {0.1, -0.1}) {
    const double step[3] = {0.2 * sigma0, 0.2, 0.1};
    auto res = nelder_mead_maximize(f, {mu0, std::log(sigma0), xi0}, step, opt);
    if (res.value > best_value) {
      best_value = res.value;
      best = std::move(res);
    }
  }
  require(std::isfinite(best_value), ErrorKind::NonConvergence,
          "fit_gev_blocks: no finite likelihood reached");
  require(best.converged, ErrorKind::NonConvergence, "fit_gev_blocks: simplex did not converge");
  GevFit out;
  out.params = GevParams(best.x[0], std::exp(best.x[1]), best.x[2]);
  out.log_likelihood = best.value;
  out.n_blocks = blocks;
  out.converged = true;
  return out;
}

double kde_cv_bandwidth(std::span<const double> data) {
  require(data.size() >= 10, ErrorKind::InvalidArgument, "kde_cv_bandwidth: need n >= 10");
  require_finite(data, "kde_cv_bandwidth");
  const auto mo = moments(data);
  require(mo.sd > 0.0, ErrorKind::DegenerateSample, "kde_cv_bandwidth: zero-variance sample");
  const auto x = sorted_copy(data);
  const std::size_t n = x.size();
  const double s = mo.sd;

  // Objective in t = log(lambda / s), dropping terms constant in t, so that
  // rescaling the data leaves it bit-identical.
  auto objective = [&](double t) {
    const double lambda = s * std::exp(t);
    std::vector<double> acc(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double z = (x[j] - x[i]) / lambda;
        const double k = std::exp(-0.5 * z * z);
        acc[i] += k;
        acc[j] += k;
      }
    double total = 0.0;
    for (double a : acc) total += a > 0.0 ? std::log(a) : -1e300;
    return total - static_cast<double>(n) * t;
  };
  const double t = golden_section_maximize(objective, std::log(1e-3), std::log(10.0), 1e-6);
  return s * std::exp(t);
}

double kde_reference_bandwidth(std::span<const double> data) {
  require(data.size() >= 2, ErrorKind::InvalidArgument, "kde_reference_bandwidth: need n >= 2");
  const auto mo = moments(data);
  require(mo.sd > 0.0, ErrorKind::DegenerateSample, "kde_reference_bandwidth: zero variance");
  return 1.06 * mo.sd * std::pow(static_cast<double>(data.size()), -0.2);
}

}  // namespace tailmix
