#include "tailmix/mixture.hpp"

#include <cmath>
#include <limits>

#include "tailmix/error.hpp"
#include "tailmix/optimize.hpp"
#include "tailmix/random.hpp"

namespace tailmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const Normal& normal_bulk(const MixtureSpec& spec) { return std::get<Normal>(spec.bulk); }

// Quantities shared by every evaluation of a spliced (non-hybrid) spec.
struct Layout {
  bool has_lower = false;
  double u_lo = -std::numeric_limits<double>::infinity();
  double u_hi = 0.0;
  double h_lo = 0.0;     // H(u_lo)
  double h_hi = 0.0;     // H(u_hi)
  double phi_lo = 0.0;   // lower tail mass
  double phi_hi = 0.0;   // upper tail mass
  double weight = 1.0;   // bulk density multiplier
};

Layout layout_of(const MixtureSpec& spec) {
  Layout l;
  l.u_hi = spec.upper.gpd.u;
  l.h_hi = cdf(spec.bulk, l.u_hi);
  l.phi_hi = is_bulk_based(spec.upper.mode) ? sf(spec.bulk, l.u_hi)
                                            : std::get<Parameterized>(spec.upper.mode).phi;
  bool all_bulk_based = is_bulk_based(spec.upper.mode);
  if (spec.lower) {
    l.has_lower = true;
    l.u_lo = spec.lower->gpd.u;
    l.h_lo = cdf(spec.bulk, l.u_lo);
    l.phi_lo = is_bulk_based(spec.lower->mode) ? l.h_lo
                                               : std::get<Parameterized>(spec.lower->mode).phi;
    all_bulk_based = all_bulk_based && is_bulk_based(spec.lower->mode);
  }
  // Bulk-based tails leave H untouched, so keep the weight exactly 1.
  if (!all_bulk_based) l.weight = (1.0 - l.phi_lo - l.phi_hi) / (l.h_hi - l.h_lo);
  return l;
}

// Reflected lower-tail excess.
double lower_excess_point(const TailSpec& lower, double x) {
  return 2.0 * lower.gpd.u - x;
}

double hybrid_gamma(const MixtureSpec& spec) {
  const auto& n = normal_bulk(spec);
  return 1.0 + std_normal_cdf((spec.upper.gpd.u - n.mean) / n.sd);
}

double hybrid_cdf(const MixtureSpec& spec, double x) {
  const auto& n = normal_bulk(spec);
  const double gamma = hybrid_gamma(spec);
  const double u = spec.upper.gpd.u;
  if (x <= u) return std_normal_cdf((x - n.mean) / n.sd) / gamma;
  return (gamma - gpd_sf(spec.upper.gpd, x)) / gamma;
}

double hybrid_sf(const MixtureSpec& spec, double x) {
  const double u = spec.upper.gpd.u;
  if (x > u) return gpd_sf(spec.upper.gpd, x) / hybrid_gamma(spec);
  return 1.0 - hybrid_cdf(spec, x);
}

double hybrid_pdf(const MixtureSpec& spec, double x) {
  const auto& n = normal_bulk(spec);
  const double gamma = hybrid_gamma(spec);
  if (x <= spec.upper.gpd.u) return std_normal_pdf((x - n.mean) / n.sd) / (n.sd * gamma);
  return gpd_pdf(spec.upper.gpd, x) / gamma;
}

double hybrid_quantile_upper(const MixtureSpec& spec, double q) {
  const auto& n = normal_bulk(spec);
  const double gamma = hybrid_gamma(spec);
  const double tail_mass = 1.0 / gamma;
  if (q < tail_mass) return gpd_quantile_upper(spec.upper.gpd, q * gamma);
  const double p = 1.0 - q;
  return n.mean + n.sd * std_normal_quantile(p * gamma);
}

double hybrid_quantile(const MixtureSpec& spec, double p) {
  const auto& n = normal_bulk(spec);
  const double gamma = hybrid_gamma(spec);
  const double body_mass = (gamma - 1.0) / gamma;
  if (p <= body_mass) return n.mean + n.sd * std_normal_quantile(p * gamma);
  return gpd_quantile_upper(spec.upper.gpd, (1.0 - p) * gamma);
}

double spliced_cdf(const MixtureSpec& spec, const Layout& l, double x) {
  if (l.has_lower && x < l.u_lo)
    return l.phi_lo * gpd_sf(spec.lower->gpd, lower_excess_point(*spec.lower, x));
  if (x <= l.u_hi) {
    if (l.weight == 1.0 && !l.has_lower) return cdf(spec.bulk, x);
    return l.phi_lo + l.weight * (cdf(spec.bulk, x) - l.h_lo);
  }
  return 1.0 - l.phi_hi * gpd_sf(spec.upper.gpd, x);
}

double spliced_sf(const MixtureSpec& spec, const Layout& l, double x) {
  if (x > l.u_hi) return l.phi_hi * gpd_sf(spec.upper.gpd, x);
  if (!l.has_lower && l.weight == 1.0) return sf(spec.bulk, x);
  return 1.0 - spliced_cdf(spec, l, x);
}

double spliced_pdf(const MixtureSpec& spec, const Layout& l, double x) {
  if (l.has_lower && x < l.u_lo)
    return l.phi_lo * gpd_pdf(spec.lower->gpd, lower_excess_point(*spec.lower, x));
  if (x <= l.u_hi) return l.weight * pdf(spec.bulk, x);
  return l.phi_hi * gpd_pdf(spec.upper.gpd, x);
}

double spliced_log_pdf(const MixtureSpec& spec, const Layout& l, double x) {
  if (l.has_lower && x < l.u_lo)
    return std::log(l.phi_lo) + gpd_log_pdf(spec.lower->gpd, lower_excess_point(*spec.lower, x));
  if (x <= l.u_hi) return std::log(l.weight) + log_pdf(spec.bulk, x);
  return std::log(l.phi_hi) + gpd_log_pdf(spec.upper.gpd, x);
}

// Bulk-region inversion: closed-form through the bulk quantile, then a
// bracketed bisection if the round trip misses.
double spliced_bulk_quantile(const MixtureSpec& spec, const Layout& l, double p) {
  const double target = l.h_lo + (p - l.phi_lo) / l.weight;
  double x;
  if (target > 0.0 && target < 1.0) {
    x = quantile(spec.bulk, target);
  } else {
    x = target <= 0.0 ? l.u_lo : l.u_hi;
  }
  if (l.has_lower) x = std::max(x, l.u_lo);
  x = std::min(x, l.u_hi);
  if (std::abs(spliced_cdf(spec, l, x) - p) <= 1e-10) return x;

  double lo = l.has_lower ? l.u_lo : x;
  double width = std::max(1.0, std::abs(x));
  for (int i = 0; i < 200 && spliced_cdf(spec, l, lo) > p; ++i) {
    lo -= width;
    width *= 2.0;
  }
  auto g = [&](double v) { return spliced_cdf(spec, l, v) - p; };
  const auto root = bisect_root(g, lo, l.u_hi, 0.0, 2000);
  require(root.has_value(), ErrorKind::NonConvergence,
          "mixture_quantile: could not bracket the bulk inverse");
  return *root;
}

void check_probability(double p, const char* where) {
  require(p > 0.0 && p < 1.0, ErrorKind::InvalidArgument,
          std::string(where) + ": probability must lie in (0, 1)");
}

}  // namespace

Parameterized::Parameterized(double p) : phi(p) {
  require(p > 0.0 && p < 1.0, ErrorKind::InvalidArgument, "tail fraction phi must lie in (0, 1)");
}

std::string_view to_string(MixtureKind kind) noexcept {
  switch (kind) {
    case MixtureKind::NormGpd: return "normGPD";
    case MixtureKind::GammaGpd: return "gammaGPD";
    case MixtureKind::WeibullGpd: return "weibullGPD";
    case MixtureKind::LognormalGpd: return "lognormalGPD";
    case MixtureKind::KernelGpd: return "kernelGPD";
    case MixtureKind::HybridPareto: return "hybridPareto";
    case MixtureKind::Gng: return "GNG";
  }
  return "unknown";
}

void validate(const MixtureSpec& spec) {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  const bool bulk_ok = [&] {
    switch (spec.kind) {
      case MixtureKind::NormGpd:
      case MixtureKind::HybridPareto:
      case MixtureKind::Gng: return std::holds_alternative<Normal>(spec.bulk);
      case MixtureKind::GammaGpd: return std::holds_alternative<Gamma>(spec.bulk);
      case MixtureKind::WeibullGpd: return std::holds_alternative<Weibull>(spec.bulk);
      case MixtureKind::LognormalGpd: return std::holds_alternative<LogNormal>(spec.bulk);
      case MixtureKind::KernelGpd: return std::holds_alternative<Kernel>(spec.bulk);
    }
    return false;
  }();
  if (!bulk_ok) bad(std::string(to_string(spec.kind)) + ": bulk family mismatch");

  const double u = spec.upper.gpd.u;
  if (!(u > support_lower(spec.bulk) && u < support_upper(spec.bulk)))
    bad("upper threshold must lie strictly inside the bulk support");
  if (!(spec.upper.gpd.sigma_u > 0.0)) bad("upper tail scale must be positive");

  if (spec.kind == MixtureKind::Gng) {
    if (!spec.lower) bad("GNG requires a lower tail");
    if (!(spec.lower->gpd.u < u)) bad("GNG requires lower threshold < upper threshold");
    if (!(spec.lower->gpd.sigma_u > 0.0)) bad("lower tail scale must be positive");
  } else if (spec.lower) {
    bad(std::string(to_string(spec.kind)) + " has no lower tail");
  }

  if (spec.kind == MixtureKind::HybridPareto) {
    if (spec.upper.gpd.xi <= -1.0) bad("hybrid Pareto requires xi > -1");
    if (spec.smooth_junction) {
      const auto& n = normal_bulk(spec);
      const auto j = hybrid_junction(n.mean, n.sd, spec.upper.gpd.xi);
      if (std::abs(j.u - u) > 1e-9 * (1.0 + std::abs(u)))
        bad("hybrid Pareto threshold does not match its junction");
    }
    return;
  }

  const auto m = tail_masses(spec);
  if (!(m.upper > 0.0 && m.upper < 1.0)) bad("upper tail mass must lie in (0, 1)");
  if (spec.lower && !(m.lower > 0.0 && m.lower + m.upper < 1.0))
    bad("tail masses must be positive and sum below 1");
  if (spec.continuity) {
    const auto solved = solve_continuity(spec);
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-8 * std::max(1.0, b); };
    if (!close(spec.upper.gpd.sigma_u, solved.upper.gpd.sigma_u) ||
        (spec.lower && !close(spec.lower->gpd.sigma_u, solved.lower->gpd.sigma_u)))
      bad("continuity flag set but tail scale does not satisfy the continuity identity");
  }
}

MixtureSpec make_single_tail(MixtureKind kind, BulkFamily bulk, TailSpec upper, bool continuity) {
  MixtureSpec spec;
  spec.kind = kind;
  spec.bulk = std::move(bulk);
  spec.upper = upper;
  spec.continuity = continuity;
  if (continuity) spec = solve_continuity(spec);
  validate(spec);
  return spec;
}

MixtureSpec make_gng(double mean, double sd, TailSpec lower, TailSpec upper, bool continuity) {
  MixtureSpec spec;
  spec.kind = MixtureKind::Gng;
  spec.bulk = Normal(mean, sd);
  spec.upper = upper;
  spec.lower = lower;
  spec.continuity = continuity;
  if (continuity) spec = solve_continuity(spec);
  validate(spec);
  return spec;
}

MixtureSpec make_hybrid(double mean, double sd, double xi) {
  const auto j = hybrid_junction(mean, sd, xi);
  MixtureSpec spec;
  spec.kind = MixtureKind::HybridPareto;
  spec.bulk = Normal(mean, sd);
  spec.upper = {GpdParams(j.u, j.sigma_u, xi), BulkBased{}};
  spec.continuity = true;
  spec.smooth_junction = true;
  return spec;
}

MixtureSpec make_hybrid_at(double mean, double sd, double xi, double u) {
  MixtureSpec spec;
  spec.kind = MixtureKind::HybridPareto;
  spec.bulk = Normal(mean, sd);
  spec.upper = {GpdParams(u, 1.0, xi), BulkBased{}};
  spec.continuity = true;
  spec.smooth_junction = false;
  spec = solve_continuity(spec);
  validate(spec);
  return spec;
}

TailMasses tail_masses(const MixtureSpec& spec) {
  if (spec.kind == MixtureKind::HybridPareto) return {0.0, 1.0 / hybrid_gamma(spec)};
  const auto l = layout_of(spec);
  return {l.phi_lo, l.phi_hi};
}

double bulk_density_weight(const MixtureSpec& spec) { return layout_of(spec).weight; }

double mixture_cdf(const MixtureSpec& spec, double x) {
  if (spec.kind == MixtureKind::HybridPareto) return hybrid_cdf(spec, x);
  return spliced_cdf(spec, layout_of(spec), x);
}

double mixture_sf(const MixtureSpec& spec, double x) {
  if (spec.kind == MixtureKind::HybridPareto) return hybrid_sf(spec, x);
  return spliced_sf(spec, layout_of(spec), x);
}

double mixture_pdf(const MixtureSpec& spec, double x) {
  if (spec.kind == MixtureKind::HybridPareto) return hybrid_pdf(spec, x);
  return spliced_pdf(spec, layout_of(spec), x);
}

double mixture_quantile(const MixtureSpec& spec, double p) {
  check_probability(p, "mixture_quantile");
  if (spec.kind == MixtureKind::HybridPareto) return hybrid_quantile(spec, p);
  const auto l = layout_of(spec);
  if (l.has_lower && p < l.phi_lo)
    return 2.0 * l.u_lo - gpd_quantile_upper(spec.lower->gpd, p / l.phi_lo);
  const double q = 1.0 - p;
  if (q < l.phi_hi) return gpd_quantile_upper(spec.upper.gpd, q / l.phi_hi);
  return spliced_bulk_quantile(spec, l, p);
}

double mixture_quantile_upper(const MixtureSpec& spec, double q) {
  check_probability(q, "mixture_quantile_upper");
  if (spec.kind == MixtureKind::HybridPareto) return hybrid_quantile_upper(spec, q);
  const auto l = layout_of(spec);
  if (q < l.phi_hi) return gpd_quantile_upper(spec.upper.gpd, q / l.phi_hi);
  return mixture_quantile(spec, 1.0 - q);
}

double mixture_log_likelihood(const MixtureSpec& spec, std::span<const double> data) {
  double total = 0.0;
  if (spec.kind == MixtureKind::HybridPareto) {
    for (double x : data) {
      const double d = hybrid_pdf(spec, x);
      if (!(d > 0.0)) return kNegInf;
      total += std::log(d);
    }
    return total;
  }
  const auto l = layout_of(spec);
  for (double x : data) {
    const double lp = spliced_log_pdf(spec, l, x);
    if (!std::isfinite(lp)) return kNegInf;
    total += lp;
  }
  return total;
}

std::vector<double> sample(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  require(n >= 1, ErrorKind::InvalidArgument, "sample: n must be at least 1");
  UniformStream uniform(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(mixture_quantile(spec, uniform()));
  return out;
}

MixtureSpec solve_continuity(const MixtureSpec& spec) {
  require(spec.continuity, ErrorKind::InvalidArgument,
          "solve_continuity: spec does not request continuity");
  MixtureSpec out = spec;

  if (spec.kind == MixtureKind::HybridPareto) {
    const auto& n = normal_bulk(spec);
    if (spec.smooth_junction) return make_hybrid(n.mean, n.sd, spec.upper.gpd.xi);
    const double f_u = std_normal_pdf((spec.upper.gpd.u - n.mean) / n.sd) / n.sd;
    require(f_u > 0.0 && std::isfinite(1.0 / f_u), ErrorKind::ContinuityUnsolvable,
            "bulk density vanishes at the hybrid threshold");
    out.upper.gpd = GpdParams(spec.upper.gpd.u, 1.0 / f_u, spec.upper.gpd.xi);
    return out;
  }

  const auto l = layout_of(spec);
  auto scale_for = [&](double u, double mass) {
    const double h = pdf(spec.bulk, u);
    const double bulk_side = l.weight * h;
    require(bulk_side > 0.0 && std::isfinite(mass / bulk_side), ErrorKind::ContinuityUnsolvable,
            "bulk density is zero at the threshold");
    return mass / bulk_side;
  };
  out.upper.gpd = GpdParams(l.u_hi, scale_for(l.u_hi, l.phi_hi), spec.upper.gpd.xi);
  if (spec.lower)
    out.lower->gpd = GpdParams(l.u_lo, scale_for(l.u_lo, l.phi_lo), spec.lower->gpd.xi);
  return out;
}

HybridJunction hybrid_junction(double mean, double sd, double xi) {
  require(sd > 0.0 && std::isfinite(sd), ErrorKind::InvalidArgument,
          "hybrid_junction: sd must be positive");
  require(xi > -1.0 && std::isfinite(xi), ErrorKind::InvalidArgument,
          "hybrid_junction: xi must exceed -1");
  auto g = [xi](double z) { return z - (1.0 + xi) * std_normal_pdf(z); };
  const auto z = bisect_root(g, 0.0, 10.0, 0.0, 2000);
  require(z.has_value() && *z > 0.0, ErrorKind::NoJunction,
          "hybrid_junction: no sign change on (0, 10]");
  return {mean + sd * *z, sd / std_normal_pdf(*z), 1.0 + std_normal_cdf(*z)};
}

std::vector<std::pair<std::string, double>> named_parameters(const MixtureSpec& spec) {
  std::vector<std::pair<std::string, double>> out;
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, Normal>) {
          out.emplace_back("mean", b.mean);
          out.emplace_back("sd", b.sd);
        } else if constexpr (std::is_same_v<B, LogNormal>) {
          out.emplace_back("log_mean", b.log_mean);
          out.emplace_back("log_sd", b.log_sd);
        } else if constexpr (std::is_same_v<B, Gamma> || std::is_same_v<B, Weibull> ||
                             std::is_same_v<B, ReverseWeibull>) {
          out.emplace_back("shape", b.shape);
          out.emplace_back("scale", b.scale);
        } else if constexpr (std::is_same_v<B, Gumbel>) {
          out.emplace_back("location", b.location);
          out.emplace_back("scale", b.scale);
        } else if constexpr (std::is_same_v<B, StudentT>) {
          out.emplace_back("df", b.df);
          out.emplace_back("location", b.location);
        } else {
          out.emplace_back("bandwidth", b.bandwidth);
        }
      },
      spec.bulk);
  const auto masses = tail_masses(spec);
  if (spec.lower) {
    out.emplace_back("u_lower", spec.lower->gpd.u);
    out.emplace_back("sigma_lower", spec.lower->gpd.sigma_u);
    out.emplace_back("xi_lower", spec.lower->gpd.xi);
    out.emplace_back("phi_lower", masses.lower);
  }
  out.emplace_back("u", spec.upper.gpd.u);
  out.emplace_back("sigma_u", spec.upper.gpd.sigma_u);
  out.emplace_back("xi", spec.upper.gpd.xi);
  out.emplace_back("phi_u", masses.upper);
  if (spec.kind == MixtureKind::HybridPareto) out.emplace_back("gamma", hybrid_gamma(spec));
  return out;
}

}  // namespace tailmix
