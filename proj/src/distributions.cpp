#include "tailmix/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "tailmix/error.hpp"
#include "tailmix/random.hpp"

namespace tailmix {

namespace bm = boost::math;

namespace {

using Policy = bm::policies::policy<bm::policies::promote_double<false>>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool shape_is_zero(double xi) { return std::abs(xi) < kShapeZeroTolerance; }

void check_probability(double p, const char* where) {
  require(p > 0.0 && p < 1.0, ErrorKind::InvalidArgument,
          std::string(where) + ": probability must lie in (0, 1)");
}

void check_positive(double v, const char* what) {
  require(std::isfinite(v) && v > 0.0, ErrorKind::InvalidArgument,
          std::string(what) + " must be positive and finite");
}

void check_finite(double v, const char* what) {
  require(std::isfinite(v), ErrorKind::InvalidArgument, std::string(what) + " must be finite");
}

// log of the GPD/GEV survival-type term (1 + xi*y)^(-1/xi), for y >= 0
// inside the support.
double log_tail_term(double xi, double y) {
  if (shape_is_zero(xi)) return -y;
  return -std::log1p(xi * y) / xi;
}

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

bm::normal_distribution<double, Policy> boost_dist(const Normal& d) { return {d.mean, d.sd}; }
bm::lognormal_distribution<double, Policy> boost_dist(const LogNormal& d) {
  return {d.log_mean, d.log_sd};
}
bm::gamma_distribution<double, Policy> boost_dist(const Gamma& d) { return {d.shape, d.scale}; }
bm::students_t_distribution<double, Policy> boost_dist(const StudentT& d) { return {d.df}; }

// Kernel helpers. Points farther than this many bandwidths contribute
// exactly 0 or 1 to the CDF in double precision.
constexpr double kKernelReach = 40.0;

double kernel_cdf(const Kernel& k, double x) {
  const auto& pts = k.points;
  const double lam = k.bandwidth;
  // Points below x - reach*lam contribute 1 each.
  const auto lo = std::lower_bound(pts.begin(), pts.end(), x - kKernelReach * lam);
  const auto hi = std::upper_bound(pts.begin(), pts.end(), x + kKernelReach * lam);
  double sum = static_cast<double>(lo - pts.begin());
  for (auto it = lo; it != hi; ++it) sum += std_normal_cdf((x - *it) / lam);
  return sum / static_cast<double>(pts.size());
}

double kernel_sf(const Kernel& k, double x) {
  const auto& pts = k.points;
  const double lam = k.bandwidth;
  const auto lo = std::lower_bound(pts.begin(), pts.end(), x - kKernelReach * lam);
  const auto hi = std::upper_bound(pts.begin(), pts.end(), x + kKernelReach * lam);
  double sum = static_cast<double>(pts.end() - hi);
  for (auto it = lo; it != hi; ++it) sum += std_normal_cdf((*it - x) / lam);
  return sum / static_cast<double>(pts.size());
}

double kernel_pdf(const Kernel& k, double x) {
  const auto& pts = k.points;
  const double lam = k.bandwidth;
  const auto lo = std::lower_bound(pts.begin(), pts.end(), x - kKernelReach * lam);
  const auto hi = std::upper_bound(pts.begin(), pts.end(), x + kKernelReach * lam);
  double sum = 0.0;
  for (auto it = lo; it != hi; ++it) sum += std_normal_pdf((x - *it) / lam);
  return sum / (static_cast<double>(pts.size()) * lam);
}

// Monotone inversion of a kernel CDF (or survival function when `upper`).
double kernel_invert(const Kernel& k, double target, bool upper) {
  const double step = kKernelReach * k.bandwidth;
  // True when x lies left of the solution.
  auto left_of = [&](double x) {
    return upper ? kernel_sf(k, x) > target : kernel_cdf(k, x) < target;
  };
  double lo = k.points.front() - step;
  double hi = k.points.back() + step;
  for (int i = 0; i < 64 && !left_of(lo); ++i) lo -= step;
  for (int i = 0; i < 64 && left_of(hi); ++i) hi += step;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (left_of(mid) ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  const double err = std::abs((upper ? kernel_sf(k, x) : kernel_cdf(k, x)) - target);
  require(err <= 1e-10 || err <= 1e-8 * target, ErrorKind::NonConvergence,
          "kernel quantile inversion did not reach tolerance");
  return x;
}

template <class Draw>
std::vector<double> draw_n(std::size_t n, std::uint64_t seed, Draw&& draw) {
  require(n >= 1, ErrorKind::InvalidArgument, "sample: n must be at least 1");
  UniformStream uniform(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(uniform()));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- helpers

double std_normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double std_normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_quantile(double p) {
  check_probability(p, "std_normal_quantile");
  return bm::quantile(bm::normal_distribution<double, Policy>(0.0, 1.0), p);
}

// -------------------------------------------------------------------- GPD

GpdParams::GpdParams(double u_, double sigma_u_, double xi_) : u(u_), sigma_u(sigma_u_), xi(xi_) {
  check_finite(u, "GPD threshold");
  check_positive(sigma_u, "GPD scale");
  check_finite(xi, "GPD shape");
}

double GpdParams::upper_endpoint() const noexcept {
  if (xi >= 0.0 || shape_is_zero(xi)) return kInf;
  return u - sigma_u / xi;
}

double gpd_sf(const GpdParams& p, double x) noexcept {
  if (x <= p.u) return 1.0;
  if (x >= p.upper_endpoint()) return 0.0;
  return std::exp(log_tail_term(p.xi, (x - p.u) / p.sigma_u));
}

double gpd_cdf(const GpdParams& p, double x) noexcept {
  if (x <= p.u) return 0.0;
  if (x >= p.upper_endpoint()) return 1.0;
  return -std::expm1(log_tail_term(p.xi, (x - p.u) / p.sigma_u));
}

double gpd_log_pdf(const GpdParams& p, double x) noexcept {
  if (x < p.u || x >= p.upper_endpoint()) return kNegInf;
  const double y = (x - p.u) / p.sigma_u;
  const double log_core = shape_is_zero(p.xi) ? -y : -(1.0 / p.xi + 1.0) * std::log1p(p.xi * y);
  return log_core - std::log(p.sigma_u);
}

double gpd_pdf(const GpdParams& p, double x) noexcept {
  const double lp = gpd_log_pdf(p, x);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

double gpd_quantile(const GpdParams& p, double prob) {
  check_probability(prob, "gpd_quantile");
  const double log_sf = std::log1p(-prob);
  if (shape_is_zero(p.xi)) return p.u - p.sigma_u * log_sf;
  return p.u + p.sigma_u / p.xi * std::expm1(-p.xi * log_sf);
}

double gpd_quantile_upper(const GpdParams& p, double q) {
  check_probability(q, "gpd_quantile_upper");
  const double log_sf = std::log(q);
  if (shape_is_zero(p.xi)) return p.u - p.sigma_u * log_sf;
  return p.u + p.sigma_u / p.xi * std::expm1(-p.xi * log_sf);
}

// -------------------------------------------------------------------- GEV

GevParams::GevParams(double mu_, double sigma_, double xi_) : mu(mu_), sigma(sigma_), xi(xi_) {
  check_finite(mu, "GEV location");
  check_positive(sigma, "GEV scale");
  check_finite(xi, "GEV shape");
}

double gev_cdf(const GevParams& p, double x) noexcept {
  const double s = (x - p.mu) / p.sigma;
  if (shape_is_zero(p.xi)) return std::exp(-std::exp(-s));
  const double t = 1.0 + p.xi * s;
  if (t <= 0.0) return p.xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log1p(p.xi * s) / p.xi));
}

double gev_log_pdf(const GevParams& p, double x) noexcept {
  const double s = (x - p.mu) / p.sigma;
  if (shape_is_zero(p.xi)) return -std::log(p.sigma) - s - std::exp(-s);
  const double t = 1.0 + p.xi * s;
  if (t <= 0.0) return kNegInf;
  const double lt = std::log1p(p.xi * s);
  return -std::log(p.sigma) - (1.0 / p.xi + 1.0) * lt - std::exp(-lt / p.xi);
}

double gev_pdf(const GevParams& p, double x) noexcept {
  const double lp = gev_log_pdf(p, x);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

double gev_quantile(const GevParams& p, double prob) {
  check_probability(prob, "gev_quantile");
  const double y = -std::log(prob);  // standard exponential level
  if (shape_is_zero(p.xi)) return p.mu - p.sigma * std::log(y);
  return p.mu + p.sigma / p.xi * std::expm1(-p.xi * std::log(y));
}

// ------------------------------------------------------------ bulk families

Normal::Normal(double m, double s) : mean(m), sd(s) {
  check_finite(mean, "Normal mean");
  check_positive(sd, "Normal sd");
}

LogNormal::LogNormal(double m, double s) : log_mean(m), log_sd(s) {
  check_finite(log_mean, "LogNormal log-mean");
  check_positive(log_sd, "LogNormal log-sd");
}

Gamma::Gamma(double k, double theta) : shape(k), scale(theta) {
  check_positive(shape, "Gamma shape");
  check_positive(scale, "Gamma scale");
}

Weibull::Weibull(double k, double lam) : shape(k), scale(lam) {
  check_positive(shape, "Weibull shape");
  check_positive(scale, "Weibull scale");
}

ReverseWeibull::ReverseWeibull(double k, double lam) : shape(k), scale(lam) {
  check_positive(shape, "ReverseWeibull shape");
  check_positive(scale, "ReverseWeibull scale");
}

Gumbel::Gumbel(double loc, double s) : location(loc), scale(s) {
  check_finite(location, "Gumbel location");
  check_positive(scale, "Gumbel scale");
}

StudentT::StudentT(double nu, double loc) : df(nu), location(loc) {
  check_positive(df, "StudentT df");
  check_finite(location, "StudentT location");
}

Kernel::Kernel(std::vector<double> pts, double lam) : points(std::move(pts)), bandwidth(lam) {
  require(!points.empty(), ErrorKind::InvalidArgument, "Kernel needs at least one point");
  for (double v : points) check_finite(v, "Kernel point");
  check_positive(bandwidth, "Kernel bandwidth");
  std::sort(points.begin(), points.end());
}

std::string family_name(const BulkFamily& f) {
  return std::visit(Overloaded{
                        [](const Normal&) { return std::string("normal"); },
                        [](const LogNormal&) { return std::string("lognormal"); },
                        [](const Gamma&) { return std::string("gamma"); },
                        [](const Weibull&) { return std::string("weibull"); },
                        [](const ReverseWeibull&) { return std::string("reverse_weibull"); },
                        [](const Gumbel&) { return std::string("gumbel"); },
                        [](const StudentT&) { return std::string("student_t"); },
                        [](const Kernel&) { return std::string("kernel"); },
                    },
                    f);
}

double support_lower(const BulkFamily& f) noexcept {
  if (std::holds_alternative<LogNormal>(f) || std::holds_alternative<Gamma>(f) ||
      std::holds_alternative<Weibull>(f))
    return 0.0;
  return kNegInf;
}

double support_upper(const BulkFamily& f) noexcept {
  return std::holds_alternative<ReverseWeibull>(f) ? 0.0 : kInf;
}

bool in_support(const BulkFamily& f, double x) noexcept {
  if (!std::isfinite(x)) return false;
  if (std::holds_alternative<LogNormal>(f) || std::holds_alternative<Gamma>(f) ||
      std::holds_alternative<Weibull>(f))
    return x > 0.0;
  if (std::holds_alternative<ReverseWeibull>(f)) return x < 0.0;
  return true;
}

double log_pdf(const BulkFamily& f, double x) {
  return std::visit(
      Overloaded{
          [x](const Normal& d) {
            const double z = (x - d.mean) / d.sd;
            return -0.5 * z * z - std::log(d.sd) - 0.5 * std::log(2.0 * std::numbers::pi);
          },
          [x](const LogNormal& d) {
            if (!(x > 0.0)) return kNegInf;
            const double lx = std::log(x);
            const double z = (lx - d.log_mean) / d.log_sd;
            return -0.5 * z * z - std::log(d.log_sd) - lx -
                   0.5 * std::log(2.0 * std::numbers::pi);
          },
          [x](const Gamma& d) {
            if (!(x > 0.0)) return kNegInf;
            return (d.shape - 1.0) * std::log(x) - x / d.scale - std::lgamma(d.shape) -
                   d.shape * std::log(d.scale);
          },
          [x](const Weibull& d) {
            if (!(x > 0.0)) return kNegInf;
            const double r = x / d.scale;
            return std::log(d.shape / d.scale) + (d.shape - 1.0) * std::log(r) -
                   std::pow(r, d.shape);
          },
          [x](const ReverseWeibull& d) {
            if (!(x < 0.0)) return kNegInf;
            const double r = -x / d.scale;
            return std::log(d.shape / d.scale) + (d.shape - 1.0) * std::log(r) -
                   std::pow(r, d.shape);
          },
          [x](const Gumbel& d) {
            const double s = (x - d.location) / d.scale;
            return -std::log(d.scale) - s - std::exp(-s);
          },
          [x](const StudentT& d) {
            const double t = x - d.location;
            return std::lgamma(0.5 * (d.df + 1.0)) - std::lgamma(0.5 * d.df) -
                   0.5 * std::log(d.df * std::numbers::pi) -
                   0.5 * (d.df + 1.0) * std::log1p(t * t / d.df);
          },
          [x](const Kernel& d) {
            const double v = kernel_pdf(d, x);
            return v > 0.0 ? std::log(v) : kNegInf;
          },
      },
      f);
}

double pdf(const BulkFamily& f, double x) {
  if (const auto* k = std::get_if<Kernel>(&f)) return kernel_pdf(*k, x);
  const double lp = log_pdf(f, x);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

double cdf(const BulkFamily& f, double x) {
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  if (x == kInf) return 1.0;
  if (x == kNegInf) return 0.0;
  return std::visit(Overloaded{
                        [x](const Normal& d) { return std_normal_cdf((x - d.mean) / d.sd); },
                        [x](const LogNormal& d) {
                          return x <= 0.0 ? 0.0 : bm::cdf(boost_dist(d), x);
                        },
                        [x](const Gamma& d) { return x <= 0.0 ? 0.0 : bm::cdf(boost_dist(d), x); },
                        [x](const Weibull& d) {
                          return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / d.scale, d.shape));
                        },
                        [x](const ReverseWeibull& d) {
                          return x >= 0.0 ? 1.0 : std::exp(-std::pow(-x / d.scale, d.shape));
                        },
                        [x](const Gumbel& d) {
                          return std::exp(-std::exp(-(x - d.location) / d.scale));
                        },
                        [x](const StudentT& d) { return bm::cdf(boost_dist(d), x - d.location); },
                        [x](const Kernel& d) { return kernel_cdf(d, x); },
                    },
                    f);
}

double sf(const BulkFamily& f, double x) {
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  if (x == kInf) return 0.0;
  if (x == kNegInf) return 1.0;
  return std::visit(
      Overloaded{
          [x](const Normal& d) { return std_normal_cdf((d.mean - x) / d.sd); },
          [x](const LogNormal& d) {
            return x <= 0.0 ? 1.0 : bm::cdf(bm::complement(boost_dist(d), x));
          },
          [x](const Gamma& d) {
            return x <= 0.0 ? 1.0 : bm::cdf(bm::complement(boost_dist(d), x));
          },
          [x](const Weibull& d) { return x <= 0.0 ? 1.0 : std::exp(-std::pow(x / d.scale, d.shape)); },
          [x](const ReverseWeibull& d) {
            return x >= 0.0 ? 0.0 : -std::expm1(-std::pow(-x / d.scale, d.shape));
          },
          [x](const Gumbel& d) { return -std::expm1(-std::exp(-(x - d.location) / d.scale)); },
          [x](const StudentT& d) {
            return bm::cdf(bm::complement(boost_dist(d), x - d.location));
          },
          [x](const Kernel& d) { return kernel_sf(d, x); },
      },
      f);
}

double quantile(const BulkFamily& f, double p) {
  check_probability(p, "quantile");
  return std::visit(Overloaded{
                        [p](const Normal& d) { return bm::quantile(boost_dist(d), p); },
                        [p](const LogNormal& d) { return bm::quantile(boost_dist(d), p); },
                        [p](const Gamma& d) { return bm::quantile(boost_dist(d), p); },
                        [p](const Weibull& d) {
                          return d.scale * std::pow(-std::log1p(-p), 1.0 / d.shape);
                        },
                        [p](const ReverseWeibull& d) {
                          return -d.scale * std::pow(-std::log(p), 1.0 / d.shape);
                        },
                        [p](const Gumbel& d) { return d.location - d.scale * std::log(-std::log(p)); },
                        [p](const StudentT& d) {
                          return d.location + bm::quantile(boost_dist(d), p);
                        },
                        [p](const Kernel& d) { return kernel_invert(d, p, false); },
                    },
                    f);
}

double quantile_upper(const BulkFamily& f, double q) {
  check_probability(q, "quantile_upper");
  return std::visit(
      Overloaded{
          [q](const Normal& d) { return bm::quantile(bm::complement(boost_dist(d), q)); },
          [q](const LogNormal& d) { return bm::quantile(bm::complement(boost_dist(d), q)); },
          [q](const Gamma& d) { return bm::quantile(bm::complement(boost_dist(d), q)); },
          [q](const Weibull& d) { return d.scale * std::pow(-std::log(q), 1.0 / d.shape); },
          [q](const ReverseWeibull& d) {
            return -d.scale * std::pow(-std::log1p(-q), 1.0 / d.shape);
          },
          [q](const Gumbel& d) { return d.location - d.scale * std::log(-std::log1p(-q)); },
          [q](const StudentT& d) {
            return d.location + bm::quantile(bm::complement(boost_dist(d), q));
          },
          [q](const Kernel& d) { return kernel_invert(d, q, true); },
      },
      f);
}

double dist_eval(const BulkFamily& f, EvalKind which, double x_or_p) {
  switch (which) {
    case EvalKind::Pdf: return pdf(f, x_or_p);
    case EvalKind::Cdf: return cdf(f, x_or_p);
    case EvalKind::Quantile: return quantile(f, x_or_p);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> sample(const BulkFamily& f, std::size_t n, std::uint64_t seed) {
  return draw_n(n, seed, [&](double u) { return quantile(f, u); });
}

std::vector<double> sample(const GpdParams& p, std::size_t n, std::uint64_t seed) {
  return draw_n(n, seed, [&](double u) { return gpd_quantile(p, u); });
}

std::vector<double> sample(const GevParams& p, std::size_t n, std::uint64_t seed) {
  return draw_n(n, seed, [&](double u) { return gev_quantile(p, u); });
}

}  // namespace tailmix
