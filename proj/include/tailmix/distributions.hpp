#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tailmix {

/// Shape values this close to zero use the exponential / Gumbel limit.
inline constexpr double kShapeZeroTolerance = 1e-8;

/// Generalized Pareto tail above threshold `u`.
///
/// Support is [u, inf) for xi >= 0 and [u, u - sigma_u / xi] for xi < 0.
/// Evaluation outside the support is defined: the CDF saturates at 0 or 1
/// and the density is 0.
struct GpdParams {
  double u = 0.0;
  double sigma_u = 1.0;
  double xi = 0.0;

  GpdParams() = default;
  GpdParams(double u, double sigma_u, double xi);

  /// Upper end of the support; +inf for xi >= 0.
  double upper_endpoint() const noexcept;
};

double gpd_cdf(const GpdParams& p, double x) noexcept;
/// 1 - gpd_cdf, computed without cancellation.
double gpd_sf(const GpdParams& p, double x) noexcept;
double gpd_pdf(const GpdParams& p, double x) noexcept;
double gpd_log_pdf(const GpdParams& p, double x) noexcept;
double gpd_quantile(const GpdParams& p, double prob);
/// Value exceeded with probability `q`, i.e. gpd_quantile(1 - q) without
/// rounding 1 - q.
double gpd_quantile_upper(const GpdParams& p, double q);

/// Generalized extreme value law for block maxima. xi = 0 is Gumbel.
struct GevParams {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;

  GevParams() = default;
  GevParams(double mu, double sigma, double xi);
};

double gev_cdf(const GevParams& p, double x) noexcept;
double gev_pdf(const GevParams& p, double x) noexcept;
double gev_log_pdf(const GevParams& p, double x) noexcept;
double gev_quantile(const GevParams& p, double prob);

// Bulk families. Constructors reject invalid parameters.

struct Normal {
  double mean, sd;
  Normal(double mean, double sd);
};

struct LogNormal {
  double log_mean, log_sd;
  LogNormal(double log_mean, double log_sd);
};

struct Gamma {
  double shape, scale;
  Gamma(double shape, double scale);
};

struct Weibull {
  double shape, scale;
  Weibull(double shape, double scale);
};

/// Law of -W for W ~ Weibull(shape, scale); support (-inf, 0].
struct ReverseWeibull {
  double shape, scale;
  ReverseWeibull(double shape, double scale);
};

struct Gumbel {
  double location, scale;
  Gumbel(double location, double scale);
};

/// Standard Student-t with `df` degrees of freedom shifted by `location`.
struct StudentT {
  double df, location;
  StudentT(double df, double location);
};

/// Gaussian kernel density estimate: equal-weight mixture of
/// Normal(point, bandwidth). Points are kept sorted.
struct Kernel {
  std::vector<double> points;
  double bandwidth;
  Kernel(std::vector<double> points, double bandwidth);
};

using BulkFamily =
    std::variant<Normal, LogNormal, Gamma, Weibull, ReverseWeibull, Gumbel, StudentT, Kernel>;

std::string family_name(const BulkFamily& f);

double pdf(const BulkFamily& f, double x);
double log_pdf(const BulkFamily& f, double x);
double cdf(const BulkFamily& f, double x);
/// Survival function 1 - cdf, accurate in the upper tail.
double sf(const BulkFamily& f, double x);
double quantile(const BulkFamily& f, double p);
/// Value exceeded with probability q.
double quantile_upper(const BulkFamily& f, double q);

/// Lower end of the support (-inf when unbounded).
double support_lower(const BulkFamily& f) noexcept;
/// Upper end of the support (+inf when unbounded).
double support_upper(const BulkFamily& f) noexcept;
/// True when the family puts density on x (strictly inside the support
/// for families with an open boundary at 0).
bool in_support(const BulkFamily& f, double x) noexcept;

enum class EvalKind { Pdf, Cdf, Quantile };

/// Dispatch helper: pdf(x), cdf(x) or quantile(p) of a bulk family.
double dist_eval(const BulkFamily& f, EvalKind which, double x_or_p);

/// n inverse-CDF draws in generation order. Deterministic in `seed`.
std::vector<double> sample(const BulkFamily& f, std::size_t n, std::uint64_t seed);
std::vector<double> sample(const GpdParams& p, std::size_t n, std::uint64_t seed);
std::vector<double> sample(const GevParams& p, std::size_t n, std::uint64_t seed);

// Standard normal helpers shared by several modules.
double std_normal_pdf(double z) noexcept;
double std_normal_cdf(double z) noexcept;
double std_normal_quantile(double p);

}  // namespace tailmix
