#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tailmix/distributions.hpp"

namespace tailmix {

/// Tail mass implied by the bulk CDF at the threshold.
struct BulkBased {};

/// Tail mass estimated as its own parameter, phi in (0, 1).
struct Parameterized {
  double phi;
  explicit Parameterized(double phi);
};

using TailFractionMode = std::variant<BulkBased, Parameterized>;

inline bool is_bulk_based(const TailFractionMode& m) noexcept {
  return std::holds_alternative<BulkBased>(m);
}

enum class MixtureKind {
  NormGpd,
  GammaGpd,
  WeibullGpd,
  LognormalGpd,
  KernelGpd,
  HybridPareto,
  Gng,
};

std::string_view to_string(MixtureKind kind) noexcept;

/// One GPD tail and the way its mass is determined.
///
/// A lower tail describes the reflected excess: u - X given X < u follows
/// GPD(0, sigma_u, xi), so `gpd.u` is the lower threshold itself.
struct TailSpec {
  GpdParams gpd;
  TailFractionMode mode = BulkBased{};
};

/// A bulk distribution spliced with one or two GPD tails.
///
/// Single-tail bulk-based specs follow
///   F(x) = H(x)                          x <= u
///   F(x) = H(u) + (1 - H(u)) G(x)        x > u
/// and parameterized specs
///   F(x) = (1 - phi) H(x) / H(u)         x <= u
///   F(x) = (1 - phi) + phi G(x)          x > u.
/// Two-tailed (GNG) specs combine both tails around a normal bulk; with
/// both tails bulk-based the bulk is used as is (not renormalized).
///
/// Hybrid Pareto specs splice an unnormalized Normal(mean, sd) density with
/// a GPD density at u and divide by gamma = 1 + Phi((u - mean) / sd). With
/// `smooth_junction` the junction and GPD scale solve both the density and
/// its derivative matching conditions; without it only the density matches
/// and u is free.
struct MixtureSpec {
  MixtureKind kind = MixtureKind::NormGpd;
  BulkFamily bulk = Normal(0.0, 1.0);
  TailSpec upper;
  std::optional<TailSpec> lower;
  bool continuity = false;
  bool smooth_junction = true;  ///< hybrid Pareto only
};

/// Checks every invariant; throws Error(InvalidArgument) on violation.
void validate(const MixtureSpec& spec);

/// Convenience constructors (validated).
MixtureSpec make_single_tail(MixtureKind kind, BulkFamily bulk, TailSpec upper,
                             bool continuity = false);
MixtureSpec make_gng(double mean, double sd, TailSpec lower, TailSpec upper,
                     bool continuity = false);
/// Hybrid Pareto with the smooth junction of hybrid_junction().
MixtureSpec make_hybrid(double mean, double sd, double xi);
/// Hybrid Pareto with a free junction u and density continuity only.
MixtureSpec make_hybrid_at(double mean, double sd, double xi, double u);

double mixture_cdf(const MixtureSpec& spec, double x);
/// 1 - mixture_cdf without cancellation in the upper tail.
double mixture_sf(const MixtureSpec& spec, double x);
double mixture_pdf(const MixtureSpec& spec, double x);
double mixture_quantile(const MixtureSpec& spec, double p);
/// Value exceeded with probability q.
double mixture_quantile_upper(const MixtureSpec& spec, double q);

/// Sum of log densities over `data` (-inf if any point has zero density).
double mixture_log_likelihood(const MixtureSpec& spec, std::span<const double> data);

/// Inverse-CDF draws in generation order.
std::vector<double> sample(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);

/// Probability mass assigned to each tail.
struct TailMasses {
  double lower = 0.0;
  double upper = 0.0;
};
TailMasses tail_masses(const MixtureSpec& spec);

/// Factor multiplying the bulk density between the thresholds: 1 when every
/// tail is bulk-based, (1 - phi_l - phi_u) / (H(u) - H(u_l)) otherwise.
/// Not meaningful for hybrid Pareto specs.
double bulk_density_weight(const MixtureSpec& spec);

/// Replaces each tail scale so bulk-side and tail-side densities agree at
/// the threshold. Requires spec.continuity.
MixtureSpec solve_continuity(const MixtureSpec& spec);

struct HybridJunction {
  double u;
  double sigma_u;
  double gamma;
};

/// Junction of the smooth hybrid Pareto for a Normal(mean, sd) body and GPD
/// shape xi > -1. The junction satisfies z = (1 + xi) phi(z) with
/// z = (u - mean) / sd, found by bisection on (0, 10].
HybridJunction hybrid_junction(double mean, double sd, double xi);

/// Named parameters for reporting, e.g. {"mean", 0.1}, {"u", 1.3}, ...
std::vector<std::pair<std::string, double>> named_parameters(const MixtureSpec& spec);

struct FittedMixture {
  MixtureSpec spec;
  double log_likelihood = 0.0;
  std::size_t n_exceed_upper = 0;
  std::size_t n_exceed_lower = 0;
  bool converged = false;
};

}  // namespace tailmix
