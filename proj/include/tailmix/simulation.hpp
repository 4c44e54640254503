#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tailmix/distributions.hpp"
#include "tailmix/estimation.hpp"

namespace tailmix {

/// Correlation rho^|i-j|. With no rho, rho ~ U[-bound, bound] is redrawn on
/// every sample.
struct Ar1 {
  std::optional<double> rho;
};

/// Correlation (1 - w) I + w D^-1/2 A A^T D^-1/2 with A an n x factors
/// Gaussian matrix and w the bound, so every |corr| <= bound. The matrix is
/// redrawn from the sample seed unless matrix_seed is set.
struct RandomPsd {
  std::size_t factors = 2;
  std::optional<std::uint64_t> matrix_seed;
};

struct CopulaConfig {
  std::variant<Ar1, RandomPsd> structure = Ar1{};
  double bound = 0.85;
};

void validate(const CopulaConfig& c);

struct PopulationSpec {
  std::string name;
  BulkFamily family;
  std::optional<CopulaConfig> dependence;  ///< Gaussian copula when set
};

/// The six independent study populations.
std::vector<PopulationSpec> study_populations_iid();
/// The four copula-dependent study populations (default AR1 copula).
std::vector<PopulationSpec> study_populations_dependent();

/// Parses "norm(0,4)", "t(5)", "t(5,5)", "gumbel(5)", "weibull(5,2)",
/// "rweibull(5,2)", "gamma(5,1)", "lnorm(0,1)". Weibull-type arguments are
/// (scale, shape); gamma is (shape, scale).
PopulationSpec parse_population(const std::string& text,
                                std::optional<CopulaConfig> dependence = std::nullopt);

/// Marginal quantile (dependence leaves the marginal unchanged).
double true_quantile(const PopulationSpec& pop, double p);

/// n draws in time order, deterministic in `seed`.
std::vector<double> sample_population(const PopulationSpec& pop, std::size_t n,
                                      std::uint64_t seed);

/// One draw of n correlated standard normals under the copula.
std::vector<double> copula_normals(const CopulaConfig& c, std::size_t n, std::uint64_t seed);

/// Dense correlation matrix the copula would use for this seed.
std::vector<std::vector<double>> copula_correlation(const CopulaConfig& c, std::size_t n,
                                                    std::uint64_t seed);

/// Fit-and-quantile recipe for one column of the study.
struct StudyModel {
  std::string name;
  MixtureModel model;
  bool garch = false;  ///< two-step: GARCH(1,1) filter, then the mixture
};

/// The catalog names: normGPD, normGPDcon, hybridGPD, hybridGPDcon,
/// weibullGPD, gammaGPD, lognormalGPD, kernelGPD, GNG, GNGcon.
std::vector<std::string> study_model_names();

/// Catalog lookup; a " GARCH" or "_GARCH" suffix selects the two-step
/// variant. Case-insensitive.
StudyModel parse_study_model(const std::string& name);

/// How two-step residual quantiles return to the data scale.
enum class BackTransform {
  Forecast,       ///< mu + sigma_{n+1} z_p, one step ahead
  Unconditional,  ///< mu + sigma_bar z_p
};

std::string to_string(BackTransform b);

enum class KernelBandwidth {
  CrossValidated,  ///< per replicate
  ReferenceRule,   ///< 1.06 s n^-1/5, fast mode
};

struct StudyConfig {
  std::vector<PopulationSpec> populations;
  std::vector<StudyModel> models;
  std::size_t replicates = 500;
  std::size_t sample_size = 1000;
  std::vector<double> levels{0.001, 0.01, 0.05, 0.10, 0.90, 0.95, 0.99, 0.999};
  std::uint64_t master_seed = 20230612;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned jobs = 1;
  BackTransform back_transform = BackTransform::Forecast;
  KernelBandwidth kernel_bandwidth = KernelBandwidth::CrossValidated;
  ThresholdSearchConfig search;
  OptimizerConfig optimizer;
};

void validate(const StudyConfig& cfg);

/// Seed of replicate r for population index k.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t population, std::size_t r);

struct RmseRow {
  std::string population;
  std::string model;
  double level = 0.0;
  double truth = 0.0;
  double rmse = 0.0;  ///< nan when no replicate succeeded
  std::size_t n_success = 0;
  std::size_t n_fail = 0;
};

struct RmseTable {
  std::vector<RmseRow> rows;  ///< population-major, then model, then level
  BackTransform back_transform = BackTransform::Forecast;
  KernelBandwidth kernel_bandwidth = KernelBandwidth::CrossValidated;
};

/// Per-replicate estimates behind a table, for resampling studies.
struct StudyResult {
  RmseTable table;
  /// estimates[population][model][replicate][level]; nan for failed fits.
  std::vector<std::vector<std::vector<std::vector<double>>>> estimates;
  /// First failure message per (population, model), empty when none failed.
  std::vector<std::vector<std::string>> first_failure;
};

StudyResult run_study(const StudyConfig& cfg);

/// sqrt(mean((x - truth)^2)).
double rmse(std::span<const double> estimates, double truth);

void write_csv(std::ostream& out, const RmseTable& table);
void write_json(std::ostream& out, const RmseTable& table);

}  // namespace tailmix
