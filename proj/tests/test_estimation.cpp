#include <gtest/gtest.h>

#include <cmath>

#include "tailmix/error.hpp"
#include "tailmix/estimation.hpp"
#include "tailmix/random.hpp"
#include "test_support.hpp"

using namespace tailmix;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

double gpd_loglik_direct(std::span<const double> y, double sigma, double xi) {
  // Written out from the density, independent of gpd_log_pdf.
  double total = 0.0;
  for (double v : y) {
    const double t = 1.0 + xi * v / sigma;
    if (t <= 0.0) return -INFINITY;
    total += -std::log(sigma) - (1.0 / xi + 1.0) * std::log(t);
  }
  return total;
}

}  // namespace

TEST(EmpiricalQuantile, Type7) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(empirical_quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(empirical_quantile(x, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(empirical_quantile(x, 0.1), 1.4);
  EXPECT_DOUBLE_EQ(empirical_quantile(x, 1.0), 5.0);
}

TEST(FitGpd, ExponentialDataMedianOverSeeds) {
  std::vector<double> xi, sigma;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto x = sample(Gamma(1.0, 1.0), 10000, derive_seed(101, s));
    const auto f = fit_gpd(x, 0.0);
    xi.push_back(f.params.xi);
    sigma.push_back(f.params.sigma_u);
  }
  EXPECT_GE(oracle::median(xi), -0.05);
  EXPECT_LE(oracle::median(xi), 0.05);
  EXPECT_GE(oracle::median(sigma), 0.95);
  EXPECT_LE(oracle::median(sigma), 1.05);
}

TEST(FitGpd, HeavyTailMedianOverSeeds) {
  std::vector<double> xi;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto x = sample(GpdParams(0, 1, 0.2), 10000, derive_seed(202, s));
    xi.push_back(fit_gpd(x, 0.0).params.xi);
  }
  EXPECT_GE(oracle::median(xi), 0.15);
  EXPECT_LE(oracle::median(xi), 0.25);
}

TEST(FitGpd, TooFewExceedances) {
  std::vector<double> x(100, 0.0);
  for (int i = 0; i < 5; ++i) x[i] = 1.0 + i;
  EXPECT_EQ(kind_of([&] { fit_gpd(x, 0.5, 10); }), ErrorKind::TooFewExceedances);
}

TEST(FitGpd, LocalMaximumProperty) {
  const auto x = sample(GpdParams(2, 1.5, 0.1), 2000, 9);
  const auto f = fit_gpd(x, 2.0);
  std::vector<double> y;
  for (double v : x)
    if (v > 2.0) y.push_back(v - 2.0);
  const double best = gpd_loglik_direct(y, f.params.sigma_u, f.params.xi);
  EXPECT_NEAR(best, f.log_likelihood, 1e-6 * std::abs(best));
  UniformStream u(33);
  for (int k = 0; k < 32; ++k) {
    const double s = f.params.sigma_u * (1.0 + 0.2 * (u() - 0.5));
    const double xi = f.params.xi * (1.0 + 0.2 * (u() - 0.5));
    EXPECT_LE(gpd_loglik_direct(y, s, xi), best + 1e-9);
  }
}

TEST(FitGpd, ShapeStaysInsideSearchInterval) {
  // Uniform excesses have xi = -1 exactly; the fit must stay inside (-1, 5].
  const auto x = sample(Weibull(1.0, 1.0), 500, 4);
  std::vector<double> unif(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) unif[i] = 1.0 - std::exp(-x[i]);
  const auto f = fit_gpd(unif, 0.0);
  EXPECT_GT(f.params.xi, -1.0);
  EXPECT_LE(f.params.xi, 5.0);
}

TEST(ThresholdConfig, DefaultsAndValidation) {
  const ThresholdSearchConfig c;
  ASSERT_EQ(c.upper_grid.size(), 19u);
  EXPECT_DOUBLE_EQ(c.upper_grid.front(), 0.5);
  EXPECT_NEAR(c.upper_grid.back(), 0.95, 1e-15);
  ASSERT_EQ(c.lower_grid.size(), 19u);
  EXPECT_NEAR(c.lower_grid.front(), 0.05, 1e-15);
  EXPECT_EQ(c.min_exceedances, 10u);
  ThresholdSearchConfig bad;
  bad.upper_grid = {0.9, 0.8};
  EXPECT_THROW(validate(bad), Error);
  bad.upper_grid = {0.5, 1.0};
  EXPECT_THROW(validate(bad), Error);
  OptimizerConfig o;
  o.rel_tolerance = 0.0;
  EXPECT_THROW(validate(o), Error);
}

TEST(FitMixture, RecoversNormGpdShape) {
  const auto truth = make_single_tail(MixtureKind::NormGpd, Normal(0, 1),
                                      {GpdParams(1.2816, 0.6, 0.2)});
  std::vector<double> xi;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = sample(truth, 5000, derive_seed(303, s));
    xi.push_back(fit_mixture(x, {MixtureKind::NormGpd}).best.spec.upper.gpd.xi);
  }
  EXPECT_NEAR(oracle::median(xi), 0.2, 0.15);
}

TEST(FitMixture, GammaQuantileRecovered) {
  const Gamma g(5, 1);
  const double q90 = quantile(g, 0.9);
  std::vector<double> err;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = sample(g, 1000, derive_seed(404, s));
    const auto r = fit_mixture(x, {MixtureKind::GammaGpd});
    err.push_back(mixture_quantile(r.best.spec, 0.9) - q90);
  }
  EXPECT_LE(std::abs(oracle::median(err)), 0.2);
}

TEST(FitMixture, ConstantDataInfeasible) {
  const std::vector<double> x(200, 3.0);
  EXPECT_EQ(kind_of([&] { fit_mixture(x, {MixtureKind::NormGpd}); }),
            ErrorKind::AllCandidatesInfeasible);
}

TEST(FitMixture, Preconditions) {
  const auto x = sample(Normal(0, 1), 200, 1);
  EXPECT_EQ(kind_of([&] { fit_mixture(x, {MixtureKind::GammaGpd}); }),
            ErrorKind::SupportViolation);
  const std::vector<double> small(x.begin(), x.begin() + 49);
  EXPECT_EQ(kind_of([&] { fit_mixture(small, {MixtureKind::NormGpd}); }),
            ErrorKind::InvalidArgument);
}

TEST(FitMixture, ProfileIsGridMinusInfeasible) {
  const auto x = sample(Normal(0, 1), 150, 8);
  ThresholdSearchConfig cfg;
  cfg.min_exceedances = 10;  // 0.95 leaves 8 points: infeasible
  const auto r = fit_mixture(x, {MixtureKind::NormGpd}, cfg);
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> expected;
  for (double p : cfg.upper_grid) {
    const double u = empirical_quantile(sorted, p);
    const auto above = std::count_if(x.begin(), x.end(), [&](double v) { return v > u; });
    if (above >= 10) expected.push_back(u);
  }
  ASSERT_EQ(r.profile.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    EXPECT_DOUBLE_EQ(r.profile[i].threshold, expected[i]);
  double best = -INFINITY;
  for (const auto& p : r.profile) best = std::max(best, p.log_likelihood);
  EXPECT_EQ(r.best.log_likelihood, best);
  EXPECT_NEAR(r.best.log_likelihood, mixture_log_likelihood(r.best.spec, x),
              1e-9 * std::abs(best));
}

TEST(FitMixture, LocationShiftEquivariance) {
  const auto x = sample(make_single_tail(MixtureKind::NormGpd, Normal(0, 1),
                                         {GpdParams(1.0, 0.7, 0.15)}),
                        1000, 12);
  std::vector<double> shifted(x);
  for (double& v : shifted) v += 10.0;
  const auto a = fit_mixture(x, {MixtureKind::NormGpd});
  const auto b = fit_mixture(shifted, {MixtureKind::NormGpd});
  EXPECT_NEAR(b.best.spec.upper.gpd.u - a.best.spec.upper.gpd.u, 10.0, 1e-9);
  EXPECT_NEAR(b.best.spec.upper.gpd.xi, a.best.spec.upper.gpd.xi, 1e-4);
  EXPECT_NEAR(b.best.log_likelihood, a.best.log_likelihood, 1e-5 * std::abs(a.best.log_likelihood));
}

TEST(FitMixture, Deterministic) {
  const auto x = sample(Gamma(5, 1), 500, 77);
  const auto a = fit_mixture(x, {MixtureKind::GammaGpd, TailMode::Parameterized, true});
  const auto b = fit_mixture(x, {MixtureKind::GammaGpd, TailMode::Parameterized, true});
  EXPECT_EQ(a.best.log_likelihood, b.best.log_likelihood);
  EXPECT_EQ(named_parameters(a.best.spec), named_parameters(b.best.spec));
  ASSERT_EQ(a.profile.size(), b.profile.size());
  for (std::size_t i = 0; i < a.profile.size(); ++i)
    EXPECT_EQ(a.profile[i].log_likelihood, b.profile[i].log_likelihood);
}

TEST(FitMixture, EveryKindProducesAValidFit) {
  const auto normal = sample(StudentT(4, 0), 600, 5);
  const auto positive = sample(Gamma(3, 2), 600, 6);
  struct Case {
    MixtureModel model;
    const std::vector<double>* data;
  };
  const std::vector<Case> cases = {
      {{MixtureKind::NormGpd, TailMode::BulkBased, false}, &normal},
      {{MixtureKind::NormGpd, TailMode::BulkBased, true}, &normal},
      {{MixtureKind::NormGpd, TailMode::Parameterized, false}, &normal},
      {{MixtureKind::GammaGpd, TailMode::BulkBased, false}, &positive},
      {{MixtureKind::WeibullGpd, TailMode::BulkBased, true}, &positive},
      {{MixtureKind::LognormalGpd, TailMode::Parameterized, false}, &positive},
      {{MixtureKind::KernelGpd, TailMode::Parameterized, false}, &normal},
      {{MixtureKind::KernelGpd, TailMode::BulkBased, true}, &normal},
      {{MixtureKind::HybridPareto, TailMode::BulkBased, true, true}, &normal},
      {{MixtureKind::HybridPareto, TailMode::BulkBased, true, false}, &normal},
      {{MixtureKind::Gng, TailMode::BulkBased, false}, &normal},
      {{MixtureKind::Gng, TailMode::Parameterized, true}, &normal},
  };
  for (const auto& c : cases) {
    const auto r = fit_mixture(*c.data, c.model);
    SCOPED_TRACE(std::string(to_string(c.model.kind)) + (c.model.continuity ? " con" : ""));
    EXPECT_TRUE(std::isfinite(r.best.log_likelihood));
    EXPECT_NO_THROW(validate(r.best.spec));
    EXPECT_FALSE(r.profile.empty());
    EXPECT_GE(r.best.n_exceed_upper, 10u);
    if (c.model.kind == MixtureKind::Gng) EXPECT_GE(r.best.n_exceed_lower, 10u);
    if (c.model.kind != MixtureKind::KernelGpd)
      EXPECT_NEAR(r.best.log_likelihood, mixture_log_likelihood(r.best.spec, *c.data),
                  1e-8 * std::abs(r.best.log_likelihood));
    if (c.model.continuity && c.model.kind != MixtureKind::HybridPareto) {
      const double u = r.best.spec.upper.gpd.u;
      EXPECT_LT(std::abs(mixture_pdf(r.best.spec, u) -
                         mixture_pdf(r.best.spec, std::nextafter(u, INFINITY))),
                1e-8);
    }
  }
}

TEST(FitGev, ExponentialMaximaAreGumbel) {
  std::vector<double> xi;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = sample(Gamma(1, 1), 100000, derive_seed(505, s));
    xi.push_back(fit_gev_blocks(x, 1000).params.xi);
  }
  EXPECT_LE(std::abs(oracle::median(xi)), 0.1);
}

TEST(FitGev, DirectSamplesRecoverShape) {
  std::vector<double> xi;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = sample(GevParams(0, 1, 0.2), 10000, derive_seed(606, s));
    xi.push_back(fit_gev_blocks(x, 1).params.xi);
  }
  EXPECT_NEAR(oracle::median(xi), 0.2, 0.1);
}

TEST(FitGev, TooFewBlocks) {
  const auto x = sample(Normal(0, 1), 1000, 2);
  EXPECT_EQ(kind_of([&] { fit_gev_blocks(x, 51); }), ErrorKind::TooFewBlocks);
  EXPECT_NO_THROW(fit_gev_blocks(x, 50));
}

TEST(KdeBandwidth, NearReferenceRule) {
  std::vector<double> lam;
  for (std::uint64_t s = 0; s < 20; ++s)
    lam.push_back(kde_cv_bandwidth(sample(Normal(0, 1), 1000, derive_seed(707, s))));
  const double m = oracle::median(lam);
  const double ref = 1.06 * std::pow(1000.0, -0.2);
  EXPECT_GT(m, ref / 2);
  EXPECT_LT(m, ref * 2);
}

TEST(KdeBandwidth, DegenerateAndScale) {
  const std::vector<double> same(30, 1.0);
  EXPECT_EQ(kind_of([&] { kde_cv_bandwidth(same); }), ErrorKind::DegenerateSample);
  const auto x = sample(Gamma(2, 1), 300, 3);
  std::vector<double> doubled(x);
  for (double& v : doubled) v *= 2.0;
  EXPECT_EQ(kde_cv_bandwidth(doubled), 2.0 * kde_cv_bandwidth(x));
}
