#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "tailmix/error.hpp"
#include "tailmix/estimation.hpp"
#include "tailmix/random.hpp"
#include "tailmix/risk.hpp"
#include "test_support.hpp"

using namespace tailmix;

namespace {

std::vector<double> one_to(int n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

// Closed-form GPD VaR / ES, written independently of the library.
double gpd_var_closed(double u, double s, double xi, double a) {
  if (xi == 0.0) return u - s * std::log(1 - a);
  return u + s / xi * (std::pow(1 - a, -xi) - 1);
}
double gpd_es_closed(double u, double s, double xi, double a) {
  const double v = gpd_var_closed(u, s, xi, a);
  return v + (s + xi * (v - u)) / (1 - xi);
}

}  // namespace

TEST(Empirical, OrderStatistic) {
  EXPECT_EQ(var_empirical(one_to(100), 0.95), 95.0);
  EXPECT_EQ(var_empirical(std::vector<double>{5.0}, 0.3), 5.0);
  EXPECT_EQ(var_empirical(std::vector<double>{5.0}, 0.99), 5.0);
  EXPECT_EQ(var_empirical(one_to(10), 0.91), 10.0);
  EXPECT_EQ(var_empirical(one_to(10), 0.9), 9.0);
  EXPECT_THROW(var_empirical(std::vector<double>{}, 0.5), Error);
  EXPECT_THROW(var_empirical(one_to(5), 1.0), Error);
}

TEST(Empirical, ExpectedShortfall) {
  EXPECT_DOUBLE_EQ(es_empirical(one_to(100), 0.95), 97.5);
  EXPECT_EQ(es_empirical(std::vector<double>{3.0}, 0.9), 3.0);
  // Ties at VaR are all included.
  EXPECT_DOUBLE_EQ(es_empirical(std::vector<double>{1, 2, 2, 2, 5}, 0.4), 11.0 / 4.0);
}

TEST(Empirical, ExponentialOracle) {
  const auto x = sample(GpdParams(0, 1, 0), 1000000, 13);
  EXPECT_NEAR(var_empirical(x, 0.99), -std::log(0.01), 0.02);
  EXPECT_NEAR(es_empirical(x, 0.99), 1.0 - std::log(0.01), 0.05);
}

TEST(Empirical, Equivariance) {
  const auto x = sample(Normal(0, 1), 501, 2);
  std::vector<double> y(x);
  for (double& v : y) v = 3.0 * v + 7.0;
  for (double a : {0.1, 0.5, 0.95}) EXPECT_EQ(var_empirical(y, a), 3.0 * var_empirical(x, a) + 7.0);
}

TEST(Model, Examples) {
  EXPECT_NEAR(var_model(GpdParams(0, 1, 0), 0.99), 4.60517, 1e-5);
  EXPECT_NEAR(var_model(BulkFamily(Normal(0, 4)), 0.5), 0.0, 1e-14);
  EXPECT_THROW(var_model(GpdParams(0, 1, 0), 1.0), Error);
}

TEST(Model, RoundTripOnMixture) {
  const auto s = make_single_tail(MixtureKind::NormGpd, Normal(0, 1), {GpdParams(1.0, 0.6, 0.2)});
  for (double a : {0.5, 0.9, 0.95, 0.99, 0.999})
    EXPECT_NEAR(mixture_cdf(s, var_model(s, a)), a, 1e-8);
}

TEST(Model, FittedMixtureTracksTruth) {
  const auto truth =
      make_single_tail(MixtureKind::NormGpd, Normal(0, 1), {GpdParams(1.2816, 0.6, 0.2)});
  const auto x = sample(truth, 100000, 71);
  const auto fit = fit_mixture(x, {MixtureKind::NormGpd});
  // Monte Carlo band: four standard errors of the sample 0.99 quantile.
  const double q = var_model(truth, 0.99);
  const double band = 4.0 * std::sqrt(0.99 * 0.01 / 100000.0) / mixture_pdf(truth, q);
  EXPECT_NEAR(var_model(fit.best.spec, 0.99), q, band);
}

TEST(Es, MemorylessAndMeanExcess) {
  EXPECT_NEAR(es_numeric(GpdParams(0, 1, 0), 0.99), 1.0 - std::log(0.01), 1e-6);
  const GpdParams p(0, 1, 0.2);
  const double v = var_model(p, 0.95);
  EXPECT_NEAR(es_numeric(p, 0.95), v + (1.0 + 0.2 * v) / 0.8, 1e-6);
}

TEST(Es, IdentityAcrossShapes) {
  for (double xi : {-0.3, 0.0, 0.2, 0.5})
    for (double a : {0.9, 0.99}) {
      const GpdParams p(1.5, 2.0, xi);
      EXPECT_NEAR(es_numeric(p, a), gpd_es_closed(1.5, 2.0, xi, a), 1e-6) << xi << " " << a;
      EXPECT_NEAR(var_model(p, a), gpd_var_closed(1.5, 2.0, xi, a), 1e-9);
    }
}

TEST(Es, NonIntegrableTail) {
  try {
    es_numeric(GpdParams(0, 1, 1.2), 0.99);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonIntegrableTail);
  }
  EXPECT_THROW(es_numeric(BulkFamily(StudentT(1.0, 0.0)), 0.9), Error);
}

TEST(Es, MixtureAgreesWithDirectQuadrature) {
  // Below the threshold the quantile function has a kink; compare with a
  // density-based oracle: ES = (1/(1-a)) * integral_{VaR}^inf x f(x) dx.
  const auto s = make_gng(0, 1, {GpdParams(-1.0, 0.6, 0.1)}, {GpdParams(1.0, 0.6, 0.25)});
  for (double a : {0.5, 0.8, 0.99}) {
    const double v = var_model(s, a);
    const double num = oracle::integrate_pieces([&](double x) { return x * mixture_pdf(s, x); },
                                                {1.0}, v, INFINITY);
    EXPECT_NEAR(es_numeric(s, a), num / (1 - a), 1e-6 * std::abs(num / (1 - a))) << a;
  }
}

TEST(Es, NotBelowVar) {
  const std::vector<RiskModel> models = {
      GpdParams(0, 1, -0.4), BulkFamily(Normal(0, 4)), BulkFamily(StudentT(5, 5)),
      make_hybrid(0, 1, 0.3), BulkFamily(Gamma(5, 1))};
  for (const auto& m : models)
    for (double a : {0.01, 0.5, 0.9, 0.999}) EXPECT_GE(es_numeric(m, a), var_model(m, a));
  const auto x = sample(Normal(0, 1), 1000, 1);
  for (double a : {0.01, 0.5, 0.9, 0.999}) EXPECT_GE(es_empirical(x, a), var_empirical(x, a));
}

TEST(MonteCarlo, DeterministicAndConvergent) {
  const GpdParams p(0, 1, 0);
  EXPECT_EQ(var_monte_carlo(p, 0.99, 5000, 4), var_monte_carlo(p, 0.99, 5000, 4));
  EXPECT_NEAR(var_monte_carlo(p, 0.99, 1000000, 8), 4.605, 0.05);
  EXPECT_THROW(var_monte_carlo(p, 0.99, 99, 1), Error);
  // Mean absolute error over seeds shrinks as n grows fourfold.
  const double truth = var_model(p, 0.99);
  double prev = INFINITY;
  for (std::size_t n : {10000u, 40000u, 160000u}) {
    double err = 0.0;
    for (std::uint64_t s = 0; s < 40; ++s)
      err += std::abs(var_monte_carlo(p, 0.99, n, derive_seed(n, s)) - truth);
    EXPECT_LT(err, prev) << n;
    prev = err;
  }
}

TEST(TwoStep, UnitVarianceReducesToResidualModel) {
  GarchFit g;
  g.params = GarchParams(0.0, 1.0, 0.0, 0.0);
  g.cond_sd = {1.0};
  FittedMixture m;
  m.spec = make_single_tail(MixtureKind::NormGpd, Normal(0, 1), {GpdParams(1.0, 0.6, 0.2)});
  const auto r = two_step_var_es(g, m, 0.7, 0.99);
  EXPECT_EQ(r.var, var_model(m.spec, 0.99));
  EXPECT_EQ(r.es, es_numeric(m.spec, 0.99));
  EXPECT_GE(r.es, r.var);
}

TEST(TwoStep, AffineInSigma) {
  GarchFit g;
  g.params = GarchParams(0.3, 1.0, 0.0, 0.0);
  g.cond_sd = {1.0};
  FittedMixture m;
  m.spec = make_single_tail(MixtureKind::NormGpd, Normal(0, 1), {GpdParams(1.0, 0.6, 0.2)});
  const auto a = two_step_var_es(g, m, 0.0, 0.99);
  g.params = GarchParams(0.3, 4.0, 0.0, 0.0);
  const auto b = two_step_var_es(g, m, 0.0, 0.99);
  EXPECT_NEAR(b.var - 0.3, 2.0 * (a.var - 0.3), 1e-12);
  EXPECT_NEAR(b.es - 0.3, 2.0 * (a.es - 0.3), 1e-12);
}

TEST(TwoStep, BacktestExceedanceFrequency) {
  // GARCH(1,1) with heavy-tailed residuals from a normal-GPD mixture.
  const auto z_law =
      make_single_tail(MixtureKind::NormGpd, Normal(0, 1), {GpdParams(1.2816, 0.6, 0.15)});
  UniformStream u(2718);
  const auto x = oracle::simulate_garch(
      0.0, 0.05, 0.10, 0.85, 7000, [&](std::size_t) { return mixture_quantile(z_law, u()); });
  const std::vector<double> train(x.begin(), x.begin() + 2000);
  const auto two = two_step_fit(train, {MixtureKind::NormGpd});
  const double z99 = two.residual_quantile_upper(0.01);
  const auto path = garch_filter(two.garch.params, x, two.garch.presample_variance);
  int hits = 0;
  for (std::size_t t = 2000; t < 7000; ++t)
    if (x[t] > two.garch.params.mu + path.cond_sd[t] * z99) ++hits;
  const double freq = hits / 5000.0;
  EXPECT_GE(freq, 0.005);
  EXPECT_LE(freq, 0.02);
}
