#include "tailmix/simulation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "tailmix/error.hpp"
#include "tailmix/io.hpp"
#include "tailmix/random.hpp"
#include "tailmix/timeseries.hpp"

namespace tailmix {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Standard normal draws from a dedicated stream.
std::vector<double> std_normals(std::size_t n, std::uint64_t seed) {
  UniformStream u(seed);
  std::vector<double> z(n);
  for (double& v : z) v = std_normal_quantile(u());
  return z;
}

double draw_rho(const CopulaConfig& c, std::uint64_t seed) {
  UniformStream u(derive_seed(seed, 1));
  return c.bound * (2.0 * u() - 1.0);
}

Eigen::MatrixXd random_psd_matrix(const CopulaConfig& c, const RandomPsd& r, std::size_t n,
                                  std::uint64_t seed) {
  const std::uint64_t ms = r.matrix_seed ? *r.matrix_seed : derive_seed(seed, 2);
  const auto k = static_cast<Eigen::Index>(r.factors);
  const auto m = static_cast<Eigen::Index>(n);
  const auto z = std_normals(n * r.factors, ms);
  Eigen::MatrixXd a(m, k);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = z[static_cast<std::size_t>(i * k + j)];
  a.rowwise().normalize();
  Eigen::MatrixXd corr = c.bound * (a * a.transpose());
  corr.diagonal().setOnes();
  return corr;
}

// Marginal transform x -> F^-1(Phi(x)), using the upper tail for x > 0 so
// Phi never rounds to 1.
double to_marginal(const BulkFamily& f, double x) {
  return x > 0.0 ? quantile_upper(f, std_normal_cdf(-x)) : quantile(f, std_normal_cdf(x));
}

double parse_arg(const std::string& s, const std::string& text) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && end == t.data() + t.size() && !t.empty(),
          ErrorKind::InvalidArgument, "population '" + text + "': bad number '" + t + "'");
  return v;
}

}  // namespace

void validate(const CopulaConfig& c) {
  require(c.bound >= 0.0 && c.bound < 1.0, ErrorKind::InvalidArgument,
          "copula: bound must lie in [0, 1)");
  if (const auto* a = std::get_if<Ar1>(&c.structure); a && a->rho)
    require(std::abs(*a->rho) <= c.bound, ErrorKind::InvalidArgument,
            "copula: |rho| exceeds the bound");
  if (const auto* r = std::get_if<RandomPsd>(&c.structure))
    require(r->factors >= 1, ErrorKind::InvalidArgument, "copula: need at least one factor");
}

std::vector<PopulationSpec> study_populations_iid() {
  return {
      {"Norm(0,4)", Normal(0, 4), std::nullopt},
      {"Student(5,0)", StudentT(5, 0), std::nullopt},
      {"Student(5,5)", StudentT(5, 5), std::nullopt},
      {"Gumbel(5)", Gumbel(0, 5), std::nullopt},
      {"Weibull(5,2)", Weibull(2, 5), std::nullopt},
      {"ReverseWeibull(5,2)", ReverseWeibull(2, 5), std::nullopt},
  };
}

std::vector<PopulationSpec> study_populations_dependent() {
  const CopulaConfig c{};
  return {
      {"Gamma(5,1) copula", Gamma(5, 1), c},
      {"Student(5) copula", StudentT(5, 0), c},
      {"Norm(0,4) copula", Normal(0, 4), c},
      {"Weibull(5,2) copula", Weibull(2, 5), c},
  };
}

PopulationSpec parse_population(const std::string& text, std::optional<CopulaConfig> dependence) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  require(open != std::string::npos && t.back() == ')', ErrorKind::InvalidArgument,
          "population '" + text + "': expected name(args)");
  const std::string name = lower(trim(t.substr(0, open)));
  std::vector<double> args;
  std::string inner = t.substr(open + 1, t.size() - open - 2);
  std::size_t start = 0;
  for (;;) {
    const auto comma = inner.find(',', start);
    args.push_back(parse_arg(inner.substr(start, comma - start), text));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  const auto want = [&](std::size_t lo, std::size_t hi) {
    require(args.size() >= lo && args.size() <= hi, ErrorKind::InvalidArgument,
            "population '" + text + "': wrong number of arguments");
  };
  PopulationSpec p{"", Normal(0, 1), dependence};
  if (name == "norm" || name == "normal") {
    want(2, 2);
    p.name = "Norm(" + num(args[0]) + "," + num(args[1]) + ")";
    p.family = Normal(args[0], args[1]);
  } else if (name == "t" || name == "student") {
    want(1, 2);
    const double loc = args.size() == 2 ? args[1] : 0.0;
    p.name = "Student(" + num(args[0]) + "," + num(loc) + ")";
    p.family = StudentT(args[0], loc);
  } else if (name == "gumbel") {
    want(1, 2);
    const double loc = args.size() == 2 ? args[0] : 0.0;
    const double scale = args.back();
    p.name = args.size() == 2 ? "Gumbel(" + num(loc) + "," + num(scale) + ")"
                              : "Gumbel(" + num(scale) + ")";
    p.family = Gumbel(loc, scale);
  } else if (name == "weibull") {
    want(2, 2);
    p.name = "Weibull(" + num(args[0]) + "," + num(args[1]) + ")";
    p.family = Weibull(args[1], args[0]);
  } else if (name == "rweibull" || name == "reverseweibull") {
    want(2, 2);
    p.name = "ReverseWeibull(" + num(args[0]) + "," + num(args[1]) + ")";
    p.family = ReverseWeibull(args[1], args[0]);
  } else if (name == "gamma") {
    want(2, 2);
    p.name = "Gamma(" + num(args[0]) + "," + num(args[1]) + ")";
    p.family = Gamma(args[0], args[1]);
  } else if (name == "lnorm" || name == "lognormal") {
    want(2, 2);
    p.name = "LogNorm(" + num(args[0]) + "," + num(args[1]) + ")";
    p.family = LogNormal(args[0], args[1]);
  } else {
    throw Error(ErrorKind::InvalidArgument, "population '" + text + "': unknown family");
  }
  if (dependence) {
    validate(*dependence);
    p.name += " copula";
  }
  return p;
}

double true_quantile(const PopulationSpec& pop, double p) {
  require(p > 0.0 && p < 1.0, ErrorKind::InvalidArgument, "true_quantile: p must lie in (0, 1)");
  return p > 0.5 ? quantile_upper(pop.family, 1.0 - p) : quantile(pop.family, p);
}

std::vector<std::vector<double>> copula_correlation(const CopulaConfig& c, std::size_t n,
                                                    std::uint64_t seed) {
  validate(c);
  std::vector<std::vector<double>> out(n, std::vector<double>(n));
  if (const auto* a = std::get_if<Ar1>(&c.structure)) {
    const double rho = a->rho ? *a->rho : draw_rho(c, seed);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out[i][j] = std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
    return out;
  }
  const auto m = random_psd_matrix(c, std::get<RandomPsd>(c.structure), n, seed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i][j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

std::vector<double> copula_normals(const CopulaConfig& c, std::size_t n, std::uint64_t seed) {
  validate(c);
  require(n >= 2, ErrorKind::InvalidArgument, "copula_normals: need n >= 2");
  auto z = std_normals(n, derive_seed(seed, 0));
  if (const auto* a = std::get_if<Ar1>(&c.structure)) {
    // The Cholesky factor of rho^|i-j| is the AR(1) recursion.
    const double rho = a->rho ? *a->rho : draw_rho(c, seed);
    const double innov = std::sqrt(1.0 - rho * rho);
    for (std::size_t t = 1; t < n; ++t) z[t] = rho * z[t - 1] + innov * z[t];
    return z;
  }
  const auto corr = random_psd_matrix(c, std::get<RandomPsd>(c.structure), n, seed);
  const Eigen::LLT<Eigen::MatrixXd> llt(corr);
  require(llt.info() == Eigen::Success, ErrorKind::NotPositiveDefinite,
          "copula_normals: correlation matrix is not positive definite");
  const Eigen::VectorXd x =
      llt.matrixL() * Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(n));
  return {x.data(), x.data() + x.size()};
}

std::vector<double> sample_population(const PopulationSpec& pop, std::size_t n,
                                      std::uint64_t seed) {
  if (!pop.dependence) return sample(pop.family, n, seed);
  auto x = copula_normals(*pop.dependence, n, seed);
  for (double& v : x) v = to_marginal(pop.family, v);
  return x;
}

std::vector<std::string> study_model_names() {
  return {"normGPD",     "normGPDcon", "hybridGPD", "hybridGPDcon", "weibullGPD",
          "gammaGPD",    "lognormalGPD", "kernelGPD", "GNG",        "GNGcon"};
}

StudyModel parse_study_model(const std::string& name) {
  std::string key = lower(trim(name));
  bool garch = false;
  for (const std::string suffix : {" garch", "_garch", "-garch"}) {
    if (key.size() > suffix.size() && key.ends_with(suffix)) {
      key.resize(key.size() - suffix.size());
      garch = true;
      break;
    }
  }
  for (const auto& canonical : study_model_names()) {
    if (lower(canonical) != key) continue;
    MixtureModel m;
    const bool con = key.ends_with("con");
    const std::string base = con ? key.substr(0, key.size() - 3) : key;
    if (base == "normgpd") m.kind = MixtureKind::NormGpd;
    else if (base == "hybridgpd") m.kind = MixtureKind::HybridPareto;
    else if (base == "weibullgpd") m.kind = MixtureKind::WeibullGpd;
    else if (base == "gammagpd") m.kind = MixtureKind::GammaGpd;
    else if (base == "lognormalgpd") m.kind = MixtureKind::LognormalGpd;
    else if (base == "kernelgpd") m.kind = MixtureKind::KernelGpd;
    else m.kind = MixtureKind::Gng;
    if (m.kind == MixtureKind::HybridPareto) m.smooth_junction = !con;
    else m.continuity = con;
    return {garch ? canonical + " GARCH" : canonical, m, garch};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model '" + name + "'");
}

std::string to_string(BackTransform b) {
  return b == BackTransform::Unconditional ? "unconditional" : "forecast";
}

void validate(const StudyConfig& cfg) {
  require(cfg.replicates >= 1, ErrorKind::InvalidArgument, "study: replicates must be >= 1");
  require(cfg.sample_size >= 2, ErrorKind::InvalidArgument, "study: sample size must be >= 2");
  require(!cfg.populations.empty(), ErrorKind::InvalidArgument, "study: no populations");
  require(!cfg.models.empty(), ErrorKind::InvalidArgument, "study: no models");
  require(!cfg.levels.empty(), ErrorKind::InvalidArgument, "study: no levels");
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    require(cfg.levels[i] > 0.0 && cfg.levels[i] < 1.0, ErrorKind::InvalidArgument,
            "study: levels must lie in (0, 1)");
    require(i == 0 || cfg.levels[i] > cfg.levels[i - 1], ErrorKind::InvalidArgument,
            "study: levels must be strictly increasing");
  }
  for (const auto& p : cfg.populations)
    if (p.dependence) validate(*p.dependence);
  validate(cfg.search);
  validate(cfg.optimizer);
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t population, std::size_t r) {
  return derive_seed(derive_seed(master, population), r);
}

double rmse(std::span<const double> estimates, double truth) {
  require(!estimates.empty(), ErrorKind::EmptySample, "rmse: no estimates");
  double ss = 0.0;
  for (double e : estimates) ss += (e - truth) * (e - truth);
  return std::sqrt(ss / static_cast<double>(estimates.size()));
}

namespace {

std::vector<double> estimate_levels(const StudyConfig& cfg, const StudyModel& sm,
                                    std::span<const double> x) {
  MixtureModel mm = sm.model;
  const auto with_bandwidth = [&](std::span<const double> series) {
    if (mm.kind == MixtureKind::KernelGpd && !mm.bandwidth &&
        cfg.kernel_bandwidth == KernelBandwidth::ReferenceRule)
      mm.bandwidth = kde_reference_bandwidth(series);
  };
  std::vector<double> q;
  q.reserve(cfg.levels.size());
  if (!sm.garch) {
    with_bandwidth(x);
    const auto fit = fit_mixture(x, mm, cfg.search, cfg.optimizer);
    for (double p : cfg.levels) q.push_back(mixture_quantile(fit.best.spec, p));
  } else {
    // Residuals placed on the data scale, mu + s z with s the sample sd, so
    // positive-support bulks apply; the placement cancels in the forecast map.
    const auto g = fit_garch11(x, cfg.optimizer);
    const double mu = g.params.mu;
    const double spread = describe(x).sd;
    std::vector<double> y(g.residuals);
    for (double& z : y) z = mu + spread * z;
    with_bandwidth(y);
    const auto fit = fit_mixture(y, mm, cfg.search, cfg.optimizer);
    const double s = cfg.back_transform == BackTransform::Unconditional
                         ? std::sqrt(g.params.unconditional_variance())
                         : garch_forecast1(g, x.back()).sigma_next;
    for (double p : cfg.levels)
      q.push_back(mu + s * ((mixture_quantile(fit.best.spec, p) - mu) / spread));
  }
  for (double v : q) require(std::isfinite(v), ErrorKind::DegenerateSample, "non-finite quantile");
  return q;
}

}  // namespace

StudyResult run_study(const StudyConfig& cfg) {
  validate(cfg);
  const std::size_t P = cfg.populations.size(), M = cfg.models.size(), R = cfg.replicates,
                    L = cfg.levels.size();
  StudyResult res;
  res.estimates.assign(
      P, std::vector<std::vector<std::vector<double>>>(
             M, std::vector<std::vector<double>>(R, std::vector<double>(L, kNan))));
  // failure[k][m][r]: message, empty on success.
  std::vector<std::vector<std::vector<std::string>>> failure(
      P, std::vector<std::vector<std::string>>(M, std::vector<std::string>(R)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= P * R) return;
      const std::size_t k = task / R, r = task % R;
      try {
        const auto x = sample_population(cfg.populations[k], cfg.sample_size,
                                         replicate_seed(cfg.master_seed, k, r));
        for (std::size_t m = 0; m < M; ++m) {
          try {
            res.estimates[k][m][r] = estimate_levels(cfg, cfg.models[m], x);
          } catch (const std::exception& e) {
            failure[k][m][r] = e.what();
          }
        }
      } catch (...) {
        const std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  unsigned jobs = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, P * R));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  res.table.back_transform = cfg.back_transform;
  res.table.kernel_bandwidth = cfg.kernel_bandwidth;
  res.first_failure.assign(P, std::vector<std::string>(M));
  for (std::size_t k = 0; k < P; ++k)
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t r = 0; r < R; ++r)
        if (!failure[k][m][r].empty()) {
          res.first_failure[k][m] = failure[k][m][r];
          break;
        }
      for (std::size_t l = 0; l < L; ++l) {
        RmseRow row;
        row.population = cfg.populations[k].name;
        row.model = cfg.models[m].name;
        row.level = cfg.levels[l];
        row.truth = true_quantile(cfg.populations[k], row.level);
        std::vector<double> ok;
        for (std::size_t r = 0; r < R; ++r)
          if (failure[k][m][r].empty()) ok.push_back(res.estimates[k][m][r][l]);
        row.n_success = ok.size();
        row.n_fail = R - ok.size();
        row.rmse = ok.empty() ? kNan : rmse(ok, row.truth);
        res.table.rows.push_back(row);
      }
    }
  return res;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void write_csv(std::ostream& out, const RmseTable& table) {
  out << "population,model,level,rmse,n_success,n_fail\n";
  for (const auto& r : table.rows)
    out << csv_field(r.population) << ',' << csv_field(r.model) << ',' << format_number(r.level)
        << ',' << format_number(r.rmse) << ',' << r.n_success << ',' << r.n_fail << '\n';
}

void write_json(std::ostream& out, const RmseTable& table) {
  nlohmann::ordered_json j;
  j["back_transform"] = to_string(table.back_transform);
  j["kernel_bandwidth"] =
      table.kernel_bandwidth == KernelBandwidth::CrossValidated ? "cross-validated" : "reference-rule";
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json o;
    o["population"] = r.population;
    o["model"] = r.model;
    o["level"] = r.level;
    o["truth"] = r.truth;
    o["rmse"] = std::isnan(r.rmse) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.rmse);
    o["n_success"] = r.n_success;
    o["n_fail"] = r.n_fail;
    rows.push_back(std::move(o));
  }
  out << j.dump(2) << '\n';
}

}  // namespace tailmix
