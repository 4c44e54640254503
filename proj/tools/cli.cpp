#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "tailmix/diagnostics.hpp"
#include "tailmix/error.hpp"
#include "tailmix/estimation.hpp"
#include "tailmix/io.hpp"
#include "tailmix/risk.hpp"
#include "tailmix/simulation.hpp"
#include "tailmix/timeseries.hpp"

namespace tailmix::cli {

namespace {

using Json = nlohmann::ordered_json;

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::vector<double> load(const std::string& path) { return read_series_csv_file(path).values; }

// Splits at commas that are not inside parentheses.
std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

StudyModel mixture_model_named(const std::string& name, const std::string& tail_mode,
                               std::optional<double> bandwidth) {
  auto m = parse_study_model(name);
  require(!m.garch, ErrorKind::InvalidArgument,
          "model '" + name + "': GARCH variants are run with the two-step command");
  if (tail_mode == "parameterized") m.model.mode = TailMode::Parameterized;
  m.model.bandwidth = bandwidth;
  return m;
}

Json fit_report_json(const std::string& model_name, const MixtureModel& model,
                     const FitReport& rep, std::size_t n) {
  const auto& spec = rep.best.spec;
  Json j;
  j["model"] = model_name;
  j["kind"] = std::string(to_string(spec.kind));
  j["tail_mode"] = model.mode == TailMode::BulkBased ? "bulk-based" : "parameterized";
  j["continuity"] = spec.continuity;
  Json params = Json::object();
  for (const auto& [k, v] : named_parameters(spec)) params[k] = number(v);
  j["parameters"] = params;
  j["thresholds"] = {{"lower", spec.lower ? number(spec.lower->gpd.u) : Json(nullptr)},
                     {"upper", number(spec.upper.gpd.u)}};
  const auto masses = tail_masses(spec);
  j["phi"] = {{"lower", spec.lower ? number(masses.lower) : Json(nullptr)},
              {"upper", number(masses.upper)}};
  j["log_likelihood"] = number(rep.best.log_likelihood);
  j["n"] = n;
  j["n_exceed_lower"] = rep.best.n_exceed_lower;
  j["n_exceed_upper"] = rep.best.n_exceed_upper;
  j["converged"] = rep.best.converged;
  Json profile = Json::array();
  for (const auto& p : rep.profile)
    profile.push_back({{"lower_threshold", p.lower_threshold ? number(*p.lower_threshold)
                                                             : Json(nullptr)},
                       {"threshold", number(p.threshold)},
                       {"log_likelihood", number(p.log_likelihood)}});
  j["profile"] = profile;
  Json meta;
  meta["threshold_search"] = "profile likelihood over empirical-quantile grid";
  if (spec.kind == MixtureKind::HybridPareto)
    meta["smooth_junction"] = spec.smooth_junction;
  if (spec.kind == MixtureKind::KernelGpd) {
    meta["bandwidth_source"] = model.bandwidth ? "fixed" : "leave-one-out cross-validation";
    meta["log_likelihood_form"] = "leave-one-out bulk density";
  }
  j["metadata"] = meta;
  return j;
}

Json garch_json(const GarchFit& g, double last) {
  const auto f = garch_forecast1(g, last);
  return {{"mu", g.params.mu},
          {"alpha0", g.params.alpha0},
          {"alpha1", g.params.alpha1},
          {"beta1", g.params.beta1},
          {"persistence", g.params.alpha1 + g.params.beta1},
          {"unconditional_variance", g.params.unconditional_variance()},
          {"log_likelihood", number(g.log_likelihood)},
          {"presample_variance", g.presample_variance},
          {"converged", g.converged},
          {"n", g.residuals.size()},
          {"forecast", {{"mu_next", f.mu_next}, {"sigma_next", f.sigma_next}}}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extreme-value mixture models, GARCH filtering, VaR/ES and tail studies.",
               "tailmix"};
  app.require_subcommand(1);

  std::string in, out_path, kind = "log", model_name = "normGPD", tail_mode = "bulk",
                            method = "model", scale = "standardized", param = "xi",
                            format = "csv", copula = "none", back = "forecast",
                            bandwidth_rule = "cv";
  std::optional<double> bandwidth, rho;
  double alpha = 0.99;
  std::size_t mc_n = 100000, min_exc = kDefaultMinExceedances, grid_count = 40,
              replicates = 50, n = 1000;
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 1;
  bool mrl = false, stability = false, negate = false;
  std::vector<std::string> pops, models_list;
  std::vector<double> levels;

  const auto add_in = [&](CLI::App* s) {
    s->add_option("--in", in, "input CSV (one column, or date,value)")->required();
    s->add_option("--out", out_path, "write results here instead of standard output");
  };
  const auto add_model = [&](CLI::App* s) {
    s->add_option("--model", model_name, "mixture model (normGPD, GNG, kernelGPD, ...)");
    s->add_option("--tail-mode", tail_mode, "tail fraction: bulk or parameterized")
        ->check(CLI::IsMember({"bulk", "parameterized"}));
    s->add_option("--bandwidth", bandwidth, "fixed kernel bandwidth (kernelGPD)");
    s->add_option("--min-exceed", min_exc, "minimum points per tail and bulk");
  };

  auto* c_returns = app.add_subcommand("returns", "prices to log, arithmetic or loss returns");
  add_in(c_returns);
  c_returns->add_option("--kind", kind, "log, arithmetic or loss (negated log)")
      ->check(CLI::IsMember({"log", "arithmetic", "loss"}));

  auto* c_describe = app.add_subcommand("describe", "summary statistics (JSON)");
  add_in(c_describe);

  auto* c_fit = app.add_subcommand("fit", "fit a mixture model (JSON report)");
  add_in(c_fit);
  add_model(c_fit);

  auto* c_garch = app.add_subcommand("garch", "fit GARCH(1,1) (JSON)");
  add_in(c_garch);

  auto* c_two = app.add_subcommand("two-step", "GARCH(1,1) filter then mixture on residuals");
  add_in(c_two);
  add_model(c_two);
  c_two->add_option("--scale", scale, "residual scale: standardized or data")
      ->check(CLI::IsMember({"standardized", "data"}));

  auto* c_risk = app.add_subcommand("risk", "VaR and ES of a loss series (JSON)");
  add_in(c_risk);
  add_model(c_risk);
  c_risk->add_option("--alpha", alpha, "confidence level in (0, 1)");
  c_risk->add_option("--method", method, "empirical, model, mc or two-step")
      ->check(CLI::IsMember({"empirical", "model", "mc", "two-step"}));
  c_risk->add_option("--mc-n", mc_n, "Monte Carlo draws");
  c_risk->add_option("--seed", seed, "Monte Carlo seed");
  c_risk->add_flag("--negate", negate, "input holds returns; analyse their negation");

  auto* c_diag = app.add_subcommand("diagnose", "threshold diagnostics (plot-ready CSV)");
  add_in(c_diag);
  auto* f_mrl = c_diag->add_flag("--mrl", mrl, "mean residual life");
  auto* f_stab = c_diag->add_flag("--stability", stability, "threshold stability");
  f_mrl->excludes(f_stab);
  c_diag->add_option("--param", param, "stability estimate: xi or scale (modified scale)")
      ->check(CLI::IsMember({"xi", "scale"}));
  c_diag->add_option("--grid", grid_count, "number of thresholds");
  c_diag->add_option("--min-exceed", min_exc, "minimum exceedances (stability)");

  auto* c_study = app.add_subcommand("simulate-study", "replicated tail-quantile RMSE study");
  c_study->add_option("--pop", pops, "population, e.g. norm(0,4); iid or dependent for a catalog")
      ->required();
  c_study->add_option("--models", models_list, "comma-separated model list")
      ->required()
      ->delimiter(',');
  c_study->add_option("--replicates", replicates, "replicates per population");
  c_study->add_option("--n", n, "sample size");
  c_study->add_option("--seed", seed, "master seed");
  c_study->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  c_study->add_option("--levels", levels, "comma-separated quantile levels")->delimiter(',');
  c_study->add_option("--copula", copula, "dependence for explicit populations: none, ar1, psd")
      ->check(CLI::IsMember({"none", "ar1", "psd"}));
  c_study->add_option("--rho", rho, "fixed AR1 correlation (default: redrawn per replicate)");
  c_study->add_option("--back-transform", back, "two-step quantile map: forecast or unconditional")
      ->check(CLI::IsMember({"forecast", "unconditional"}));
  c_study->add_option("--kernel-bandwidth", bandwidth_rule, "kernelGPD bandwidth: cv or reference")
      ->check(CLI::IsMember({"cv", "reference"}));
  c_study->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  c_study->add_option("--out", out_path, "write results here instead of standard output");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (c_diag->parsed() && !mrl && !stability)
      throw CLI::ValidationError("diagnose", "one of --mrl or --stability is required");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  std::ostringstream res;
  std::string stage = "input";
  try {
    ThresholdSearchConfig search;
    search.min_exceedances = min_exc;

    if (c_returns->parsed()) {
      const auto csv = read_series_csv_file(in);
      stage = "returns";
      PriceSeries prices{csv.values, csv.labels};
      auto r = to_returns(prices, kind == "arithmetic" ? ReturnKind::Arithmetic : ReturnKind::Log);
      if (kind == "loss") r = loss_series(r);
      for (std::size_t t = 0; t < r.values.size(); ++t) {
        if (!csv.labels.empty()) res << csv.labels[t + 1] << ',';
        res << format_number(r.values[t]) << '\n';
      }
    } else if (c_describe->parsed()) {
      const auto x = load(in);
      stage = "describe";
      const auto s = describe(x);
      Json j{{"n", s.n},           {"mean", s.mean}, {"median", s.median},
             {"min", s.min},       {"max", s.max},   {"sd", number(s.sd)},
             {"skewness", number(s.skewness)}, {"kurtosis", number(s.kurtosis)}};
      res << j.dump(2) << '\n';
    } else if (c_fit->parsed()) {
      const auto x = load(in);
      stage = "fit";
      const auto m = mixture_model_named(model_name, tail_mode, bandwidth);
      const auto rep = fit_mixture(x, m.model, search);
      res << fit_report_json(m.name, m.model, rep, x.size()).dump(2) << '\n';
    } else if (c_garch->parsed()) {
      const auto x = load(in);
      stage = "garch";
      res << garch_json(fit_garch11(x), x.back()).dump(2) << '\n';
    } else if (c_two->parsed()) {
      const auto x = load(in);
      stage = "two-step";
      const auto m = mixture_model_named(model_name, tail_mode, bandwidth);
      const auto two = two_step_fit(x, m.model, search, {},
                                    scale == "data" ? ResidualScale::DataScale
                                                    : ResidualScale::Standardized);
      Json j;
      j["garch"] = garch_json(two.garch, x.back());
      j["residual_fit"] = fit_report_json(m.name, m.model, two.residual_fit, x.size());
      j["residual_center"] = two.center;
      j["residual_spread"] = two.spread;
      j["metadata"] = {{"residual_scale", scale},
                       {"back_transform", "forecast"},
                       {"squared_acf_raw", number(squared_acf(x))},
                       {"squared_acf_residuals", number(squared_acf(two.garch.residuals))}};
      res << j.dump(2) << '\n';
    } else if (c_risk->parsed()) {
      auto x = load(in);
      if (negate)
        for (double& v : x) v = -v;
      stage = "risk (" + method + ")";
      RiskReport r;
      r.alpha = alpha;
      r.method = method;
      Json j;
      if (method == "empirical") {
        r.var = var_empirical(x, alpha);
        r.es = es_empirical(x, alpha);
      } else if (method == "two-step") {
        const auto m = mixture_model_named(model_name, tail_mode, bandwidth);
        const auto two = two_step_fit(x, m.model, search);
        r = two_step_var_es(two, x.back(), alpha);
        j["model"] = m.name;
        j["back_transform"] = "forecast";
      } else {
        const auto m = mixture_model_named(model_name, tail_mode, bandwidth);
        const auto fit = fit_mixture(x, m.model, search);
        j["model"] = m.name;
        if (method == "model") {
          r.var = var_model(fit.best.spec, alpha);
          r.es = es_numeric(fit.best.spec, alpha);
        } else {
          r.var = var_monte_carlo(fit.best.spec, alpha, mc_n, seed);
          r.es = es_empirical(sample(fit.best.spec, mc_n, seed), alpha);
          j["mc_draws"] = mc_n;
          j["seed"] = seed;
        }
      }
      j["method"] = r.method;
      j["alpha"] = r.alpha;
      j["var"] = number(r.var);
      j["es"] = number(r.es);
      res << j.dump(2) << '\n';
    } else if (c_diag->parsed()) {
      const auto x = load(in);
      stage = mrl ? "diagnose (mrl)" : "diagnose (stability)";
      const auto grid = default_threshold_grid(x, grid_count);
      res << "u,estimate,ci_low,ci_high,n_exceed\n";
      const auto row = [&](double u, double e, double lo, double hi, std::size_t k) {
        res << format_number(u) << ',' << format_number(e) << ',' << format_number(lo) << ','
            << format_number(hi) << ',' << k << '\n';
      };
      std::vector<SkippedThreshold> skipped;
      if (mrl) {
        const auto t = mean_residual_life(x, grid);
        for (const auto& p : t.points) row(p.u, p.mean_excess, p.ci_low, p.ci_high, p.n_exceed);
        skipped = t.skipped;
      } else {
        const auto t = threshold_stability(x, grid, min_exc);
        for (const auto& p : t.points) {
          if (param == "xi") row(p.u, p.xi_hat, p.xi_ci_low, p.xi_ci_high, p.n_exceed);
          else row(p.u, p.modified_scale, p.scale_ci_low, p.scale_ci_high, p.n_exceed);
        }
        skipped = t.skipped;
      }
      for (const auto& s : skipped)
        err << "diagnose: skipped u=" << format_number(s.u) << ": " << s.reason << '\n';
    } else if (c_study->parsed()) {
      stage = "simulate-study";
      StudyConfig cfg;
      std::optional<CopulaConfig> dep;
      if (copula == "ar1") dep = CopulaConfig{Ar1{rho}};
      if (copula == "psd") dep = CopulaConfig{RandomPsd{}};
      require(!rho || copula == "ar1", ErrorKind::InvalidArgument, "--rho needs --copula ar1");
      for (const auto& arg : pops)
        for (const auto& p : split_top_level(arg)) {
          if (p == "iid" || p == "dependent") {
            const auto cat = p == "iid" ? study_populations_iid() : study_populations_dependent();
            cfg.populations.insert(cfg.populations.end(), cat.begin(), cat.end());
          } else {
            cfg.populations.push_back(parse_population(p, dep));
          }
        }
      for (const auto& m : models_list) cfg.models.push_back(parse_study_model(m));
      cfg.replicates = replicates;
      cfg.sample_size = n;
      cfg.master_seed = seed;
      cfg.jobs = jobs;
      if (!levels.empty()) cfg.levels = levels;
      cfg.back_transform =
          back == "forecast" ? BackTransform::Forecast : BackTransform::Unconditional;
      cfg.kernel_bandwidth = bandwidth_rule == "cv" ? KernelBandwidth::CrossValidated
                                                    : KernelBandwidth::ReferenceRule;
      const auto study = run_study(cfg);
      if (format == "json") write_json(res, study.table);
      else write_csv(res, study.table);
      for (std::size_t k = 0; k < cfg.populations.size(); ++k)
        for (std::size_t m = 0; m < cfg.models.size(); ++m)
          if (!study.first_failure[k][m].empty())
            err << "simulate-study: " << cfg.populations[k].name << " / " << cfg.models[m].name
                << ": first failure: " << study.first_failure[k][m] << '\n';
    }
  } catch (const Error& e) {
    err << "tailmix " << stage << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "tailmix " << stage << ": " << e.what() << '\n';
    return 2;
  }

  if (out_path.empty()) {
    out << res.str();
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) {
      err << "tailmix output: cannot write '" << out_path << "'\n";
      return 2;
    }
    f << res.str();
  }
  return 0;
}

}  // namespace tailmix::cli
