#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "tailmix/diagnostics.hpp"
#include "tailmix/estimation.hpp"
#include "tailmix/io.hpp"
#include "tailmix/risk.hpp"
#include "tailmix/simulation.hpp"

using namespace tailmix;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tailmix_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = (dir_ / name).string();
    std::ofstream(p) << text;
    return p;
  }
  std::string write_values(const std::string& name, const std::vector<double>& v) {
    std::string s = "value\n";
    for (double x : v) s += format_number(x) + "\n";
    return write(name, s);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ReturnsExample) {
  const auto r = call({"returns", "--in", write("p.csv", "100\n110\n"), "--kind", "log"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.095310179804324935\n");
  EXPECT_EQ(std::stod(r.out), std::log(1.1));
}

TEST_F(Cli, ReturnsKindsAndLabels) {
  const auto p = write("p.csv", "date,close\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n");
  EXPECT_EQ(call({"returns", "--in", p, "--kind", "arithmetic"}).out,
            "2020-01-02," + format_number(0.1) + "\n2020-01-03," + format_number(-11.0 / 110.0) +
                "\n");
  const auto loss = call({"returns", "--in", p, "--kind", "loss"});
  EXPECT_EQ(loss.out.substr(0, loss.out.find('\n')),
            "2020-01-02," + format_number(-std::log(110.0 / 100.0)));
  EXPECT_EQ(call({"returns", "--in", p, "--kind", "cubic"}).code, 1);
  EXPECT_EQ(call({"returns", "--in", write("bad.csv", "100\n-1\n")}).code, 2);
}

TEST_F(Cli, UsageAndDataErrors) {
  const auto p = write("p.csv", "1\n2\n");
  EXPECT_EQ(call({}).code, 1);
  EXPECT_EQ(call({"frobnicate"}).code, 1);
  EXPECT_EQ(call({"describe", "--in", p, "--bogus"}).code, 1);
  EXPECT_EQ(call({"describe"}).code, 1);
  EXPECT_EQ(call({"--help"}).code, 0);
  const auto missing = call({"describe", "--in", (dir_ / "nope.csv").string()});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("cannot open"), std::string::npos);
  const auto garbled = call({"describe", "--in", write("g.csv", "x\n1\nabc\n")});
  EXPECT_EQ(garbled.code, 2);
  EXPECT_NE(garbled.err.find("line 3"), std::string::npos);
  EXPECT_TRUE(garbled.out.empty());
}

TEST_F(Cli, DescribeMatchesLibrary) {
  const auto x = sample(Normal(1, 2), 500, 3);
  const auto r = call({"describe", "--in", write_values("x.csv", x)});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  const auto s = describe(x);
  EXPECT_EQ(j["n"], 500);
  EXPECT_EQ(j["mean"].get<double>(), s.mean);
  EXPECT_EQ(j["kurtosis"].get<double>(), s.kurtosis);
}

TEST_F(Cli, FitSupportViolation) {
  const auto p = write_values("neg.csv", sample(Normal(-3, 1), 200, 1));
  const auto r = call({"fit", "--model", "gammaGPD", "--in", p});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("support violation"), std::string::npos);
  EXPECT_NE(r.err.find("fit"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, FitReportIsThinAdapter) {
  const auto x = sample(StudentT(5, 0), 600, 9);
  const auto r = call({"fit", "--model", "GNG", "--in", write_values("x.csv", x)});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto rep = fit_mixture(x, {MixtureKind::Gng});
  EXPECT_EQ(j["log_likelihood"].get<double>(), rep.best.log_likelihood);
  EXPECT_EQ(j["thresholds"]["upper"].get<double>(), rep.best.spec.upper.gpd.u);
  EXPECT_EQ(j["thresholds"]["lower"].get<double>(), rep.best.spec.lower->gpd.u);
  EXPECT_EQ(j["phi"]["upper"].get<double>(), tail_masses(rep.best.spec).upper);
  EXPECT_EQ(j["profile"].size(), rep.profile.size());
  for (const auto& [k, v] : named_parameters(rep.best.spec))
    EXPECT_EQ(j["parameters"][k].get<double>(), v) << k;
  EXPECT_FALSE(j.contains("wall_time"));
  EXPECT_EQ(call({"fit", "--model", "GNG_GARCH", "--in", write_values("y.csv", x)}).code, 2);
  EXPECT_EQ(call({"fit", "--model", "betaGPD", "--in", write_values("z.csv", x)}).code, 2);
}

TEST_F(Cli, RiskMethods) {
  const auto x = sample(GpdParams(0, 1, 0.1), 2000, 4);
  const auto p = write_values("l.csv", x);
  const auto emp = nlohmann::json::parse(
      call({"risk", "--in", p, "--alpha", "0.99", "--method", "empirical"}).out);
  EXPECT_EQ(emp["var"].get<double>(), var_empirical(x, 0.99));
  EXPECT_EQ(emp["es"].get<double>(), es_empirical(x, 0.99));

  const auto mod = nlohmann::json::parse(call({"risk", "--in", p, "--alpha", "0.99"}).out);
  const auto fit = fit_mixture(x, {MixtureKind::NormGpd});
  EXPECT_EQ(mod["var"].get<double>(), var_model(fit.best.spec, 0.99));
  EXPECT_EQ(mod["es"].get<double>(), es_numeric(fit.best.spec, 0.99));

  const auto mc1 = call({"risk", "--in", p, "--method", "mc", "--mc-n", "5000", "--seed", "3"});
  const auto mc2 = call({"risk", "--in", p, "--method", "mc", "--mc-n", "5000", "--seed", "3"});
  EXPECT_EQ(mc1.code, 0);
  EXPECT_EQ(mc1.out, mc2.out);

  const auto two = call({"risk", "--in", p, "--method", "two-step"});
  EXPECT_EQ(two.code, 0) << two.err;
  const auto tj = nlohmann::json::parse(two.out);
  EXPECT_GE(tj["es"].get<double>(), tj["var"].get<double>());

  const auto neg = nlohmann::json::parse(
      call({"risk", "--in", p, "--method", "empirical", "--negate", "--alpha", "0.5"}).out);
  std::vector<double> y(x);
  for (double& v : y) v = -v;
  EXPECT_EQ(neg["var"].get<double>(), var_empirical(y, 0.5));

  EXPECT_EQ(call({"risk", "--in", p, "--alpha", "1.5", "--method", "empirical"}).code, 2);
  EXPECT_EQ(call({"risk", "--in", p, "--method", "historic"}).code, 1);
}

TEST_F(Cli, GarchAndTwoStep) {
  const auto x = sample(Normal(0, 1), 600, 2);
  const auto p = write_values("r.csv", x);
  const auto g = call({"garch", "--in", p});
  ASSERT_EQ(g.code, 0) << g.err;
  const auto gj = nlohmann::json::parse(g.out);
  const auto fit = fit_garch11(x);
  EXPECT_EQ(gj["alpha1"].get<double>(), fit.params.alpha1);
  EXPECT_EQ(gj["forecast"]["sigma_next"].get<double>(), garch_forecast1(fit, x.back()).sigma_next);
  const auto t = call({"two-step", "--in", p, "--model", "normGPD", "--scale", "data"});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto tj = nlohmann::json::parse(t.out);
  EXPECT_EQ(tj["metadata"]["residual_scale"], "data");
  EXPECT_EQ(tj["metadata"]["back_transform"], "forecast");
  EXPECT_EQ(tj["residual_fit"]["model"], "normGPD");
}

TEST_F(Cli, DiagnosePlotCsv) {
  const auto x = sample(GpdParams(0, 1, 0.2), 3000, 5);
  const auto p = write_values("d.csv", x);
  const auto r = call({"diagnose", "--in", p, "--mrl"});
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(header, "u,estimate,ci_low,ci_high,n_exceed");
  const auto t = mean_residual_life(x, default_threshold_grid(x));
  const auto& q = t.points.front();
  EXPECT_EQ(first, format_number(q.u) + "," + format_number(q.mean_excess) + "," +
                       format_number(q.ci_low) + "," + format_number(q.ci_high) + "," +
                       std::to_string(q.n_exceed));
  const auto s = call({"diagnose", "--in", p, "--stability", "--param", "scale", "--grid", "10"});
  ASSERT_EQ(s.code, 0);
  EXPECT_EQ(std::count(s.out.begin(), s.out.end(), '\n'), 11);
  EXPECT_EQ(call({"diagnose", "--in", p, "--mrl", "--stability"}).code, 1);
  // Thin thresholds are reported on standard error, not in the table.
  const auto thin = call({"diagnose", "--in", write("t.csv", "1\n2\n3\n4\n"), "--stability"});
  EXPECT_EQ(thin.code, 0);
  EXPECT_NE(thin.err.find("skipped"), std::string::npos);
}

TEST_F(Cli, SimulateStudyDeterministic) {
  const std::vector<std::string> base{"simulate-study", "--pop",       "norm(0,4)", "--models",
                                      "GNG,normGPD",    "--replicates", "5",         "--n",
                                      "200",            "--seed",      "7"};
  const auto a = call(base);
  const auto b = call(base);
  auto jobs = base;
  jobs.insert(jobs.end(), {"--jobs", "3"});
  const auto c = call(jobs);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);

  // Same numbers as the library.
  StudyConfig cfg;
  cfg.populations = {parse_population("norm(0,4)")};
  cfg.models = {parse_study_model("GNG"), parse_study_model("normGPD")};
  cfg.replicates = 5;
  cfg.sample_size = 200;
  cfg.master_seed = 7;
  std::ostringstream lib;
  write_csv(lib, run_study(cfg).table);
  EXPECT_EQ(a.out, lib.str());

  auto to_file = base;
  const auto path = (dir_ / "study.json").string();
  to_file.insert(to_file.end(), {"--format", "json", "--out", path});
  ASSERT_EQ(call(to_file).code, 0);
  std::ifstream f(path);
  const auto j = nlohmann::json::parse(f);
  EXPECT_EQ(j["rows"].size(), 16u);
}

TEST_F(Cli, SimulateStudyOptions) {
  const auto r = call({"simulate-study", "--pop", "gamma(5,1),t(5)", "--copula", "ar1", "--rho",
                       "0.5", "--models", "normGPD_GARCH", "--replicates", "2", "--n", "300",
                       "--levels", "0.9,0.99"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"Gamma(5,1) copula\",normGPD GARCH,0.98999999999999999,"),
            std::string::npos);
  EXPECT_NE(r.out.find("\"Student(5,0) copula\""), std::string::npos);
  EXPECT_EQ(call({"simulate-study", "--pop", "norm(0,1)", "--models", "xGPD"}).code, 2);
  EXPECT_EQ(call({"simulate-study", "--pop", "norm(0,1)", "--models", "GNG", "--copula", "ar1",
                  "--rho", "0.95"})
                .code,
            2);
  EXPECT_EQ(call({"simulate-study", "--models", "GNG"}).code, 1);
  // Failed cells are reported on standard error.
  const auto f = call({"simulate-study", "--pop", "norm(0,1)", "--models", "gammaGPD",
                       "--replicates", "2", "--n", "100"});
  EXPECT_EQ(f.code, 0);
  EXPECT_NE(f.err.find("first failure"), std::string::npos);
  EXPECT_NE(f.out.find(",nan,0,2"), std::string::npos);
}
