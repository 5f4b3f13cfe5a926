#include "affreq_cli.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace affreq;
using affreq::testing::TempDir;
using affreq::testing::slurp;
using affreq::testing::write_text;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, CatalogListsEveryScenario) {
  const auto r = run({"catalog"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 8);
  EXPECT_NE(r.out.find("E7"), std::string::npos);
}

TEST(Cli, CompareE3RanksAffineAboveFrenet) {
  TempDir dir;
  const auto r = run({"compare", "E3", "--estimators", "affine,frenet", "--out", dir.file("rep")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = KeyValueFile::load(dir.file("rep.kv"));
  EXPECT_LT(kv.number("affine.rmse_pu"), kv.number("frenet.rmse_pu"));
  EXPECT_FALSE(kv.has("srf_pll.rmse_pu"));
  EXPECT_NE(slurp(dir.file("rep.txt")).find("frenet"), std::string::npos);
}

TEST(Cli, SimulateThenEstimate) {
  TempDir dir;
  const auto wave = dir.file("e1.csv"), truth = dir.file("e1_truth.csv"), trace = dir.file("trace.csv");
  ASSERT_EQ(run({"simulate", "E1", "--out", wave, "--truth", truth, "--duration", "0.5"}).code, 0);
  const auto r = run({"estimate", "--in", wave, "--truth", truth, "--out", trace, "--report", dir.file("rep")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto tt = read_trace_csv(trace);
  EXPECT_EQ(tt.columns, (std::vector<std::string>{"affine", "frenet", "srf_pll", "if_true"}));
  for (std::size_t k = 100; k < tt.t.size() - 100; ++k) ASSERT_NEAR(*tt.column("affine")[k], 1.0, 1e-6);
  EXPECT_LT(KeyValueFile::load(dir.file("rep.kv")).number("affine.max_abs_error_pu"), 1e-6);
}

TEST(Cli, SinglePhaseDefaultsToAffineAndDelayPll) {
  TempDir dir;
  const auto wave = dir.file("sp.csv");
  ASSERT_EQ(run({"simulate", "SP", "--out", wave, "--duration", "1"}).code, 0);
  const auto r = run({"estimate", "--in", wave, "--schema", "single_phase", "--out", dir.file("t.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_trace_csv(dir.file("t.csv")).columns, (std::vector<std::string>{"affine", "delay_pll"}));
}

TEST(Cli, ScenarioAndEstimatorConfigFiles) {
  TempDir dir;
  const auto scen = dir.file("scen.cfg"), est = dir.file("est.cfg");
  ASSERT_EQ(run({"simulate", "E6", "--out", dir.file("w.csv"), "--save-config", scen}).code, 0);
  write_text(est, "estimators = affine\npostfilter.cutoff_hz = 25\n");
  const auto r = run({"compare", scen, "--config", est, "--out", dir.file("rep")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(KeyValueFile::load(dir.file("rep.kv")).number("affine.rmse_pu"), 2e-3);
}

TEST(Cli, ErrorsMapToExitCodes) {
  TempDir dir;
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"compare", "E42"}).code, 1);
  EXPECT_EQ(run({"estimate", "--in", dir.file("missing.csv"), "--out", dir.file("t.csv")}).code, 2);
  write_text(dir.file("bad.csv"), "t,va,vb\n0,1,1\n1,1,1\n2,1,1\n3,1,1\n");
  EXPECT_EQ(run({"estimate", "--in", dir.file("bad.csv"), "--out", dir.file("t.csv")}).code, 2);
  write_text(dir.file("bad.cfg"), "estimators = kalman\n");
  EXPECT_EQ(run({"compare", "E1", "--config", dir.file("bad.cfg")}).code, 1);
  const auto r = run({"estimate", "--in", dir.file("bad.csv"), "--out", dir.file("t.csv"), "--schema", "dq"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, CompareIsByteIdenticalAcrossRuns) {
  TempDir dir;
  for (const char* p : {"a", "b"})
    ASSERT_EQ(run({"compare", "E7", "--snr-db", "50", "--seed", "3", "--out", dir.file(p), "--trace-out",
                   dir.file(std::string(p) + ".csv")})
                  .code,
              0);
  EXPECT_EQ(slurp(dir.file("a.kv")), slurp(dir.file("b.kv")));
  EXPECT_EQ(slurp(dir.file("a.txt")), slurp(dir.file("b.txt")));
  EXPECT_EQ(slurp(dir.file("a.csv")), slurp(dir.file("b.csv")));
}

TEST(Cli, SeedFromEnvironment) {
  TempDir dir;
  ::setenv(cli::seed_env_var, "17", 1);
  ASSERT_EQ(run({"simulate", "E1", "--out", dir.file("a.csv"), "--snr-db", "40", "--duration", "0.1"}).code, 0);
  ASSERT_EQ(run({"simulate", "E1", "--out", dir.file("b.csv"), "--snr-db", "40", "--duration", "0.1"}).code, 0);
  ASSERT_EQ(run({"simulate", "E1", "--out", dir.file("c.csv"), "--snr-db", "40", "--duration", "0.1", "--seed", "18"})
                .code,
            0);
  ::unsetenv(cli::seed_env_var);
  EXPECT_EQ(slurp(dir.file("a.csv")), slurp(dir.file("b.csv")));
  EXPECT_NE(slurp(dir.file("a.csv")), slurp(dir.file("c.csv")));
}

} // namespace
