// Copyright 2026 The dpdi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dpdi/harness.hpp"

#ifndef DPDI_CLI_PATH
#define DPDI_CLI_PATH "dpdi"
#endif
#ifndef DPDI_SOURCE_DIR
#define DPDI_SOURCE_DIR "."
#endif

namespace dpdi {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("dpdi_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

// Runs the CLI with stdout and stderr sent to files and returns the exit code.
int run_cli(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
  const fs::path o = scratch("stdout.txt"), e = scratch("stderr.txt");
  const std::string cmd = std::string("\"") + DPDI_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" +
                          e.string() + "\"";
  const int status = std::system(cmd.c_str());
  if (out) *out = slurp(o);
  if (err) *err = slurp(e);
  return WEXITSTATUS(status);
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string key, value;
  while (in >> key && std::getline(in, value)) kv[key] = value.substr(value.find_first_not_of(' '));
  return kv;
}

const ResultRow& find_row(const std::vector<ResultRow>& rows, std::int64_t n, double epsilon, double t,
                          const std::string& metric) {
  // Rows for a grid point are contiguous; the "t" row precedes the metrics.
  double current_t = 1.0;
  for (const auto& r : rows) {
    if (r.metric == "t") current_t = r.mean;
    if (r.n == n && r.epsilon == epsilon && current_t == t && r.metric == metric) return r;
  }
  throw std::runtime_error("row not found: " + metric);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_experiment_config_text("{"), ConfigError);
  EXPECT_THROW(parse_experiment_config_text("[]"), ConfigError);
  EXPECT_THROW(parse_experiment_config_text(R"({"task":"entropy","grid":{"k":[10],"n":[5]}})"), ConfigError);
  EXPECT_THROW(parse_experiment_config_text(R"({"task":"nope","seed":1,"grid":{"k":[10]}})"), ConfigError);
  EXPECT_THROW(parse_experiment_config_text(R"({"task":"entropy","seed":1,"grid":{"k":[10]}})"), ConfigError);
  EXPECT_THROW(parse_experiment_config_text(R"({"task":"entropy","seed":1,"grid":{"k":[],"n":[5]}})"), ConfigError);
  EXPECT_THROW(parse_experiment_config_text(R"({"task":"entropy","seed":1,"grid":{"k":[10],"n":[5],"q":1}})"),
               ConfigError);
  EXPECT_THROW(parse_experiment_config_text(R"({"task":"uniformity","seed":1,"grid":{"k":[10],"alpha":[1.5]}})"),
               ConfigError);
  EXPECT_THROW(parse_experiment_config_text(R"({"task":"uniformity","seed":1,"grid":{"k":[10]},"extra":0})"),
               ConfigError);
  EXPECT_THROW(
      parse_experiment_config_text(R"({"task":"uniformity","seed":1,"grid":{"k":[10]},"constants":{"C9":1}})"),
      ConfigError);
  EXPECT_THROW(parse_experiment_config_text(
                   R"({"task":"uniformity","seed":1,"grid":{"k":[10]},"distribution":{"family":"cauchy"}})"),
               ConfigError);
}

TEST(Config, DiagnosticsNameTheField) {
  try {
    parse_experiment_config_text(R"({"task":"entropy","seed":1,"grid":{"k":[10],"n":[5, -2]}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("grid.n[1]"), std::string::npos);
  }
}

TEST(Config, ParsesGridAndOverrides) {
  auto cfg = parse_experiment_config_text(
      R"({"task":"uniformity","seed":7,"trials":3,"grid":{"k":100,"alpha":[0.2,0.3],"epsilon":[1,"inf"]},)"
      R"("constants":{"C1":4.5}})");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_EQ(cfg.k, std::vector<std::int64_t>{100});
  EXPECT_TRUE(std::isinf(cfg.epsilon[1]));
  EXPECT_EQ(cfg.constants.C1, 4.5);
  EXPECT_EQ(cfg.constants.c, TesterConstants{}.c);
  EXPECT_EQ(expand_grid(cfg).size(), 4u);
}

TEST(Csv, HeaderAndPrecision) {
  std::ostringstream os;
  write_csv({{"entropy", 10, 20, 0.1, 1.0, 0.0, 0.0, 5, "rmse", 1.0 / 3.0, 0.0, 9}}, os);
  EXPECT_EQ(os.str(),
            "task,k,n,alpha,epsilon,delta,rho,trial_count,metric,mean,stderr,seed\n"
            "entropy,10,20,0.1,1,0,0,5,rmse,0.333333333333,0,9\n");
  EXPECT_EQ(format_number(123456789.123456789), "123456789.123");
}

TEST(SampleFile, ReadsIntegersAndReportsLines) {
  const auto p = scratch("samples.txt");
  {
    std::ofstream f(p);
    f << "3\n 1\n\n2 \n";
  }
  EXPECT_EQ(read_sample_file(p.string()), (SampleSet{3, 1, 2}));
  {
    std::ofstream f(p);
    f << "3\nx\n";
  }
  try {
    read_sample_file(p.string());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_sample_file(scratch("missing.txt").string()), ConfigError);
}

TEST(Experiment, DeterministicAcrossThreadCounts) {
  auto cfg = parse_experiment_config_text(
      R"({"task":"entropy","seed":11,"trials":10,"grid":{"k":[50],"n":[100,400],"epsilon":[0.5,2]},)"
      R"("distribution":{"family":"zipf","s":1.0}})");
  cfg.threads = 1;
  std::ostringstream a, b;
  write_csv(run_experiment(cfg), a);
  cfg.threads = 4;
  write_csv(run_experiment(cfg), b);
  EXPECT_EQ(a.str(), b.str());
  cfg.seed = 12;
  std::ostringstream c;
  write_csv(run_experiment(cfg), c);
  EXPECT_NE(a.str(), c.str());
}

TEST(Experiment, TesterRowsRecordConstants) {
  auto cfg = parse_experiment_config_text(
      R"({"task":"uniformity","seed":3,"trials":5,"grid":{"k":[100],"alpha":[0.25]},"constants":{"C2":7}})");
  auto rows = run_experiment(cfg);
  std::map<std::string, double> byname;
  for (const auto& r : rows) byname[r.metric] = r.mean;
  EXPECT_EQ(byname.at("constant_C2"), 7.0);
  EXPECT_EQ(byname.at("constant_c"), TesterConstants{}.c);
  EXPECT_TRUE(byname.count("error_null") && byname.count("error_far"));
  EXPECT_EQ(rows.front().n, sample_complexity(TestTask::UT, 100, 0.25, PrivacyBudget::pure(1.0), cfg.constants));
}

TEST(Experiment, EntropySweepPrivatePolyTracksNonPrivate) {
  auto cfg = parse_experiment_config_text(
      R"({"task":"entropy","seed":2026,"trials":100,"grid":{"k":[1000],"n":[1000,3000,10000],"epsilon":[1]},)"
      R"("estimators":["empirical_laplace","poly_laplace","poly"]})");
  auto rows = run_experiment(cfg);
  const auto& priv = find_row(rows, 10000, 1.0, 1.0, "rmse_poly_laplace");
  const auto& plain = find_row(rows, 10000, 1.0, 1.0, "rmse_poly");
  EXPECT_LE(priv.mean, 2.0 * plain.mean);
  for (std::int64_t n : {1000, 3000}) {
    EXPECT_GT(find_row(rows, n, 1.0, 1.0, "rmse_poly_laplace").mean, 0.0);
  }
}

TEST(Experiment, CoverageSweepOrdering) {
  auto cfg = parse_experiment_config_text(
      R"({"task":"coverage","seed":77,"trials":50,"grid":{"k":[20000],"n":[10000],"epsilon":[1,2,10],)"
      R"("t":[1,2,3,4,5,6,7,8,9,10]},"estimators":["sgt_private"]})");
  auto rows = run_experiment(cfg);
  for (double eps : {1.0, 2.0, 10.0}) {
    EXPECT_GT(find_row(rows, 10000, eps, 10.0, "rmse_sgt_private").mean,
              find_row(rows, 10000, eps, 1.0, "rmse_sgt_private").mean);
  }
  for (int t = 1; t <= 10; ++t) {
    const auto& hi = find_row(rows, 10000, 10.0, t, "rmse_sgt_private");
    const auto& lo = find_row(rows, 10000, 1.0, t, "rmse_sgt_private");
    EXPECT_LE(hi.mean, lo.mean + 3.0 * std::hypot(hi.stderr_, lo.stderr_)) << "t=" << t;
  }
}

TEST(Calibration, ReproducesWithSameSeed) {
  auto spec = default_calibration_spec();
  auto a = calibrate_constants(spec);
  auto b = calibrate_constants(spec);
  EXPECT_EQ(a.constants.c, b.constants.c);
  EXPECT_EQ(a.constants.C1, b.constants.C1);
  EXPECT_EQ(a.constants.C2, b.constants.C2);
  EXPECT_EQ(a.constants.multiplier, b.constants.multiplier);
  EXPECT_EQ(a.estimation_C, b.estimation_C);
  for (const auto& r : a.rates) {
    EXPECT_LE(r.null_error, spec.target_error);
    EXPECT_LE(r.far_error, spec.target_error);
  }
}

TEST(Calibration, ShippedConstantsMatchDefaults) {
  const auto shipped = load_constants(std::string(DPDI_SOURCE_DIR) + "/configs/constants.json");
  const TesterConstants d;
  EXPECT_NEAR(shipped.c, d.c, 1e-11 * d.c);
  EXPECT_NEAR(shipped.C1, d.C1, 1e-11 * d.C1);
  EXPECT_EQ(shipped.C2, d.C2);
  EXPECT_EQ(shipped.multiplier, d.multiplier);
  const auto j = parse_json_file(std::string(DPDI_SOURCE_DIR) + "/configs/constants.json");
  EXPECT_NEAR(j.at("estimation_C").get<double>(), kEstimationErrorConstant, 1e-11);
  EXPECT_NEAR(j.at("closeness_expectation_C").get<double>(), kClosenessExpectationConstant, 1e-11);
}

TEST(Cli, TestUniformityPrintsDecision) {
  std::string out;
  ASSERT_EQ(run_cli("--seed 5 test-uniformity --k 100 --alpha 0.25", &out), 0);
  auto kv = key_values(out);
  EXPECT_TRUE(kv.count("statistic"));
  EXPECT_TRUE(kv.at("decision") == "accept" || kv.at("decision") == "reject");
  EXPECT_EQ(std::stoll(kv.at("n")), sample_complexity(TestTask::UT, 100, 0.25, PrivacyBudget::pure(1.0), {}));
}

TEST(Cli, SampleFileInput) {
  const auto p = scratch("cli_samples.txt");
  {
    std::ofstream f(p);
    for (int i = 0; i < 2000; ++i) f << (i % 10) + 1 << '\n';
  }
  std::string out;
  ASSERT_EQ(run_cli("--seed 1 estimate-entropy --k 10 --epsilon inf --samples \"" + p.string() + "\"", &out), 0);
  const double h = std::stod(key_values(out).at("estimate"));
  EXPECT_NEAR(h, std::log(10.0), 1e-9);
}

TEST(Cli, EverySubcommandRuns) {
  const std::vector<std::string> cmds{
      "test-uniformity --k 50",
      "test-identity --k 50 --q-dist zipf",
      "test-closeness --k 50",
      "estimate-entropy --k 100 --n 500",
      "estimate-coverage --k 100 --n 500 --t 2",
      "estimate-support --k 100 --n 500",
      "estimate-distribution --k 20 --n 500",
      "--trials 200 coupling-verify --type coin --n 50",
      "codes-gv --k 12 --weight 4 --distance 4",
      "select-tournament --k 64 --t 2",
      "select-ldp --k 8 --users 4000",
      "ising-sample --p 3 --n 20",
      "fw-run --n 2000 --p 5 --rho 1",
  };
  for (const auto& c : cmds) {
    std::string out, err;
    EXPECT_EQ(run_cli("--seed 4 " + c, &out, &err), 0) << c << "\n" << err;
    EXPECT_FALSE(out.empty()) << c;
  }
}

TEST(Cli, IsingRoundTrip) {
  const auto spins = scratch("spins.txt");
  ASSERT_EQ(run_cli("--seed 8 --out \"" + spins.string() + "\" ising-sample --p 4 --eta 0.4 --n 3000"), 0);
  std::string out, err;
  EXPECT_EQ(run_cli("--seed 8 ising-learn --spins \"" + spins.string() + "\" --rho 10", &out, &err), 0) << err;
  EXPECT_FALSE(out.empty());
}

TEST(Cli, ExperimentIsByteIdentical) {
  const auto cfg = scratch("exp.json");
  {
    std::ofstream f(cfg);
    f << R"({"task":"estimation","seed":21,"trials":20,"grid":{"k":[20,50],"n":[1000],"epsilon":[0.5,1]},)"
      << R"("distribution":{"family":"dirichlet","concentration":0.5}})";
  }
  const auto a = scratch("a.csv"), b = scratch("b.csv");
  ASSERT_EQ(run_cli("--config \"" + cfg.string() + "\" --out \"" + a.string() + "\" experiment"), 0);
  ASSERT_EQ(run_cli("--config \"" + cfg.string() + "\" --out \"" + b.string() + "\" experiment"), 0);
  const std::string ca = slurp(a);
  EXPECT_EQ(ca, slurp(b));
  EXPECT_EQ(ca.substr(0, ca.find('\n')), kCsvHeader);
}

TEST(Cli, ConfigErrorsExitNonzero) {
  const auto cfg = scratch("bad.json");
  {
    std::ofstream f(cfg);
    f << R"({"task":"entropy","seed":1,"grid":{"k":[10]}})";
  }
  std::string out, err;
  EXPECT_NE(run_cli("--config \"" + cfg.string() + "\" experiment", &out, &err), 0);
  EXPECT_NE(err.find("grid.n"), std::string::npos) << err;
  EXPECT_NE(run_cli("experiment", &out, &err), 0);
  EXPECT_NE(run_cli("test-uniformity --k 0", &out, &err), 0);
  EXPECT_NE(run_cli("no-such-command", &out, &err), 0);
}

TEST(Cli, ShippedExamplesParse) {
  for (const auto& entry : fs::directory_iterator(fs::path(DPDI_SOURCE_DIR) / "configs")) {
    if (entry.path().filename() == "constants.json") continue;
    EXPECT_NO_THROW(parse_experiment_config(parse_json_file(entry.path().string()))) << entry.path();
  }
}

}  // namespace
}  // namespace dpdi
