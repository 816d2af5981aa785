// Copyright 2026 The cpsverify Authors
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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cpsverify");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cpsverify::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string sample(const std::string& rel) { return std::string(CPSVERIFY_SAMPLES_DIR) + "/" + rel; }

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "cpsverify_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Cli, ChiOfMagicState) {
  const CliRun r = cli({"chi", "T"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("chi(X)=0.353553"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("chi(Y)=0.353553"), std::string::npos);
  EXPECT_NE(r.out.find("chi(Z)=0.000000"), std::string::npos);
  EXPECT_NE(r.out.find("w=0.707107"), std::string::npos);
}

TEST(Cli, ChiOfBlochVector) {
  const CliRun r = cli({"chi", "bloch", "0", "0", "-1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("chi(Z)=-0.500000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("w=0.500000"), std::string::npos);
}

TEST(Cli, BadInputsExitOne) {
  EXPECT_EQ(cli({"chi", "Q"}).code, 1);
  EXPECT_EQ(cli({"chi", "bloch", "1", "1", "1"}).code, 1);
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"certify", "/nonexistent.json"}).code, 1);
  EXPECT_EQ(cli({"--mode", "sideways", "chi", "0"}).code, 1);
  const CliRun r = cli({"backprop", sample("circuits/ghz_like.txt"), "9", "X"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  const CliRun r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("certify"), std::string::npos);
}

TEST(Cli, Backprop) {
  // H 0; CNOT 0 1; CNOT 1 2; S 2
  EXPECT_EQ(cli({"backprop", sample("circuits/ghz_like.txt"), "0", "X"}).out, "ZII\n");
  EXPECT_EQ(cli({"backprop", sample("circuits/ghz_like.txt"), "2", "Z"}).out, "IZZ\n");
  EXPECT_EQ(cli({"backprop", sample("configs/certify_honest.json"), "0", "Z"}).out, "XXY\n");
}

TEST(Cli, SampleSizeMatchesWorkedExample) {
  const CliRun r = cli({"sample-size", "--states", "0", "--epsilon", "0.3", "--delta", "0.1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("N_iid=150\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("N_noniid=926793102\n"), std::string::npos);
}

TEST(Cli, CertifyExitCodesAndOutputs) {
  const auto result = scratch("certify.json");
  const auto tallies = scratch("tallies.csv");
  const CliRun good = cli({"--seed", "5", "--out", result.string(), "certify", sample("configs/certify_honest.json"),
                        "--tallies", tallies.string()});
  EXPECT_EQ(good.code, 0) << good.err;
  const auto j = cpsverify::Json::parse(slurp(result));
  EXPECT_TRUE(j.at("accept").get<bool>());
  EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 5u);
  EXPECT_EQ(j.at("N").get<std::uint64_t>(), 2697u);
  const std::string csv = slurp(tallies);
  EXPECT_EQ(csv.rfind("qubit,axis,count,signed_sum\n", 0), 0u);

  const CliRun bad = cli({"certify", sample("configs/certify_adversary.json")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("\"accept\": false"), std::string::npos);
}

TEST(Cli, SeedPrecedence) {
  const auto cfg = sample("configs/certify_adversary.json");
  const CliRun from_config = cli({"certify", cfg});
  EXPECT_NE(from_config.out.find("\"seed\": 7"), std::string::npos);
  const CliRun flag = cli({"--seed", "123", "certify", cfg});
  EXPECT_NE(flag.out.find("\"seed\": 123"), std::string::npos);
  // Same seed, same transcript.
  EXPECT_EQ(flag.out, cli({"--seed", "123", "certify", cfg}).out);

  ::setenv("CPSVERIFY_SEED", "77", 1);
  const CliRun env = cli({"msi", "run", sample("circuits/t_chain.txt"), "--shots", "2"});
  const CliRun env2 = cli({"--seed", "77", "msi", "run", sample("circuits/t_chain.txt"), "--shots", "2"});
  ::unsetenv("CPSVERIFY_SEED");
  EXPECT_EQ(env.out, env2.out);
}

TEST(Cli, ModeOverride) {
  const CliRun r = cli({"--mode", "include", "--out", scratch("mode.json").string(), "certify",
                        sample("configs/certify_honest.json"), "--tallies", scratch("mode.csv").string()});
  EXPECT_NE(r.out.find("\"mode\": \"include\""), std::string::npos) << r.out;
}

TEST(Cli, Verify) {
  const CliRun r = cli({"verify", sample("configs/verify_correlated.json")});
  EXPECT_TRUE(r.code == 0 || r.code == 2) << r.err;
  const auto j = cpsverify::Json::parse(r.out);
  EXPECT_EQ(j.at("N1").get<std::uint64_t>(), 10 * j.at("N2").get<std::uint64_t>());
  EXPECT_EQ(j.at("result").at("accept").get<bool>(), r.code == 0);
}

TEST(Cli, MsiCompileAndRun) {
  const CliRun c = cli({"msi", "compile", sample("circuits/t_chain.txt")});
  ASSERT_EQ(c.code, 0) << c.err;
  const auto j = cpsverify::Json::parse(c.out);
  EXPECT_EQ(j.at("ancillas").get<int>(), 3);
  EXPECT_EQ(j.at("schedule").size(), 3u);

  const CliRun r = cli({"--seed", "3", "msi", "run", sample("circuits/t_chain.txt"), "--shots", "20"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accepted=20 aborted=0"), std::string::npos) << r.out;
  EXPECT_EQ(cli({"msi"}).code, 1);
}

TEST(Cli, SweepCsv) {
  const auto path = scratch("sweep.csv");
  const CliRun r = cli({"--jobs", "2", "--out", path.string(), "sweep", sample("configs/sweep_depolarizing.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "param,trials,N_per_trial,mean_W,stderr_W,accept_rate");
  int rows = 0;
  double first_rate = -1, last_rate = -1;
  while (std::getline(csv, line)) {
    ++rows;
    const double rate = std::stod(line.substr(line.rfind(',') + 1));
    if (first_rate < 0) first_rate = rate;
    last_rate = rate;
  }
  EXPECT_EQ(rows, 11);
  EXPECT_EQ(first_rate, 1.0);
  EXPECT_EQ(last_rate, 0.0);
  // Thread count does not change the numbers.
  const CliRun one = cli({"--jobs", "1", "--out", scratch("sweep1.csv").string(), "sweep",
                       sample("configs/sweep_depolarizing.json")});
  EXPECT_EQ(slurp(path), slurp(scratch("sweep1.csv")));
}

TEST(Cli, Selftest) {
  const CliRun r = cli({"selftest"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}
