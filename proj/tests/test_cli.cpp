// Copyright 2026 The CGBC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "cgbc/cli.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace cgbc {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cgbc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Full replay pipeline from the demo fixture into `out`.
void pipeline(const fs::path& demo, const fs::path& out, const std::string& dpp = "on") {
  const std::string cfg = (demo / "run.json").string();
  for (const char* step : {"neighbors", "gen", "compose"}) {
    const auto r = cli({step, "--config", cfg, "--out", out.string()});
    ASSERT_EQ(r.code, 0) << step << ": " << r.err;
  }
  auto r = cli({"select", "--config", cfg, "--out", out.string(), "--dpp", dpp});
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli({"evaluate", "--config", cfg, "--out", out.string(), "--prompt-set",
           (out / "prompt_set.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("evaluate: top-1"), std::string::npos);
}

class CliDemo : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    const auto r = cli({"make-fixtures", "--kind", "demo", "--out", (dir_->path() / "demo").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path demo() { return dir_->path() / "demo"; }
  static fs::path root() { return dir_->path(); }
  static testing::TempDir* dir_;
};
testing::TempDir* CliDemo::dir_ = nullptr;

TEST_F(CliDemo, PipelineIsByteIdentical) {
  pipeline(demo(), root() / "a");
  pipeline(demo(), root() / "b");
  for (const char* f : {"neighbors.json", "concepts.json", "gen_log.json", "composites.json",
                        "selection.json", "prompt_set.json", "results.jsonl", "report.json",
                        "prompts/beagle.f32"}) {
    const auto a = slurp(root() / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(root() / "b" / f)) << f;
  }
  const auto report = nlohmann::json::parse(slurp(root() / "a" / "report.json"));
  EXPECT_EQ(report.at("n_images"), 40);
  EXPECT_EQ(report.at("aggregator"), "soft_trim");
}

TEST_F(CliDemo, DppOffKeepsSamplingOrder) {
  pipeline(demo(), root() / "off", "off");
  const auto sel = nlohmann::json::parse(slurp(root() / "off" / "selection.json"));
  ASSERT_EQ(sel.size(), 5u);
  for (const auto& c : sel) {
    EXPECT_EQ(c.at("dpp"), "off");
    const auto& s = c.at("selected");
    ASSERT_EQ(s.size(), 16u);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].at("index"), i);
  }
  pipeline(demo(), root() / "on", "on");
  const auto on = nlohmann::json::parse(slurp(root() / "on" / "selection.json"));
  for (const auto& c : on) {
    double prev = 1e300;
    std::set<std::size_t> seen;
    for (const auto& s : c.at("selected")) {
      const double g = s.at("marginal_gain");
      EXPECT_LE(g, prev + 1e-9);
      prev = g;
      EXPECT_TRUE(seen.insert(s.at("index").get<std::size_t>()).second);
    }
  }
}

TEST_F(CliDemo, ClassifyAndDiagnose) {
  pipeline(demo(), root() / "cd");
  const auto ps = (root() / "cd" / "prompt_set.json").string();
  const auto images = (demo() / "images.manifest.json").string();
  auto r = cli({"classify", "--images", images, "--prompt-set", ps, "--out", (root() / "cd").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(slurp(root() / "cd" / "results.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("predicted"));
    ++n;
  }
  EXPECT_EQ(n, 40u);
  r = cli({"diagnose", "--images", images, "--prompt-set", ps, "--out", (root() / "cd").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto diag = nlohmann::json::parse(slurp(root() / "cd" / "diagnostics.json"));
  EXPECT_EQ(diag.size(), 200u);
  const auto qq = slurp(root() / "cd" / "qq_points.csv");
  EXPECT_EQ(qq.substr(0, qq.find('\n')), "image,class,theoretical,sample");
}

TEST_F(CliDemo, ExitCodes) {
  const auto cfg = (demo() / "run.json").string();
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"nonsense"}).code, 1);
  EXPECT_EQ(cli({"evaluate", "--config", cfg, "--aggregator", "bogus", "--out",
                 (root() / "x").string()}).code, 1);
  EXPECT_EQ(cli({"select", "--config", cfg, "--select-size", "600", "--out",
                 (root() / "x").string()}).code, 1);
  EXPECT_EQ(cli({"gen", "--config", cfg, "--record", "r.json", "--out", (root() / "x").string()}).code, 1);
  EXPECT_EQ(cli({"neighbors", "--config", (root() / "missing.json").string()}).code, 1);
  {
    std::ofstream(root() / "bad_cfg.json") << R"({"sed": 1})";
    const auto r = cli({"neighbors", "--config", (root() / "bad_cfg.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("sed"), std::string::npos);
  }
  // Data problems: missing container, corrupted replay fixture.
  EXPECT_EQ(cli({"neighbors", "--classes", (root() / "nope.manifest.json").string(), "--out",
                 (root() / "x").string()}).code, 2);
  std::ofstream(root() / "empty_fixture.json") << "[]";
  auto r = cli({"neighbors", "--config", cfg, "--out", (root() / "y").string()});
  ASSERT_EQ(r.code, 0);
  r = cli({"gen", "--config", cfg, "--out", (root() / "y").string(), "--replay",
           (root() / "empty_fixture.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("data error"), std::string::npos);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, SimulateSweepCsv) {
  testing::TempDir d("sim");
  const auto r = cli({"simulate", "--preset", "theorem1", "--trials", "20", "--out", d.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(d.path() / "sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "rho,M,slope,q95_err_soft,q95_err_mean,q95_err_median,mean_rho_hat");
  EXPECT_TRUE(fs::exists(d.path() / "sweep_summary.json"));
  EXPECT_EQ(cli({"simulate", "--preset", "nope", "--out", d.path().string()}).code, 1);
}

TEST(Cli, SyntheticEvaluateConfig) {
  testing::TempDir d("syncfg");
  auto r = cli({"make-fixtures", "--kind", "synthetic", "--classes-k", "4", "--prompts-per-class",
                "8", "--n-images", "40", "--dim", "16", "--out", d.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ofstream(d.path() / "cfg.json")
      << R"({"images": "images.manifest.json", "prompt_set": "prompt_set.json",
             "labels": "labels.json", "aggregator": "huber", "out": "res"})";
  r = cli({"evaluate", "--config", (d.path() / "cfg.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto first = slurp(d.path() / "res" / "report.json");
  r = cli({"evaluate", "--config", (d.path() / "cfg.json").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(first, slurp(d.path() / "res" / "report.json"));
  EXPECT_EQ(nlohmann::json::parse(first).at("aggregator"), "huber");
}

}  // namespace
}  // namespace cgbc
