// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "test_support.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = sheetscan::testkit::temp_dir("cli"); }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(SHEETSCAN_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  void synth(const std::string& name, int count, int seed) {
    const RunResult r = run("synth --out " + p(name) + " --count " + std::to_string(count) + " --seed " +
                            std::to_string(seed) + " --max-rows 16 --max-cols 16");
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

const char* kTinyConfig = R"({"model": {"backbone_channels": 6, "backbone_blocks": 1, "anchor_scales": [4, 8],
  "anchor_ratios": [0.5, 1, 2], "pbr_k": 3, "pbr_band_pool": 2, "pbr_hidden": 4, "head_hidden": 8,
  "roialign_out": 5}, "train": {"epochs": 2, "roi_batch": 8, "rpn_batch": 32, "seed": 2},
  "loop": {"batch_size": 2, "max_iterations": 2}})";

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("synth").code, 1);
  const RunResult r = run("detect --method cnn --sheet x --out y");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("E_USAGE", 0), 0u) << r.err;
}

TEST_F(Cli, BadInputsExitTwoWithCode) {
  RunResult r = run("featurize --sheet " + p("missing.json") + " --out " + p("x.ftns"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("E_IO", 0), 0u) << r.err;
  std::ofstream(dir_ / "bad.json") << "{\"id\": 3";
  r = run("featurize --sheet " + p("bad.json") + " --out " + p("x.ftns"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("E_SCHEMA", 0), 0u) << r.err;
  r = run("synth --out " + p("c") + " --artifacts '{\"title_row\": 2}'");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("E_VALIDATION", 0), 0u) << r.err;
}

TEST_F(Cli, SynthIsDeterministicAndRegionGrowthEvaluates) {
  synth("c1", 5, 9);
  synth("c2", 5, 9);
  EXPECT_EQ(slurp(dir_ / "c1" / "labels.json"), slurp(dir_ / "c2" / "labels.json"));
  EXPECT_TRUE(fs::exists(dir_ / "c1" / "artifacts.json"));

  RunResult r = run("detect --method region-growth --sheet " + p("c1") + " --out " + p("d.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["sheets"], 5);
  r = run("eval --pred " + p("d.json") + " --gold " + p("c1/labels.json") + " --threshold 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(r.out);
  EXPECT_GE(rep["f1"].get<double>(), 0.0);
  EXPECT_LE(rep["f1"].get<double>(), 1.0);
  EXPECT_EQ(run("eval --pred " + p("d.json") + " --gold " + p("c1/labels.json") + " --threshold 1").code, 1);
}

TEST_F(Cli, FeaturizeWritesTensor) {
  synth("c", 1, 3);
  const fs::path sheet = *fs::directory_iterator(dir_ / "c" / "sheets");
  const RunResult r = run("featurize --sheet " + sheet.string() + " --out " + p("t.ftns") + " --subset binary-only");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["channels"], 20);
  EXPECT_GT(fs::file_size(dir_ / "t.ftns"), 0u);
  EXPECT_EQ(run("featurize --sheet " + sheet.string() + " --out " + p("t.ftns") + " --subset nope").code, 2);
}

TEST_F(Cli, TrainDetectSelectAndLoop) {
  synth("c", 4, 5);
  std::ofstream(dir_ / "cfg.json") << kTinyConfig;
  RunResult r = run("train --corpus " + p("c") + " --labels " + p("c/labels.json") + " --model-out " + p("m.tsmw") +
                    " --config " + p("cfg.json") + " --eval-corpus " + p("c") + " --eval-labels " +
                    p("c/labels.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json hist = json::parse(r.out)["history"];
  ASSERT_EQ(hist.size(), 2u);

  r = run("detect --method cnn --model " + p("m.tsmw") + " --sheet " + p("c") + " --out " + p("d.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run("detect --method cnn --no-pbr --model " + p("m.tsmw") + " --sheet " + p("c") + " --out " + p("d2.json"));
  ASSERT_EQ(r.code, 0) << r.err;

  r = run("select --corpus " + p("c") + " --model " + p("m.tsmw") + " --top 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const json sel = json::parse(r.out);
  ASSERT_EQ(sel.size(), 2u);
  EXPECT_GE(sel[0]["uncertainty"]["overall"].get<double>(), sel[1]["uncertainty"]["overall"].get<double>());

  r = run("loop --corpus " + p("c") + " --gold " + p("c/labels.json") + " --config " + p("cfg.json") +
          " --state-out " + p("state.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json state = json::parse(slurp(dir_ / "state.json"));
  EXPECT_EQ(state["iteration"], 2);
  EXPECT_NE(state["status"], "running");
}

TEST_F(Cli, CorruptModelIsRejected) {
  synth("c", 1, 3);
  std::ofstream(dir_ / "m.tsmw") << "not a model";
  const RunResult r = run("detect --method cnn --model " + p("m.tsmw") + " --sheet " + p("c") + " --out " + p("d.json"));
  EXPECT_EQ(r.code, 2) << r.err;
}
