#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "hexwar/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int status = 0;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("hexwar_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) {
    const std::string cmd = "HEXWAR_DATA_DIR='" + dir_.string() + "' '" HEXWAR_CLI "' " + args + " 2>&1";
    CliRun r;
    FILE* p = popen(cmd.c_str(), "r");
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    r.status = WEXITSTATUS(pclose(p));
    return r;
  }

  json read(const std::string& name) {
    std::ifstream in(dir_ / name);
    return json::parse(in);
  }

  fs::path dir_;
};

TEST_F(Cli, GeneratedScenarioHonoursFlags) {
  ASSERT_EQ(run("gen-scenario --seed 5 --width 9 --height 7 --out s.json").status, 0);
  const json s = read("s.json");
  EXPECT_EQ(s["width"], 9);
  EXPECT_EQ(s["height"], 7);
}

TEST_F(Cli, PlayedReplayImportsAndReExportsByteIdentical) {
  ASSERT_EQ(run("play --seed 3 --blue greedy_attack --red baseline@0.2 --out r.json").status, 0);
  const hexwar::Replay r = hexwar::import_replay(dir_ / "r.json");
  EXPECT_FALSE(r.aborted);
  ASSERT_EQ(run("replay-export --in r.json --out r2.json").status, 0);
  std::ifstream a(dir_ / "r.json"), b(dir_ / "r2.json");
  const std::string sa{std::istreambuf_iterator<char>(a), {}}, sb{std::istreambuf_iterator<char>(b), {}};
  EXPECT_EQ(sa, sb);
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
  std::ofstream(dir_ / "cfg.json") << R"({"evaluate": {"games": 6, "blue": "hold_city"}})";
  const std::string cfg = "--config '" + (dir_ / "cfg.json").string() + "' ";
  ASSERT_EQ(run(cfg + "evaluate --out a.json").status, 0);
  ASSERT_EQ(run(cfg + "evaluate --games 4 --out b.json").status, 0);
  EXPECT_EQ(read("a.json")["n_games"], 6);
  EXPECT_EQ(read("b.json")["n_games"], 4);
}

TEST_F(Cli, TrainedModelsAreUsableAsAgents) {
  ASSERT_EQ(run("train-dqn --budget 200 --width 6 --height 6 --hidden 8 --out m.bin").status, 0);
  ASSERT_EQ(run("train-predictor --games 4 --epochs 2 --hidden 8 --bundle mm").status, 0);
  ASSERT_EQ(run("train-td-predictor --steps 200 --behavior dqn:m.bin --hidden 8 --bundle mm").status, 0);
  ASSERT_EQ(run("train-level --level operator --budget 30 --hidden 8 --out h").status, 0);
  EXPECT_EQ(read("mm/manifest.json")["members"].size(), 2u);
  for (const std::string blue : {"dqn:m.bin", "multimodel:mm", "hierarchy:h"}) {
    const CliRun r = run("evaluate --games 2 --width 12 --height 12 --blue " + blue);
    EXPECT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(json::parse(r.out)["completed"], 2) << blue;
  }
  ASSERT_EQ(run("play --blue multimodel:mm --out r.json").status, 0);
  EXPECT_EQ(run("replay-export --in r.json --multimodel mm").status, 0);
}

TEST_F(Cli, ErrorsExitNonZero) {
  EXPECT_NE(run("play --blue no_such_policy").status, 0);
  EXPECT_NE(run("evaluate --games 0").status, 0);
  EXPECT_NE(run("replay-export --in missing.json").status, 0);
  EXPECT_NE(run("no-such-command").status, 0);
}

}  // namespace
