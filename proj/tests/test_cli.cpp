#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "ihnn/core/io.hpp"
#include "ihnn/data/dataset.hpp"
#include "ihnn/model/checkpoint.hpp"
#include "ihnn/training/eval.hpp"

namespace fs = std::filesystem;

namespace ihnn {
namespace {

struct CliRun {
  int code = -1;
  std::string output;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ihnn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) const {
    const fs::path log = dir_ / "cli.log";
    const std::string cmd = std::string("\"") + IHNN_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, io::read_text(log)};
  }

  std::string out(const std::string& sub = "out") const { return " --out-dir \"" + (dir_ / sub).string() + "\""; }

  // Small double-well dataset at dir/out/data.
  void small_dataset() const {
    ASSERT_EQ(run("gen-data --n-train 64 --n-val 16 --n-steps 60" + out()).code, 0);
  }

  fs::path dir_;
};

TEST_F(Cli, MissingDatasetNamesThePath) {
  const auto r = run("train --data does/not/exist" + out());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("does/not/exist"), std::string::npos) << r.output;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("train --no-such-flag").code, 1);
  EXPECT_EQ(run("gen-data --system pendulum" + out()).code, 1);
  EXPECT_EQ(run("check-tableau no_such_tableau" + out()).code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, GenDataSmokePresetAndDefaults) {
  ASSERT_EQ(run("gen-data --smoke --n-steps 10" + out()).code, 0);
  const auto m = manifest_from_json(io::read_json(dir_ / "out/data/manifest.json"));
  EXPECT_EQ(m.n_train, 1024u);
  EXPECT_EQ(m.n_val, 256u);
  EXPECT_EQ(m.n_steps, 10u);  // explicit flag beats the preset
  const DatasetManifest defaults;
  EXPECT_EQ(defaults.n_train, 16384u);
  EXPECT_EQ(defaults.n_val, 8192u);
}

TEST_F(Cli, ZeroEpochsKeepsInitialisation) {
  small_dataset();
  ASSERT_EQ(run("--seed 5 train --epochs 0 --data \"" + (dir_ / "out/data").string() + "\"" + out()).code, 0);
  const auto ck = load_checkpoint(dir_ / "out/model.json");
  EXPECT_EQ(ck.params.values, init_params(default_architecture(1), 5).values);
  EXPECT_EQ(ck.seed, 5u);
}

TEST_F(Cli, ConfigFileUnderCommandLine) {
  small_dataset();
  io::write_text(dir_ / "cfg.json", R"({"epochs": 2, "stride": 10, "batch_size": 8, "seed": 3})");
  const std::string base = "--config \"" + (dir_ / "cfg.json").string() + "\" train --data \"" +
                           (dir_ / "out/data").string() + "\"";
  ASSERT_EQ(run(base + out("a")).code, 0);
  ASSERT_EQ(run(base + " --epochs 1" + out("b")).code, 0);
  auto rows = [&](const std::string& sub) {
    std::istringstream in(io::read_text(dir_ / sub / "metrics.csv"));
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n - 1;
  };
  EXPECT_EQ(rows("a"), 3u);  // epoch 0 plus two
  EXPECT_EQ(rows("b"), 2u);
  EXPECT_EQ(load_checkpoint(dir_ / "a/model.json").seed, 3u);
}

TEST_F(Cli, GradModesAgreeOnFirstEpoch) {
  small_dataset();
  const std::string base = "train --epochs 1 --stride 10 --batch-size 8 --data \"" + (dir_ / "out/data").string() + "\"";
  ASSERT_EQ(run(base + " --grad-mode adjoint" + out("a")).code, 0);
  ASSERT_EQ(run(base + " --grad-mode backprop" + out("b")).code, 0);
  auto epoch1_loss = [&](const std::string& sub) {
    std::istringstream in(io::read_text(dir_ / sub / "metrics.csv"));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::getline(in, line);
    return std::stod(line.substr(line.find(',') + 1));
  };
  const double a = epoch1_loss("a"), b = epoch1_loss("b");
  EXPECT_LE(std::abs(a - b), 1e-5 * std::abs(b));
}

TEST_F(Cli, OracleEvalIsExactAndRoundTrips) {
  ASSERT_EQ(run("eval --oracle --system coupled_ho" + out()).code, 0);
  const auto j = io::read_json(dir_ / "out/eval.json");
  const auto rep = eval_report_from_json(j);
  EXPECT_EQ(rep.h_l1_mean, 0.0);
  EXPECT_EQ(rep.grid.n, 33u);
  EXPECT_EQ(to_json(rep), j);
}

TEST_F(Cli, EvalRejectsDimensionMismatch) {
  small_dataset();  // double well, d = 1
  const auto r = run("eval --oracle --system henon_heiles --data \"" + (dir_ / "out/data").string() + "\"" + out());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("d=1"), std::string::npos) << r.output;
}

TEST_F(Cli, UnconvergedSolvesAreNumericalFailures) {
  small_dataset();
  const auto r = run("train --epochs 1 --stride 10 --batch-size 8 --fpi-max-iters 1 --fpi-tol 1e-15 --data \"" +
                     (dir_ / "out/data").string() + "\"" + out());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("epoch 1, batch 0"), std::string::npos) << r.output;
}

TEST_F(Cli, CheckTableauReportsCorruptedWeight) {
  io::write_text(dir_ / "t.json", R"({"a": [[0.5]], "b": [0.9], "A": [[0.5]], "B": [1.0]})");
  const auto r = run("check-tableau --tableau-json \"" + (dir_ / "t.json").string() + "\"" + out());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("max violation 1.000e-01 -> FAIL"), std::string::npos) << r.output;
  EXPECT_FALSE(io::read_json(dir_ / "out/tableau_check.json").at("symplectic").get<bool>());
}

TEST_F(Cli, IntegrateWritesTrajectory) {
  ASSERT_EQ(run("integrate --system henon_heiles --y0 0.1,0,0,0.2 --n 5 --method gauss2" + out()).code, 0);
  std::istringstream in(io::read_text(dir_ / "out/trajectory.csv"));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,q1,q2,p1,p2");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 6u);
}

TEST_F(Cli, GradCheckCsv) {
  ASSERT_EQ(run("grad-check" + out()).code, 0);
  std::istringstream in(io::read_text(dir_ / "out/grad_check.csv"));
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "index,adjoint,backprop,finite_difference,max_rel_error");
  for (std::string line; std::getline(in, line);) {
    EXPECT_LE(std::stod(line.substr(line.rfind(',') + 1)), 1e-4) << line;
  }
}

}  // namespace
}  // namespace ihnn
