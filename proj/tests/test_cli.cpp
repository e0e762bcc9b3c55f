#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vsrprune/checkpoint.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "vsrprune_cli_test";

int run(const std::string& args, const std::string& log = "cli.log") {
  fs::create_directories(kRoot);
  const std::string cmd = std::string(VSRPRUNE_CLI) + " " + args + " > " + (kRoot / log).string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::create_directories(kRoot);
  const fs::path p = kRoot / name;
  std::ofstream(p) << body;
  return p;
}

const char* kSmall = R"({
  "name": "cli",
  "network": {"trunk_width": 8, "blocks_per_direction": 2, "head_width": 8, "hr_width": 8},
  "data": {"lr_height": 8, "lr_width": 8, "frames": 3, "batch": 1, "train_clips": 2,
           "val_clips": 2, "val_frames": 3},
  "budgets": {"pretrain": 4, "sparsify": -1, "finetune": 2},
  "schedule": {"delta": 0.05, "tau": 0.1, "t1": 1, "t2": 2},
  "val_every": 2
})";

std::vector<std::string> column(const std::string& csv, int index) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    for (int i = 0; i <= index; ++i) std::getline(row, cell, ',');
    out.push_back(cell);
  }
  return out;
}

}  // namespace

TEST(Cli, CostOfPaperScaleProfile) {
  const fs::path out = kRoot / "cost";
  ASSERT_EQ(run("cost --config " + std::string(VSRPRUNE_CONFIG_DIR) + "/paper-scale.json --out " + out.string()), 0);
  double params = 0, macs = 0;
  const std::string csv = slurp(out / "cost.csv");
  for (const auto& v : column(csv, 1)) params += std::stod(v);
  for (const auto& v : column(csv, 2)) macs += std::stod(v);
  EXPECT_NEAR(params, 4.9e6, 0.49e6);
  EXPECT_NEAR(macs, 338.5e9, 33.85e9);
  EXPECT_TRUE(fs::exists(out / "config.json"));
}

TEST(Cli, PruneAtZeroRatioKeepsTheModel) {
  const fs::path cfg = write_config("small.json", kSmall);
  const std::string c = " --config " + cfg.string();
  ASSERT_EQ(run("pretrain" + c + " --out " + (kRoot / "pre").string()), 0);
  ASSERT_EQ(run("prune" + c + " --checkpoint " + (kRoot / "pre" / "checkpoint").string() +
                " --ratio 0 --out " + (kRoot / "p0").string()),
            0);
  const vsrprune::Checkpoint a = vsrprune::load_checkpoint(kRoot / "pre" / "checkpoint");
  const vsrprune::Checkpoint b = vsrprune::load_checkpoint(kRoot / "p0" / "checkpoint");
  EXPECT_EQ(a.spec, b.spec);
  for (const auto& [id, k] : a.weights) EXPECT_TRUE(b.weights.at(id).weight.bitwise_equal(k.weight)) << id;
  ASSERT_EQ(run("eval" + c + " --checkpoint " + (kRoot / "pre" / "checkpoint").string() + " --out " +
                (kRoot / "e_pre").string()),
            0);
  ASSERT_EQ(run("eval" + c + " --checkpoint " + (kRoot / "p0" / "checkpoint").string() + " --out " +
                (kRoot / "e_p0").string()),
            0);
  EXPECT_EQ(slurp(kRoot / "e_pre" / "eval.csv"), slurp(kRoot / "e_p0" / "eval.csv"));
}

TEST(Cli, StagesChainThroughCheckpoints) {
  const fs::path cfg = write_config("chain.json", kSmall);
  const std::string c = " --config " + cfg.string();
  ASSERT_EQ(run("pretrain" + c + " --out " + (kRoot / "c_pre").string()), 0);
  ASSERT_EQ(run("sparsify" + c + " --checkpoint " + (kRoot / "c_pre" / "checkpoint").string() + " --out " +
                (kRoot / "c_sp").string()),
            0);
  EXPECT_TRUE(fs::exists(kRoot / "c_sp" / "gamma.csv"));
  ASSERT_EQ(run("finetune" + c + " --checkpoint " + (kRoot / "c_sp" / "checkpoint").string() + " --teacher " +
                (kRoot / "c_pre" / "checkpoint").string() + " --out " + (kRoot / "c_ft").string()),
            0);
  const auto pre = vsrprune::load_checkpoint(kRoot / "c_pre" / "checkpoint");
  const auto ft = vsrprune::load_checkpoint(kRoot / "c_ft" / "checkpoint");
  EXPECT_LT(vsrprune::parameter_count(ft.weights), vsrprune::parameter_count(pre.weights));
  EXPECT_TRUE(fs::exists(kRoot / "c_ft" / "fold_report.csv"));
}

TEST(Cli, UnknownFlagFails) {
  EXPECT_NE(run("cost --no-such-flag"), 0);
  EXPECT_NE(run("frobnicate"), 0);
}

TEST(Cli, BadConfigNamesTheKey) {
  const fs::path cfg = write_config("bad.json", R"({"optim": {"lerning_rate": 0.1}})");
  EXPECT_NE(run("cost --config " + cfg.string() + " --out " + (kRoot / "bad").string(), "bad.log"), 0);
  EXPECT_NE(slurp(kRoot / "bad.log").find("optim.lerning_rate"), std::string::npos);
}

TEST(Cli, FinetuneWithTemporalLossNeedsTeacher) {
  const fs::path cfg = write_config("tf.json", kSmall);
  const std::string c = " --config " + cfg.string();
  ASSERT_EQ(run("pretrain" + c + " --out " + (kRoot / "t_pre").string()), 0);
  EXPECT_NE(run("finetune" + c + " --checkpoint " + (kRoot / "t_pre" / "checkpoint").string() + " --out " +
                    (kRoot / "t_ft").string(),
                "tf.log"),
            0);
  EXPECT_NE(slurp(kRoot / "tf.log").find("teacher"), std::string::npos);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const fs::path out = kRoot / "env_out";
  fs::remove_all(out);
  EXPECT_EQ(std::system(("VSRPRUNE_OUT=" + out.string() + " " + VSRPRUNE_CLI + " cost > /dev/null").c_str()), 0);
  EXPECT_TRUE(fs::exists(out / "cost.csv"));
}
