// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

// Drives the plgat executable end to end. The binary path arrives through
// PLGAT_CLI_PATH.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

const fs::path kData = PLGAT_TEST_DATA_DIR;

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path &p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("plgat-cli-test-" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string &args) {
    const std::string cmd =
        std::string(PLGAT_CLI_PATH) + " " + args + " >" + (dir_ / "stdout").string() +
        " 2>" + (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  // Poses fixture scored against the crystal: two labelled records.
  void prepare_fixture(const std::string &out) {
    ASSERT_EQ(run("prepare --protein " + (kData / "mini.pdb").string() + " --ligand " +
                  (kData / "poses.sdf").string() + " --crystal " +
                  (kData / "crystal.sdf").string() + " --out " + path(out)),
              0)
        << slurp(dir_ / "stderr");
  }

  // Copies of the crystal ligand under titles L0..L(n-1).
  void write_titled_ligands(const std::string &name, int n) {
    const std::string crystal = slurp(kData / "crystal.sdf");
    const std::string body = crystal.substr(crystal.find('\n'));
    std::ofstream out(dir_ / name);
    for (int k = 0; k < n; ++k) out << "L" << k << body;
  }

  fs::path dir_;
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train --epochs 3"), 2);
  EXPECT_EQ(run("evaluate --predictions x.csv --mode sideways"), 2);
}

TEST_F(Cli, MissingInputExitsThree) {
  EXPECT_EQ(run("prepare --protein " + path("absent.pdb") + " --ligand " +
                path("absent.sdf") + " --out " + path("ds.jsonl")),
            3);
  EXPECT_EQ(run("predict --checkpoint " + path("nothing") + " --data " +
                path("ds.jsonl") + " --out " + path("p.csv")),
            3);
}

TEST_F(Cli, PrepareLabelsPosesAndLogsSkips) {
  prepare_fixture("ds.jsonl");
  EXPECT_EQ(lines(dir_ / "ds.jsonl").size(), 2u);
  const auto skips = lines(dir_ / "ds.jsonl.skips.csv");
  ASSERT_EQ(skips.size(), 2u);
  EXPECT_EQ(skips[0], "sample_id,pose_rank,reason,detail");
  EXPECT_NE(skips[1].find("rmsd_between_thresholds"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "ds.jsonl.config"));
}

TEST_F(Cli, PrepareSkipsUnlabelledLigands) {
  write_titled_ligands("ligs.sdf", 2);
  std::ofstream(dir_ / "labels.csv") << "id,kind,value\nL0,pic50,6.5\n";
  ASSERT_EQ(run("prepare --protein " + (kData / "mini.pdb").string() + " --ligand " +
                path("ligs.sdf") + " --labels " + path("labels.csv") + " --out " +
                path("ds.jsonl")),
            0)
      << slurp(dir_ / "stderr");
  EXPECT_EQ(lines(dir_ / "ds.jsonl").size(), 1u);
  const std::string skips = slurp(dir_ / "ds.jsonl.skips.csv");
  EXPECT_NE(skips.find("L1,1,missing_label"), std::string::npos) << skips;
}

TEST_F(Cli, BalanceDownsamplesMajority) {
  write_titled_ligands("ligs.sdf", 12);
  {
    std::ofstream out(dir_ / "labels.csv");
    out << "id,kind,value\n";
    for (int k = 0; k < 12; ++k) out << "L" << k << ",activity," << (k < 3 ? 1 : 0) << "\n";
  }
  ASSERT_EQ(run("prepare --protein " + (kData / "mini.pdb").string() + " --ligand " +
                path("ligs.sdf") + " --labels " + path("labels.csv") +
                " --balance --seed 4 --out " + path("ds.jsonl")),
            0)
      << slurp(dir_ / "stderr");
  const auto rows = lines(dir_ / "ds.jsonl");
  ASSERT_EQ(rows.size(), 6u);
  int positives = 0;
  for (const auto &r : rows) positives += r.find("\"value\":1.0") != std::string::npos ||
                                          r.find("\"value\":1,") != std::string::npos ||
                                          r.find("\"value\":1}") != std::string::npos;
  EXPECT_EQ(positives, 3);
  const auto skips = lines(dir_ / "ds.jsonl.skips.csv");
  EXPECT_EQ(skips.size(), 7u);
}

TEST_F(Cli, TrainLogEchoesDefaults) {
  prepare_fixture("ds.jsonl");
  ASSERT_EQ(run("train --data " + path("ds.jsonl") + " --out " + path("m") + " --epochs 1"),
            0)
      << slurp(dir_ / "stderr");
  const std::string log = slurp(dir_ / "m" / "train_log.csv");
  EXPECT_NE(log.find("# lr=0.0001\n"), std::string::npos);
  EXPECT_NE(log.find("# blocks=2\n"), std::string::npos);
  EXPECT_NE(log.find("# dim=70\n"), std::string::npos);
  EXPECT_NE(log.find("# epochs=1\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "m" / "config.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "m" / "checkpoint" / "manifest.json"));
}

std::string last_line(const fs::path &p) { return lines(p).back(); }

TEST_F(Cli, ResumeContinuesTheSameRun) {
  prepare_fixture("ds.jsonl");
  const std::string common = " --data " + path("ds.jsonl") + " --dim 8 --seed 2";
  ASSERT_EQ(run("train" + common + " --epochs 3 --out " + path("full")), 0);
  ASSERT_EQ(run("train" + common + " --epochs 2 --out " + path("half")), 0);
  ASSERT_EQ(run("train" + common + " --epochs 3 --resume " + path("half/checkpoint") +
                " --out " + path("rest")),
            0)
      << slurp(dir_ / "stderr");
  EXPECT_EQ(last_line(dir_ / "rest" / "train_log.csv"),
            last_line(dir_ / "full" / "train_log.csv"));
  EXPECT_EQ(slurp(dir_ / "rest" / "checkpoint" / "weights.bin"),
            slurp(dir_ / "full" / "checkpoint" / "weights.bin"));
}

std::map<std::string, std::string> metric_csv(const fs::path &p) {
  std::map<std::string, std::string> out;
  for (const std::string &line : lines(p)) {
    const auto comma = line.find(',');
    if (comma != std::string::npos) out[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return out;
}

TEST_F(Cli, PredictAgreesWithTrainingLog) {
  prepare_fixture("ds.jsonl");
  ASSERT_EQ(run("train --data " + path("ds.jsonl") + " --out " + path("m") +
                " --epochs 3 --dim 8"),
            0);
  ASSERT_EQ(run("predict --checkpoint " + path("m/checkpoint") + " --data " +
                path("ds.jsonl") + " --out " + path("p.csv")),
            0)
      << slurp(dir_ / "stderr");
  ASSERT_EQ(run("evaluate --predictions " + path("p.csv") + " --out " + path("e.csv")), 0);
  const auto metrics = metric_csv(dir_ / "e.csv");
  ASSERT_TRUE(metrics.count("accuracy"));

  const auto log = lines(dir_ / "m" / "train_log.csv");
  std::vector<std::string> header;
  std::vector<std::string> last;
  for (const std::string &line : log) {
    if (line.rfind("epoch,", 0) == 0) {
      std::istringstream s(line);
      for (std::string f; std::getline(s, f, ',');) header.push_back(f);
    }
  }
  std::istringstream s(log.back());
  for (std::string f; std::getline(s, f, ',');) last.push_back(f);
  std::string logged;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "train_accuracy") logged = last.at(k);
  }
  EXPECT_EQ(metrics.at("accuracy"), logged);
}

TEST_F(Cli, PredictOnEmptyDatasetWritesHeader) {
  prepare_fixture("ds.jsonl");
  ASSERT_EQ(run("train --data " + path("ds.jsonl") + " --out " + path("m") +
                " --epochs 1 --dim 8"),
            0);
  std::ofstream(dir_ / "empty.jsonl").close();
  ASSERT_EQ(run("predict --checkpoint " + path("m/checkpoint") + " --data " +
                path("empty.jsonl") + " --out " + path("p.csv")),
            0)
      << slurp(dir_ / "stderr");
  const auto rows = lines(dir_ / "p.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].rfind("sample_id,", 0), 0u);
}

TEST_F(Cli, PredictRefusesMismatchedCheckpoints) {
  prepare_fixture("ds.jsonl");
  ASSERT_EQ(run("train --data " + path("ds.jsonl") + " --out " + path("m") +
                " --epochs 1 --dim 8"),
            0);
  const std::string base = "predict --checkpoint " + path("m/checkpoint") + " --data " +
                           path("ds.jsonl") + " --out " + path("p.csv");
  EXPECT_EQ(run(base + " --head reg"), 3);
  EXPECT_NE(slurp(dir_ / "stderr").find("cls"), std::string::npos);

  const fs::path manifest = dir_ / "m" / "checkpoint" / "manifest.json";
  std::string text = slurp(manifest);
  const std::string key = "plgat-atom-features-v1";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, key.size(), "plgat-atom-features-v0");
  std::ofstream(manifest, std::ios::binary) << text;
  EXPECT_EQ(run(base), 3);
  EXPECT_FALSE(fs::exists(dir_ / "p.csv"));
}

TEST_F(Cli, TopNReportsPercentages) {
  std::ofstream(dir_ / "p.csv") << "sample_id,target_id,pose_rank,score,label,rmsd\n"
                                   "A,t,1,0.9,1,1.0\nA,t,2,0.1,0,5.0\n"
                                   "B,t,1,0.8,0,5.0\nB,t,2,0.7,1,1.5\n";
  ASSERT_EQ(run("topn --predictions " + path("p.csv") + " --n 1,2 --out " + path("t.csv")),
            0)
      << slurp(dir_ / "stderr");
  const std::string table = slurp(dir_ / "t.csv");
  EXPECT_NE(table.find("50"), std::string::npos) << table;
  EXPECT_NE(table.find("100"), std::string::npos) << table;
}

}  // namespace
