// Copyright 2026 The revsum Authors.
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


// Drives the revsum binary as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "revsum/corpus.hpp"
#include "revsum/run_config.hpp"
#include "revsum/trainer.hpp"

namespace revsum {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kFixture = fs::path(REVSUM_SOURCE_DIR) / "tests" / "data" / "six_reviews.jsonl";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("revsum_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) +
            "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Returns the exit code; stdout lands in out_.
  int run(const std::string& args) {
    const fs::path log = dir_ / "stdout.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + std::string(REVSUM_CLI_PATH) + "' " +
                            args + " > '" + log.string() + "' 2> '" + (dir_ / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    out_ = slurp(log);
    err_ = slurp(dir_ / "stderr.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  // Synthetic corpus prepared into dir_/prep.
  void prepare_synthetic() {
    ASSERT_EQ(run("synth --records 32 --out syn.jsonl"), 0) << err_;
    ASSERT_EQ(run("prepare --input syn.jsonl --out prep --vocab-size 300 --max-review 24 "
                  "--max-summary 6 --val-size 4 --test-size 4"),
              0)
        << err_;
  }

  static constexpr const char* kTiny =
      "--set model.d=16 --set model.n_heads=2 --set model.ffn_dim=32 --set model.n_layers=1";

  fs::path dir_;
  std::string out_;
  std::string err_;
};

TEST_F(Cli, PrepareReportsFixtureRecords) {
  ASSERT_EQ(run("prepare --input '" + kFixture.string() + "' --out prep"), 0) << err_;
  const json stats = read_json(dir_ / "prep" / "stats.json");
  EXPECT_EQ(stats["records"].get<int>(), 5);
  EXPECT_EQ(stats["skipped"].get<int>(), 1);
  const json m = read_json(dir_ / "prep" / "manifest.json");
  EXPECT_EQ(m["command"], "prepare");
  EXPECT_EQ(m["inputs"][0]["git_blob"].get<std::string>().size(), 40u);
  const std::string first = slurp(dir_ / "prep" / "dataset.json");
  const std::string first_manifest = slurp(dir_ / "prep" / "manifest.json");
  ASSERT_EQ(run("prepare --input '" + kFixture.string() + "' --out prep"), 0);
  EXPECT_EQ(slurp(dir_ / "prep" / "dataset.json"), first);
  EXPECT_EQ(slurp(dir_ / "prep" / "manifest.json"), first_manifest);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("prepare --out prep"), 2);
  EXPECT_EQ(run("prepare --input missing.jsonl --out prep"), 2);
  EXPECT_EQ(run("prepare --input x --out y --no-such-flag"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("generate --ckpt missing.ckpt --data prep --out g"), 2);
  EXPECT_EQ(run("generate --ckpt a --data b --out g --strategy sideways"), 2);
  EXPECT_EQ(run("--help"), 0);
  for (const char* flag : {"--input", "--vocab-size", "--seed"}) {
    run("prepare --help");
    EXPECT_NE(out_.find(flag), std::string::npos) << flag;
  }
}

TEST_F(Cli, TrainSmokeRunLeavesBestCheckpoint) {
  prepare_synthetic();
  ASSERT_EQ(run(std::string("train --data prep --out run --set train.max_steps=20 "
                            "--set train.eval_every=10 --set contrastive.alpha=0 ") +
                kTiny),
            0)
      << err_;
  const json m = read_json(dir_ / "run" / "manifest.json");
  const fs::path best = dir_ / "run" / m["best_checkpoint"].get<std::string>();
  EXPECT_TRUE(fs::exists(best));
  const fs::path run_dir = dir_ / "run" / m["run_dir"].get<std::string>();
  const TrainConfig logged = load_train_config(run_dir / "config.ini");
  EXPECT_EQ(logged.alpha, 0.0);
  EXPECT_NE(slurp(run_dir / "config.ini").find("alpha = 0"), std::string::npos);
  const json inner = read_json(run_dir / "manifest.json");
  EXPECT_EQ(inner["validations"].size(), 2u);
}

TEST_F(Cli, TrainResumesFromLatestCheckpoint) {
  prepare_synthetic();
  const std::string base = std::string("train --data prep --set train.checkpoint_every=10 ") + kTiny;
  ASSERT_EQ(run(base + " --out split --set train.max_steps=10"), 0) << err_;
  ASSERT_EQ(run(base + " --out split --set train.max_steps=20"), 0) << err_;
  EXPECT_NE(err_.find("resuming from"), std::string::npos);
  ASSERT_EQ(run(base + " --out whole --set train.max_steps=20"), 0) << err_;
  const std::string hash = read_json(dir_ / "whole" / "manifest.json")["run_dir"];
  EXPECT_EQ(read_json(dir_ / "split" / "manifest.json")["run_dir"], hash);
  EXPECT_EQ(slurp(dir_ / "split" / hash / "train_log.jsonl"),
            slurp(dir_ / "whole" / hash / "train_log.jsonl"));
}

TEST_F(Cli, TrainRejectsConflictsAndBadOverrides) {
  prepare_synthetic();
  EXPECT_EQ(run("train --data prep --out run --set 'ablation.flags=-CR -MIX'"), 2);
  EXPECT_EQ(run("train --data prep --out run --set model.width=3"), 2);
  EXPECT_EQ(run("train --data missing --out run"), 2);
  std::ofstream(dir_ / "bad.ini") << "[ablation]\ncr = true\npr = true\n";
  EXPECT_EQ(run("train --config bad.ini --data prep --out run"), 2);
}

TEST_F(Cli, DivergenceExitsThree) {
  prepare_synthetic();
  EXPECT_EQ(run(std::string("train --data prep --out run --set train.divergence_threshold=0.001 ") + kTiny), 3);
  EXPECT_NE(err_.find("diverged"), std::string::npos) << err_;
}

TEST_F(Cli, GenerateBeamWidthOneMatchesGreedy) {
  prepare_synthetic();
  ASSERT_EQ(run(std::string("train --data prep --out run --set train.max_steps=40 ") + kTiny), 0) << err_;
  const std::string ckpt = read_json(dir_ / "run" / "manifest.json")["best_checkpoint"];
  ASSERT_EQ(run("generate --ckpt run/" + ckpt + " --data prep --split train --out greedy"), 0) << err_;
  ASSERT_EQ(run("generate --ckpt run/" + ckpt +
                " --data prep --split train --strategy beam --beam-width 1 --out beam"),
            0);
  EXPECT_EQ(slurp(dir_ / "greedy" / "summaries.tsv"), slurp(dir_ / "beam" / "summaries.tsv"));
  EXPECT_EQ(slurp(dir_ / "greedy" / "predictions.tsv"), slurp(dir_ / "beam" / "predictions.tsv"));
  ASSERT_EQ(run("generate --ckpt run/" + ckpt + " --data prep --split train --out greedy2"), 0);
  EXPECT_EQ(slurp(dir_ / "greedy" / "manifest.json"), slurp(dir_ / "greedy2" / "manifest.json"));
}

TEST_F(Cli, RiggedCheckpointDecodesExpectedSummary) {
  prepare_synthetic();
  const Dataset data = load_cache(dir_ / "prep" / "dataset.json");
  TrainConfig cfg = parse_train_config("", {"model.d=16", "model.n_heads=2", "model.ffn_dim=32", "model.n_layers=1"});
  Trainer trainer(cfg, data);
  nn::ParamStore& ps = trainer.model().params();
  ad::Var w = ps.get("decoder.output.weight");
  ad::Var b = ps.get("decoder.output.bias");
  w.mutable_value().setZero();
  b.mutable_value().setConstant(-5.0);
  const int great = data.vocab.id("great");
  ASSERT_GE(great, Vocabulary::kNumReserved);
  b.mutable_value()(0, great) = 5.0;
  trainer.save_checkpoint(dir_ / "rigged.ckpt");
  ASSERT_EQ(run("generate --ckpt rigged.ckpt --data prep --split test --out g"), 0) << err_;
  std::istringstream lines(slurp(dir_ / "g" / "summaries.tsv"));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    ++n;
    EXPECT_EQ(line.substr(line.find('\t') + 1), "great great great great great great");
  }
  EXPECT_EQ(n, 4);
}

TEST_F(Cli, EvaluateIdenticalAndMisalignedFiles) {
  std::ofstream(dir_ / "a.tsv") << "1\tthe cat sat\n2\ta b c d\n";
  std::ofstream(dir_ / "r.tsv") << "1\tthe cat ate\n2\ta c d b\n";
  std::ofstream(dir_ / "p.tsv") << "1\t5\n2\t2\n";
  std::ofstream(dir_ / "g.tsv") << "1\t5\n2\t3\n";
  std::ofstream(dir_ / "short.tsv") << "1\tthe cat sat\n3\tx\n";
  ASSERT_EQ(run("evaluate --decoded a.tsv --refs a.tsv --predictions g.tsv --golds g.tsv"), 0) << err_;
  json j = json::parse(out_);
  for (const char* k : {"rouge1_f", "rouge2_f", "rougel_f", "accuracy"}) EXPECT_EQ(j[k].get<double>(), 1.0) << k;
  ASSERT_EQ(run("evaluate --decoded a.tsv --refs r.tsv --predictions p.tsv --golds g.tsv --out rep"), 0);
  j = read_json(dir_ / "rep" / "report.json");
  EXPECT_NEAR(j["rouge1_f"].get<double>(), 5.0 / 6, 1e-12);
  EXPECT_NEAR(j["rouge2_f"].get<double>(), 5.0 / 12, 1e-12);
  EXPECT_NEAR(j["rougel_f"].get<double>(), 17.0 / 24, 1e-12);
  EXPECT_TRUE(fs::exists(dir_ / "rep" / "manifest.json"));
  EXPECT_EQ(run("evaluate --decoded short.tsv --refs r.tsv --predictions p.tsv --golds g.tsv"), 2);
  EXPECT_NE(err_.find("misaligned"), std::string::npos);
}

TEST_F(Cli, AblateGridHasOneRowPerVariant) {
  prepare_synthetic();
  ASSERT_EQ(run(std::string("ablate --data prep --out ab --set train.max_steps=10 --variant=-CL "
                            "--variant=full --variant=-HR --variant=-CL ") +
                kTiny),
            0)
      << err_;
  const json grid = read_json(dir_ / "ab" / "ablation.json");
  ASSERT_EQ(grid["rows"].size(), 3u);
  EXPECT_EQ(grid["rows"][0]["model"], "full");
  EXPECT_EQ(grid["rows"][1]["model"], "-CL");
  EXPECT_EQ(grid["rows"][2]["model"], "-HR");
  const std::string table = slurp(dir_ / "ab" / "ablation.md");
  EXPECT_NE(table.find("| Model | Rouge-1 | Rouge-2 | Rouge-L | B.Acc | M.F1 |"), std::string::npos);
  EXPECT_EQ(run(std::string("ablate --data prep --out ab2 --variant=-SC --set train.max_steps=5 ") + kTiny), 0);
  EXPECT_TRUE(read_json(dir_ / "ab2" / "ablation.json")["rows"][1]["macro_f1"].is_null());
  EXPECT_EQ(run("ablate --data prep --out ab3 --variant='-CR -PR'"), 2);
}

}  // namespace
}  // namespace revsum
