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


#include "revsum/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "revsum/error.hpp"
#include "revsum/run_config.hpp"

namespace revsum {
namespace {

namespace fs = std::filesystem;

Dataset small_dataset(int n = 24, int k = 3) {
  DatasetConfig dc;
  dc.vocab_size = 200;
  dc.k = k;
  dc.limits.max_review = 10;
  dc.limits.max_summary = 5;
  dc.val_size = 4;
  dc.test_size = 0;
  return build_dataset(synthetic_reviews(n, 4, 3, 5), dc);
}

TrainConfig small_config() {
  TrainConfig c = TrainConfig::desk();
  c.d = 16;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn_dim = 32;
  c.tau = 0.5;
  c.batch_size = 4;
  c.max_steps = 100;
  c.seed = 3;
  return c;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("revsum_trainer_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(TotalLoss, WeightedSum) {
  EXPECT_EQ(total_loss(1.0, 2.0, 3.0, 0.1), 1.0 + 2.0 + 0.1 * 3.0);
  EXPECT_NEAR(total_loss(1.0, 2.0, 3.0, 0.1), 3.3, 1e-15);
  EXPECT_EQ(total_loss(1.0, 2.0, 3.0, 0.0), 3.0);
  EXPECT_NEAR(total_loss(1.0, 2.0, 3.0, 0.1, true), 1.3, 1e-15);
  EXPECT_EQ(total_loss(1.0, 2.0, 3.0, 0.1, false, true), 3.0);
  const ad::Var v = total_loss(ad::Var::constant(Matrix::Constant(1, 1, 1.0)),
                               ad::Var::constant(Matrix::Constant(1, 1, 2.0)),
                               ad::Var::constant(Matrix::Constant(1, 1, 3.0)), 0.1);
  EXPECT_EQ(v.scalar(), total_loss(1.0, 2.0, 3.0, 0.1));
}

TEST(TotalLoss, NanNamesTheComponent) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    total_loss(1.0, nan, 3.0, 0.1);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("L_s"), std::string::npos);
  }
  EXPECT_THROW(total_loss(1.0, 2.0, std::numeric_limits<double>::infinity(), 0.1), DivergenceError);
  EXPECT_THROW(total_loss(nan, 2.0, 3.0, 0.1), DivergenceError);
}

TEST(AblationFlags, ParseLabelAndConflicts) {
  const Ablation a = Ablation::parse("-CL, -hr");
  EXPECT_TRUE(a.contrastive);
  EXPECT_TRUE(a.history_rating);
  EXPECT_FALSE(a.sentiment);
  EXPECT_EQ(a.label(), "-CL -HR");
  EXPECT_EQ(Ablation::parse("").label(), "full");
  EXPECT_FALSE(Ablation::parse("full").any());
  EXPECT_TRUE(Ablation::parse("-TIME_EDGE -RATING_EDGE").time_edges);
  EXPECT_THROW(Ablation::parse("-XYZ"), InputError);
  EXPECT_THROW(Ablation::parse("-CR -PR").validate(), InputError);
  EXPECT_THROW(Ablation::parse("-MIX,-CR").validate(), InputError);
  EXPECT_NO_THROW(Ablation::parse("-MIX -CL").validate());
}

TEST(AblationFlags, Wiring) {
  EXPECT_FALSE(apply_ablation(Ablation::parse("-CR")).customer_graph);
  EXPECT_FALSE(apply_ablation(Ablation::parse("-PR")).product_graph);
  EXPECT_TRUE(apply_ablation(Ablation::parse("-MIX")).mixed_graph);
  EXPECT_FALSE(apply_ablation(Ablation::parse("-SC")).sentiment_loss);
  EXPECT_FALSE(apply_ablation(Ablation::parse("-SEG")).sentiment_gate);
  EXPECT_FALSE(apply_ablation(Ablation::parse("-HR")).history_rating);
  EXPECT_FALSE(apply_ablation(Ablation::parse("-GRAPH")).graph_reasoning);
  EXPECT_FALSE(apply_ablation(Ablation::parse("-TIME_EDGE")).edges.time_edges);
  EXPECT_FALSE(apply_ablation(Ablation::parse("-RATING_EDGE")).edges.rating_edges);
  EXPECT_FALSE(apply_ablation(Ablation::parse("-CL")).contrastive);
}

TEST(TrainConfigText, RoundTripAndOverrides) {
  TrainConfig c = small_config();
  c.ablation = Ablation::parse("-CL -SEG");
  c.gate = GateMode::kVector;
  c.optimizer = OptimizerKind::kLineSearch;
  c.lr = 1.25e-4;
  const std::string text = to_ini(c);
  EXPECT_EQ(to_ini(parse_train_config(text)), text);
  const TrainConfig o = parse_train_config(text, {"contrastive.alpha=0", "train.k=5"});
  EXPECT_EQ(o.alpha, 0.0);
  EXPECT_EQ(o.k, 5);
  EXPECT_EQ(parse_train_config("[train]\npreset = large\n").d, 768);
  EXPECT_EQ(parse_train_config("[train]\npreset = large\n[model]\nd = 24\n").d, 24);
  EXPECT_THROW(parse_train_config("[model]\nwidth = 3\n"), InputError);
  EXPECT_THROW(parse_train_config("[nonsense]\nd = 3\n"), InputError);
  EXPECT_THROW(parse_train_config("[model]\nd = many\n"), InputError);
  EXPECT_THROW(parse_train_config("", {"alpha=0"}), InputError);
  EXPECT_THROW(parse_train_config("[contrastive]\nalpha = -1\n"), InputError);
  EXPECT_THROW(parse_train_config("[train]\nk = 0\n"), InputError);
  EXPECT_THROW(parse_train_config("[ablation]\nflags = -CR -PR\n"), InputError);
}

TEST(Trainer, SameSeedIsBitwiseIdentical) {
  const Dataset data = small_dataset();
  Trainer a(small_config(), data);
  Trainer b(small_config(), data);
  std::vector<double> la;
  std::vector<double> lb;
  a.run({.out_dir = std::nullopt, .on_step = [&](const StepRecord& r) { la.push_back(r.total); }});
  b.run({.out_dir = std::nullopt, .on_step = [&](const StepRecord& r) { lb.push_back(r.total); }});
  ASSERT_EQ(la.size(), 100u);
  EXPECT_EQ(la, lb);
  TrainConfig other = small_config();
  other.seed = 4;
  Trainer c(other, data);
  EXPECT_NE(c.step().total, la[0]);
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  const Dataset data = small_dataset();
  const fs::path dir = temp_dir("resume");
  TrainConfig cfg = small_config();
  cfg.checkpoint_every = 50;
  Trainer full(cfg, data);
  std::vector<double> want;
  full.run({.out_dir = dir, .on_step = [&](const StepRecord& r) { want.push_back(r.total); }});
  const fs::path ckpt = dir / full.config_hash() / "50.ckpt";
  ASSERT_TRUE(fs::exists(ckpt));

  Trainer resumed(cfg, data);
  resumed.load_checkpoint(ckpt);
  EXPECT_EQ(resumed.state().step, 50);
  std::vector<double> got;
  resumed.run({.out_dir = std::nullopt, .on_step = [&](const StepRecord& r) { got.push_back(r.total); }});
  ASSERT_EQ(got.size(), 50u);
  for (size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[50 + i], 1e-10) << i;
  fs::remove_all(dir);
}

TEST(Trainer, CheckpointRejectsOtherConfig) {
  const Dataset data = small_dataset();
  const fs::path dir = temp_dir("reject");
  Trainer t(small_config(), data);
  t.step();
  t.save_checkpoint(dir / "1.ckpt");
  TrainConfig other = small_config();
  other.alpha = 0.5;
  Trainer u(other, data);
  EXPECT_THROW(u.load_checkpoint(dir / "1.ckpt"), InputError);
  EXPECT_THROW(u.load_checkpoint(dir / "missing.ckpt"), InputError);
  {
    std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  }
  EXPECT_THROW(u.load_checkpoint(dir / "junk.ckpt"), InputError);
  const LoadedModel m = load_model(dir / "1.ckpt", data);
  EXPECT_EQ(m.step, 1);
  EXPECT_EQ(to_ini(m.config), to_ini(small_config()));
  fs::remove_all(dir);
}

TEST(Trainer, ConfigHashIgnoresStepBudget) {
  const Dataset data = small_dataset();
  TrainConfig a = small_config();
  TrainConfig b = small_config();
  b.max_steps = 7;
  b.checkpoint_every = 3;
  EXPECT_EQ(Trainer(a, data).config_hash(), Trainer(b, data).config_hash());
  b.lr = 1e-3;
  EXPECT_NE(Trainer(a, data).config_hash(), Trainer(b, data).config_hash());
}

TEST(Trainer, WithoutSentimentAndAlphaZeroFreezesClassifier) {
  const Dataset data = small_dataset();
  TrainConfig cfg = small_config();
  cfg.alpha = 0.0;
  cfg.ablation = Ablation::parse("-SC");
  Trainer t(cfg, data);
  std::vector<std::pair<std::string, Matrix>> before;
  for (const auto& [name, v] : t.model().params().items()) {
    if (name.rfind("classifier.", 0) == 0) before.emplace_back(name, v.value());
  }
  ASSERT_EQ(before.size(), 4u);
  const Matrix gate_before = t.model().params().get("decoder.layer0.gate.w_state").value();
  t.step();
  for (const auto& [name, m] : before) {
    EXPECT_EQ((t.model().params().get(name).value() - m).norm(), 0.0) << name;
  }
  EXPECT_GT((t.model().params().get("decoder.layer0.gate.w_state").value() - gate_before).norm(), 0.0);
}

TEST(Trainer, LineSearchIsNonIncreasing) {
  const Dataset data = small_dataset(20);
  Dataset four = data;
  four.train.resize(4);
  TrainConfig cfg = small_config();
  cfg.optimizer = OptimizerKind::kLineSearch;
  cfg.lr = 1e-4;
  cfg.max_steps = 10;
  Trainer t(cfg, four);
  std::vector<double> losses;
  for (int i = 0; i < 10; ++i) {
    losses.push_back(t.step().total);
    EXPECT_LE(t.probe(i, true).total, losses.back());
  }
  losses.push_back(t.probe(10, true).total);
  for (size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1]) << i;
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Trainer, DivergenceAborts) {
  const Dataset data = small_dataset();
  TrainConfig cfg = small_config();
  cfg.divergence_threshold = 1e-3;
  Trainer t(cfg, data);
  try {
    t.step();
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(Trainer, RejectsMismatchedDatasetWindow) {
  const Dataset data = small_dataset(24, 2);
  EXPECT_THROW(Trainer(small_config(), data), InputError);
  Dataset fixed = data;
  rewindow_histories(fixed, 3);
  EXPECT_NO_THROW(Trainer(small_config(), fixed));
}

TEST(Trainer, RunDirectoryLayout) {
  const Dataset data = small_dataset();
  const fs::path dir = temp_dir("layout");
  TrainConfig cfg = small_config();
  cfg.max_steps = 12;
  cfg.eval_every = 4;
  cfg.eval_examples = 2;
  cfg.patience = 100;
  Trainer t(cfg, data);
  const TrainState& s = t.run({.out_dir = dir, .on_step = {}});
  const fs::path run = dir / t.config_hash();
  EXPECT_TRUE(fs::exists(run / "config.ini"));
  std::ifstream log(run / "train_log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"step", "L_g", "L_s", "L_c", "L", "lr", "grad_norm"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["step"].get<int>(), ++lines);
  }
  EXPECT_EQ(lines, 12);
  EXPECT_EQ(s.validations.size(), 3u);
  std::ifstream mf(run / "manifest.json");
  const auto manifest = nlohmann::json::parse(mf);
  EXPECT_EQ(manifest["config_hash"], t.config_hash());
  EXPECT_EQ(manifest["best_step"].get<int>(), s.best_step);
  EXPECT_TRUE(fs::exists(run / manifest["best"].get<std::string>()));
  EXPECT_TRUE(fs::exists(run / "12.ckpt"));
  EXPECT_EQ(load_train_config(run / "config.ini").seed, cfg.seed);
  fs::remove_all(dir);
}

TEST(Trainer, EarlyStoppingHonoursPatience) {
  const Dataset data = small_dataset();
  TrainConfig cfg = small_config();
  cfg.max_steps = 400;
  cfg.lr = 1e-12;  // validation score never improves after the first check
  cfg.eval_every = 1;
  cfg.eval_examples = 1;
  cfg.patience = 2;
  Trainer t(cfg, data);
  const TrainState& s = t.run();
  EXPECT_TRUE(s.stopped_early);
  EXPECT_EQ(s.step, 3);
  EXPECT_EQ(s.best_step, 1);
}

}  // namespace
}  // namespace revsum
