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


#ifndef REVSUM_TRAINER_HPP_
#define REVSUM_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "revsum/corpus.hpp"
#include "revsum/model.hpp"

namespace revsum {

enum class ScalePreset { kDesk, kLarge };

// Ablation switches. Each flag removes the named component.
struct Ablation {
  bool customer_reviews = false;  // CR
  bool product_reviews = false;   // PR
  bool mixed = false;             // MIX: one graph over both histories
  bool contrastive = false;       // CL
  bool sentiment = false;         // SC: no classification loss
  bool sentiment_gate = false;    // SEG
  bool history_rating = false;    // HR
  bool graph = false;             // GRAPH: attend to raw review vectors
  bool time_edges = false;        // TIME_EDGE
  bool rating_edges = false;      // RATING_EDGE

  // Accepts acronyms separated by commas or spaces, each optionally prefixed
  // with '-', e.g. "-CL,-HR". Case-insensitive. Unknown names throw InputError.
  static Ablation parse(const std::string& flags);
  // "full" when nothing is removed, otherwise "-CL -HR" style.
  std::string label() const;
  bool any() const;
  void validate() const;  // at most one of CR, PR, MIX
};

ModelWiring apply_ablation(const Ablation& ablation);

enum class OptimizerKind { kAdam, kLineSearch };

struct TrainConfig {
  ScalePreset preset = ScalePreset::kDesk;
  // model
  int d = 128;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_dim = 512;
  double dropout = 0.0;
  int rgcn_layers = 2;
  bool directed_time = false;
  GateMode gate = GateMode::kScalar;
  // contrastive
  double alpha = 0.1;
  double tau = 0.05;
  double augment_dropout = 0.6;
  // train
  int k = 3;
  double lr = 5e-4;
  int batch_size = 8;
  int max_steps = 2000;
  uint64_t seed = 13;
  double clip_norm = 1.0;
  double divergence_threshold = 1e4;
  int eval_every = 0;  // 0 disables periodic validation
  int eval_examples = 0;  // 0 validates on the whole split
  int patience = 5;
  int checkpoint_every = 0;
  // Line-search mode takes plain gradient steps, halving the step until the
  // batch loss does not increase, with the augmentation noise held fixed.
  OptimizerKind optimizer = OptimizerKind::kAdam;
  Ablation ablation;

  static TrainConfig desk();
  static TrainConfig large();
  void validate() const;
};

ModelConfig make_model_config(const TrainConfig& config, const Dataset& data);

// L = L_g + L_s + alpha * L_c; without_sentiment drops L_s, without_contrastive
// drops L_c. A NaN component throws DivergenceError naming it.
double total_loss(double l_g, double l_s, double l_c, double alpha,
                  bool without_sentiment = false, bool without_contrastive = false);
ad::Var total_loss(const ad::Var& l_g, const ad::Var& l_s, const ad::Var& l_c, double alpha,
                   bool without_sentiment = false, bool without_contrastive = false);

struct StepRecord {
  int step = 0;  // 1-based count of completed updates
  double l_g = 0.0;
  double l_s = 0.0;
  double l_c = 0.0;
  double total = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;  // before clipping

  std::string to_json() const;
};

struct ValidationRecord {
  int step = 0;
  double rougel_f = 0.0;
  double balanced_acc = 0.0;
};

struct TrainState {
  int step = 0;
  StepRecord last;
  std::vector<ValidationRecord> validations;
  int best_step = -1;
  double best_rougel = -1.0;
  int evals_since_best = 0;
  bool stopped_early = false;
};

struct TrainOptions {
  // Checkpoints, manifest and log go to out_dir/<config hash>/ when set.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const StepRecord&)> on_step;
};

struct Evaluation {
  std::vector<std::string> ids;
  std::vector<std::string> summaries;   // decoded
  std::vector<std::string> references;
  std::vector<int> predicted_ratings;
  std::vector<int> gold_ratings;
  double rougel_f = 0.0;
  double balanced_acc = 0.0;
};

// Greedy or beam decoding plus rating prediction over (a prefix of) a split.
Evaluation evaluate_split(const Model& model, const Dataset& data,
                          const std::vector<TrainingExample>& split, const ModelWiring& wiring,
                          DecodeStrategy strategy = DecodeStrategy::kGreedy, int beam_width = 1,
                          int max_examples = 0, int batch_size = 16);

class Trainer {
 public:
  // data.config.k must equal config.k (see rewindow_histories).
  Trainer(const TrainConfig& config, const Dataset& data);

  // One optimization step on the next batch of the deterministic schedule.
  StepRecord step();
  // Runs until max_steps, early stopping or `until_step` (if positive).
  const TrainState& run(const TrainOptions& options = {}, int until_step = 0);
  ValidationRecord validate();

  void save_checkpoint(const std::filesystem::path& path) const;
  // Restores parameters, optimizer moments and counters. The checkpoint's
  // config must hash equal to this trainer's.
  void load_checkpoint(const std::filesystem::path& path);

  Model& model() { return *model_; }
  const Model& model() const { return *model_; }
  const TrainConfig& config() const { return config_; }
  const TrainState& state() const { return state_; }
  const ModelWiring& wiring() const { return wiring_; }
  std::string config_hash() const;

  // Batch losses at the current parameters without updating.
  StepRecord probe(int step_index, bool training) const;

 private:
  const Batch& batch_for(int step_index) const;
  uint64_t step_seed(int step_index) const;
  double clip_gradients();
  void adam_update();
  void line_search_update(double loss, int step_index);
  std::filesystem::path run_dir(const std::filesystem::path& out) const;
  void write_manifest(const std::filesystem::path& dir) const;

  TrainConfig config_;
  const Dataset* data_;
  ModelWiring wiring_;
  std::unique_ptr<Model> model_;
  std::vector<Matrix> adam_m_;
  std::vector<Matrix> adam_v_;
  TrainState state_;
  mutable int cached_epoch_ = -1;
  mutable std::vector<Batch> epoch_batches_;
};

struct LoadedModel {
  TrainConfig config;
  std::unique_ptr<Model> model;
  int step = 0;
};

// Training configuration stored in a checkpoint header.
TrainConfig read_checkpoint_config(const std::filesystem::path& checkpoint);

// Rebuilds a model from a checkpoint file for inference.
LoadedModel load_model(const std::filesystem::path& checkpoint, const Dataset& data);

}  // namespace revsum

#endif  // REVSUM_TRAINER_HPP_
