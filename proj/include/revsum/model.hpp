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


#ifndef REVSUM_MODEL_HPP_
#define REVSUM_MODEL_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "revsum/contrastive.hpp"
#include "revsum/corpus.hpp"
#include "revsum/decoder.hpp"
#include "revsum/encoder.hpp"
#include "revsum/graph.hpp"
#include "revsum/sentiment.hpp"

namespace revsum {

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
  int rgcn_layers = 2;
  bool directed_time = false;
  ContrastiveConfig contrastive;
  int vocab_size = 0;
  int n_customers = 1;  // rows incl. the unseen-entity bucket
  int n_products = 1;
  int k = 3;

  // Desk scale (128 wide, 2 layers, 4 heads) sized for a dataset.
  static ModelConfig desk(const Dataset& data);
  static ModelConfig large(const Dataset& data);
  void validate() const;
};

// Which paths of the model are live. Built from ablation flags by the trainer.
struct ModelWiring {
  bool customer_graph = true;
  bool product_graph = true;
  bool mixed_graph = false;     // one graph over both histories
  bool contrastive = true;
  bool sentiment_loss = true;
  bool sentiment_gate = true;
  bool history_rating = true;   // rating embeddings in history review vectors
  bool graph_reasoning = true;  // RGCN; off attends to raw review vectors
  EdgeOptions edges;
};

struct ForwardOutput {
  ad::Var generation_loss;  // 1 x 1 each
  ad::Var sentiment_loss;
  ad::Var contrastive_loss;
  Matrix rating_probs;      // B x 5
  Matrix customer_summary;  // h_u, B x d
  Matrix product_summary;   // h_p, B x d
  Matrix fusion_weights;    // B x 3
  std::vector<ReviewGraph> graphs;  // per example and side, in batch order
};

enum class DecodeStrategy { kGreedy, kBeam };

class Model {
 public:
  Model(const ModelConfig& config, uint64_t init_seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  // Teacher-forced pass over one batch. `seed` drives dropout and the
  // contrastive augmentation; evaluation mode disables both.
  ForwardOutput forward(const Dataset& data, const std::vector<TrainingExample>& split,
                        const Batch& batch, const ModelWiring& wiring, bool training,
                        uint64_t seed) const;

  std::vector<DecodeResult> generate(const Dataset& data,
                                     const std::vector<TrainingExample>& split,
                                     const Batch& batch, const ModelWiring& wiring,
                                     DecodeStrategy strategy, int beam_width, int max_len) const;

  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const ModelConfig& config() const { return config_; }

  // Exposed for tests and diagnostics.
  const Encoder& encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }
  const ReviewEmbeddings& review_embeddings() const { return review_; }
  const FusionParams& fusion() const { return fusion_; }

 private:
  struct Context;
  Context build_context(const Dataset& data, const std::vector<TrainingExample>& split,
                        const Batch& batch, const ModelWiring& wiring, bool training,
                        std::mt19937_64* rng) const;

  ModelConfig config_;
  nn::ParamStore store_;
  ad::Var token_embedding_;
  Encoder encoder_;
  ReviewEmbeddings review_;
  RgcnParams rgcn_customer_;
  RgcnParams rgcn_product_;
  FusionParams fusion_;
  Decoder decoder_;
};

}  // namespace revsum

#endif  // REVSUM_MODEL_HPP_
