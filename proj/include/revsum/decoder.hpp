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


#ifndef REVSUM_DECODER_HPP_
#define REVSUM_DECODER_HPP_

#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "revsum/encoder.hpp"
#include "revsum/nn.hpp"

namespace revsum {

enum class GateMode { kScalar, kVector };

struct DecoderConfig {
  int d = 128;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_dim = 512;
  double dropout = 0.0;
  int max_len = 24;  // decoder positions == longest summary incl. EOS
  int graph_heads = 1;
  GateMode gate = GateMode::kScalar;
  nn::Activation combine_activation = nn::Activation::kRelu;

  static DecoderConfig matching(const EncoderConfig& enc, int max_len);
  void validate() const;
};

// Bias-free projections of the graph-attention layer.
struct GraphAttentionParams {
  ad::Var w_query;
  ad::Var w_key;
  ad::Var w_value;

  static GraphAttentionParams create(nn::ParamStore& store, const std::string& name, Index d);
};

// Bias-free one-hidden-layer MLP over the summed graph contexts.
struct CombineParams {
  ad::Var w_hidden;
  ad::Var w_output;

  static CombineParams create(nn::ParamStore& store, const std::string& name, Index d);
};

// Scalar mode: d x 1 maps and a 1 x 1 bias; vector mode: d x d and 1 x d.
struct GateParams {
  ad::Var w_state;
  ad::Var w_sentiment;
  ad::Var bias;

  static GateParams create(nn::ParamStore& store, const std::string& name, Index d, GateMode mode);
};

struct DecoderLayer {
  nn::LayerNorm self_norm;
  nn::AttentionProjections self_attn;
  nn::LayerNorm cross_norm;
  nn::AttentionProjections cross_attn;
  nn::LayerNorm graph_norm;
  GraphAttentionParams graph_customer;
  GraphAttentionParams graph_product;
  CombineParams combine;
  nn::LayerNorm ffn_norm;
  nn::FeedForward ffn;
  GateParams gate;
};

// What the packed decoder rows attend to. An undefined node set skips that
// graph; an undefined z_rows (or use_gate == false) drops the sentiment term.
struct DecoderContext {
  std::vector<ad::AttentionBlock> self_blocks;
  ad::Var encoder_states;
  std::vector<ad::AttentionBlock> cross_blocks;
  ad::Var customer_nodes;
  std::vector<uint8_t> customer_mask;
  std::vector<ad::AttentionBlock> customer_blocks;
  ad::Var product_nodes;
  std::vector<uint8_t> product_mask;
  std::vector<ad::AttentionBlock> product_blocks;
  ad::Var z_rows;  // one row per decoder token
  bool use_gate = true;
};

// softmax((q Wq)(G Wk)^T / sqrt(d)) (G Wv); masked nodes get zero weight and a
// query with no live node yields zeros.
ad::Var graph_attention(const ad::Var& queries, const ad::Var& nodes,
                        std::span<const ad::AttentionBlock> blocks,
                        std::span<const uint8_t> node_mask, const GraphAttentionParams& params,
                        int n_heads = 1);

// MLP(H_u + H_p)
ad::Var combine_graph_contexts(const ad::Var& customer_context, const ad::Var& product_context,
                               const CombineParams& params,
                               nn::Activation act = nn::Activation::kRelu);

struct GateResult {
  ad::Var delta;   // n x 1 (scalar mode) or n x d
  ad::Var output;  // FFN(h) + delta * z
};

GateResult sentiment_gate(const ad::Var& state, const ad::Var& z_rows, const GateParams& params,
                          const nn::FeedForward& ffn, GateMode mode);

// Pre-norm: self-attention, cross-attention, graph attention + combine, then
// the gated feed-forward block, each wrapped in a residual connection.
ad::Var decoder_layer(const ad::Var& x, const DecoderContext& ctx, const DecoderLayer& layer,
                      const DecoderConfig& config, std::mt19937_64* dropout_rng = nullptr);

class Decoder {
 public:
  Decoder() = default;
  Decoder(nn::ParamStore& store, const DecoderConfig& config, ad::Var token_embedding,
          int vocab_size, const std::string& prefix = "decoder");

  // Vocabulary logits for packed decoder input rows.
  ad::Var forward(std::span<const int> tokens, std::span<const int> positions,
                  const DecoderContext& ctx, std::mt19937_64* dropout_rng = nullptr) const;

  const DecoderConfig& config() const { return config_; }

  ad::Var token_embedding;
  ad::Var position_embedding;
  std::vector<DecoderLayer> layers;
  nn::LayerNorm final_norm;
  nn::Linear output;

 private:
  DecoderConfig config_;
};

// Sum over target rows of -log P(gold), divided by the batch size. Gold < 0
// marks padding.
ad::Var generation_loss(const ad::Var& logits, std::span<const int> gold, int batch_size);

struct DecodeResult {
  std::vector<int> tokens;  // without BOS; ends with EOS when finished
  std::vector<double> log_probs;
  bool finished = false;
};

// Next-token log-probabilities (one row per prefix); prefixes start with BOS.
using StepScorer = std::function<Matrix(const std::vector<std::vector<int>>& prefixes)>;

DecodeResult greedy_decode(const StepScorer& scorer, int max_len);
// Ranks hypotheses by length-normalised log-probability; ties favour the
// lower token id.
DecodeResult beam_decode(const StepScorer& scorer, int width, int max_len);

}  // namespace revsum

#endif  // REVSUM_DECODER_HPP_
