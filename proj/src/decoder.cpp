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


#include "revsum/decoder.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

#include "revsum/corpus.hpp"
#include "revsum/error.hpp"

namespace revsum {

DecoderConfig DecoderConfig::matching(const EncoderConfig& enc, int max_len) {
  DecoderConfig c;
  c.d = enc.d;
  c.n_layers = enc.n_layers;
  c.n_heads = enc.n_heads;
  c.ffn_dim = enc.ffn_dim;
  c.dropout = enc.dropout;
  c.max_len = max_len;
  return c;
}

void DecoderConfig::validate() const {
  if (d < 1 || n_layers < 1 || n_heads < 1 || ffn_dim < 1 || max_len < 1 || graph_heads < 1) {
    throw InputError("decoder dimensions must be >= 1");
  }
  if (d % n_heads != 0 || d % graph_heads != 0) {
    throw InputError("decoder heads must divide the hidden size");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw InputError("decoder dropout must lie in [0, 1)");
}

GraphAttentionParams GraphAttentionParams::create(nn::ParamStore& store, const std::string& name,
                                                  Index d) {
  return {store.normal(name + ".w_query", d, d), store.normal(name + ".w_key", d, d),
          store.normal(name + ".w_value", d, d)};
}

CombineParams CombineParams::create(nn::ParamStore& store, const std::string& name, Index d) {
  return {store.normal(name + ".w_hidden", d, d), store.normal(name + ".w_output", d, d)};
}

GateParams GateParams::create(nn::ParamStore& store, const std::string& name, Index d,
                              GateMode mode) {
  const Index width = mode == GateMode::kScalar ? 1 : d;
  return {store.normal(name + ".w_state", d, width), store.normal(name + ".w_sentiment", d, width),
          store.zeros(name + ".bias", 1, width)};
}

ad::Var graph_attention(const ad::Var& queries, const ad::Var& nodes,
                        std::span<const ad::AttentionBlock> blocks,
                        std::span<const uint8_t> node_mask, const GraphAttentionParams& params,
                        int n_heads) {
  ad::Var q = ad::matmul(queries, params.w_query);
  ad::Var k = ad::matmul(nodes, params.w_key);
  ad::Var v = ad::matmul(nodes, params.w_value);
  return ad::attention(q, k, v, blocks, n_heads, /*causal=*/false, node_mask);
}

ad::Var combine_graph_contexts(const ad::Var& customer_context, const ad::Var& product_context,
                               const CombineParams& params, nn::Activation act) {
  ad::Var sum = customer_context + product_context;
  return ad::matmul(nn::activate(ad::matmul(sum, params.w_hidden), act), params.w_output);
}

GateResult sentiment_gate(const ad::Var& state, const ad::Var& z_rows, const GateParams& params,
                          const nn::FeedForward& ffn, GateMode mode) {
  ad::Var pre = ad::add_row(
      ad::matmul(state, params.w_state) + ad::matmul(z_rows, params.w_sentiment), params.bias);
  ad::Var delta = ad::sigmoid(pre);
  ad::Var injected = mode == GateMode::kScalar ? ad::mul_col(delta, z_rows) : ad::mul(delta, z_rows);
  return {delta, ffn(state) + injected};
}

ad::Var decoder_layer(const ad::Var& x_in, const DecoderContext& ctx, const DecoderLayer& layer,
                      const DecoderConfig& config, std::mt19937_64* rng) {
  ad::Var x = x_in;
  ad::Var s = layer.self_norm(x);
  x = x + nn::dropout(layer.self_attn(s, s, ctx.self_blocks, config.n_heads, /*causal=*/true),
                      config.dropout, rng);
  ad::Var c = layer.cross_norm(x);
  x = x + nn::dropout(layer.cross_attn(c, ctx.encoder_states, ctx.cross_blocks, config.n_heads,
                                       /*causal=*/false),
                      config.dropout, rng);

  const bool customer = ctx.customer_nodes.defined();
  const bool product = ctx.product_nodes.defined();
  if (customer || product) {
    ad::Var g = layer.graph_norm(x);
    ad::Var zeros = ad::Var::constant(Matrix::Zero(x.rows(), x.cols()));
    ad::Var hu = customer ? graph_attention(g, ctx.customer_nodes, ctx.customer_blocks,
                                            ctx.customer_mask, layer.graph_customer,
                                            config.graph_heads)
                          : zeros;
    ad::Var hp = product ? graph_attention(g, ctx.product_nodes, ctx.product_blocks,
                                           ctx.product_mask, layer.graph_product,
                                           config.graph_heads)
                         : zeros;
    x = x + nn::dropout(combine_graph_contexts(hu, hp, layer.combine, config.combine_activation),
                        config.dropout, rng);
  }

  ad::Var h = layer.ffn_norm(x);
  if (ctx.use_gate && ctx.z_rows.defined()) {
    GateResult gated = sentiment_gate(h, ctx.z_rows, layer.gate, layer.ffn, config.gate);
    return x + nn::dropout(gated.output, config.dropout, rng);
  }
  return x + nn::dropout(layer.ffn(h), config.dropout, rng);
}

Decoder::Decoder(nn::ParamStore& store, const DecoderConfig& config, ad::Var token_embedding_,
                 int vocab_size, const std::string& prefix)
    : token_embedding(std::move(token_embedding_)), config_(config) {
  config_.validate();
  position_embedding = store.normal(prefix + ".position", config.max_len, config.d);
  for (int l = 0; l < config.n_layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    layers.push_back({nn::LayerNorm::create(store, p + ".self_norm", config.d),
                      nn::AttentionProjections::create(store, p + ".self_attn", config.d),
                      nn::LayerNorm::create(store, p + ".cross_norm", config.d),
                      nn::AttentionProjections::create(store, p + ".cross_attn", config.d),
                      nn::LayerNorm::create(store, p + ".graph_norm", config.d),
                      GraphAttentionParams::create(store, p + ".graph_customer", config.d),
                      GraphAttentionParams::create(store, p + ".graph_product", config.d),
                      CombineParams::create(store, p + ".combine", config.d),
                      nn::LayerNorm::create(store, p + ".ffn_norm", config.d),
                      nn::FeedForward::create(store, p + ".ffn", config.d, config.ffn_dim),
                      GateParams::create(store, p + ".gate", config.d, config.gate)});
  }
  final_norm = nn::LayerNorm::create(store, prefix + ".final_norm", config.d);
  output = nn::Linear::create(store, prefix + ".output", config.d, vocab_size);
}

ad::Var Decoder::forward(std::span<const int> tokens, std::span<const int> positions,
                         const DecoderContext& ctx, std::mt19937_64* rng) const {
  for (int p : positions) {
    if (p >= config_.max_len) {
      throw InputError("decoder input too long: position " + std::to_string(p) +
                       " exceeds max length " + std::to_string(config_.max_len));
    }
  }
  ad::Var x = ad::gather_rows(token_embedding, tokens) + ad::gather_rows(position_embedding, positions);
  x = nn::dropout(x, config_.dropout, rng);
  for (const auto& layer : layers) x = decoder_layer(x, ctx, layer, config_, rng);
  return output(final_norm(x));
}

ad::Var generation_loss(const ad::Var& logits, std::span<const int> gold, int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("generation_loss: batch_size must be >= 1");
  return ad::scale(ad::cross_entropy_sum(logits, gold), 1.0 / batch_size);
}

// ------------------------------------------------------------------ search

DecodeResult greedy_decode(const StepScorer& scorer, int max_len) {
  DecodeResult out;
  std::vector<int> prefix{Vocabulary::kBos};
  for (int t = 0; t < max_len; ++t) {
    const Matrix lp = scorer({prefix});
    Index best = 0;
    for (Index v = 1; v < lp.cols(); ++v) {
      if (lp(0, v) > lp(0, best)) best = v;
    }
    out.tokens.push_back(static_cast<int>(best));
    out.log_probs.push_back(lp(0, best));
    prefix.push_back(static_cast<int>(best));
    if (best == Vocabulary::kEos) {
      out.finished = true;
      break;
    }
  }
  return out;
}

namespace {

struct Hypothesis {
  std::vector<int> tokens;
  std::vector<double> log_probs;
  double score = 0.0;

  double normalized() const {
    return tokens.empty() ? 0.0 : score / static_cast<double>(tokens.size());
  }
};

const Hypothesis& best_of(const std::vector<Hypothesis>& hyps) {
  size_t best = 0;
  for (size_t i = 1; i < hyps.size(); ++i) {
    if (hyps[i].normalized() > hyps[best].normalized()) best = i;
  }
  return hyps[best];
}

}  // namespace

DecodeResult beam_decode(const StepScorer& scorer, int width, int max_len) {
  if (width < 1) throw std::invalid_argument("beam_decode: width must be >= 1");
  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;
  for (int t = 0; t < max_len && !live.empty(); ++t) {
    std::vector<std::vector<int>> prefixes;
    for (const auto& h : live) {
      std::vector<int> p{Vocabulary::kBos};
      p.insert(p.end(), h.tokens.begin(), h.tokens.end());
      prefixes.push_back(std::move(p));
    }
    const Matrix lp = scorer(prefixes);
    // (score, hypothesis, token); all candidates at a step share a length.
    std::vector<std::tuple<double, size_t, int>> cand;
    cand.reserve(live.size() * static_cast<size_t>(lp.cols()));
    for (size_t h = 0; h < live.size(); ++h) {
      for (Index v = 0; v < lp.cols(); ++v) {
        cand.emplace_back(live[h].score + lp(static_cast<Index>(h), v), h, static_cast<int>(v));
      }
    }
    std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
      return std::get<2>(a) < std::get<2>(b);
    });
    std::vector<Hypothesis> next;
    for (const auto& [score, h, v] : cand) {
      if (static_cast<int>(next.size()) >= width || static_cast<int>(finished.size()) >= width) {
        break;
      }
      Hypothesis ext = live[h];
      ext.tokens.push_back(v);
      ext.log_probs.push_back(lp(static_cast<Index>(h), v));
      ext.score = score;
      if (v == Vocabulary::kEos) {
        finished.push_back(std::move(ext));
      } else {
        next.push_back(std::move(ext));
      }
    }
    live = static_cast<int>(finished.size()) >= width ? std::vector<Hypothesis>{} : std::move(next);
  }
  DecodeResult out;
  const Hypothesis& best = finished.empty() ? best_of(live) : best_of(finished);
  out.tokens = best.tokens;
  out.log_probs = best.log_probs;
  out.finished = !finished.empty();
  return out;
}

}  // namespace revsum
