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


#include "revsum/encoder.hpp"

#include <stdexcept>

#include "revsum/error.hpp"

namespace revsum {

EncoderConfig EncoderConfig::desk() { return EncoderConfig{}; }

EncoderConfig EncoderConfig::large() {
  EncoderConfig c;
  c.d = 768;
  c.n_layers = 6;
  c.n_heads = 12;
  c.ffn_dim = 3072;
  c.dropout = 0.1;
  return c;
}

void EncoderConfig::validate() const {
  if (d < 1 || n_layers < 1 || n_heads < 1 || ffn_dim < 1 || max_len < 1) {
    throw InputError("encoder dimensions must be >= 1");
  }
  if (d % n_heads != 0) throw InputError("encoder heads must divide the hidden size");
  if (dropout < 0.0 || dropout >= 1.0) throw InputError("encoder dropout must lie in [0, 1)");
}

Encoder::Encoder(nn::ParamStore& store, const EncoderConfig& config, ad::Var token_embedding_,
                 const std::string& prefix)
    : token_embedding(std::move(token_embedding_)), config_(config) {
  config_.validate();
  position_embedding = store.normal(prefix + ".position", config.max_len, config.d);
  for (int l = 0; l < config.n_layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    layers.push_back({nn::LayerNorm::create(store, p + ".attn_norm", config.d),
                      nn::AttentionProjections::create(store, p + ".attn", config.d),
                      nn::LayerNorm::create(store, p + ".ffn_norm", config.d),
                      nn::FeedForward::create(store, p + ".ffn", config.d, config.ffn_dim)});
  }
  final_norm = nn::LayerNorm::create(store, prefix + ".final_norm", config.d);
}

ad::Var Encoder::encode_packed(std::span<const int> tokens, std::span<const int> positions,
                               std::span<const ad::AttentionBlock> blocks,
                               std::span<const uint8_t> key_mask,
                               std::mt19937_64* dropout_rng) const {
  for (size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= config_.max_len) {
      throw InputError("encoder input too long: position " + std::to_string(positions[i]) +
                       " exceeds max length " + std::to_string(config_.max_len));
    }
  }
  ad::Var x = ad::gather_rows(token_embedding, tokens);
  if (use_positions) x = x + ad::gather_rows(position_embedding, positions);
  x = nn::dropout(x, config_.dropout, dropout_rng);
  for (const auto& layer : layers) {
    ad::Var normed = layer.attn_norm(x);
    ad::Var a = layer.attn(normed, normed, blocks, config_.n_heads, /*causal=*/false, key_mask);
    x = x + nn::dropout(a, config_.dropout, dropout_rng);
    ad::Var f = layer.ffn(layer.ffn_norm(x));
    x = x + nn::dropout(f, config_.dropout, dropout_rng);
  }
  return final_norm(x);
}

ad::Var Encoder::encode_tokens(const std::vector<int>& token_ids,
                               const std::vector<uint8_t>& mask) const {
  if (token_ids.empty()) throw InputError("encode_tokens: empty sequence");
  if (!mask.empty() && mask.size() != token_ids.size()) {
    throw std::invalid_argument("encode_tokens: mask length differs from sequence length");
  }
  std::vector<int> positions(token_ids.size());
  for (size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
  const ad::AttentionBlock block{0, static_cast<Index>(token_ids.size()), 0,
                                 static_cast<Index>(token_ids.size())};
  return encode_packed(token_ids, positions, std::span(&block, 1), mask);
}

ReviewEmbeddings ReviewEmbeddings::create(nn::ParamStore& store, Index d, int n_customers,
                                          int n_products) {
  return {store.normal("review.rating", 6, d), store.normal("review.customer", n_customers, d),
          store.normal("review.product", n_products, d)};
}

ad::Var compose_review_vectors(const ad::Var& h0_rows, ReviewRole role,
                               std::span<const int> entity_rows, std::span<const int> rating_slots,
                               const ReviewEmbeddings& emb) {
  switch (role) {
    case ReviewRole::kInput:
      return h0_rows;
    case ReviewRole::kCustomerHistory:
      return h0_rows + ad::gather_rows(emb.customer, entity_rows) +
             ad::gather_rows(emb.rating, rating_slots);
    case ReviewRole::kProductHistory:
      return h0_rows + ad::gather_rows(emb.product, entity_rows) +
             ad::gather_rows(emb.rating, rating_slots);
  }
  throw std::invalid_argument("compose_review_vectors: unknown review role");
}

ReviewVector review_vector(const Matrix& hidden, ReviewRole role, int rating, int entity_row,
                           const ReviewEmbeddings& emb) {
  if (rating < 0 || rating > 5) throw std::invalid_argument("review_vector: rating outside [0,5]");
  ad::NoGradGuard no_grad;
  ad::Var h0 = ad::Var::constant(hidden.row(0));
  const int e[] = {entity_row};
  const int s[] = {rating};
  ad::Var v = compose_review_vectors(h0, role, e, s, emb);
  return {v.value().row(0), role, rating};
}

}  // namespace revsum
