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


#ifndef REVSUM_ENCODER_HPP_
#define REVSUM_ENCODER_HPP_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "revsum/nn.hpp"

namespace revsum {

struct EncoderConfig {
  int d = 128;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_dim = 512;
  double dropout = 0.0;
  int max_len = 129;  // CLS + review tokens

  static EncoderConfig desk();
  static EncoderConfig large();  // 768 wide, 6 layers, 12 heads
  void validate() const;
};

struct EncoderLayer {
  nn::LayerNorm attn_norm;
  nn::AttentionProjections attn;
  nn::LayerNorm ffn_norm;
  nn::FeedForward ffn;
};

// Pre-norm transformer encoder with learned absolute positions. The token
// embedding table is shared with the decoder.
class Encoder {
 public:
  Encoder() = default;
  Encoder(nn::ParamStore& store, const EncoderConfig& config, ad::Var token_embedding,
          const std::string& prefix = "encoder");

  // Encodes several sequences packed row-wise. Each block covers one sequence
  // (query rows == key rows). Returns one hidden state per packed token.
  ad::Var encode_packed(std::span<const int> tokens, std::span<const int> positions,
                        std::span<const ad::AttentionBlock> blocks,
                        std::span<const uint8_t> key_mask = {},
                        std::mt19937_64* dropout_rng = nullptr) const;

  // One sequence whose first id is CLS. Masked positions receive no attention.
  // Throws InputError naming the first position beyond max_len.
  ad::Var encode_tokens(const std::vector<int>& token_ids, const std::vector<uint8_t>& mask) const;

  const EncoderConfig& config() const { return config_; }

  ad::Var token_embedding;
  ad::Var position_embedding;
  std::vector<EncoderLayer> layers;
  nn::LayerNorm final_norm;
  bool use_positions = true;  // off only in the position-mechanism sanity test

 private:
  EncoderConfig config_;
};

enum class ReviewRole { kInput, kCustomerHistory, kProductHistory };

struct ReviewVector {
  Eigen::RowVectorXd value;
  ReviewRole role = ReviewRole::kInput;
  int rating_slot = 0;  // 0 iff padding
};

// Rating table rows 1..5 are the star ratings and row 0 is the padding slot.
// Entity tables reserve row 0 for customers/products unseen in training.
struct ReviewEmbeddings {
  ad::Var rating;
  ad::Var customer;
  ad::Var product;

  static ReviewEmbeddings create(nn::ParamStore& store, Index d, int n_customers,
                                 int n_products);
  const ad::Var& rating_embedding_table() const { return rating; }
};

// h0 + entity + rating per row. Negative entity rows or rating slots add
// nothing; kInput returns h0_rows untouched.
ad::Var compose_review_vectors(const ad::Var& h0_rows, ReviewRole role,
                               std::span<const int> entity_rows, std::span<const int> rating_slots,
                               const ReviewEmbeddings& emb);

// Single-review form over encoder output H (row 0 is the CLS state).
ReviewVector review_vector(const Matrix& hidden, ReviewRole role, int rating, int entity_row,
                           const ReviewEmbeddings& emb);

}  // namespace revsum

#endif  // REVSUM_ENCODER_HPP_
