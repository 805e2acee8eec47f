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


#ifndef REVSUM_NN_HPP_
#define REVSUM_NN_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "revsum/tensor.hpp"

namespace revsum::nn {

using ad::Var;

// Named registry of trainable tensors in creation order.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed = 0) : rng_(seed) {}

  Var normal(const std::string& name, Index rows, Index cols, double stddev = 0.02);
  Var zeros(const std::string& name, Index rows, Index cols);
  Var ones(const std::string& name, Index rows, Index cols);

  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  Var get(const std::string& name) const;
  bool contains(const std::string& name) const;
  size_t scalar_count() const;
  void zero_grad();

 private:
  Var add(const std::string& name, Matrix value);
  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, Var>> items_;
};

enum class Activation { kRelu, kIdentity };

Var activate(const Var& x, Activation act);

struct Linear {
  Var weight;  // in x out
  Var bias;    // 1 x out

  static Linear create(ParamStore& store, const std::string& name, Index in, Index out);
  Var operator()(const Var& x) const { return ad::add_row(ad::matmul(x, weight), bias); }
};

struct LayerNorm {
  Var gamma;
  Var beta;

  static LayerNorm create(ParamStore& store, const std::string& name, Index d);
  Var operator()(const Var& x) const { return ad::layer_norm(x, gamma, beta); }
};

// Multi-head attention projections (W^Q, W^K, W^V and the output map).
struct AttentionProjections {
  Linear query;
  Linear key;
  Linear value;
  Linear output;

  static AttentionProjections create(ParamStore& store, const std::string& name, Index d);
  Var operator()(const Var& queries, const Var& keys, std::span<const ad::AttentionBlock> blocks,
                 int n_heads, bool causal, std::span<const uint8_t> key_mask = {}) const;
};

// max(0, x W1 + b1) W2 + b2
struct FeedForward {
  Linear hidden;
  Linear output;

  static FeedForward create(ParamStore& store, const std::string& name, Index d, Index ffn);
  Var operator()(const Var& x) const { return output(ad::relu(hidden(x))); }
};

// Inverted-dropout mask: each entry is 0 with probability p, else 1/(1-p).
Matrix dropout_mask(Index rows, Index cols, double p, std::mt19937_64& rng);

// Training-time dropout; identity when p == 0 or rng is null.
Var dropout(const Var& x, double p, std::mt19937_64* rng);

// Constant helper for a mask vector broadcast across `cols` columns.
Matrix row_mask_matrix(std::span<const uint8_t> mask, Index cols);

}  // namespace revsum::nn

#endif  // REVSUM_NN_HPP_
