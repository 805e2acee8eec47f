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


#ifndef REVSUM_SENTIMENT_HPP_
#define REVSUM_SENTIMENT_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "revsum/nn.hpp"

namespace revsum {

inline constexpr int kNumRatings = 5;

struct FusionParams {
  ad::Var w_a;  // 3d x 3 over [h_u ; h_p ; r]
  ad::Var b_a;  // 1 x 3
  nn::Linear hidden;
  nn::Linear output;  // d -> 5

  static FusionParams create(nn::ParamStore& store, Index d);
};

struct FusionResult {
  ad::Var weights;  // B x 3, rows on the simplex
  ad::Var z;        // B x d
};

// Attentive pooling of the two graph summaries and the input review vector.
// slots[i] == 0 removes input i from the softmax (used when a history source
// is ablated away).
FusionResult fuse(const ad::Var& hu, const ad::Var& hp, const ad::Var& r,
                  const FusionParams& params, std::array<uint8_t, 3> slots = {1, 1, 1});

// Pre-softmax rating scores from the one-hidden-layer classifier.
ad::Var classify_logits(const ad::Var& z, const FusionParams& params);
Matrix classify(const ad::Var& z, const FusionParams& params);  // probabilities

// Mean cross-entropy against gold ratings in [1, 5]; throws std::out_of_range
// otherwise.
ad::Var sentiment_loss(const ad::Var& logits, std::span<const int> gold);
double sentiment_loss(const Matrix& probabilities, std::span<const int> gold);

}  // namespace revsum

#endif  // REVSUM_SENTIMENT_HPP_
