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


#ifndef REVSUM_CONTRASTIVE_HPP_
#define REVSUM_CONTRASTIVE_HPP_

#include <cstdint>

#include "revsum/tensor.hpp"

namespace revsum {

struct ContrastiveConfig {
  double tau = 0.05;
  double dropout_rate = 0.6;
  double alpha = 0.1;
  // Off reproduces the literal denominator that lists only cross-type
  // negatives; the loss is then no longer bounded below by zero.
  bool positive_in_denominator = true;
  // Off leaves only the positive in the denominator (degenerate, loss 0).
  bool use_negatives = true;

  void validate() const;
};

// Inverted dropout on every row of h with a mask drawn from `seed`. Identity
// when training is false or the rate is zero.
ad::Var augment(const ad::Var& h, double rate, uint64_t seed, bool training = true);

// Loss from given graph summaries and their augmented copies (all B x d).
// Row i of hu is pulled toward row i of hu_hat against every row of hp_hat,
// and symmetrically for hp; each direction is averaged over the batch and the
// two directions are summed. Throws std::domain_error naming the first
// example with a non-finite entry.
ad::Var contrastive_loss(const ad::Var& hu, const ad::Var& hp, const ad::Var& hu_hat,
                         const ad::Var& hp_hat, const ContrastiveConfig& config);

// Draws the two augmentations from `seed` (hu uses seed, hp uses seed + 1)
// and evaluates the loss.
ad::Var contrastive_loss(const ad::Var& hu, const ad::Var& hp, const ContrastiveConfig& config,
                         uint64_t seed, bool training = true);

}  // namespace revsum

#endif  // REVSUM_CONTRASTIVE_HPP_
