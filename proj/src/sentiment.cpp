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


#include "revsum/sentiment.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace revsum {

namespace {

void check_gold(std::span<const int> gold, Index rows) {
  if (static_cast<Index>(gold.size()) != rows) {
    throw std::invalid_argument("sentiment_loss: gold count differs from batch size");
  }
  for (int g : gold) {
    if (g < 1 || g > kNumRatings) {
      throw std::out_of_range("sentiment_loss: gold rating " + std::to_string(g) +
                              " outside [1,5]");
    }
  }
}

}  // namespace

FusionParams FusionParams::create(nn::ParamStore& store, Index d) {
  return {store.normal("fusion.w_a", 3 * d, 3), store.zeros("fusion.b_a", 1, 3),
          nn::Linear::create(store, "classifier.hidden", d, d),
          nn::Linear::create(store, "classifier.output", d, kNumRatings)};
}

FusionResult fuse(const ad::Var& hu, const ad::Var& hp, const ad::Var& r,
                  const FusionParams& params, std::array<uint8_t, 3> slots) {
  ad::Var stacked = ad::concat_cols({hu, hp, r});
  ad::Var logits = ad::add_row(ad::matmul(stacked, params.w_a), params.b_a);
  ad::Var a = ad::softmax_rows(logits, slots);
  ad::Var z = ad::mul_col(ad::slice_cols(a, 0, 1), hu) + ad::mul_col(ad::slice_cols(a, 1, 1), hp) +
              ad::mul_col(ad::slice_cols(a, 2, 1), r);
  return {a, z};
}

ad::Var classify_logits(const ad::Var& z, const FusionParams& params) {
  return params.output(ad::relu(params.hidden(z)));
}

Matrix classify(const ad::Var& z, const FusionParams& params) {
  ad::NoGradGuard no_grad;
  return ad::softmax_rows(classify_logits(z, params)).value();
}

ad::Var sentiment_loss(const ad::Var& logits, std::span<const int> gold) {
  check_gold(gold, logits.rows());
  std::vector<int> targets;
  for (int g : gold) targets.push_back(g - 1);
  return ad::scale(ad::cross_entropy_sum(logits, targets), 1.0 / static_cast<double>(gold.size()));
}

double sentiment_loss(const Matrix& probabilities, std::span<const int> gold) {
  check_gold(gold, probabilities.rows());
  double total = 0.0;
  for (size_t i = 0; i < gold.size(); ++i) {
    total -= std::log(probabilities(static_cast<Index>(i), gold[i] - 1));
  }
  return total / static_cast<double>(gold.size());
}

}  // namespace revsum
