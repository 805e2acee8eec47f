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


#include "revsum/contrastive.hpp"

#include <random>
#include <stdexcept>
#include <string>

#include "revsum/error.hpp"
#include "revsum/nn.hpp"

namespace revsum {

void ContrastiveConfig::validate() const {
  if (!(tau > 0.0)) throw InputError("contrastive temperature must be > 0");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw InputError("contrastive dropout rate must lie in [0, 1)");
  }
  if (alpha < 0.0) throw InputError("contrastive alpha must be >= 0");
}

ad::Var augment(const ad::Var& h, double rate, uint64_t seed, bool training) {
  if (!training || rate <= 0.0) return h;
  std::mt19937_64 rng(seed);
  return ad::mul_const(h, nn::dropout_mask(h.rows(), h.cols(), rate, rng));
}

namespace {

void check_finite(const ad::Var& m, const char* name) {
  for (Index i = 0; i < m.rows(); ++i) {
    if (!m.value().row(i).allFinite()) {
      throw std::domain_error(std::string("contrastive_loss: non-finite ") + name +
                              " at batch index " + std::to_string(i));
    }
  }
}

// Mean over rows of [logsumexp(denominator logits) - positive logit].
ad::Var direction(const ad::Var& anchor, const ad::Var& positive, const ad::Var& negatives,
                  const ContrastiveConfig& c) {
  const double inv_tau = 1.0 / c.tau;
  ad::Var pos = ad::scale(ad::sum_cols(ad::mul(anchor, positive)), inv_tau);
  ad::Var logits;
  if (!c.use_negatives) {
    logits = pos;
  } else {
    ad::Var neg = ad::scale(ad::matmul_nt(anchor, negatives), inv_tau);
    logits = c.positive_in_denominator ? ad::concat_cols({pos, neg}) : neg;
  }
  return ad::mean(ad::sub(ad::logsumexp_rows(logits), pos));
}

}  // namespace

ad::Var contrastive_loss(const ad::Var& hu, const ad::Var& hp, const ad::Var& hu_hat,
                         const ad::Var& hp_hat, const ContrastiveConfig& config) {
  if (!(config.tau > 0.0)) throw std::invalid_argument("contrastive_loss: tau must be > 0");
  if (hu.rows() != hp.rows() || hu.cols() != hp.cols() || hu_hat.rows() != hu.rows() ||
      hp_hat.rows() != hp.rows()) {
    throw std::invalid_argument("contrastive_loss: shape mismatch");
  }
  check_finite(hu, "customer summary");
  check_finite(hp, "product summary");
  return ad::add(direction(hu, hu_hat, hp_hat, config), direction(hp, hp_hat, hu_hat, config));
}

ad::Var contrastive_loss(const ad::Var& hu, const ad::Var& hp, const ContrastiveConfig& config,
                         uint64_t seed, bool training) {
  ad::Var hu_hat = augment(hu, config.dropout_rate, seed, training);
  ad::Var hp_hat = augment(hp, config.dropout_rate, seed + 1, training);
  return contrastive_loss(hu, hp, hu_hat, hp_hat, config);
}

}  // namespace revsum
