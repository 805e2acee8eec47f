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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

namespace revsum {
namespace {

using ad::Var;
using testing::random_matrix;

struct Fixture {
  nn::ParamStore store{1};
  FusionParams params;
  explicit Fixture(Index d) : params(FusionParams::create(store, d)) {}
  void zero_all() {
    for (const auto& [name, v] : store.items()) Var(v).mutable_value().setZero();
  }
};

TEST(Fusion, ZeroWeightsAverage) {
  Fixture f(3);
  f.zero_all();
  std::mt19937_64 rng(1);
  const Matrix hu = random_matrix(2, 3, rng), hp = random_matrix(2, 3, rng),
               r = random_matrix(2, 3, rng);
  const FusionResult res = fuse(Var::constant(hu), Var::constant(hp), Var::constant(r), f.params);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 3; ++j) EXPECT_NEAR(res.weights.value()(i, j), 1.0 / 3.0, 1e-15);
  }
  EXPECT_LT((res.z.value() - (hu + hp + r) / 3.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Fusion, SaturatedBiasSelectsCustomerSummary) {
  Fixture f(3);
  f.zero_all();
  Var(f.params.b_a).mutable_value() << 50, 0, 0;
  std::mt19937_64 rng(2);
  const Matrix hu = random_matrix(1, 3, rng);
  const FusionResult res = fuse(Var::constant(hu), Var::constant(random_matrix(1, 3, rng)),
                                Var::constant(random_matrix(1, 3, rng)), f.params);
  EXPECT_LT((res.z.value() - hu).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Fusion, HandValueAtWidthTwo) {
  Fixture f(2);
  f.zero_all();
  // logits = [hu ; hp ; r] W_a + b; pick W_a so logits = (hu_0, hp_1, 0) + b
  Matrix w = Matrix::Zero(6, 3);
  w(0, 0) = 1.0;
  w(3, 1) = 1.0;
  Var(f.params.w_a).mutable_value() = w;
  Var(f.params.b_a).mutable_value() << 0, 0, std::log(2.0);
  Matrix hu(1, 2), hp(1, 2), r(1, 2);
  hu << std::log(3.0), 1;
  hp << 2, 0;
  r << -1, 4;
  // logits (ln3, 0, ln2) -> weights (3, 1, 2) / 6
  const FusionResult res = fuse(Var::constant(hu), Var::constant(hp), Var::constant(r), f.params);
  EXPECT_NEAR(res.weights.value()(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(res.weights.value()(0, 1), 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(res.weights.value()(0, 2), 1.0 / 3.0, 1e-12);
  const Matrix want = 0.5 * hu + hp / 6.0 + r / 3.0;
  EXPECT_LT((res.z.value() - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fusion, WeightsInsideSimplexAndSlotMask) {
  Fixture f(4);
  std::mt19937_64 rng(3);
  const Var hu = Var::constant(random_matrix(5, 4, rng, 3.0));
  const Var hp = Var::constant(random_matrix(5, 4, rng, 3.0));
  const Var r = Var::constant(random_matrix(5, 4, rng, 3.0));
  const Matrix w = fuse(hu, hp, r, f.params).weights.value();
  for (Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-12);
    EXPECT_GT(w.row(i).minCoeff(), 0.0);
  }
  const Matrix masked = fuse(hu, hp, r, f.params, {0, 1, 1}).weights.value();
  for (Index i = 0; i < 5; ++i) {
    EXPECT_EQ(masked(i, 0), 0.0);
    EXPECT_NEAR(masked.row(i).sum(), 1.0, 1e-12);
  }
}

TEST(Classifier, ZeroWeightsUniform) {
  Fixture f(3);
  f.zero_all();
  const Matrix p = classify(Var::constant(Matrix::Ones(2, 3)), f.params);
  for (Index j = 0; j < 5; ++j) EXPECT_NEAR(p(0, j), 0.2, 1e-15);
}

TEST(Classifier, ArgmaxInvariantToLogitShift) {
  Fixture f(3);
  std::mt19937_64 rng(4);
  const Var z = Var::constant(random_matrix(4, 3, rng));
  const Matrix a = classify(z, f.params);
  Var(f.params.output.bias).mutable_value().array() += 17.0;
  const Matrix b = classify(z, f.params);
  for (Index i = 0; i < 4; ++i) {
    Index ia = 0, ib = 0;
    a.row(i).maxCoeff(&ia);
    b.row(i).maxCoeff(&ib);
    EXPECT_EQ(ia, ib);
    EXPECT_NEAR(b.row(i).sum(), 1.0, 1e-12);
  }
}

TEST(Classifier, HandDistributionAtWidthTwo) {
  Fixture f(2);
  f.zero_all();
  Var(f.params.hidden.weight).mutable_value() = Matrix::Identity(2, 2);
  Matrix w = Matrix::Zero(2, 5);
  w(0, 0) = 1.0;
  w(1, 4) = 2.0;
  Var(f.params.output.weight).mutable_value() = w;
  Matrix z(1, 2);
  z << std::log(2.0), -3.0;  // relu -> (ln2, 0); logits (ln2, 0, 0, 0, 0)
  const Matrix p = classify(Var::constant(z), f.params);
  EXPECT_NEAR(p(0, 0), 2.0 / 6.0, 1e-12);
  for (Index j = 1; j < 5; ++j) EXPECT_NEAR(p(0, j), 1.0 / 6.0, 1e-12);
}

TEST(SentimentLoss, OneHotIsZeroUniformIsLogFive) {
  Matrix onehot = Matrix::Zero(2, 5);
  onehot(0, 2) = 1.0;
  onehot(1, 4) = 1.0;
  const std::vector<int> gold = {3, 5};
  EXPECT_NEAR(sentiment_loss(onehot, gold), 0.0, 1e-15);
  EXPECT_NEAR(sentiment_loss(Matrix::Constant(2, 5, 0.2), gold), std::log(5.0), 1e-12);
  EXPECT_NEAR(sentiment_loss(Var::constant(Matrix::Zero(2, 5)), gold).scalar(), std::log(5.0),
              1e-12);
}

TEST(SentimentLoss, HandMeanOfTwo) {
  Matrix p(2, 5);
  p << 0.1, 0.2, 0.3, 0.2, 0.2,  //
      0.5, 0.1, 0.1, 0.1, 0.2;
  const std::vector<int> gold = {3, 1};
  EXPECT_NEAR(sentiment_loss(p, gold), -(std::log(0.3) + std::log(0.5)) / 2.0, 1e-12);
  Matrix logits = p.array().log().matrix();
  EXPECT_NEAR(sentiment_loss(Var::constant(logits), gold).scalar(),
              -(std::log(0.3) + std::log(0.5)) / 2.0, 1e-12);
}

TEST(SentimentLoss, RejectsGoldOutOfRange) {
  const std::vector<int> bad = {0};
  const std::vector<int> bad2 = {6};
  EXPECT_THROW(sentiment_loss(Matrix::Constant(1, 5, 0.2), bad), std::out_of_range);
  EXPECT_THROW(sentiment_loss(Var::constant(Matrix::Zero(1, 5)), bad2), std::out_of_range);
}

TEST(SentimentLoss, GradientThroughFuseAndClassify) {
  Fixture f(4);
  std::mt19937_64 rng(5);
  Var hu = Var::parameter(random_matrix(3, 4, rng));
  Var hp = Var::parameter(random_matrix(3, 4, rng));
  Var r = Var::parameter(random_matrix(3, 4, rng));
  const std::vector<int> gold = {1, 4, 5};
  auto params = f.store.items();
  params.push_back({"hu", hu});
  params.push_back({"hp", hp});
  params.push_back({"r", r});
  const auto res = testing::check_gradients(params, [&] {
    return sentiment_loss(classify_logits(fuse(hu, hp, r, f.params).z, f.params), gold);
  });
  EXPECT_EQ(res.failures, 0u) << res.worst;
}

}  // namespace
}  // namespace revsum
