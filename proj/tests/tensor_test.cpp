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


#include "revsum/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "test_util.hpp"

namespace revsum {
namespace {

using ad::Var;
using testing::check_gradients;
using testing::random_matrix;

Var weights(std::mt19937_64& rng, Index r, Index c) {
  return Var::parameter(random_matrix(r, c, rng));
}

void expect_grads_match(const std::vector<std::pair<std::string, Var>>& params,
                        const std::function<Var()>& loss) {
  const auto res = check_gradients(params, loss);
  EXPECT_EQ(res.failures, 0u) << res.worst;
  EXPECT_GT(res.checked, 0u);
}

TEST(Tensor, ElementwiseGradients) {
  std::mt19937_64 rng(1);
  Var a = weights(rng, 3, 4);
  Var b = weights(rng, 3, 4);
  Var row = weights(rng, 1, 4);
  Var col = weights(rng, 3, 1);
  const Matrix c = random_matrix(3, 4, rng);
  expect_grads_match({{"a", a}, {"b", b}, {"row", row}, {"col", col}}, [&] {
    Var x = ad::add(ad::mul(a, b), ad::scale(ad::sub(a, b), 0.3));
    x = ad::add_row(x, row);
    x = ad::mul_col(col, ad::sigmoid(x));
    x = ad::mul_const(ad::relu(ad::add(x, a)), c);
    return ad::sum(x);
  });
}

TEST(Tensor, ProductGradients) {
  std::mt19937_64 rng(2);
  Var a = weights(rng, 3, 5);
  Var b = weights(rng, 5, 2);
  Var c = weights(rng, 4, 5);
  const Matrix m = random_matrix(2, 3, rng);
  expect_grads_match({{"a", a}, {"b", b}, {"c", c}}, [&] {
    Var x = ad::matmul(a, b);             // 3 x 2
    Var y = ad::matmul_nt(a, c);          // 3 x 4
    Var z = ad::matmul_const_left(m, y);  // 2 x 4
    return ad::add(ad::mean(ad::mul(x, x)), ad::sum(ad::mul(z, z)));
  });
}

TEST(Tensor, ShapeOpGradients) {
  std::mt19937_64 rng(3);
  Var table = weights(rng, 5, 3);
  Var other = weights(rng, 2, 3);
  const std::vector<int> idx = {4, -1, 0, 4};
  expect_grads_match({{"table", table}, {"other", other}}, [&] {
    Var g = ad::gather_rows(table, idx);            // 4 x 3
    Var r = ad::concat_rows({g, other});            // 6 x 3
    Var c = ad::concat_cols({r, ad::scale(r, 2)});  // 6 x 6
    Var s = ad::slice_cols(c, 2, 3);
    Var sc = ad::sum_cols(ad::mul(s, s));
    return ad::sum(sc);
  });
}

TEST(Tensor, GatherNegativeIndexIsZeroRow) {
  Var t = Var::parameter(Matrix::Ones(2, 3));
  const std::vector<int> idx = {-1, 1};
  Var g = ad::gather_rows(t, idx);
  EXPECT_EQ(g.value().row(0).norm(), 0.0);
  EXPECT_EQ(g.value().row(1).sum(), 3.0);
  ad::backward(ad::sum(g));
  EXPECT_EQ(t.grad().row(0).sum(), 0.0);
  EXPECT_EQ(t.grad().row(1).sum(), 3.0);
}

TEST(Tensor, NormalisationGradients) {
  std::mt19937_64 rng(4);
  Var x = weights(rng, 4, 6);
  Var gamma = weights(rng, 1, 6);
  Var beta = weights(rng, 1, 6);
  const std::vector<uint8_t> mask = {1, 0, 1, 1, 0, 1};
  const std::vector<int> targets = {2, -1, 5, 0};
  expect_grads_match({{"x", x}, {"gamma", gamma}, {"beta", beta}}, [&] {
    Var ln = ad::layer_norm(x, gamma, beta);
    Var sm = ad::softmax_rows(ln, mask);
    Var lse = ad::logsumexp_rows(ln);
    Var ce = ad::cross_entropy_sum(ln, targets);
    return ad::add(ad::add(ad::sum(ad::mul(sm, sm)), ad::sum(lse)), ce);
  });
}

TEST(Tensor, LayerNormMatchesDefinition) {
  std::mt19937_64 rng(5);
  Var x = Var::constant(random_matrix(3, 5, rng));
  Var g = Var::constant(Matrix::Ones(1, 5));
  Var b = Var::constant(Matrix::Zero(1, 5));
  const Matrix y = ad::layer_norm(x, g, b).value();
  for (Index i = 0; i < 3; ++i) {
    const auto row = x.value().row(i).array();
    const double mu = row.mean();
    const double var = (row - mu).square().mean();
    for (Index j = 0; j < 5; ++j) {
      EXPECT_NEAR(y(i, j), (row(j) - mu) / std::sqrt(var + 1e-5), 1e-12);
    }
  }
}

TEST(Tensor, SoftmaxRowsSumToOneAndRespectMask) {
  std::mt19937_64 rng(6);
  Var x = Var::constant(random_matrix(4, 5, rng, 3.0));
  const std::vector<uint8_t> mask = {1, 1, 0, 1, 0};
  const Matrix p = ad::softmax_rows(x, mask).value();
  for (Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
    EXPECT_EQ(p(i, 2), 0.0);
    EXPECT_EQ(p(i, 4), 0.0);
  }
  const std::vector<uint8_t> none = {0, 0, 0, 0, 0};
  EXPECT_EQ(ad::softmax_rows(x, none).value().norm(), 0.0);
}

TEST(Tensor, CrossEntropyOfUniformIsLogV) {
  Var logits = Var::constant(Matrix::Zero(3, 7));
  const std::vector<int> t = {0, 6, 3};
  EXPECT_NEAR(ad::cross_entropy_sum(logits, t).scalar(), 3.0 * std::log(7.0), 1e-12);
}

TEST(Tensor, AttentionGradientsWithBlocksCausalAndMask) {
  std::mt19937_64 rng(7);
  Var q = weights(rng, 5, 4);
  Var k = weights(rng, 6, 4);
  Var v = weights(rng, 6, 4);
  const std::vector<ad::AttentionBlock> blocks = {{0, 3, 0, 3}, {3, 2, 3, 3}};
  const std::vector<uint8_t> mask = {1, 1, 0, 1, 1, 1};
  for (bool causal : {false, true}) {
    expect_grads_match({{"q", q}, {"k", k}, {"v", v}}, [&] {
      Var o = ad::attention(q, k, v, blocks, 2, causal, mask);
      return ad::sum(ad::mul(o, o));
    });
  }
}

// Brute force single-head attention for one block.
Matrix reference_attention(const Matrix& q, const Matrix& k, const Matrix& v, bool causal) {
  Matrix out = Matrix::Zero(q.rows(), v.cols());
  for (Index i = 0; i < q.rows(); ++i) {
    std::vector<double> s;
    double mx = -1e300;
    const Index limit = causal ? i + 1 : k.rows();
    for (Index j = 0; j < limit; ++j) {
      s.push_back(q.row(i).dot(k.row(j)) / std::sqrt(double(q.cols())));
      mx = std::max(mx, s.back());
    }
    double z = 0.0;
    for (double& x : s) z += (x = std::exp(x - mx));
    for (Index j = 0; j < limit; ++j) out.row(i) += s[size_t(j)] / z * v.row(j);
  }
  return out;
}

TEST(Tensor, AttentionMatchesReference) {
  std::mt19937_64 rng(8);
  const Matrix q = random_matrix(4, 3, rng);
  const Matrix k = random_matrix(4, 3, rng);
  const Matrix v = random_matrix(4, 3, rng);
  const std::vector<ad::AttentionBlock> blocks = {{0, 4, 0, 4}};
  for (bool causal : {false, true}) {
    const Matrix got =
        ad::attention(Var::constant(q), Var::constant(k), Var::constant(v), blocks, 1, causal)
            .value();
    EXPECT_LT((got - reference_attention(q, k, v, causal)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Tensor, AttentionWeightsSumToOneOverLiveKeys) {
  std::mt19937_64 rng(9);
  Var q = Var::constant(random_matrix(3, 4, rng));
  Var k = Var::constant(random_matrix(5, 4, rng));
  const std::vector<ad::AttentionBlock> blocks = {{0, 3, 0, 5}};
  const std::vector<uint8_t> mask = {1, 0, 1, 1, 0};
  ad::set_attention_capture(true);
  ad::attention(q, k, k, blocks, 2, false, mask);
  const std::vector<Matrix> captured = ad::captured_attention();
  ad::set_attention_capture(false);
  ASSERT_FALSE(captured.empty());
  for (const Matrix& w : captured) {
    for (Index i = 0; i < w.rows(); ++i) {
      EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-6);
      EXPECT_EQ(w(i, 1), 0.0);
      EXPECT_EQ(w(i, 4), 0.0);
    }
  }
}

TEST(Tensor, QueryWithoutLiveKeyOutputsZero) {
  std::mt19937_64 rng(10);
  Var q = Var::constant(random_matrix(2, 4, rng));
  Var k = Var::constant(random_matrix(2, 4, rng));
  const std::vector<ad::AttentionBlock> blocks = {{0, 2, 0, 2}};
  const std::vector<uint8_t> mask = {0, 0};
  EXPECT_EQ(ad::attention(q, k, k, blocks, 1, false, mask).value().norm(), 0.0);
}

TEST(Tensor, NoGradGuardStopsRecording) {
  Var a = Var::parameter(Matrix::Ones(2, 2));
  {
    ad::NoGradGuard guard;
    EXPECT_FALSE(ad::grad_enabled());
    EXPECT_FALSE(ad::sum(a).requires_grad());
  }
  EXPECT_TRUE(ad::grad_enabled());
  EXPECT_TRUE(ad::sum(a).requires_grad());
}

TEST(Tensor, GradientsAccumulateAcrossBackwardCalls) {
  Var a = Var::parameter(Matrix::Ones(1, 3));
  ad::backward(ad::sum(a));
  ad::backward(ad::sum(a));
  EXPECT_EQ(a.grad().sum(), 6.0);
  a.zero_grad();
  EXPECT_FALSE(a.has_grad());
}

}  // namespace
}  // namespace revsum
