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

#ifndef REVSUM_TENSOR_HPP_
#define REVSUM_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace revsum {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace ad {

struct Node;
using BackwardFn = std::function<void(Node&)>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;

  void accumulate(const Matrix& g);
};

// Handle to a node of the dynamic computation graph. Copies share the node.
class Var {
 public:
  Var() = default;

  static Var constant(Matrix value);
  static Var parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  void zero_grad() { node_->grad.resize(0, 0); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  double scalar() const { return node_->value(0, 0); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

  static Var from_op(Matrix value, std::vector<Var> parents, BackwardFn fn);

 private:
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

// Runs reverse accumulation from a 1x1 root. Leaf gradients accumulate across
// calls until zero_grad().
void backward(const Var& root);

bool grad_enabled();

// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---- elementwise / algebra ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_row(const Var& a, const Var& row);     // a (n x m) + row (1 x m) per row
Var mul_col(const Var& col, const Var& a);     // col (n x 1) scales row i of a
Var mul_const(const Var& a, const Matrix& m);  // Hadamard with a constant
Var relu(const Var& a);
Var sigmoid(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }

// ---- products ----
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);                // a * b^T
Var matmul_const_left(const Matrix& m, const Var& b);     // m * b, m constant

// ---- shape ----
// Row gather; a negative index yields an all-zero row with no gradient.
Var gather_rows(const Var& table, std::span<const int> index);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Index begin, Index count);
Var sum_cols(const Var& a);  // n x 1 row sums
Var sum(const Var& a);       // 1 x 1
Var mean(const Var& a);      // 1 x 1

// ---- normalisation / probability ----
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
// Row softmax; columns with mask == 0 get probability 0. A row with no live
// column is all zeros.
Var softmax_rows(const Var& a, std::span<const uint8_t> col_mask = {});
Var logsumexp_rows(const Var& a);  // n x 1
// Sum over rows of -log softmax(logits)[target]; rows with target < 0 are skipped.
Var cross_entropy_sum(const Var& logits, std::span<const int> targets);

// ---- attention ----
struct AttentionBlock {
  Index q_begin = 0;
  Index q_len = 0;
  Index k_begin = 0;
  Index k_len = 0;
};

// Scaled dot-product attention over packed rows. Each block attends its query
// rows to its key rows; heads split the columns evenly. key_mask (if given)
// has one entry per key row. A query row without any admissible key outputs
// zeros.
Var attention(const Var& q, const Var& k, const Var& v, std::span<const AttentionBlock> blocks,
              int n_heads, bool causal, std::span<const uint8_t> key_mask = {});

// Row-stochastic attention weights from the most recent attention() call on
// this thread when capture is on (test hook for the sum-to-one property).
void set_attention_capture(bool on);
const std::vector<Matrix>& captured_attention();

}  // namespace ad
}  // namespace revsum

#endif  // REVSUM_TENSOR_HPP_
