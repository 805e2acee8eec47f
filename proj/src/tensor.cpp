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

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace revsum::ad {
namespace {

thread_local bool g_grad_enabled = true;
thread_local bool g_capture_attention = false;
thread_local std::vector<Matrix> g_captured;

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(std::string("tensor op: ") + what);
}

void same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

Node& parent(Node& n, size_t i) { return *n.parents[i]; }

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var Var::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Var(std::move(n));
}

Var Var::parameter(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Var(std::move(n));
}

Var Var::from_op(Matrix value, std::vector<Var> parents, BackwardFn fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool any = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) any = any || p.requires_grad();
  }
  if (any) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node_);
    n->backward = std::move(fn);
  }
  return Var(std::move(n));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Var& root) {
  require(root.defined() && root.rows() == 1 && root.cols() == 1, "backward needs a 1x1 root");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() != 0) {
      n->backward(*n);
      // Interior gradients are no longer needed once propagated.
      n->grad.resize(0, 0);
    }
  }
}

// ---- elementwise ----

Var add(const Var& a, const Var& b) {
  same_shape(a, b, "add");
  return Var::from_op(a.value() + b.value(), {a, b}, [](Node& n) {
    parent(n, 0).accumulate(n.grad);
    parent(n, 1).accumulate(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  same_shape(a, b, "sub");
  return Var::from_op(a.value() - b.value(), {a, b}, [](Node& n) {
    parent(n, 0).accumulate(n.grad);
    parent(n, 1).accumulate(-n.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  same_shape(a, b, "mul");
  return Var::from_op(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    if (x.requires_grad) x.accumulate(n.grad.cwiseProduct(y.value));
    if (y.requires_grad) y.accumulate(n.grad.cwiseProduct(x.value));
  });
}

Var scale(const Var& a, double c) {
  return Var::from_op(a.value() * c, {a}, [c](Node& n) { parent(n, 0).accumulate(n.grad * c); });
}

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row shape");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return Var::from_op(std::move(out), {a, row}, [](Node& n) {
    parent(n, 0).accumulate(n.grad);
    Node& r = parent(n, 1);
    if (r.requires_grad) r.accumulate(n.grad.colwise().sum());
  });
}

Var mul_col(const Var& col, const Var& a) {
  require(col.cols() == 1 && col.rows() == a.rows(), "mul_col shape");
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return Var::from_op(std::move(out), {col, a}, [](Node& n) {
    Node& c = parent(n, 0);
    Node& x = parent(n, 1);
    if (c.requires_grad) c.accumulate(n.grad.cwiseProduct(x.value).rowwise().sum());
    if (x.requires_grad) {
      Matrix g = n.grad.array().colwise() * c.value.col(0).array();
      x.accumulate(g);
    }
  });
}

Var mul_const(const Var& a, const Matrix& m) {
  require(a.rows() == m.rows() && a.cols() == m.cols(), "mul_const shape");
  return Var::from_op(a.value().cwiseProduct(m), {a},
                      [m](Node& n) { parent(n, 0).accumulate(n.grad.cwiseProduct(m)); });
}

Var relu(const Var& a) {
  return Var::from_op(a.value().cwiseMax(0.0), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    x.accumulate((x.value.array() > 0.0).select(n.grad, 0.0));
  });
}

Var sigmoid(const Var& a) {
  Matrix s = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  return Var::from_op(s, {a}, [](Node& n) {
    const auto s = n.value.array();
    parent(n, 0).accumulate((n.grad.array() * s * (1.0 - s)).matrix());
  });
}

// ---- products ----

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul inner dimension");
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  return Var::from_op(std::move(out), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    if (x.requires_grad) {
      Matrix g(x.value.rows(), x.value.cols());
      g.noalias() = n.grad * y.value.transpose();
      x.accumulate(g);
    }
    if (y.requires_grad) {
      Matrix g(y.value.rows(), y.value.cols());
      g.noalias() = x.value.transpose() * n.grad;
      y.accumulate(g);
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "matmul_nt inner dimension");
  Matrix out(a.rows(), b.rows());
  out.noalias() = a.value() * b.value().transpose();
  return Var::from_op(std::move(out), {a, b}, [](Node& n) {
    Node& x = parent(n, 0);
    Node& y = parent(n, 1);
    if (x.requires_grad) {
      Matrix g(x.value.rows(), x.value.cols());
      g.noalias() = n.grad * y.value;
      x.accumulate(g);
    }
    if (y.requires_grad) {
      Matrix g(y.value.rows(), y.value.cols());
      g.noalias() = n.grad.transpose() * x.value;
      y.accumulate(g);
    }
  });
}

Var matmul_const_left(const Matrix& m, const Var& b) {
  require(m.cols() == b.rows(), "matmul_const_left inner dimension");
  Matrix out(m.rows(), b.cols());
  out.noalias() = m * b.value();
  return Var::from_op(std::move(out), {b}, [m](Node& n) {
    Node& y = parent(n, 0);
    Matrix g(y.value.rows(), y.value.cols());
    g.noalias() = m.transpose() * n.grad;
    y.accumulate(g);
  });
}

// ---- shape ----

Var gather_rows(const Var& table, std::span<const int> index) {
  const Index n_rows = static_cast<Index>(index.size());
  Matrix out = Matrix::Zero(n_rows, table.cols());
  for (Index i = 0; i < n_rows; ++i) {
    const int r = index[static_cast<size_t>(i)];
    if (r < 0) continue;
    require(r < table.rows(), "gather_rows index out of range");
    out.row(i) = table.value().row(r);
  }
  std::vector<int> idx(index.begin(), index.end());
  return Var::from_op(std::move(out), {table}, [idx = std::move(idx)](Node& n) {
    Node& t = parent(n, 0);
    Matrix g = Matrix::Zero(t.value.rows(), t.value.cols());
    for (size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= 0) g.row(idx[i]) += n.grad.row(static_cast<Index>(i));
    }
    t.accumulate(g);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols of nothing");
  Index total = 0;
  for (const auto& p : parts) {
    require(p.rows() == parts[0].rows(), "concat_cols row mismatch");
    total += p.cols();
  }
  Matrix out(parts[0].rows(), total);
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    offsets.push_back(at);
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return Var::from_op(std::move(out), parts, [offsets](Node& n) {
    for (size_t i = 0; i < n.parents.size(); ++i) {
      Node& p = *n.parents[i];
      if (p.requires_grad) p.accumulate(n.grad.middleCols(offsets[i], p.value.cols()));
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows of nothing");
  Index total = 0;
  for (const auto& p : parts) {
    require(p.cols() == parts[0].cols(), "concat_rows col mismatch");
    total += p.rows();
  }
  Matrix out(total, parts[0].cols());
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    offsets.push_back(at);
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return Var::from_op(std::move(out), parts, [offsets](Node& n) {
    for (size_t i = 0; i < n.parents.size(); ++i) {
      Node& p = *n.parents[i];
      if (p.requires_grad) p.accumulate(n.grad.middleRows(offsets[i], p.value.rows()));
    }
  });
}

Var slice_cols(const Var& a, Index begin, Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= a.cols(), "slice_cols range");
  Matrix out = a.value().middleCols(begin, count);
  return Var::from_op(std::move(out), {a}, [begin, count](Node& n) {
    Node& x = parent(n, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    g.middleCols(begin, count) = n.grad;
    x.accumulate(g);
  });
}

Var sum_cols(const Var& a) {
  Matrix out = a.value().rowwise().sum();
  return Var::from_op(std::move(out), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    Matrix g = n.grad.col(0).replicate(1, x.value.cols());
    x.accumulate(g);
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return Var::from_op(std::move(out), {a}, [](Node& n) {
    Node& x = parent(n, 0);
    x.accumulate(Matrix::Constant(x.value.rows(), x.value.cols(), n.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  require(a.value().size() > 0, "mean of empty");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

// ---- normalisation / probability ----

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Index n = x.rows();
  const Index d = x.cols();
  require(gamma.rows() == 1 && gamma.cols() == d && beta.rows() == 1 && beta.cols() == d,
          "layer_norm parameter shape");
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Index i = 0; i < n; ++i) {
    const double mu = x.value().row(i).mean();
    const auto centered = x.value().row(i).array() - mu;
    const double var = centered.square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = centered * inv_std(i);
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  return Var::from_op(std::move(out), {x, gamma, beta},
                      [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& node) {
                        Node& xn = parent(node, 0);
                        Node& g = parent(node, 1);
                        Node& b = parent(node, 2);
                        const Matrix& dy = node.grad;
                        if (g.requires_grad) g.accumulate(dy.cwiseProduct(xhat).colwise().sum());
                        if (b.requires_grad) b.accumulate(dy.colwise().sum());
                        if (xn.requires_grad) {
                          const Index dd = xhat.cols();
                          Matrix dxhat = dy.array().rowwise() * g.value.row(0).array();
                          Matrix dx(xhat.rows(), dd);
                          for (Index i = 0; i < xhat.rows(); ++i) {
                            const double m1 = dxhat.row(i).mean();
                            const double m2 = dxhat.row(i).dot(xhat.row(i)) / double(dd);
                            dx.row(i) = (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2) *
                                        inv_std(i);
                          }
                          xn.accumulate(dx);
                        }
                      });
}

Var softmax_rows(const Var& a, std::span<const uint8_t> col_mask) {
  require(col_mask.empty() || static_cast<Index>(col_mask.size()) == a.cols(),
          "softmax_rows mask length");
  Matrix p = Matrix::Zero(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < a.cols(); ++j) {
      if (col_mask.empty() || col_mask[static_cast<size_t>(j)]) mx = std::max(mx, a.value()(i, j));
    }
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (Index j = 0; j < a.cols(); ++j) {
      if (col_mask.empty() || col_mask[static_cast<size_t>(j)]) {
        p(i, j) = std::exp(a.value()(i, j) - mx);
        z += p(i, j);
      }
    }
    p.row(i) /= z;
  }
  return Var::from_op(p, {a}, [](Node& n) {
    const Matrix& p = n.value;
    Eigen::VectorXd dot = n.grad.cwiseProduct(p).rowwise().sum();
    Matrix g = p.array() * (n.grad.colwise() - dot).array();
    parent(n, 0).accumulate(g);
  });
}

Var logsumexp_rows(const Var& a) {
  require(a.cols() > 0, "logsumexp of empty row");
  Matrix out(a.rows(), 1);
  Matrix p(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double mx = a.value().row(i).maxCoeff();
    const auto e = (a.value().row(i).array() - mx).exp();
    const double z = e.sum();
    out(i, 0) = mx + std::log(z);
    p.row(i) = e / z;
  }
  return Var::from_op(std::move(out), {a}, [p = std::move(p)](Node& n) {
    Matrix g = p.array().colwise() * n.grad.col(0).array();
    parent(n, 0).accumulate(g);
  });
}

Var cross_entropy_sum(const Var& logits, std::span<const int> targets) {
  require(static_cast<Index>(targets.size()) == logits.rows(), "cross_entropy target count");
  const Index n = logits.rows();
  Matrix p(n, logits.cols());
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double mx = logits.value().row(i).maxCoeff();
    const auto e = (logits.value().row(i).array() - mx).exp();
    const double z = e.sum();
    p.row(i) = e / z;
    const int t = targets[static_cast<size_t>(i)];
    if (t < 0) continue;
    require(t < logits.cols(), "cross_entropy target out of range");
    total -= logits.value()(i, t) - mx - std::log(z);
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  std::vector<int> tgt(targets.begin(), targets.end());
  return Var::from_op(std::move(out), {logits},
                      [p = std::move(p), tgt = std::move(tgt)](Node& node) {
                        const double up = node.grad(0, 0);
                        Matrix g = Matrix::Zero(p.rows(), p.cols());
                        for (Index i = 0; i < p.rows(); ++i) {
                          const int t = tgt[static_cast<size_t>(i)];
                          if (t < 0) continue;
                          g.row(i) = p.row(i) * up;
                          g(i, t) -= up;
                        }
                        parent(node, 0).accumulate(g);
                      });
}

// ---- attention ----

void set_attention_capture(bool on) {
  g_capture_attention = on;
  if (!on) g_captured.clear();
}

const std::vector<Matrix>& captured_attention() { return g_captured; }

Var attention(const Var& q, const Var& k, const Var& v, std::span<const AttentionBlock> blocks,
              int n_heads, bool causal, std::span<const uint8_t> key_mask) {
  require(n_heads >= 1 && q.cols() % n_heads == 0, "attention heads must divide width");
  require(q.cols() == k.cols() && k.cols() == v.cols() && k.rows() == v.rows(),
          "attention operand shapes");
  require(key_mask.empty() || static_cast<Index>(key_mask.size()) == k.rows(),
          "attention key mask length");
  const Index dh = q.cols() / n_heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

  // One probability matrix per (block, head).
  auto probs = std::make_shared<std::vector<Matrix>>();
  probs->reserve(blocks.size() * static_cast<size_t>(n_heads));
  Matrix out = Matrix::Zero(q.rows(), q.cols());
  if (g_capture_attention) g_captured.clear();

  for (const auto& blk : blocks) {
    require(blk.q_begin >= 0 && blk.q_begin + blk.q_len <= q.rows() && blk.k_begin >= 0 &&
                blk.k_begin + blk.k_len <= k.rows(),
            "attention block out of range");
    for (int h = 0; h < n_heads; ++h) {
      const auto qh = q.value().block(blk.q_begin, h * dh, blk.q_len, dh);
      const auto kh = k.value().block(blk.k_begin, h * dh, blk.k_len, dh);
      const auto vh = v.value().block(blk.k_begin, h * dh, blk.k_len, dh);
      Matrix s(blk.q_len, blk.k_len);
      s.noalias() = qh * kh.transpose();
      s *= scale_factor;
      Matrix p = Matrix::Zero(blk.q_len, blk.k_len);
      for (Index i = 0; i < blk.q_len; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        auto admissible = [&](Index j) {
          if (causal && j > i) return false;
          return key_mask.empty() || key_mask[static_cast<size_t>(blk.k_begin + j)] != 0;
        };
        for (Index j = 0; j < blk.k_len; ++j) {
          if (admissible(j)) mx = std::max(mx, s(i, j));
        }
        if (!std::isfinite(mx)) continue;
        double z = 0.0;
        for (Index j = 0; j < blk.k_len; ++j) {
          if (admissible(j)) {
            p(i, j) = std::exp(s(i, j) - mx);
            z += p(i, j);
          }
        }
        p.row(i) /= z;
      }
      out.block(blk.q_begin, h * dh, blk.q_len, dh).noalias() = p * vh;
      if (g_capture_attention) g_captured.push_back(p);
      probs->push_back(std::move(p));
    }
  }

  std::vector<AttentionBlock> blk_copy(blocks.begin(), blocks.end());
  return Var::from_op(
      std::move(out), {q, k, v},
      [probs, blk_copy = std::move(blk_copy), n_heads, dh, scale_factor](Node& node) {
        Node& qn = parent(node, 0);
        Node& kn = parent(node, 1);
        Node& vn = parent(node, 2);
        Matrix dq = Matrix::Zero(qn.value.rows(), qn.value.cols());
        Matrix dk = Matrix::Zero(kn.value.rows(), kn.value.cols());
        Matrix dv = Matrix::Zero(vn.value.rows(), vn.value.cols());
        size_t pi = 0;
        for (const auto& blk : blk_copy) {
          for (int h = 0; h < n_heads; ++h, ++pi) {
            const Matrix& p = (*probs)[pi];
            const auto go = node.grad.block(blk.q_begin, h * dh, blk.q_len, dh);
            const auto qh = qn.value.block(blk.q_begin, h * dh, blk.q_len, dh);
            const auto kh = kn.value.block(blk.k_begin, h * dh, blk.k_len, dh);
            const auto vh = vn.value.block(blk.k_begin, h * dh, blk.k_len, dh);
            dv.block(blk.k_begin, h * dh, blk.k_len, dh).noalias() += p.transpose() * go;
            Matrix dp(blk.q_len, blk.k_len);
            dp.noalias() = go * vh.transpose();
            Eigen::VectorXd rowdot = dp.cwiseProduct(p).rowwise().sum();
            Matrix ds = p.array() * (dp.colwise() - rowdot).array();
            ds *= scale_factor;
            dq.block(blk.q_begin, h * dh, blk.q_len, dh).noalias() += ds * kh;
            dk.block(blk.k_begin, h * dh, blk.k_len, dh).noalias() += ds.transpose() * qh;
          }
        }
        qn.accumulate(dq);
        kn.accumulate(dk);
        vn.accumulate(dv);
      });
}

}  // namespace revsum::ad
