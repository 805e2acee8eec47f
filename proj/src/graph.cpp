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


#include "revsum/graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace revsum {

int ReviewGraph::live_nodes() const {
  return static_cast<int>(std::count(node_mask.begin(), node_mask.end(), uint8_t{1}));
}

ReviewGraph build_graph(const Matrix& node_features, std::span<const int64_t> timestamps,
                        std::span<const int> rating_slots, std::span<const uint8_t> node_mask,
                        GraphSide side, const EdgeOptions& options) {
  const size_t k = node_mask.size();
  if (timestamps.size() != k || rating_slots.size() != k) {
    throw std::invalid_argument("build_graph: per-node inputs differ in length");
  }
  ReviewGraph g;
  g.node_features = node_features;
  g.node_mask.assign(node_mask.begin(), node_mask.end());
  g.side = side;

  std::vector<int> live;
  for (size_t i = 0; i < k; ++i) {
    if (node_mask[i]) live.push_back(static_cast<int>(i));
  }
  if (options.time_edges) {
    std::vector<int> order = live;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return timestamps[size_t(a)] < timestamps[size_t(b)]; });
    for (size_t i = 1; i < order.size(); ++i) g.edges_time.emplace_back(order[i - 1], order[i]);
  }
  if (options.rating_edges) {
    for (size_t a = 0; a < live.size(); ++a) {
      for (size_t b = a + 1; b < live.size(); ++b) {
        if (rating_slots[size_t(live[a])] == rating_slots[size_t(live[b])]) {
          g.edges_rating.emplace_back(live[a], live[b]);
        }
      }
    }
  }
  return g;
}

std::string dump_edges(const ReviewGraph& graph) {
  std::ostringstream out;
  for (const auto& [a, b] : graph.edges_time) out << a << " time " << b << '\n';
  for (const auto& [a, b] : graph.edges_rating) out << a << " rating " << b << '\n';
  return out.str();
}

namespace {

void fill_block(const ReviewGraph& g, Index offset, bool directed_time, Matrix& time,
                Matrix& rating) {
  const Index k = g.size();
  Matrix t = Matrix::Zero(k, k);
  Matrix r = Matrix::Zero(k, k);
  for (const auto& [a, b] : g.edges_time) {
    t(b, a) = 1.0;  // b hears from its predecessor
    if (!directed_time) t(a, b) = 1.0;
  }
  for (const auto& [a, b] : g.edges_rating) {
    r(a, b) = 1.0;
    r(b, a) = 1.0;
  }
  for (Index i = 0; i < k; ++i) {
    const double nt = t.row(i).sum();
    const double nr = r.row(i).sum();
    if (nt > 0) t.row(i) /= nt;
    if (nr > 0) r.row(i) /= nr;
  }
  time.block(offset, offset, k, k) = t;
  rating.block(offset, offset, k, k) = r;
}

}  // namespace

GraphOperator graph_operator(const ReviewGraph& graph, bool directed_time) {
  return graph_operator(std::vector<ReviewGraph>{graph}, directed_time);
}

GraphOperator graph_operator(const std::vector<ReviewGraph>& graphs, bool directed_time) {
  Index n = 0;
  for (const auto& g : graphs) n += g.size();
  GraphOperator op;
  op.time = Matrix::Zero(n, n);
  op.rating = Matrix::Zero(n, n);
  Index offset = 0;
  for (const auto& g : graphs) {
    fill_block(g, offset, directed_time, op.time, op.rating);
    op.mask.insert(op.mask.end(), g.node_mask.begin(), g.node_mask.end());
    offset += g.size();
  }
  return op;
}

RgcnParams RgcnParams::create(nn::ParamStore& store, const std::string& name, Index d,
                              int n_layers) {
  if (n_layers < 1) throw std::invalid_argument("RGCN needs at least one layer");
  RgcnParams p;
  for (int l = 0; l < n_layers; ++l) {
    const std::string prefix = name + ".layer" + std::to_string(l);
    p.layers.push_back({store.normal(prefix + ".w_time", d, d),
                        store.normal(prefix + ".w_rating", d, d),
                        store.normal(prefix + ".w_self", d, d)});
  }
  return p;
}

ad::Var rgcn_layer(const GraphOperator& op, const ad::Var& h, const RgcnLayerParams& params,
                   nn::Activation act) {
  if (h.rows() != op.size()) throw std::invalid_argument("rgcn_layer: node count mismatch");
  ad::Var msg = ad::matmul(h, params.w_self);
  if (!op.time.isZero(0.0)) {
    msg = msg + ad::matmul(ad::matmul_const_left(op.time, h), params.w_time);
  }
  if (!op.rating.isZero(0.0)) {
    msg = msg + ad::matmul(ad::matmul_const_left(op.rating, h), params.w_rating);
  }
  return ad::mul_const(nn::activate(msg, act), nn::row_mask_matrix(op.mask, h.cols()));
}

ad::Var rgcn_forward(const GraphOperator& op, const ad::Var& h, const RgcnParams& params,
                     nn::Activation act) {
  ad::Var x = h;
  for (const auto& layer : params.layers) x = rgcn_layer(op, x, layer, act);
  return x;
}

ad::Var graph_pool(const ad::Var& node_states, std::span<const uint8_t> node_mask,
                   int nodes_per_graph) {
  const Index n = node_states.rows();
  if (static_cast<Index>(node_mask.size()) != n || nodes_per_graph < 1 ||
      n % nodes_per_graph != 0) {
    throw std::invalid_argument("graph_pool: node layout mismatch");
  }
  const Index graphs = n / nodes_per_graph;
  Matrix pool = Matrix::Zero(graphs, n);
  for (Index g = 0; g < graphs; ++g) {
    int live = 0;
    for (Index j = 0; j < nodes_per_graph; ++j) live += node_mask[size_t(g * nodes_per_graph + j)];
    if (live == 0) continue;
    for (Index j = 0; j < nodes_per_graph; ++j) {
      if (node_mask[size_t(g * nodes_per_graph + j)]) pool(g, g * nodes_per_graph + j) = 1.0 / live;
    }
  }
  return ad::matmul_const_left(pool, node_states);
}

}  // namespace revsum
