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


#ifndef REVSUM_TESTS_GRAPH_ORACLE_HPP_
#define REVSUM_TESTS_GRAPH_ORACLE_HPP_

#include <algorithm>
#include <random>
#include <vector>

#include "revsum/graph.hpp"

namespace revsum::testing {

// Loops over every (i, relation, j) triple straight from the edge lists.
inline Matrix brute_force_rgcn_layer(const ReviewGraph& g, const Matrix& h, const Matrix& w_time,
                                     const Matrix& w_rating, const Matrix& w_self, bool relu,
                                     bool directed_time = false) {
  const int n = g.size();
  Matrix out = Matrix::Zero(n, h.cols());
  for (int i = 0; i < n; ++i) {
    if (!g.node_mask[size_t(i)]) continue;
    Eigen::RowVectorXd acc = h.row(i) * w_self;
    for (int rel = 0; rel < 2; ++rel) {
      const auto& edges = rel == 0 ? g.edges_time : g.edges_rating;
      const bool directed = rel == 0 && directed_time;
      std::vector<int> nbrs;
      for (int j = 0; j < n; ++j) {
        if (!g.node_mask[size_t(j)]) continue;
        for (const auto& [a, b] : edges) {
          if ((b == i && a == j) || (!directed && a == i && b == j)) {
            nbrs.push_back(j);
            break;
          }
        }
      }
      const Matrix& w = rel == 0 ? w_time : w_rating;
      for (int j : nbrs) acc += (1.0 / double(nbrs.size())) * (h.row(j) * w);
    }
    out.row(i) = relu ? Eigen::RowVectorXd(acc.cwiseMax(0.0)) : acc;
  }
  return out;
}

inline Matrix brute_force_rgcn(const ReviewGraph& g, const Matrix& h, const RgcnParams& p,
                               bool relu = true, bool directed_time = false) {
  Matrix x = h;
  for (const auto& layer : p.layers) {
    x = brute_force_rgcn_layer(g, x, layer.w_time.value(), layer.w_rating.value(),
                               layer.w_self.value(), relu, directed_time);
  }
  return x;
}

// Random history graph with up to max_nodes slots, some of them padding.
inline ReviewGraph random_graph(std::mt19937_64& rng, int max_nodes, Index d,
                                GraphSide side = GraphSide::kCustomer) {
  const int n = 1 + int(rng() % uint64_t(max_nodes));
  std::vector<int64_t> ts(static_cast<size_t>(n), 0);
  std::vector<int> ratings(static_cast<size_t>(n), 0);
  std::vector<uint8_t> mask(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    ts[size_t(i)] = int64_t(rng() % 10);
    mask[size_t(i)] = rng() % 5 != 0;
    ratings[size_t(i)] = mask[size_t(i)] ? 1 + int(rng() % 3) : 0;
  }
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix f(n, d);
  for (Index i = 0; i < f.size(); ++i) f.data()[i] = nd(rng);
  for (int i = 0; i < n; ++i) {
    if (!mask[size_t(i)]) f.row(i).setZero();
  }
  return build_graph(f, ts, ratings, mask, side);
}

}  // namespace revsum::testing

#endif  // REVSUM_TESTS_GRAPH_ORACLE_HPP_
