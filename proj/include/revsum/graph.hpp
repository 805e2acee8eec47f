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


#ifndef REVSUM_GRAPH_HPP_
#define REVSUM_GRAPH_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "revsum/nn.hpp"

namespace revsum {

enum class GraphSide { kCustomer, kProduct, kMixed };

using Edge = std::pair<int, int>;

// Typed review graph over k history slots. Time edges are stored as
// (earlier, later) pairs forming a chain; rating edges as (i, j) with i < j.
struct ReviewGraph {
  Matrix node_features;  // may be empty when features travel separately
  std::vector<uint8_t> node_mask;
  std::vector<Edge> edges_time;
  std::vector<Edge> edges_rating;
  GraphSide side = GraphSide::kCustomer;

  int size() const { return static_cast<int>(node_mask.size()); }
  int live_nodes() const;
};

struct EdgeOptions {
  bool time_edges = true;
  bool rating_edges = true;
};

ReviewGraph build_graph(const Matrix& node_features, std::span<const int64_t> timestamps,
                        std::span<const int> rating_slots, std::span<const uint8_t> node_mask,
                        GraphSide side, const EdgeOptions& options = {});

// "node relation node" lines, relation in {time, rating}.
std::string dump_edges(const ReviewGraph& graph);

// Per-relation row-normalised adjacency (entry i,j = 1/|N_i^q| when j is a
// neighbour of i) plus the live-node mask, block-diagonal over a batch of
// graphs. Time edges propagate both ways unless directed_time is set, in
// which case node i only hears from its predecessor.
struct GraphOperator {
  Matrix time;
  Matrix rating;
  std::vector<uint8_t> mask;

  Index size() const { return static_cast<Index>(mask.size()); }
};

GraphOperator graph_operator(const ReviewGraph& graph, bool directed_time = false);
GraphOperator graph_operator(const std::vector<ReviewGraph>& graphs, bool directed_time = false);

struct RgcnLayerParams {
  ad::Var w_time;
  ad::Var w_rating;
  ad::Var w_self;
};

struct RgcnParams {
  std::vector<RgcnLayerParams> layers;

  static RgcnParams create(nn::ParamStore& store, const std::string& name, Index d, int n_layers);
};

// h' = act(A_time h W_time + A_rating h W_rating + h W_self), masked rows zeroed.
ad::Var rgcn_layer(const GraphOperator& op, const ad::Var& h, const RgcnLayerParams& params,
                   nn::Activation act = nn::Activation::kRelu);

ad::Var rgcn_forward(const GraphOperator& op, const ad::Var& h, const RgcnParams& params,
                     nn::Activation act = nn::Activation::kRelu);

// Mean over live nodes of each graph; graphs are consecutive runs of
// nodes_per_graph rows. A graph without live nodes pools to zero.
ad::Var graph_pool(const ad::Var& node_states, std::span<const uint8_t> node_mask,
                   int nodes_per_graph);

}  // namespace revsum

#endif  // REVSUM_GRAPH_HPP_
