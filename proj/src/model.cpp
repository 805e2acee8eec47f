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


#include "revsum/model.hpp"

#include <cmath>
#include <unordered_map>

#include "revsum/error.hpp"

namespace revsum {

ModelConfig ModelConfig::desk(const Dataset& data) {
  ModelConfig c;
  c.encoder = EncoderConfig::desk();
  c.encoder.max_len = data.config.limits.max_review + 1;
  c.decoder = DecoderConfig::matching(c.encoder, data.config.limits.max_summary);
  c.vocab_size = data.vocab.size();
  c.n_customers = data.customers.size();
  c.n_products = data.products.size();
  c.k = data.config.k;
  return c;
}

ModelConfig ModelConfig::large(const Dataset& data) {
  ModelConfig c = desk(data);
  const int max_len = c.encoder.max_len;
  c.encoder = EncoderConfig::large();
  c.encoder.max_len = max_len;
  c.decoder = DecoderConfig::matching(c.encoder, data.config.limits.max_summary);
  return c;
}

void ModelConfig::validate() const {
  encoder.validate();
  decoder.validate();
  contrastive.validate();
  if (decoder.d != encoder.d) throw InputError("decoder width must match the encoder");
  if (rgcn_layers < 1) throw InputError("rgcn_layers must be >= 1");
  if (vocab_size < Vocabulary::kNumReserved) throw InputError("vocabulary too small");
  if (n_customers < 1 || n_products < 1) throw InputError("entity tables need the unseen bucket");
  if (k < 1) throw InputError("k must be >= 1");
}

Model::Model(const ModelConfig& config, uint64_t init_seed) : config_(config), store_(init_seed) {
  config_.validate();
  const Index d = config_.encoder.d;
  token_embedding_ = store_.normal("token_embedding", config_.vocab_size, d);
  encoder_ = Encoder(store_, config_.encoder, token_embedding_);
  review_ = ReviewEmbeddings::create(store_, d, config_.n_customers, config_.n_products);
  rgcn_customer_ = RgcnParams::create(store_, "rgcn.customer", d, config_.rgcn_layers);
  rgcn_product_ = RgcnParams::create(store_, "rgcn.product", d, config_.rgcn_layers);
  fusion_ = FusionParams::create(store_, d);
  decoder_ = Decoder(store_, config_.decoder, token_embedding_, config_.vocab_size);
}

struct Model::Context {
  int batch_size = 0;
  ad::Var encoder_states;
  std::vector<std::pair<Index, Index>> target_rows;  // (begin, length) per example
  ad::Var customer_nodes;
  ad::Var product_nodes;
  std::vector<uint8_t> customer_mask;
  std::vector<uint8_t> product_mask;
  int nodes_per_graph = 0;
  ad::Var hu;
  ad::Var hp;
  FusionResult fusion;
  std::vector<ReviewGraph> graphs;
};

namespace {

// One history slot of a graph before its features are assembled.
struct Slot {
  int record = -1;
  bool customer_side = true;
};

struct SideNodes {
  ad::Var states;
  ad::Var pooled;
  std::vector<uint8_t> mask;
  std::vector<ReviewGraph> graphs;
};

bool any_live(const std::vector<int>& v) {
  for (int x : v) {
    if (x >= 0) return true;
  }
  return false;
}

}  // namespace

Model::Context Model::build_context(const Dataset& data, const std::vector<TrainingExample>& split,
                                    const Batch& batch, const ModelWiring& wiring, bool training,
                                    std::mt19937_64* rng) const {
  if (data.config.k != config_.k) throw InputError("dataset history size differs from the model");
  Context ctx;
  const int B = static_cast<int>(batch.examples.size());
  const int k = config_.k;
  ctx.batch_size = B;

  const bool mixed = wiring.mixed_graph;
  const bool use_customer = mixed || wiring.customer_graph;
  const bool use_product = !mixed && wiring.product_graph;

  // Encode every distinct review once.
  std::unordered_map<int, int> seq_of;
  std::vector<int> seq_records;
  auto sequence = [&](int record) {
    auto [it, inserted] = seq_of.emplace(record, static_cast<int>(seq_records.size()));
    if (inserted) seq_records.push_back(record);
    return it->second;
  };
  std::vector<int> target_seq;
  for (int e : batch.examples) target_seq.push_back(sequence(split.at(size_t(e)).target));

  // Slot layout per graph.
  std::vector<std::vector<Slot>> customer_slots;
  std::vector<std::vector<Slot>> product_slots;
  for (int e : batch.examples) {
    const auto& h = split[size_t(e)].history;
    std::vector<Slot> cs;
    std::vector<Slot> ps;
    for (int j = 0; j < k; ++j) {
      cs.push_back({h.customer_mask[size_t(j)] ? h.customer[size_t(j)] : -1, true});
      ps.push_back({h.product_mask[size_t(j)] ? h.product[size_t(j)] : -1, false});
    }
    if (mixed) {
      cs.insert(cs.end(), ps.begin(), ps.end());
      customer_slots.push_back(std::move(cs));
    } else {
      if (use_customer) customer_slots.push_back(std::move(cs));
      if (use_product) product_slots.push_back(std::move(ps));
    }
  }
  for (const auto* side : {&customer_slots, &product_slots}) {
    for (const auto& g : *side) {
      for (const auto& s : g) {
        if (s.record >= 0) sequence(s.record);
      }
    }
  }

  std::vector<int> tokens;
  std::vector<int> positions;
  std::vector<ad::AttentionBlock> blocks;
  std::vector<int> cls_rows;
  for (int rec : seq_records) {
    const auto& r = data.record(rec);
    const Index begin = static_cast<Index>(tokens.size());
    cls_rows.push_back(static_cast<int>(begin));
    tokens.push_back(Vocabulary::kCls);
    tokens.insert(tokens.end(), r.review_tokens.begin(), r.review_tokens.end());
    const Index len = static_cast<Index>(tokens.size()) - begin;
    for (Index p = 0; p < len; ++p) positions.push_back(static_cast<int>(p));
    blocks.push_back({begin, len, begin, len});
  }
  ctx.encoder_states = encoder_.encode_packed(tokens, positions, blocks, {}, rng);
  for (int s : target_seq) {
    ctx.target_rows.emplace_back(blocks[size_t(s)].k_begin, blocks[size_t(s)].k_len);
  }
  ad::Var cls = ad::gather_rows(ctx.encoder_states, cls_rows);
  ad::Var r = ad::gather_rows(cls, target_seq);

  auto build_side = [&](const std::vector<std::vector<Slot>>& graphs_slots, GraphSide side,
                        const RgcnParams& rgcn) {
    SideNodes out;
    std::vector<int> seq_idx;
    std::vector<int> cust_rows;
    std::vector<int> prod_rows;
    std::vector<int> rating_rows;
    for (size_t b = 0; b < graphs_slots.size(); ++b) {
      const auto& target = data.record(split[size_t(batch.examples[b])].target);
      std::vector<int64_t> times;
      std::vector<int> ratings;
      std::vector<uint8_t> mask;
      for (const auto& s : graphs_slots[b]) {
        const bool live = s.record >= 0;
        const auto& rec = data.record(s.record);
        seq_idx.push_back(live ? seq_of.at(s.record) : -1);
        cust_rows.push_back(live && s.customer_side ? data.customers.lookup(target.customer_id) : -1);
        prod_rows.push_back(live && !s.customer_side ? data.products.lookup(target.product_id) : -1);
        rating_rows.push_back(live && wiring.history_rating ? rec.rating : -1);
        times.push_back(rec.timestamp);
        ratings.push_back(live ? rec.rating : 0);
        mask.push_back(live ? 1 : 0);
      }
      out.graphs.push_back(build_graph(Matrix(), times, ratings, mask, side, wiring.edges));
      out.mask.insert(out.mask.end(), mask.begin(), mask.end());
    }
    ad::Var features = ad::gather_rows(cls, seq_idx);
    if (any_live(cust_rows)) features = features + ad::gather_rows(review_.customer, cust_rows);
    if (any_live(prod_rows)) features = features + ad::gather_rows(review_.product, prod_rows);
    if (any_live(rating_rows)) features = features + ad::gather_rows(review_.rating, rating_rows);
    if (wiring.graph_reasoning) {
      out.states = rgcn_forward(graph_operator(out.graphs, config_.directed_time), features, rgcn);
    } else {
      out.states = features;
    }
    out.pooled =
        graph_pool(out.states, out.mask, static_cast<int>(graphs_slots.empty() ? 1 : graphs_slots[0].size()));
    return out;
  };

  const Index d = config_.encoder.d;
  ad::Var zeros = ad::Var::constant(Matrix::Zero(B, d));
  ctx.nodes_per_graph = mixed ? 2 * k : k;
  ctx.hu = zeros;
  ctx.hp = zeros;
  if (use_customer) {
    SideNodes s = build_side(customer_slots, mixed ? GraphSide::kMixed : GraphSide::kCustomer,
                             rgcn_customer_);
    ctx.customer_nodes = s.states;
    ctx.customer_mask = std::move(s.mask);
    ctx.hu = s.pooled;
    for (auto& g : s.graphs) ctx.graphs.push_back(std::move(g));
  }
  if (use_product) {
    SideNodes s = build_side(product_slots, GraphSide::kProduct, rgcn_product_);
    ctx.product_nodes = s.states;
    ctx.product_mask = std::move(s.mask);
    ctx.hp = s.pooled;
    for (auto& g : s.graphs) ctx.graphs.push_back(std::move(g));
  }
  const std::array<uint8_t, 3> slots = {uint8_t(use_customer ? 1 : 0),
                                        uint8_t(use_product ? 1 : 0), 1};
  ctx.fusion = fuse(ctx.hu, ctx.hp, r, fusion_, slots);
  (void)training;
  return ctx;
}

namespace {

// Decoder rows for a set of sequences, each tied to one example of the batch.
struct DecoderRows {
  std::vector<int> tokens;
  std::vector<int> positions;
  std::vector<int> example_of_row;
  std::vector<ad::AttentionBlock> self_blocks;
  std::vector<int> example_of_block;
};

void add_sequence(DecoderRows& rows, const std::vector<int>& seq, int example) {
  const Index begin = static_cast<Index>(rows.tokens.size());
  for (size_t p = 0; p < seq.size(); ++p) {
    rows.tokens.push_back(seq[p]);
    rows.positions.push_back(static_cast<int>(p));
    rows.example_of_row.push_back(example);
  }
  const Index len = static_cast<Index>(seq.size());
  rows.self_blocks.push_back({begin, len, begin, len});
  rows.example_of_block.push_back(example);
}

DecoderContext decoder_context(const ad::Var& encoder_states,
                               const std::vector<std::pair<Index, Index>>& target_rows,
                               const ad::Var& customer_nodes, const std::vector<uint8_t>& cmask,
                               const ad::Var& product_nodes, const std::vector<uint8_t>& pmask,
                               int nodes_per_graph, const ad::Var& z, bool use_gate,
                               const DecoderRows& rows) {
  DecoderContext dc;
  dc.self_blocks = rows.self_blocks;
  dc.encoder_states = encoder_states;
  dc.customer_nodes = customer_nodes;
  dc.customer_mask = cmask;
  dc.product_nodes = product_nodes;
  dc.product_mask = pmask;
  for (size_t i = 0; i < rows.self_blocks.size(); ++i) {
    const auto& sb = rows.self_blocks[i];
    const int b = rows.example_of_block[i];
    const auto [eb, el] = target_rows[size_t(b)];
    dc.cross_blocks.push_back({sb.q_begin, sb.q_len, eb, el});
    const Index nb = static_cast<Index>(b) * nodes_per_graph;
    dc.customer_blocks.push_back({sb.q_begin, sb.q_len, nb, nodes_per_graph});
    dc.product_blocks.push_back({sb.q_begin, sb.q_len, nb, nodes_per_graph});
  }
  dc.z_rows = ad::gather_rows(z, rows.example_of_row);
  dc.use_gate = use_gate;
  return dc;
}

}  // namespace

ForwardOutput Model::forward(const Dataset& data, const std::vector<TrainingExample>& split,
                             const Batch& batch, const ModelWiring& wiring, bool training,
                             uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::mt19937_64* drop = training ? &rng : nullptr;
  Context ctx = build_context(data, split, batch, wiring, training, drop);
  const int B = ctx.batch_size;

  ForwardOutput out;
  out.customer_summary = ctx.hu.value();
  out.product_summary = ctx.hp.value();
  out.fusion_weights = ctx.fusion.weights.value();
  out.graphs = ctx.graphs;

  const bool contrast = wiring.contrastive && !wiring.mixed_graph && wiring.customer_graph &&
                        wiring.product_graph;
  out.contrastive_loss =
      contrast ? contrastive_loss(ctx.hu, ctx.hp, config_.contrastive,
                                  seed * 0x9E3779B97F4A7C15ULL + 1, training)
               : ad::Var::constant(Matrix::Zero(1, 1));

  ad::Var sentiment_logits = classify_logits(ctx.fusion.z, fusion_);
  {
    ad::NoGradGuard no_grad;
    out.rating_probs = ad::softmax_rows(sentiment_logits).value();
  }
  std::vector<int> gold_ratings;
  for (int e : batch.examples) gold_ratings.push_back(data.record(split[size_t(e)].target).rating);
  out.sentiment_loss = wiring.sentiment_loss ? sentiment_loss(sentiment_logits, gold_ratings)
                                             : ad::Var::constant(Matrix::Zero(1, 1));

  DecoderRows rows;
  std::vector<int> gold;
  for (int b = 0; b < B; ++b) {
    std::vector<int> seq;
    for (size_t t = 0; t < batch.decoder_input[size_t(b)].size(); ++t) {
      if (!batch.decoder_mask[size_t(b)][t]) break;
      seq.push_back(batch.decoder_input[size_t(b)][t]);
      gold.push_back(batch.decoder_gold[size_t(b)][t]);
    }
    add_sequence(rows, seq, b);
  }
  DecoderContext dc = decoder_context(
      ctx.encoder_states, ctx.target_rows, ctx.customer_nodes, ctx.customer_mask,
      ctx.product_nodes, ctx.product_mask, ctx.nodes_per_graph, ctx.fusion.z,
      wiring.sentiment_gate, rows);
  ad::Var logits = decoder_.forward(rows.tokens, rows.positions, dc, drop);
  out.generation_loss = generation_loss(logits, gold, B);
  return out;
}

std::vector<DecodeResult> Model::generate(const Dataset& data,
                                          const std::vector<TrainingExample>& split,
                                          const Batch& batch, const ModelWiring& wiring,
                                          DecodeStrategy strategy, int beam_width,
                                          int max_len) const {
  ad::NoGradGuard no_grad;
  Context ctx = build_context(data, split, batch, wiring, false, nullptr);
  std::vector<DecodeResult> results;
  for (int b = 0; b < ctx.batch_size; ++b) {
    StepScorer scorer = [&](const std::vector<std::vector<int>>& prefixes) {
      DecoderRows rows;
      for (const auto& p : prefixes) add_sequence(rows, p, b);
      DecoderContext dc = decoder_context(
          ctx.encoder_states, ctx.target_rows, ctx.customer_nodes, ctx.customer_mask,
          ctx.product_nodes, ctx.product_mask, ctx.nodes_per_graph, ctx.fusion.z,
          wiring.sentiment_gate, rows);
      ad::Var logits = decoder_.forward(rows.tokens, rows.positions, dc);
      Matrix lp(static_cast<Index>(prefixes.size()), logits.cols());
      for (size_t i = 0; i < rows.self_blocks.size(); ++i) {
        const auto& blk = rows.self_blocks[i];
        const auto last = logits.value().row(blk.q_begin + blk.q_len - 1);
        const double mx = last.maxCoeff();
        const double lse = mx + std::log((last.array() - mx).exp().sum());
        lp.row(static_cast<Index>(i)) = last.array() - lse;
      }
      return lp;
    };
    results.push_back(strategy == DecodeStrategy::kGreedy ? greedy_decode(scorer, max_len)
                                                          : beam_decode(scorer, beam_width, max_len));
  }
  return results;
}

}  // namespace revsum
