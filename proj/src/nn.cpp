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


#include "revsum/nn.hpp"

#include <stdexcept>

namespace revsum::nn {

Var ParamStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  Var v = Var::parameter(std::move(value));
  items_.emplace_back(name, v);
  return v;
}

Var ParamStore::normal(const std::string& name, Index rows, Index cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng_);
  return add(name, std::move(m));
}

Var ParamStore::zeros(const std::string& name, Index rows, Index cols) {
  return add(name, Matrix::Zero(rows, cols));
}

Var ParamStore::ones(const std::string& name, Index rows, Index cols) {
  return add(name, Matrix::Ones(rows, cols));
}

Var ParamStore::get(const std::string& name) const {
  for (const auto& [n, v] : items_) {
    if (n == name) return v;
  }
  throw std::out_of_range("no parameter named " + name);
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& [n, v] : items_) {
    if (n == name) return true;
  }
  return false;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& [_, v] : items_) n += static_cast<size_t>(v.value().size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, v] : items_) v.zero_grad();
}

Var activate(const Var& x, Activation act) {
  return act == Activation::kRelu ? ad::relu(x) : x;
}

Linear Linear::create(ParamStore& store, const std::string& name, Index in, Index out) {
  return {store.normal(name + ".weight", in, out), store.zeros(name + ".bias", 1, out)};
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, Index d) {
  return {store.ones(name + ".gamma", 1, d), store.zeros(name + ".beta", 1, d)};
}

AttentionProjections AttentionProjections::create(ParamStore& store, const std::string& name,
                                                  Index d) {
  return {Linear::create(store, name + ".query", d, d), Linear::create(store, name + ".key", d, d),
          Linear::create(store, name + ".value", d, d),
          Linear::create(store, name + ".output", d, d)};
}

Var AttentionProjections::operator()(const Var& queries, const Var& keys,
                                     std::span<const ad::AttentionBlock> blocks, int n_heads,
                                     bool causal, std::span<const uint8_t> key_mask) const {
  Var q = query(queries);
  Var k = key(keys);
  Var v = value(keys);
  return output(ad::attention(q, k, v, blocks, n_heads, causal, key_mask));
}

FeedForward FeedForward::create(ParamStore& store, const std::string& name, Index d, Index ffn) {
  return {Linear::create(store, name + ".hidden", d, ffn),
          Linear::create(store, name + ".output", ffn, d)};
}

Matrix dropout_mask(Index rows, Index cols, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  Matrix m(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 / (1.0 - p);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng) < p ? 0.0 : keep;
  return m;
}

Var dropout(const Var& x, double p, std::mt19937_64* rng) {
  if (p <= 0.0 || rng == nullptr) return x;
  return ad::mul_const(x, dropout_mask(x.rows(), x.cols(), p, *rng));
}

Matrix row_mask_matrix(std::span<const uint8_t> mask, Index cols) {
  Matrix m(static_cast<Index>(mask.size()), cols);
  for (size_t i = 0; i < mask.size(); ++i) {
    m.row(static_cast<Index>(i)).setConstant(mask[i] ? 1.0 : 0.0);
  }
  return m;
}

}  // namespace revsum::nn
