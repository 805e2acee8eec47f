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


#include "revsum/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "revsum/error.hpp"
#include "revsum/hashing.hpp"

namespace revsum {

using nlohmann::json;

namespace {

constexpr const char* kReservedTokens[] = {"<pad>", "<bos>", "<eos>", "<unk>", "<cls>"};

std::string line_id(size_t line) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "r%08zu", line);
  return buf;
}

bool history_before(const ReviewRecord& a, const ReviewRecord& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.review_id < b.review_id;
}

}  // namespace

// ---------------------------------------------------------------- loading

LoadResult parse_reviews(std::string_view text) {
  LoadResult out;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      ++out.skipped;
      continue;
    }
    try {
      RawReview r;
      r.review_text = j.at("reviewText").get<std::string>();
      r.summary = j.at("summary").get<std::string>();
      r.customer_id = j.at("reviewerID").get<std::string>();
      r.product_id = j.at("asin").get<std::string>();
      r.timestamp = j.at("unixReviewTime").get<int64_t>();
      const double overall = j.at("overall").get<double>();
      r.review_id = j.contains("reviewID") ? j["reviewID"].get<std::string>() : line_id(line_no);
      if (overall != std::floor(overall) || overall < 1.0 || overall > 5.0) {
        std::cerr << "warning: line " << line_no << ": rating " << overall
                  << " outside [1,5], skipped\n";
        ++out.skipped;
        continue;
      }
      r.rating = static_cast<int>(overall);
      if (r.timestamp < 0 || tokenize(r.review_text).empty()) {
        ++out.skipped;
        continue;
      }
      out.records.push_back(std::move(r));
    } catch (const json::exception&) {
      ++out.skipped;
    }
  }
  return out;
}

LoadResult load_reviews(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read review dump: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_reviews(ss.str());
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || (c < 0x80 && std::ispunct(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// ---------------------------------------------------------------- vocabulary

Vocabulary::Vocabulary() {
  for (const char* t : kReservedTokens) add(t);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved) throw InputError("vocabulary lacks reserved tokens");
  for (int i = 0; i < kNumReserved; ++i) {
    if (tokens[static_cast<size_t>(i)] != kReservedTokens[i]) {
      throw InputError("vocabulary reserved token mismatch at id " + std::to_string(i));
    }
  }
  Vocabulary v;
  for (size_t i = kNumReserved; i < tokens.size(); ++i) v.add(std::move(tokens[i]));
  return v;
}

void Vocabulary::add(std::string token) {
  const int id = size();
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> out;
  for (const auto& t : tokenize(text)) out.push_back(id(t));
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos || id == kCls) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

Vocabulary build_vocab(const std::vector<RawReview>& records, int max_size, int min_freq) {
  if (max_size < Vocabulary::kNumReserved) {
    throw InputError("vocabulary size " + std::to_string(max_size) +
                     " cannot hold the 5 reserved tokens");
  }
  std::unordered_map<std::string, int64_t> freq;
  for (const auto& r : records) {
    for (auto& t : tokenize(r.review_text)) ++freq[t];
    for (auto& t : tokenize(r.summary)) ++freq[t];
  }
  std::vector<std::pair<std::string, int64_t>> items;
  for (auto& [t, c] : freq) {
    if (c >= min_freq) items.emplace_back(t, c);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens(std::begin(kReservedTokens), std::end(kReservedTokens));
  for (auto& [t, c] : items) {
    if (static_cast<int>(tokens.size()) >= max_size) break;
    tokens.push_back(t);
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

// ---------------------------------------------------------------- records

ReviewRecord padding_record() {
  ReviewRecord r;
  r.review_id = "<pad>";
  r.review_tokens = {Vocabulary::kPad};
  r.rating = 0;
  return r;
}

ReviewRecord tokenize_record(const RawReview& raw, const Vocabulary& vocab,
                             const TokenLimits& limits) {
  ReviewRecord r;
  r.review_id = raw.review_id;
  r.customer_id = raw.customer_id;
  r.product_id = raw.product_id;
  r.rating = raw.rating;
  r.timestamp = raw.timestamp;
  r.review_tokens = vocab.encode(raw.review_text);
  if (static_cast<int>(r.review_tokens.size()) > limits.max_review) {
    r.review_tokens.resize(static_cast<size_t>(limits.max_review));
  }
  r.summary_tokens = vocab.encode(raw.summary);
  const int max_summary = std::max(0, limits.max_summary - 1);
  if (static_cast<int>(r.summary_tokens.size()) > max_summary) {
    r.summary_tokens.resize(static_cast<size_t>(max_summary));
  }
  return r;
}

HistoryIndex build_history_index(const std::vector<ReviewRecord>& records) {
  HistoryIndex idx;
  for (int i = 0; i < static_cast<int>(records.size()); ++i) {
    idx.by_customer[records[static_cast<size_t>(i)].customer_id].push_back(i);
    idx.by_product[records[static_cast<size_t>(i)].product_id].push_back(i);
  }
  auto order = [&](int a, int b) {
    return history_before(records[static_cast<size_t>(a)], records[static_cast<size_t>(b)]);
  };
  for (auto& [_, v] : idx.by_customer) std::sort(v.begin(), v.end(), order);
  for (auto& [_, v] : idx.by_product) std::sort(v.begin(), v.end(), order);
  return idx;
}

namespace {

void fill_side(const std::map<std::string, std::vector<int>>& by_entity, const std::string& key,
               const std::vector<ReviewRecord>& records, int target, int k,
               std::vector<int>& slots, std::vector<uint8_t>& mask) {
  std::vector<int> picked;
  auto it = by_entity.find(key);
  if (it != by_entity.end()) {
    const auto& t = records[static_cast<size_t>(target)];
    for (int i : it->second) {
      if (i == target) continue;
      const auto& r = records[static_cast<size_t>(i)];
      if (r.review_id == t.review_id || r.timestamp >= t.timestamp) continue;
      picked.push_back(i);
    }
  }
  if (static_cast<int>(picked.size()) > k) {
    picked.erase(picked.begin(), picked.end() - k);
  }
  const size_t pad = static_cast<size_t>(k) - picked.size();
  slots.assign(pad, -1);
  mask.assign(pad, 0);
  for (int i : picked) {
    slots.push_back(i);
    mask.push_back(1);
  }
}

}  // namespace

HistoryWindow fetch_history(const HistoryIndex& index, const std::vector<ReviewRecord>& records,
                            int target, int k) {
  if (k < 1) throw std::invalid_argument("fetch_history: k must be >= 1");
  const auto& t = records.at(static_cast<size_t>(target));
  HistoryWindow w;
  fill_side(index.by_customer, t.customer_id, records, target, k, w.customer, w.customer_mask);
  fill_side(index.by_product, t.product_id, records, target, k, w.product, w.product_mask);
  return w;
}

// ---------------------------------------------------------------- dataset

EntityTable::EntityTable(std::vector<std::string> ids) : ids_(std::move(ids)) {
  for (size_t i = 0; i < ids_.size(); ++i) rows_.emplace(ids_[i], static_cast<int>(i) + 1);
}

int EntityTable::lookup(const std::string& id) const {
  auto it = rows_.find(id);
  return it == rows_.end() ? 0 : it->second;
}

SplitSizes default_split_sizes(int n_examples) {
  SplitSizes s;
  s.val = static_cast<int>(std::lround(n_examples * 8000.0 / 120296.0));
  s.test = s.val;
  s.train = n_examples - s.val - s.test;
  return s;
}

const ReviewRecord& Dataset::record(int index) const {
  static const ReviewRecord kPadding = padding_record();
  if (index < 0) return kPadding;
  return records.at(static_cast<size_t>(index));
}

std::vector<int> permutation(int n, uint64_t seed) {
  std::vector<int> p(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
    std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(j)]);
  }
  return p;
}

Dataset build_dataset(const std::vector<RawReview>& raw, const DatasetConfig& config) {
  Dataset d;
  d.config = config;
  d.vocab = build_vocab(raw, config.vocab_size, config.min_freq);
  d.records.reserve(raw.size());
  for (const auto& r : raw) d.records.push_back(tokenize_record(r, d.vocab, config.limits));
  const HistoryIndex index = build_history_index(d.records);

  std::vector<TrainingExample> all;
  for (int i = 0; i < static_cast<int>(d.records.size()); ++i) {
    if (d.records[static_cast<size_t>(i)].summary_tokens.empty()) continue;
    all.push_back({i, fetch_history(index, d.records, i, config.k)});
  }

  SplitSizes sizes = default_split_sizes(static_cast<int>(all.size()));
  if (config.val_size >= 0) sizes.val = config.val_size;
  if (config.test_size >= 0) sizes.test = config.test_size;
  if (sizes.val + sizes.test > static_cast<int>(all.size())) {
    throw InputError("split sizes exceed the number of examples");
  }
  sizes.train = static_cast<int>(all.size()) - sizes.val - sizes.test;
  const auto perm = permutation(static_cast<int>(all.size()), config.seed);
  for (int i = 0; i < static_cast<int>(perm.size()); ++i) {
    auto& ex = all[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    if (i < sizes.train) {
      d.train.push_back(ex);
    } else if (i < sizes.train + sizes.val) {
      d.val.push_back(ex);
    } else {
      d.test.push_back(ex);
    }
  }
  // Keep each split in record order so caches read naturally.
  auto by_target = [](const TrainingExample& a, const TrainingExample& b) {
    return a.target < b.target;
  };
  std::sort(d.train.begin(), d.train.end(), by_target);
  std::sort(d.val.begin(), d.val.end(), by_target);
  std::sort(d.test.begin(), d.test.end(), by_target);

  std::vector<std::string> customers;
  std::vector<std::string> products;
  for (const auto& ex : d.train) {
    const auto& r = d.records[static_cast<size_t>(ex.target)];
    customers.push_back(r.customer_id);
    products.push_back(r.product_id);
  }
  auto uniq = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(customers);
  uniq(products);
  d.customers = EntityTable(std::move(customers));
  d.products = EntityTable(std::move(products));
  return d;
}

void rewindow_histories(Dataset& data, int k) {
  if (k < 1) throw InputError("history count k must be >= 1");
  if (k == data.config.k) return;
  const HistoryIndex index = build_history_index(data.records);
  for (auto* split : {&data.train, &data.val, &data.test}) {
    for (auto& ex : *split) ex.history = fetch_history(index, data.records, ex.target, k);
  }
  data.config.k = k;
}

std::string config_hash(const DatasetConfig& c) {
  std::ostringstream ss;
  ss << "vocab_size=" << c.vocab_size << ";min_freq=" << c.min_freq << ";k=" << c.k
     << ";max_review=" << c.limits.max_review << ";max_summary=" << c.limits.max_summary
     << ";seed=" << c.seed << ";val=" << c.val_size << ";test=" << c.test_size;
  return fnv1a_hex(ss.str());
}

// ---------------------------------------------------------------- cache

namespace {

json example_json(const TrainingExample& ex) {
  return json{{"target", ex.target},
              {"customer", ex.history.customer},
              {"product", ex.history.product},
              {"customer_mask", ex.history.customer_mask},
              {"product_mask", ex.history.product_mask}};
}

TrainingExample example_from(const json& j) {
  TrainingExample ex;
  ex.target = j.at("target").get<int>();
  ex.history.customer = j.at("customer").get<std::vector<int>>();
  ex.history.product = j.at("product").get<std::vector<int>>();
  ex.history.customer_mask = j.at("customer_mask").get<std::vector<uint8_t>>();
  ex.history.product_mask = j.at("product_mask").get<std::vector<uint8_t>>();
  return ex;
}

}  // namespace

void save_cache(const Dataset& d, const std::filesystem::path& path) {
  json j;
  j["version"] = Dataset::kVersion;
  j["config_hash"] = config_hash(d.config);
  j["config"] = {{"vocab_size", d.config.vocab_size},   {"min_freq", d.config.min_freq},
                 {"k", d.config.k},                     {"max_review", d.config.limits.max_review},
                 {"max_summary", d.config.limits.max_summary}, {"seed", d.config.seed},
                 {"val_size", d.config.val_size},       {"test_size", d.config.test_size}};
  j["vocab"] = d.vocab.tokens();
  j["customers"] = d.customers.ids();
  j["products"] = d.products.ids();
  json recs = json::array();
  for (const auto& r : d.records) {
    recs.push_back({{"id", r.review_id},
                    {"customer", r.customer_id},
                    {"product", r.product_id},
                    {"review", r.review_tokens},
                    {"summary", r.summary_tokens},
                    {"rating", r.rating},
                    {"time", r.timestamp}});
  }
  j["records"] = std::move(recs);
  for (const char* split : {"train", "val", "test"}) {
    const auto& v = std::string(split) == "train" ? d.train
                    : std::string(split) == "val" ? d.val
                                                  : d.test;
    json arr = json::array();
    for (const auto& ex : v) arr.push_back(example_json(ex));
    j[split] = std::move(arr);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write cache: " + path.string());
  out << j.dump() << '\n';
}

Dataset load_cache(const std::filesystem::path& path, const std::string& expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read cache: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InputError("corrupt cache: " + path.string());
  if (j.value("version", "") != Dataset::kVersion) {
    throw InputError("cache version mismatch in " + path.string());
  }
  if (!expected_hash.empty() && j.value("config_hash", "") != expected_hash) {
    throw InputError("cache config hash mismatch in " + path.string());
  }
  Dataset d;
  const auto& c = j.at("config");
  d.config.vocab_size = c.at("vocab_size").get<int>();
  d.config.min_freq = c.at("min_freq").get<int>();
  d.config.k = c.at("k").get<int>();
  d.config.limits.max_review = c.at("max_review").get<int>();
  d.config.limits.max_summary = c.at("max_summary").get<int>();
  d.config.seed = c.at("seed").get<uint64_t>();
  d.config.val_size = c.at("val_size").get<int>();
  d.config.test_size = c.at("test_size").get<int>();
  d.vocab = Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  d.customers = EntityTable(j.at("customers").get<std::vector<std::string>>());
  d.products = EntityTable(j.at("products").get<std::vector<std::string>>());
  for (const auto& r : j.at("records")) {
    ReviewRecord rec;
    rec.review_id = r.at("id").get<std::string>();
    rec.customer_id = r.at("customer").get<std::string>();
    rec.product_id = r.at("product").get<std::string>();
    rec.review_tokens = r.at("review").get<std::vector<int>>();
    rec.summary_tokens = r.at("summary").get<std::vector<int>>();
    rec.rating = r.at("rating").get<int>();
    rec.timestamp = r.at("time").get<int64_t>();
    d.records.push_back(std::move(rec));
  }
  for (const auto& e : j.at("train")) d.train.push_back(example_from(e));
  for (const auto& e : j.at("val")) d.val.push_back(example_from(e));
  for (const auto& e : j.at("test")) d.test.push_back(example_from(e));
  return d;
}

CorpusStats corpus_stats(const Dataset& d) {
  CorpusStats s;
  s.records = d.records.size();
  s.train = d.train.size();
  s.val = d.val.size();
  s.test = d.test.size();
  s.examples = s.train + s.val + s.test;
  double review_words = 0.0;
  double summary_words = 0.0;
  for (const auto& r : d.records) {
    review_words += static_cast<double>(r.review_tokens.size());
    summary_words += static_cast<double>(r.summary_tokens.size());
    if (r.rating >= 1 && r.rating <= 5) ++s.rating_histogram[static_cast<size_t>(r.rating - 1)];
  }
  if (s.records > 0) {
    s.avg_review_words = review_words / static_cast<double>(s.records);
    s.avg_summary_words = summary_words / static_cast<double>(s.records);
  }
  return s;
}

// ---------------------------------------------------------------- batching

Batch make_batch(const Dataset& data, const std::vector<TrainingExample>& split,
                 std::vector<int> example_ids) {
  Batch b;
  b.examples = std::move(example_ids);
  size_t max_in = 0;
  size_t max_dec = 0;
  for (int e : b.examples) {
    const auto& r = data.record(split.at(static_cast<size_t>(e)).target);
    max_in = std::max(max_in, r.review_tokens.size() + 1);
    max_dec = std::max(max_dec, r.summary_tokens.size() + 1);
  }
  for (int e : b.examples) {
    const auto& r = data.record(split[static_cast<size_t>(e)].target);
    std::vector<int> in{Vocabulary::kCls};
    in.insert(in.end(), r.review_tokens.begin(), r.review_tokens.end());
    std::vector<uint8_t> in_mask(in.size(), 1);
    in.resize(max_in, Vocabulary::kPad);
    in_mask.resize(max_in, 0);

    std::vector<int> dec{Vocabulary::kBos};
    dec.insert(dec.end(), r.summary_tokens.begin(), r.summary_tokens.end());
    std::vector<int> gold(r.summary_tokens.begin(), r.summary_tokens.end());
    gold.push_back(Vocabulary::kEos);
    std::vector<uint8_t> dec_mask(dec.size(), 1);
    dec.resize(max_dec, Vocabulary::kPad);
    gold.resize(max_dec, Vocabulary::kPad);
    dec_mask.resize(max_dec, 0);

    b.input_tokens.push_back(std::move(in));
    b.input_mask.push_back(std::move(in_mask));
    b.decoder_input.push_back(std::move(dec));
    b.decoder_gold.push_back(std::move(gold));
    b.decoder_mask.push_back(std::move(dec_mask));
  }
  return b;
}

std::vector<Batch> make_batches(const Dataset& data, const std::vector<TrainingExample>& split,
                                int batch_size, uint64_t shuffle_seed) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  const auto order = permutation(static_cast<int>(split.size()), shuffle_seed);
  std::vector<Batch> out;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), i + static_cast<size_t>(batch_size));
    out.push_back(make_batch(data, split, std::vector<int>(order.begin() + static_cast<long>(i),
                                                           order.begin() + static_cast<long>(end))));
  }
  return out;
}

// ---------------------------------------------------------------- synthetic

std::vector<RawReview> synthetic_reviews(int n_records, int n_customers, int n_products,
                                         uint64_t seed) {
  static const std::vector<std::vector<std::string>> kAdjectives = {
      {"awful", "broken", "terrible", "useless"},
      {"poor", "flimsy", "disappointing", "weak"},
      {"okay", "average", "decent", "fine"},
      {"good", "nice", "solid", "fun"},
      {"great", "excellent", "perfect", "amazing"}};
  static const std::vector<std::string> kNouns = {"puzzle", "robot", "doll", "train",
                                                  "blocks", "kite",  "drone", "car"};
  static const std::vector<std::string> kSignatures = {"honestly", "overall", "basically",
                                                       "frankly",  "truly",   "really",
                                                       "simply",   "clearly"};
  static const std::vector<std::string> kFillers = {
      "my kids played with it", "it arrived on time", "the box was small",
      "bought it as a gift",    "my nephew tried it", "the colors are bright"};

  std::mt19937_64 rng(seed);
  auto pick = [&rng](size_t n) { return static_cast<size_t>(rng() % n); };
  std::vector<RawReview> out;
  for (int i = 0; i < n_records; ++i) {
    const int c = i % n_customers;
    const int p = (i / n_customers) % n_products;
    const int rating = 1 + static_cast<int>(pick(5));
    const auto& adj = kAdjectives[static_cast<size_t>(rating - 1)];
    const std::string& a1 = adj[pick(adj.size())];
    const std::string& a2 = adj[pick(adj.size())];
    const std::string& noun = kNouns[static_cast<size_t>(p) % kNouns.size()];
    const std::string& sig = kSignatures[static_cast<size_t>(c) % kSignatures.size()];
    const std::string& filler = kFillers[pick(kFillers.size())];

    RawReview r;
    r.review_id = line_id(static_cast<size_t>(i + 1));
    r.customer_id = "C" + std::to_string(c);
    r.product_id = "P" + std::to_string(p);
    r.rating = rating;
    r.timestamp = 1600000000 + static_cast<int64_t>(i) * 86400 + static_cast<int64_t>(pick(3600));
    r.review_text = sig + ", this " + noun + " is " + a1 + " and " + a2 + ". " + filler + ".";
    r.summary = sig + " " + a1 + " " + noun;
    out.push_back(std::move(r));
  }
  return out;
}

std::string to_jsonl(const std::vector<RawReview>& records) {
  std::string out;
  for (const auto& r : records) {
    json j{{"reviewID", r.review_id},          {"reviewerID", r.customer_id},
           {"asin", r.product_id},             {"reviewText", r.review_text},
           {"summary", r.summary},             {"overall", r.rating},
           {"unixReviewTime", r.timestamp}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace revsum
