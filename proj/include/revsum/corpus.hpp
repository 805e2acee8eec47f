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


#ifndef REVSUM_CORPUS_HPP_
#define REVSUM_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace revsum {

// One line of an Amazon-style review dump, before tokenization.
struct RawReview {
  std::string review_id;
  std::string customer_id;
  std::string product_id;
  std::string review_text;
  std::string summary;
  int rating = 0;
  int64_t timestamp = 0;
};

struct LoadResult {
  std::vector<RawReview> records;
  size_t skipped = 0;
};

// Reads one JSON object per line with the fields reviewText, summary, overall,
// reviewerID, asin and unixReviewTime. Malformed lines, empty reviews and
// ratings outside [1, 5] are skipped and counted. Records without a
// "reviewID" field get "r<line number>" (zero padded, so ids sort in file
// order). Throws InputError if the file cannot be read.
LoadResult load_reviews(const std::filesystem::path& path);
LoadResult parse_reviews(std::string_view text);

// Lowercase; whitespace and ASCII punctuation separate tokens and are dropped.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kCls = 4;
  static constexpr int kNumReserved = 5;

  Vocabulary();
  // Rebuilds from an id-ordered token list whose first entries are the
  // reserved tokens.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::string_view text) const;
  // Joins tokens with single spaces. Stops at EOS; PAD/BOS/CLS are skipped.
  std::string decode(const std::vector<int>& ids) const;

 private:
  void add(std::string token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Tokens from review texts and summaries with frequency >= min_freq, sorted by
// descending frequency then lexicographically, truncated so the whole
// vocabulary holds at most max_size entries. Throws InputError when
// max_size < 5.
Vocabulary build_vocab(const std::vector<RawReview>& records, int max_size, int min_freq);

struct ReviewRecord {
  std::string review_id;
  std::string customer_id;
  std::string product_id;
  std::vector<int> review_tokens;
  std::vector<int> summary_tokens;
  int rating = 0;  // 0 only for padding records
  int64_t timestamp = 0;

  bool is_padding() const { return rating == 0; }
};

// Stand-in for a missing history slot.
ReviewRecord padding_record();

struct TokenLimits {
  int max_review = 128;
  int max_summary = 24;  // includes the EOS the decoder must emit
};

ReviewRecord tokenize_record(const RawReview& raw, const Vocabulary& vocab,
                             const TokenLimits& limits);

// customer_id / product_id -> record indices sorted by (timestamp, review_id).
struct HistoryIndex {
  std::map<std::string, std::vector<int>> by_customer;
  std::map<std::string, std::vector<int>> by_product;
};

HistoryIndex build_history_index(const std::vector<ReviewRecord>& records);

// Record indices refer to the record table the index was built from; -1 marks
// a padding slot. Histories are left-padded and ascending in time.
struct HistoryWindow {
  std::vector<int> customer;
  std::vector<int> product;
  std::vector<uint8_t> customer_mask;
  std::vector<uint8_t> product_mask;
};

// The k most recent reviews strictly before the target's timestamp by the same
// customer (resp. for the same product), excluding the target itself.
HistoryWindow fetch_history(const HistoryIndex& index, const std::vector<ReviewRecord>& records,
                            int target, int k);

struct TrainingExample {
  int target = -1;
  HistoryWindow history;
};

// Maps entity ids to embedding rows; row 0 is the out-of-vocabulary bucket.
class EntityTable {
 public:
  EntityTable() = default;
  explicit EntityTable(std::vector<std::string> ids);
  int lookup(const std::string& id) const;
  int size() const { return static_cast<int>(ids_.size()) + 1; }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> rows_;
};

struct DatasetConfig {
  int vocab_size = 20000;
  int min_freq = 1;
  int k = 3;
  TokenLimits limits;
  uint64_t seed = 13;
  // Negative sizes request the default proportions (8000 of every 120296
  // examples each for validation and test).
  int val_size = -1;
  int test_size = -1;
};

struct SplitSizes {
  int train = 0;
  int val = 0;
  int test = 0;
};

SplitSizes default_split_sizes(int n_examples);

struct Dataset {
  static constexpr const char* kVersion = "revsum-cache/1";

  DatasetConfig config;
  Vocabulary vocab;
  std::vector<ReviewRecord> records;
  EntityTable customers;
  EntityTable products;
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> val;
  std::vector<TrainingExample> test;

  const ReviewRecord& record(int index) const;  // padding record for -1
};

// Tokenizes, builds the vocabulary and history index, emits one example per
// record with a non-empty summary and splits them with the configured seed.
Dataset build_dataset(const std::vector<RawReview>& raw, const DatasetConfig& config);

// Re-fetches every example's history window with a new count k.
void rewindow_histories(Dataset& data, int k);

std::string config_hash(const DatasetConfig& config);

// JSON cache with the vocabulary embedded. load_cache throws InputError when
// the version tag differs or when expected_hash is non-empty and differs.
void save_cache(const Dataset& data, const std::filesystem::path& path);
Dataset load_cache(const std::filesystem::path& path, const std::string& expected_hash = "");

struct CorpusStats {
  size_t records = 0;
  size_t examples = 0;
  size_t train = 0;
  size_t val = 0;
  size_t test = 0;
  double avg_review_words = 0.0;
  double avg_summary_words = 0.0;
  std::vector<size_t> rating_histogram = std::vector<size_t>(5, 0);
};

CorpusStats corpus_stats(const Dataset& data);

// Padded view over a group of examples. Review rows carry CLS first; summary
// rows carry BOS + tokens as decoder input and tokens + EOS as the gold.
struct Batch {
  std::vector<int> examples;  // indices into the split the batch came from
  std::vector<std::vector<int>> input_tokens;
  std::vector<std::vector<uint8_t>> input_mask;
  std::vector<std::vector<int>> decoder_input;
  std::vector<std::vector<int>> decoder_gold;
  std::vector<std::vector<uint8_t>> decoder_mask;
};

Batch make_batch(const Dataset& data, const std::vector<TrainingExample>& split,
                 std::vector<int> example_ids);

// Deterministic permutation of [0, n) for a seed (Fisher-Yates over mt19937_64).
std::vector<int> permutation(int n, uint64_t seed);

std::vector<Batch> make_batches(const Dataset& data, const std::vector<TrainingExample>& split,
                                int batch_size, uint64_t shuffle_seed);

// Templated reviews with rating-correlated vocabulary for smoke tests and the
// overfit experiment. Customers write with a personal signature word,
// products have a fixed noun and the summary is derived from both.
std::vector<RawReview> synthetic_reviews(int n_records, int n_customers, int n_products,
                                         uint64_t seed);
std::string to_jsonl(const std::vector<RawReview>& records);

}  // namespace revsum

#endif  // REVSUM_CORPUS_HPP_
