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


#ifndef REVSUM_EVALKIT_HPP_
#define REVSUM_EVALKIT_HPP_

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace revsum {

struct RougeTriple {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

inline RougeTriple make_rouge(double overlap, double ref_count, double cand_count) {
  RougeTriple t;
  if (ref_count <= 0.0 || cand_count <= 0.0) return t;
  t.recall = overlap / ref_count;
  t.precision = overlap / cand_count;
  t.f1 = t.precision + t.recall > 0.0
             ? 2.0 * t.precision * t.recall / (t.precision + t.recall)
             : 0.0;
  return t;
}

// Clipped n-gram overlap. Empty candidate or reference scores zero.
template <typename Token>
RougeTriple rouge_n(std::span<const Token> candidate, std::span<const Token> reference, int n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
  auto grams = [n](std::span<const Token> seq) {
    std::map<std::vector<Token>, int> counts;
    for (size_t i = 0; i + static_cast<size_t>(n) <= seq.size(); ++i) {
      ++counts[std::vector<Token>(seq.begin() + static_cast<long>(i),
                                  seq.begin() + static_cast<long>(i) + n)];
    }
    return counts;
  };
  const auto c = grams(candidate);
  const auto r = grams(reference);
  double overlap = 0.0;
  double ref_total = 0.0;
  double cand_total = 0.0;
  for (const auto& [g, cnt] : r) {
    ref_total += cnt;
    auto it = c.find(g);
    if (it != c.end()) overlap += std::min(cnt, it->second);
  }
  for (const auto& [g, cnt] : c) cand_total += cnt;
  return make_rouge(overlap, ref_total, cand_total);
}

template <typename Token>
size_t lcs_length(std::span<const Token> a, std::span<const Token> b) {
  std::vector<size_t> prev(b.size() + 1, 0);
  std::vector<size_t> cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <typename Token>
RougeTriple rouge_l(std::span<const Token> candidate, std::span<const Token> reference) {
  const double l = static_cast<double>(lcs_length(candidate, reference));
  return make_rouge(l, static_cast<double>(reference.size()),
                    static_cast<double>(candidate.size()));
}

struct RougeScore {
  RougeTriple rouge1;
  RougeTriple rouge2;
  RougeTriple rougel;
};

template <typename Token>
RougeScore rouge(std::span<const Token> candidate, std::span<const Token> reference) {
  return {rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2),
          rouge_l(candidate, reference)};
}

inline constexpr int kNumClasses = 5;

// Labels are ratings 1..5. Balanced accuracy averages recall over classes
// present in the gold labels; macro-F1 averages F1 over classes present in
// gold or predictions, a class absent from gold scoring 0.
struct ClassificationReport {
  std::array<std::array<int, kNumClasses>, kNumClasses> confusion{};  // [gold][pred]
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  std::array<double, kNumClasses> f1{};
  std::array<int, kNumClasses> support{};
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double balanced_accuracy = 0.0;
};

ClassificationReport classification_report(std::span<const int> predictions,
                                           std::span<const int> golds);

struct EvalReport {
  RougeScore rouge;
  ClassificationReport classification;
  size_t examples = 0;
};

// Mean of per-example ROUGE over aligned (candidate, reference) token lists.
RougeScore corpus_rouge(const std::vector<std::vector<std::string>>& candidates,
                        const std::vector<std::vector<std::string>>& references);

// Line formats: "<id>\t<summary text>" and "<id>\t<rating>". Records are
// aligned by id, so file order does not matter. Throws InputError listing ids
// that are missing from either side.
EvalReport evaluate_run(const std::filesystem::path& decoded, const std::filesystem::path& refs,
                        const std::filesystem::path& predictions,
                        const std::filesystem::path& golds);

// Flat JSON object; the headline keys are rouge1_f, rouge2_f, rougel_f,
// macro_f1 and balanced_acc.
std::string report_json(const EvalReport& report);

}  // namespace revsum

#endif  // REVSUM_EVALKIT_HPP_
