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


#include "revsum/evalkit.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "revsum/corpus.hpp"
#include "revsum/error.hpp"

namespace revsum {

ClassificationReport classification_report(std::span<const int> predictions,
                                           std::span<const int> golds) {
  if (predictions.size() != golds.size()) {
    throw InputError("classification_report: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(golds.size()) + " gold labels");
  }
  ClassificationReport rep;
  int correct = 0;
  for (size_t i = 0; i < golds.size(); ++i) {
    const int g = golds[i];
    const int p = predictions[i];
    if (g < 1 || g > kNumClasses || p < 1 || p > kNumClasses) {
      throw InputError("classification_report: label outside [1,5] at index " +
                       std::to_string(i));
    }
    ++rep.confusion[size_t(g - 1)][size_t(p - 1)];
    correct += g == p;
  }
  std::array<int, kNumClasses> predicted{};
  for (int g = 0; g < kNumClasses; ++g) {
    for (int p = 0; p < kNumClasses; ++p) {
      rep.support[size_t(g)] += rep.confusion[size_t(g)][size_t(p)];
      predicted[size_t(p)] += rep.confusion[size_t(g)][size_t(p)];
    }
  }
  double recall_sum = 0.0;
  double f1_sum = 0.0;
  int present = 0;
  int counted = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double tp = rep.confusion[size_t(c)][size_t(c)];
    const auto i = size_t(c);
    rep.recall[i] = rep.support[i] > 0 ? tp / rep.support[i] : 0.0;
    rep.precision[i] = predicted[i] > 0 ? tp / predicted[i] : 0.0;
    const double pr = rep.precision[i] + rep.recall[i];
    rep.f1[i] = pr > 0.0 ? 2.0 * rep.precision[i] * rep.recall[i] / pr : 0.0;
    if (rep.support[i] > 0) {
      recall_sum += rep.recall[i];
      ++present;
    }
    if (rep.support[i] > 0 || predicted[i] > 0) {
      f1_sum += rep.f1[i];
      ++counted;
    }
  }
  if (!golds.empty()) rep.accuracy = static_cast<double>(correct) / golds.size();
  if (present > 0) rep.balanced_accuracy = recall_sum / present;
  if (counted > 0) rep.macro_f1 = f1_sum / counted;
  return rep;
}

RougeScore corpus_rouge(const std::vector<std::vector<std::string>>& candidates,
                        const std::vector<std::vector<std::string>>& references) {
  if (candidates.size() != references.size()) {
    throw InputError("corpus_rouge: candidate and reference counts differ");
  }
  RougeScore total;
  if (candidates.empty()) return total;
  auto add = [](RougeTriple& acc, const RougeTriple& x) {
    acc.recall += x.recall;
    acc.precision += x.precision;
    acc.f1 += x.f1;
  };
  for (size_t i = 0; i < candidates.size(); ++i) {
    const RougeScore s = rouge<std::string>(candidates[i], references[i]);
    add(total.rouge1, s.rouge1);
    add(total.rouge2, s.rouge2);
    add(total.rougel, s.rougel);
  }
  const double n = static_cast<double>(candidates.size());
  for (RougeTriple* t : {&total.rouge1, &total.rouge2, &total.rougel}) {
    t->recall /= n;
    t->precision /= n;
    t->f1 /= n;
  }
  return total;
}

namespace {

std::map<std::string, std::string> read_keyed(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    std::string id = tab == std::string::npos ? line : line.substr(0, tab);
    std::string value = tab == std::string::npos ? "" : line.substr(tab + 1);
    if (!out.emplace(id, value).second) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": duplicate id " + id);
    }
  }
  return out;
}

void check_aligned(const std::map<std::string, std::string>& a, const std::string& a_name,
                   const std::map<std::string, std::string>& b, const std::string& b_name) {
  std::vector<std::string> offenders;
  for (const auto& [id, _] : a) {
    if (!b.count(id)) offenders.push_back(id + " (missing from " + b_name + ")");
  }
  for (const auto& [id, _] : b) {
    if (!a.count(id)) offenders.push_back(id + " (missing from " + a_name + ")");
  }
  if (!offenders.empty()) {
    std::string msg = "misaligned ids:";
    for (const auto& o : offenders) msg += " " + o;
    throw InputError(msg);
  }
}

int parse_label(const std::string& s, const std::string& id) {
  try {
    size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("bad rating label '" + s + "' for id " + id);
}

}  // namespace

EvalReport evaluate_run(const std::filesystem::path& decoded, const std::filesystem::path& refs,
                        const std::filesystem::path& predictions,
                        const std::filesystem::path& golds) {
  const auto cand = read_keyed(decoded);
  const auto ref = read_keyed(refs);
  const auto pred = read_keyed(predictions);
  const auto gold = read_keyed(golds);
  check_aligned(cand, decoded.filename().string(), ref, refs.filename().string());
  check_aligned(pred, predictions.filename().string(), gold, golds.filename().string());

  EvalReport rep;
  std::vector<std::vector<std::string>> c_tok;
  std::vector<std::vector<std::string>> r_tok;
  for (const auto& [id, text] : ref) {
    r_tok.push_back(tokenize(text));
    c_tok.push_back(tokenize(cand.at(id)));
  }
  rep.rouge = corpus_rouge(c_tok, r_tok);
  rep.examples = ref.size();
  std::vector<int> p;
  std::vector<int> g;
  for (const auto& [id, label] : gold) {
    g.push_back(parse_label(label, id));
    p.push_back(parse_label(pred.at(id), id));
  }
  rep.classification = classification_report(p, g);
  return rep;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["examples"] = r.examples;
  j["rouge1_r"] = r.rouge.rouge1.recall;
  j["rouge1_p"] = r.rouge.rouge1.precision;
  j["rouge1_f"] = r.rouge.rouge1.f1;
  j["rouge2_r"] = r.rouge.rouge2.recall;
  j["rouge2_p"] = r.rouge.rouge2.precision;
  j["rouge2_f"] = r.rouge.rouge2.f1;
  j["rougel_r"] = r.rouge.rougel.recall;
  j["rougel_p"] = r.rouge.rougel.precision;
  j["rougel_f"] = r.rouge.rougel.f1;
  j["accuracy"] = r.classification.accuracy;
  j["macro_f1"] = r.classification.macro_f1;
  j["balanced_acc"] = r.classification.balanced_accuracy;
  j["per_class_precision"] = r.classification.precision;
  j["per_class_recall"] = r.classification.recall;
  j["per_class_f1"] = r.classification.f1;
  j["confusion"] = r.classification.confusion;
  return j.dump(2) + "\n";
}

}  // namespace revsum
