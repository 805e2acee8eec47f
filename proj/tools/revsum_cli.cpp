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


// revsum command-line entry point: prepare, train, generate, evaluate, ablate
// and synth. Exit codes: 0 success, 2 usage or input error, 3 runtime abort.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "revsum/corpus.hpp"
#include "revsum/error.hpp"
#include "revsum/evalkit.hpp"
#include "revsum/hashing.hpp"
#include "revsum/run_config.hpp"
#include "revsum/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace revsum {
namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

json file_entry(const fs::path& path, const fs::path& base = {}) {
  const std::string shown = base.empty() ? path.string() : fs::relative(path, base).generic_string();
  return {{"path", shown}, {"git_blob", git_blob_hash_file(path)}};
}

void write_manifest(const fs::path& out, const std::string& command, const json& inputs,
                    const std::string& config_hash, const std::vector<fs::path>& outputs,
                    const json& extra = json::object()) {
  json j;
  j["command"] = command;
  j["inputs"] = inputs;
  j["config_hash"] = config_hash;
  json outs = json::array();
  for (const auto& p : outputs) outs.push_back(file_entry(p, out));
  j["outputs"] = outs;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::ofstream(out / "manifest.json") << j.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

// A prepared dataset is either the cache file or the directory holding it.
fs::path cache_path(const fs::path& data) {
  return fs::is_directory(data) ? data / "dataset.json" : data;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw InputError(what + " not found: " + p.string());
}

std::string tsv(const std::vector<std::string>& ids, const std::vector<std::string>& values) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) out += ids[i] + "\t" + values[i] + "\n";
  return out;
}

template <typename T>
std::vector<std::string> strings(const std::vector<T>& v) {
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(std::to_string(x));
  return out;
}

const std::vector<TrainingExample>& split_of(const Dataset& d, const std::string& name) {
  if (name == "train") return d.train;
  if (name == "val") return d.val;
  return d.test;
}

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
  std::string input;
  std::string out;
  int vocab_size = 20000;
  uint64_t seed = 13;
  int k = 3;
  int max_review = 128;
  int max_summary = 24;
  int val_size = -1;
  int test_size = -1;
};

int cmd_prepare(const PrepareArgs& a) {
  require_file(a.input, "input");
  const LoadResult raw = load_reviews(a.input);
  DatasetConfig dc;
  dc.vocab_size = a.vocab_size;
  dc.seed = a.seed;
  dc.k = a.k;
  dc.limits.max_review = a.max_review;
  dc.limits.max_summary = a.max_summary;
  dc.val_size = a.val_size;
  dc.test_size = a.test_size;
  const Dataset data = build_dataset(raw.records, dc);

  const fs::path out(a.out);
  fs::create_directories(out);
  save_cache(data, out / "dataset.json");
  const CorpusStats s = corpus_stats(data);
  json stats;
  stats["records"] = s.records;
  stats["skipped"] = raw.skipped;
  stats["examples"] = s.examples;
  stats["train"] = s.train;
  stats["val"] = s.val;
  stats["test"] = s.test;
  stats["vocab_size"] = data.vocab.size();
  stats["customers"] = data.customers.ids().size();
  stats["products"] = data.products.ids().size();
  stats["avg_review_words"] = s.avg_review_words;
  stats["avg_summary_words"] = s.avg_summary_words;
  stats["rating_histogram"] = s.rating_histogram;
  write_text(out / "stats.json", stats.dump(2) + "\n");
  write_manifest(out, "prepare", json::array({file_entry(a.input)}), config_hash(dc),
                 {out / "dataset.json", out / "stats.json"});
  std::cout << "records " << s.records << " (skipped " << raw.skipped << "), examples "
            << s.examples << " (train " << s.train << ", val " << s.val << ", test " << s.test
            << ")\ncache " << git_blob_hash_file(out / "dataset.json") << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::vector<std::string> overrides;
};

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return parse_train_config("", overrides);
  require_file(path, "config");
  return load_train_config(path, overrides);
}

Dataset load_data(const std::string& data, int k) {
  const fs::path cache = cache_path(data);
  require_file(cache, "dataset cache");
  Dataset d = load_cache(cache);
  rewindow_histories(d, k);
  return d;
}

json train_inputs(const TrainArgs& a) {
  json inputs = json::array();
  if (!a.config.empty()) inputs.push_back(file_entry(a.config));
  inputs.push_back(file_entry(cache_path(a.data)));
  return inputs;
}

// Highest-step checkpoint in a run directory, or empty.
fs::path latest_checkpoint(const fs::path& run) {
  fs::path best;
  int best_step = -1;
  if (!fs::is_directory(run)) return best;
  for (const auto& e : fs::directory_iterator(run)) {
    if (e.path().extension() != ".ckpt") continue;
    int s = -1;
    try {
      s = std::stoi(e.path().stem().string());
    } catch (const std::exception&) {
      continue;
    }
    if (s > best_step) {
      best_step = s;
      best = e.path();
    }
  }
  return best;
}

int cmd_train(const TrainArgs& a) {
  const TrainConfig cfg = load_config(a.config, a.overrides);
  const Dataset data = load_data(a.data, cfg.k);
  Trainer trainer(cfg, data);
  const fs::path out(a.out);
  fs::create_directories(out);
  if (const fs::path ckpt = latest_checkpoint(out / trainer.config_hash()); !ckpt.empty()) {
    trainer.load_checkpoint(ckpt);
    std::cerr << "resuming from " << ckpt.string() << "\n";
  }
  const TrainState& st = trainer.run({.out_dir = out, .on_step = [](const StepRecord& r) {
    if (r.step % 100 == 0) std::cerr << r.to_json() << "\n";
  }});
  const fs::path run = out / trainer.config_hash();
  std::vector<fs::path> outputs;
  for (const auto& e : fs::directory_iterator(run)) {
    if (e.is_regular_file()) outputs.push_back(e.path());
  }
  std::sort(outputs.begin(), outputs.end());
  const int best = st.best_step >= 0 ? st.best_step : st.step;
  write_manifest(out, "train", train_inputs(a), trainer.config_hash(), outputs,
                 {{"run_dir", trainer.config_hash()},
                  {"best_checkpoint", trainer.config_hash() + "/" + std::to_string(best) + ".ckpt"}});
  std::cout << "run " << run.string() << "\nsteps " << st.step << "\nbest "
            << (run / (std::to_string(best) + ".ckpt")).string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  std::string strategy = "greedy";
  int beam_width = 4;
  int max_examples = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  require_file(a.ckpt, "checkpoint");
  const TrainConfig cfg = read_checkpoint_config(a.ckpt);
  const Dataset data = load_data(a.data, cfg.k);
  const LoadedModel m = load_model(a.ckpt, data);
  const DecodeStrategy strategy =
      a.strategy == "beam" ? DecodeStrategy::kBeam : DecodeStrategy::kGreedy;
  const Evaluation ev = evaluate_split(*m.model, data, split_of(data, a.split),
                                       apply_ablation(cfg.ablation), strategy,
                                       strategy == DecodeStrategy::kBeam ? a.beam_width : 1,
                                       a.max_examples);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_text(out / "summaries.tsv", tsv(ev.ids, ev.summaries));
  write_text(out / "references.tsv", tsv(ev.ids, ev.references));
  write_text(out / "predictions.tsv", tsv(ev.ids, strings(ev.predicted_ratings)));
  write_text(out / "golds.tsv", tsv(ev.ids, strings(ev.gold_ratings)));
  write_manifest(out, "generate",
                 json::array({file_entry(a.ckpt), file_entry(cache_path(a.data))}),
                 train_config_hash(cfg),
                 {out / "summaries.tsv", out / "references.tsv", out / "predictions.tsv",
                  out / "golds.tsv"},
                 {{"split", a.split}, {"strategy", a.strategy}, {"step", m.step}});
  std::cout << "examples " << ev.ids.size() << "\nrougel_f " << ev.rougel_f << "\nbalanced_acc "
            << ev.balanced_acc << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string decoded;
  std::string refs;
  std::string predictions;
  std::string golds;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  for (const auto& [p, what] : {std::pair{a.decoded, "decoded file"}, std::pair{a.refs, "reference file"},
                                std::pair{a.predictions, "prediction file"}, std::pair{a.golds, "gold file"}}) {
    require_file(p, what);
  }
  const EvalReport rep = evaluate_run(a.decoded, a.refs, a.predictions, a.golds);
  const std::string text = report_json(rep);
  std::cout << text << "\n";
  if (!a.out.empty()) {
    const fs::path out(a.out);
    fs::create_directories(out);
    write_text(out / "report.json", text + "\n");
    json inputs = json::array();
    for (const auto& p : {a.decoded, a.refs, a.predictions, a.golds}) inputs.push_back(file_entry(p));
    write_manifest(out, "evaluate", inputs, "", {out / "report.json"});
  }
  return 0;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  TrainArgs train;
  std::vector<std::string> variants;
  std::string split = "val";
  int max_examples = 0;
};

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
  return buf;
}

int cmd_ablate(const AblateArgs& a) {
  const TrainConfig base = load_config(a.train.config, a.train.overrides);
  std::vector<Ablation> rows = {base.ablation};
  for (const auto& v : a.variants) {
    Ablation extra = Ablation::parse(v);
    Ablation merged = base.ablation;
    merged.customer_reviews |= extra.customer_reviews;
    merged.product_reviews |= extra.product_reviews;
    merged.mixed |= extra.mixed;
    merged.contrastive |= extra.contrastive;
    merged.sentiment |= extra.sentiment;
    merged.sentiment_gate |= extra.sentiment_gate;
    merged.history_rating |= extra.history_rating;
    merged.graph |= extra.graph;
    merged.time_edges |= extra.time_edges;
    merged.rating_edges |= extra.rating_edges;
    merged.validate();
    const bool seen = std::any_of(rows.begin(), rows.end(),
                                  [&](const Ablation& r) { return r.label() == merged.label(); });
    if (!seen) rows.push_back(merged);
  }
  const Dataset data = load_data(a.train.data, base.k);
  const auto& split = split_of(data, a.split);
  if (split.empty()) throw InputError("split '" + a.split + "' is empty");

  const fs::path out(a.train.out);
  fs::create_directories(out);
  json grid = json::array();
  std::string table = "| Model | Rouge-1 | Rouge-2 | Rouge-L | B.Acc | M.F1 |\n|---|---|---|---|---|---|\n";
  std::vector<fs::path> outputs;
  for (const Ablation& ab : rows) {
    TrainConfig cfg = base;
    cfg.ablation = ab;
    Trainer trainer(cfg, data);
    const TrainState& st = trainer.run({.out_dir = out, .on_step = {}});
    const int best = st.best_step >= 0 ? st.best_step : st.step;
    const fs::path ckpt = out / trainer.config_hash() / (std::to_string(best) + ".ckpt");
    const LoadedModel m = load_model(ckpt, data);
    const Evaluation ev = evaluate_split(*m.model, data, split, trainer.wiring(),
                                         DecodeStrategy::kGreedy, 1, a.max_examples);
    std::vector<std::vector<std::string>> cand;
    std::vector<std::vector<std::string>> ref;
    for (size_t i = 0; i < ev.ids.size(); ++i) {
      cand.push_back(tokenize(ev.summaries[i]));
      ref.push_back(tokenize(ev.references[i]));
    }
    const RougeScore r = corpus_rouge(cand, ref);
    const ClassificationReport c = classification_report(ev.predicted_ratings, ev.gold_ratings);
    const bool no_cls = ab.sentiment;
    json row;
    row["model"] = ab.label();
    row["config_hash"] = trainer.config_hash();
    row["checkpoint"] = trainer.config_hash() + "/" + std::to_string(best) + ".ckpt";
    row["rouge1_f"] = r.rouge1.f1;
    row["rouge2_f"] = r.rouge2.f1;
    row["rougel_f"] = r.rougel.f1;
    row["balanced_acc"] = no_cls ? json(nullptr) : json(c.balanced_accuracy);
    row["macro_f1"] = no_cls ? json(nullptr) : json(c.macro_f1);
    grid.push_back(row);
    table += "| " + ab.label() + " | " + pct(r.rouge1.f1) + " | " + pct(r.rouge2.f1) + " | " +
             pct(r.rougel.f1) + " | " + (no_cls ? "-" : pct(c.balanced_accuracy)) + " | " +
             (no_cls ? "-" : pct(c.macro_f1)) + " |\n";
    std::cerr << "finished " << ab.label() << "\n";
  }
  write_text(out / "ablation.json", json({{"split", a.split}, {"rows", grid}}).dump(2) + "\n");
  write_text(out / "ablation.md", table);
  write_manifest(out, "ablate", train_inputs(a.train), train_config_hash(base),
                 {out / "ablation.json", out / "ablation.md"});
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  int records = 32;
  int customers = 8;
  int products = 4;
  uint64_t seed = 7;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  if (a.records < 1 || a.customers < 1 || a.products < 1) {
    throw InputError("records, customers and products must be >= 1");
  }
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_text(out, to_jsonl(synthetic_reviews(a.records, a.customers, a.products, a.seed)));
  std::cout << "wrote " << a.records << " records to " << out.string() << "\n";
  return 0;
}

}  // namespace
}  // namespace revsum

int main(int argc, char** argv) {
  using namespace revsum;
  CLI::App app{"revsum: review summarization with customer and product history graphs"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "Tokenize a review dump into a cached dataset");
  p->add_option("--input", prep.input, "JSON-lines review file")->required();
  p->add_option("--out", prep.out, "Output directory")->required();
  p->add_option("--vocab-size", prep.vocab_size, "Vocabulary size incl. reserved tokens")
      ->capture_default_str();
  p->add_option("--seed", prep.seed, "Split seed")->capture_default_str();
  p->add_option("--k", prep.k, "History reviews per side")->capture_default_str();
  p->add_option("--max-review", prep.max_review, "Review token cap")->capture_default_str();
  p->add_option("--max-summary", prep.max_summary, "Summary token cap incl. EOS")
      ->capture_default_str();
  p->add_option("--val-size", prep.val_size, "Validation examples (-1: default share)")
      ->capture_default_str();
  p->add_option("--test-size", prep.test_size, "Test examples (-1: default share)")
      ->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model; checkpoints go to OUT/<config hash>/");
  t->add_option("--config", tr.config, "INI config file (desk preset when omitted)");
  t->add_option("--data", tr.data, "Prepared dataset directory or cache file")->required();
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--set", tr.overrides, "Override section.key=value (repeatable)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Decode summaries and predict ratings from a checkpoint");
  g->add_option("--ckpt", gen.ckpt, "Checkpoint file")->required();
  g->add_option("--data", gen.data, "Prepared dataset directory or cache file")->required();
  g->add_option("--split", gen.split, "Split to decode")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  g->add_option("--strategy", gen.strategy, "Decoding strategy")
      ->check(CLI::IsMember({"greedy", "beam"}))
      ->capture_default_str();
  g->add_option("--beam-width", gen.beam_width, "Beam width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  g->add_option("--max-examples", gen.max_examples, "Decode only the first N (0: all)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score id<TAB>value files with ROUGE and rating metrics");
  e->add_option("--decoded", ev.decoded, "Decoded summaries")->required();
  e->add_option("--refs", ev.refs, "Reference summaries")->required();
  e->add_option("--predictions", ev.predictions, "Predicted ratings")->required();
  e->add_option("--golds", ev.golds, "Gold ratings")->required();
  e->add_option("--out", ev.out, "Directory for report.json and manifest.json");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Train the full model and each variant, then tabulate");
  a->add_option("--config", ab.train.config, "INI config file (desk preset when omitted)");
  a->add_option("--data", ab.train.data, "Prepared dataset directory or cache file")->required();
  a->add_option("--out", ab.train.out, "Output directory")->required();
  a->add_option("--set", ab.train.overrides, "Override section.key=value (repeatable)");
  a->add_option("--variant", ab.variants, "Ablation flags of one row, e.g. \"-CL\" (repeatable)")
      ->required();
  a->add_option("--split", ab.split, "Split to score")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  a->add_option("--max-examples", ab.max_examples, "Score only the first N (0: all)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "Write a templated synthetic review dump");
  s->add_option("--records", sy.records, "Number of reviews")->capture_default_str();
  s->add_option("--customers", sy.customers, "Distinct customers")->capture_default_str();
  s->add_option("--products", sy.products, "Distinct products")->capture_default_str();
  s->add_option("--seed", sy.seed, "Generator seed")->capture_default_str();
  s->add_option("--out", sy.out, "Output JSON-lines file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (*p) return cmd_prepare(prep);
    if (*t) return cmd_train(tr);
    if (*g) return cmd_generate(gen);
    if (*e) return cmd_evaluate(ev);
    if (*a) return cmd_ablate(ab);
    if (*s) return cmd_synth(sy);
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& err) {
    std::cerr << "aborted: " << err.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
