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


#include "revsum/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "revsum/error.hpp"
#include "revsum/evalkit.hpp"
#include "revsum/hashing.hpp"
#include "revsum/run_config.hpp"

namespace revsum {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'R', 'V', 'S', 'M', 'C', 'K', 'P', 'T'};
constexpr const char* kFormat = "revsum-ckpt/1";
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void check_component(double v, const char* name) {
  if (std::isnan(v)) throw DivergenceError(std::string(name) + " is NaN");
  if (!std::isfinite(v)) throw DivergenceError(std::string(name) + " is not finite");
}

int argmax_rating(const Matrix& probs, Index row) {
  Index best = 0;
  probs.row(row).maxCoeff(&best);
  return static_cast<int>(best) + 1;
}

}  // namespace

// ---------------------------------------------------------------- ablation

Ablation Ablation::parse(const std::string& flags) {
  Ablation a;
  std::string token;
  std::vector<std::string> names;
  for (char c : flags) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) names.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) names.push_back(token);
  for (std::string n : names) {
    if (!n.empty() && n.front() == '-') n.erase(0, 1);
    n = upper(n);
    if (n == "CR") {
      a.customer_reviews = true;
    } else if (n == "PR") {
      a.product_reviews = true;
    } else if (n == "MIX") {
      a.mixed = true;
    } else if (n == "CL") {
      a.contrastive = true;
    } else if (n == "SC") {
      a.sentiment = true;
    } else if (n == "SEG") {
      a.sentiment_gate = true;
    } else if (n == "HR") {
      a.history_rating = true;
    } else if (n == "GRAPH") {
      a.graph = true;
    } else if (n == "TIME_EDGE" || n == "TIME") {
      a.time_edges = true;
    } else if (n == "RATING_EDGE" || n == "RATING") {
      a.rating_edges = true;
    } else if (n == "FULL" || n.empty()) {
    } else {
      throw InputError("unknown ablation flag '" + n + "'");
    }
  }
  return a;
}

std::string Ablation::label() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ' ';
    out += '-';
    out += name;
  };
  add(customer_reviews, "CR");
  add(product_reviews, "PR");
  add(mixed, "MIX");
  add(contrastive, "CL");
  add(sentiment, "SC");
  add(sentiment_gate, "SEG");
  add(history_rating, "HR");
  add(graph, "GRAPH");
  add(time_edges, "TIME_EDGE");
  add(rating_edges, "RATING_EDGE");
  return out.empty() ? "full" : out;
}

bool Ablation::any() const { return label() != "full"; }

void Ablation::validate() const {
  if (int(customer_reviews) + int(product_reviews) + int(mixed) > 1) {
    throw InputError("conflicting ablation flags: at most one of CR, PR, MIX may be set");
  }
}

ModelWiring apply_ablation(const Ablation& a) {
  a.validate();
  ModelWiring w;
  w.customer_graph = !a.customer_reviews;
  w.product_graph = !a.product_reviews;
  w.mixed_graph = a.mixed;
  w.contrastive = !a.contrastive;
  w.sentiment_loss = !a.sentiment;
  w.sentiment_gate = !a.sentiment_gate;
  w.history_rating = !a.history_rating;
  w.graph_reasoning = !a.graph;
  w.edges.time_edges = !a.time_edges;
  w.edges.rating_edges = !a.rating_edges;
  return w;
}

// ---------------------------------------------------------------- config

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::large() {
  TrainConfig c;
  c.preset = ScalePreset::kLarge;
  const EncoderConfig e = EncoderConfig::large();
  c.d = e.d;
  c.n_layers = e.n_layers;
  c.n_heads = e.n_heads;
  c.ffn_dim = e.ffn_dim;
  c.dropout = e.dropout;
  c.lr = 3e-5;
  return c;
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0)) throw InputError("alpha must be >= 0");
  if (k < 1) throw InputError("k must be >= 1");
  if (!(lr > 0.0)) throw InputError("lr must be > 0");
  if (batch_size < 1) throw InputError("batch_size must be >= 1");
  if (max_steps < 0) throw InputError("max_steps must be >= 0");
  if (!(clip_norm > 0.0)) throw InputError("clip_norm must be > 0");
  if (!(divergence_threshold > 0.0)) throw InputError("divergence_threshold must be > 0");
  if (eval_every < 0 || checkpoint_every < 0 || eval_examples < 0) {
    throw InputError("eval_every, eval_examples and checkpoint_every must be >= 0");
  }
  if (patience < 1) throw InputError("patience must be >= 1");
  if (d < 1 || n_layers < 1 || n_heads < 1 || ffn_dim < 1 || rgcn_layers < 1) {
    throw InputError("model sizes must be positive");
  }
  if (d % n_heads != 0) throw InputError("d must be divisible by n_heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must be in [0, 1)");
  ablation.validate();
}

ModelConfig make_model_config(const TrainConfig& c, const Dataset& data) {
  ModelConfig m = ModelConfig::desk(data);
  m.encoder.d = c.d;
  m.encoder.n_layers = c.n_layers;
  m.encoder.n_heads = c.n_heads;
  m.encoder.ffn_dim = c.ffn_dim;
  m.encoder.dropout = c.dropout;
  m.decoder = DecoderConfig::matching(m.encoder, data.config.limits.max_summary);
  m.decoder.gate = c.gate;
  m.rgcn_layers = c.rgcn_layers;
  m.directed_time = c.directed_time;
  m.contrastive.alpha = c.alpha;
  m.contrastive.tau = c.tau;
  m.contrastive.dropout_rate = c.augment_dropout;
  m.k = c.k;
  return m;
}

// ---------------------------------------------------------------- losses

double total_loss(double l_g, double l_s, double l_c, double alpha, bool without_sentiment,
                  bool without_contrastive) {
  check_component(l_g, "L_g");
  check_component(l_s, "L_s");
  check_component(l_c, "L_c");
  double total = l_g;
  if (!without_sentiment) total += l_s;
  if (!without_contrastive) total += alpha * l_c;
  return total;
}

ad::Var total_loss(const ad::Var& l_g, const ad::Var& l_s, const ad::Var& l_c, double alpha,
                   bool without_sentiment, bool without_contrastive) {
  check_component(l_g.scalar(), "L_g");
  check_component(l_s.scalar(), "L_s");
  check_component(l_c.scalar(), "L_c");
  ad::Var total = l_g;
  if (!without_sentiment) total = ad::add(total, l_s);
  if (!without_contrastive && alpha != 0.0) total = ad::add(total, ad::scale(l_c, alpha));
  return total;
}

std::string StepRecord::to_json() const {
  json j;
  j["step"] = step;
  j["L_g"] = l_g;
  j["L_s"] = l_s;
  j["L_c"] = l_c;
  j["L"] = total;
  j["lr"] = lr;
  j["grad_norm"] = grad_norm;
  return j.dump();
}

// ---------------------------------------------------------------- evaluation

Evaluation evaluate_split(const Model& model, const Dataset& data,
                          const std::vector<TrainingExample>& split, const ModelWiring& wiring,
                          DecodeStrategy strategy, int beam_width, int max_examples,
                          int batch_size) {
  Evaluation ev;
  const int n = max_examples > 0 ? std::min<int>(max_examples, static_cast<int>(split.size()))
                                 : static_cast<int>(split.size());
  std::vector<double> rouge_sum;
  double rl = 0.0;
  for (int begin = 0; begin < n; begin += batch_size) {
    std::vector<int> ids;
    for (int i = begin; i < std::min(n, begin + batch_size); ++i) ids.push_back(i);
    const Batch batch = make_batch(data, split, ids);
    const auto decoded = model.generate(data, split, batch, wiring, strategy, beam_width,
                                        model.config().decoder.max_len);
    Matrix probs;
    {
      ad::NoGradGuard no_grad;
      probs = model.forward(data, split, batch, wiring, false, 0).rating_probs;
    }
    for (size_t b = 0; b < ids.size(); ++b) {
      const ReviewRecord& rec = data.record(split[size_t(ids[b])].target);
      std::vector<int> cand;
      for (int t : decoded[b].tokens) {
        if (t == Vocabulary::kEos) break;
        cand.push_back(t);
      }
      rl += rouge_l<int>(cand, rec.summary_tokens).f1;
      ev.ids.push_back(rec.review_id);
      ev.summaries.push_back(data.vocab.decode(decoded[b].tokens));
      ev.references.push_back(data.vocab.decode(rec.summary_tokens));
      ev.predicted_ratings.push_back(argmax_rating(probs, static_cast<Index>(b)));
      ev.gold_ratings.push_back(rec.rating);
    }
  }
  if (n > 0) {
    ev.rougel_f = rl / n;
    ev.balanced_acc =
        classification_report(ev.predicted_ratings, ev.gold_ratings).balanced_accuracy;
  }
  return ev;
}

// ---------------------------------------------------------------- trainer

Trainer::Trainer(const TrainConfig& config, const Dataset& data)
    : config_(config), data_(&data), wiring_(apply_ablation(config.ablation)) {
  config_.validate();
  if (data.config.k != config_.k) {
    throw InputError("dataset histories hold k=" + std::to_string(data.config.k) +
                     " reviews but the config asks for k=" + std::to_string(config_.k));
  }
  if (data.train.empty()) throw InputError("training split is empty");
  model_ = std::make_unique<Model>(make_model_config(config_, data), config_.seed);
  for (const auto& [name, v] : model_->params().items()) {
    adam_m_.push_back(Matrix::Zero(v.rows(), v.cols()));
    adam_v_.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
}

std::string Trainer::config_hash() const { return train_config_hash(config_); }

uint64_t Trainer::step_seed(int step_index) const {
  if (config_.optimizer == OptimizerKind::kLineSearch) return splitmix64(config_.seed);
  return splitmix64(config_.seed ^ splitmix64(static_cast<uint64_t>(step_index) + 1));
}

const Batch& Trainer::batch_for(int step_index) const {
  const int n = static_cast<int>(data_->train.size());
  const int per_epoch = (n + config_.batch_size - 1) / config_.batch_size;
  const int epoch = step_index / per_epoch;
  if (epoch != cached_epoch_) {
    epoch_batches_ = make_batches(*data_, data_->train, config_.batch_size,
                                  config_.seed + static_cast<uint64_t>(epoch));
    cached_epoch_ = epoch;
  }
  return epoch_batches_[size_t(step_index % per_epoch)];
}

StepRecord Trainer::probe(int step_index, bool training) const {
  ad::NoGradGuard no_grad;
  const ForwardOutput out = model_->forward(*data_, data_->train, batch_for(step_index), wiring_,
                                            training, step_seed(step_index));
  StepRecord r;
  r.step = step_index;
  r.l_g = out.generation_loss.scalar();
  r.l_s = out.sentiment_loss.scalar();
  r.l_c = out.contrastive_loss.scalar();
  r.total = total_loss(r.l_g, r.l_s, r.l_c, config_.alpha, !wiring_.sentiment_loss,
                       !wiring_.contrastive);
  return r;
}

double Trainer::clip_gradients() {
  double sq = 0.0;
  for (const auto& [name, v] : model_->params().items()) {
    if (v.has_grad()) sq += v.grad().squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    throw DivergenceError("gradient norm is not finite at step " +
                          std::to_string(state_.step + 1));
  }
  if (norm > config_.clip_norm) {
    const double s = config_.clip_norm / norm;
    for (const auto& [name, v] : model_->params().items()) {
      if (v.has_grad()) v.node()->grad *= s;
    }
  }
  return norm;
}

void Trainer::adam_update() {
  const double t = state_.step + 1;
  const double c1 = 1.0 - std::pow(kBeta1, t);
  const double c2 = 1.0 - std::pow(kBeta2, t);
  const auto& items = model_->params().items();
  for (size_t i = 0; i < items.size(); ++i) {
    ad::Var p = items[i].second;
    Matrix& m = adam_m_[i];
    Matrix& v = adam_v_[i];
    if (p.has_grad()) {
      m = kBeta1 * m + (1.0 - kBeta1) * p.grad();
      v = kBeta2 * v + (1.0 - kBeta2) * p.grad().cwiseProduct(p.grad());
    } else {
      m *= kBeta1;
      v *= kBeta2;
    }
    p.mutable_value().array() -=
        config_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
  }
}

void Trainer::line_search_update(double loss, int step_index) {
  const auto& items = model_->params().items();
  std::vector<Matrix> start;
  std::vector<Matrix> grads;
  for (const auto& [name, v] : items) {
    start.push_back(v.value());
    grads.push_back(v.has_grad() ? v.grad() : Matrix::Zero(v.rows(), v.cols()));
  }
  auto set_params = [&](double lr) {
    for (size_t i = 0; i < items.size(); ++i) {
      ad::Var p = items[i].second;
      p.mutable_value() = start[i] - lr * grads[i];
    }
  };
  double lr = config_.lr;
  for (int tries = 0; tries < 40; ++tries, lr *= 0.5) {
    set_params(lr);
    if (probe(step_index, true).total <= loss) return;
  }
  set_params(0.0);
}

StepRecord Trainer::step() {
  const int index = state_.step;
  const Batch& batch = batch_for(index);
  model_->params().zero_grad();
  ForwardOutput out =
      model_->forward(*data_, data_->train, batch, wiring_, true, step_seed(index));

  StepRecord rec;
  rec.step = index + 1;
  rec.l_g = out.generation_loss.scalar();
  rec.l_s = out.sentiment_loss.scalar();
  rec.l_c = out.contrastive_loss.scalar();
  rec.lr = config_.lr;
  ad::Var loss;
  try {
    loss = total_loss(out.generation_loss, out.sentiment_loss, out.contrastive_loss, config_.alpha,
                      !wiring_.sentiment_loss, !wiring_.contrastive);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(rec.step));
  }
  rec.total = loss.scalar();
  if (rec.total > config_.divergence_threshold) {
    throw DivergenceError("loss diverged at step " + std::to_string(rec.step) + ": " +
                          rec.to_json());
  }
  ad::backward(loss);
  rec.grad_norm = clip_gradients();
  if (config_.optimizer == OptimizerKind::kAdam) {
    adam_update();
  } else {
    line_search_update(rec.total, index);
  }
  model_->params().zero_grad();
  state_.step = rec.step;
  state_.last = rec;
  return rec;
}

ValidationRecord Trainer::validate() {
  const Evaluation ev = evaluate_split(*model_, *data_, data_->val, wiring_,
                                       DecodeStrategy::kGreedy, 1, config_.eval_examples);
  ValidationRecord v{state_.step, ev.rougel_f, ev.balanced_acc};
  state_.validations.push_back(v);
  if (v.rougel_f > state_.best_rougel) {
    state_.best_rougel = v.rougel_f;
    state_.best_step = v.step;
    state_.evals_since_best = 0;
  } else if (++state_.evals_since_best >= config_.patience) {
    state_.stopped_early = true;
  }
  return v;
}

std::filesystem::path Trainer::run_dir(const std::filesystem::path& out) const {
  return out / config_hash();
}

void Trainer::write_manifest(const std::filesystem::path& dir) const {
  std::vector<int> steps;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".ckpt") continue;
    try {
      steps.push_back(std::stoi(entry.path().stem().string()));
    } catch (const std::exception&) {
    }
  }
  std::sort(steps.begin(), steps.end());
  json j;
  j["config_hash"] = config_hash();
  j["config"] = to_ini(config_);
  j["step"] = state_.step;
  json ckpts = json::array();
  for (int s : steps) ckpts.push_back(std::to_string(s) + ".ckpt");
  j["checkpoints"] = ckpts;
  const int best = state_.best_step >= 0 ? state_.best_step : state_.step;
  j["best_step"] = best;
  j["best"] = std::to_string(best) + ".ckpt";
  json vals = json::array();
  for (const auto& v : state_.validations) {
    vals.push_back({{"step", v.step}, {"rougel_f", v.rougel_f}, {"balanced_acc", v.balanced_acc}});
  }
  j["validations"] = vals;
  j["stopped_early"] = state_.stopped_early;
  std::ofstream(dir / "manifest.json") << j.dump(2) << "\n";
}

const TrainState& Trainer::run(const TrainOptions& options, int until_step) {
  std::filesystem::path dir;
  std::ofstream log;
  if (options.out_dir) {
    dir = run_dir(*options.out_dir);
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "config.ini") << to_ini(config_);
    log.open(dir / "train_log.jsonl", std::ios::app);
  }
  const int target = until_step > 0 ? std::min(until_step, config_.max_steps) : config_.max_steps;
  bool saved_current = false;
  while (state_.step < target && !state_.stopped_early) {
    const StepRecord rec = step();
    saved_current = false;
    if (log.is_open()) log << rec.to_json() << "\n" << std::flush;
    if (options.on_step) options.on_step(rec);
    const bool do_eval = config_.eval_every > 0 && rec.step % config_.eval_every == 0 &&
                         !data_->val.empty();
    if (do_eval) {
      validate();
      if (!dir.empty() && state_.best_step == rec.step) {
        save_checkpoint(dir / (std::to_string(rec.step) + ".ckpt"));
        saved_current = true;
      }
    }
    if (!dir.empty() && config_.checkpoint_every > 0 && rec.step % config_.checkpoint_every == 0 &&
        !saved_current) {
      save_checkpoint(dir / (std::to_string(rec.step) + ".ckpt"));
      saved_current = true;
    }
  }
  if (!dir.empty()) {
    const auto last = dir / (std::to_string(state_.step) + ".ckpt");
    if (!saved_current && !std::filesystem::exists(last)) save_checkpoint(last);
    write_manifest(dir);
  }
  return state_;
}

// ---------------------------------------------------------------- checkpoints

namespace {

void write_block(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size())));
}

void read_block(std::istream& in, Matrix& m, const std::string& what) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size())));
  if (!in) throw InputError("checkpoint truncated while reading " + what);
}

struct CheckpointHeader {
  json header;
  std::streampos payload;
};

CheckpointHeader read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw InputError(path.string() + " is not a checkpoint");
  }
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw InputError(path.string() + ": truncated header");
  CheckpointHeader h;
  try {
    h.header = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": bad header: " + e.what());
  }
  if (h.header.value("format", "") != kFormat) {
    throw InputError(path.string() + ": unsupported checkpoint format");
  }
  h.payload = in.tellg();
  return h;
}

void read_params(std::istream& in, const json& header, nn::ParamStore& store,
                 std::vector<Matrix>* m, std::vector<Matrix>* v) {
  const auto& items = store.items();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != items.size()) {
    throw InputError("checkpoint holds " + std::to_string(tensors.size()) +
                     " tensors, model expects " + std::to_string(items.size()));
  }
  for (size_t i = 0; i < items.size(); ++i) {
    const auto& t = tensors[i];
    const ad::Var& p = items[i].second;
    if (t.at("name") != items[i].first || t.at("rows") != p.rows() || t.at("cols") != p.cols()) {
      throw InputError("checkpoint tensor " + t.at("name").get<std::string>() +
                       " does not match model parameter " + items[i].first);
    }
  }
  for (size_t i = 0; i < items.size(); ++i) {
    ad::Var p = items[i].second;
    read_block(in, p.mutable_value(), items[i].first);
  }
  if (m && v) {
    for (size_t i = 0; i < items.size(); ++i) read_block(in, (*m)[i], "adam_m");
    for (size_t i = 0; i < items.size(); ++i) read_block(in, (*v)[i], "adam_v");
  }
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  json h;
  h["format"] = kFormat;
  h["config_hash"] = config_hash();
  h["config"] = to_ini(config_);
  h["step"] = state_.step;
  h["best_step"] = state_.best_step;
  h["best_rougel"] = state_.best_rougel;
  h["evals_since_best"] = state_.evals_since_best;
  h["stopped_early"] = state_.stopped_early;
  json vals = json::array();
  for (const auto& v : state_.validations) {
    vals.push_back({{"step", v.step}, {"rougel_f", v.rougel_f}, {"balanced_acc", v.balanced_acc}});
  }
  h["validations"] = vals;
  h["last"] = json::parse(state_.last.to_json());
  json tensors = json::array();
  for (const auto& [name, v] : model_->params().items()) {
    tensors.push_back({{"name", name}, {"rows", v.rows()}, {"cols", v.cols()}});
  }
  h["tensors"] = tensors;
  const std::string text = h.dump();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw InputError("cannot write " + tmp);
    out.write(kMagic, 8);
    const uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(len));
    for (const auto& [name, v] : model_->params().items()) write_block(out, v.value());
    for (const auto& m : adam_m_) write_block(out, m);
    for (const auto& v : adam_v_) write_block(out, v);
    if (!out) throw InputError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void Trainer::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + path.string());
  const CheckpointHeader h = read_header(in, path);
  if (h.header.at("config_hash") != config_hash()) {
    throw InputError("checkpoint " + path.string() + " was written under a different config");
  }
  read_params(in, h.header, model_->params(), &adam_m_, &adam_v_);
  state_ = TrainState{};
  state_.step = h.header.at("step");
  state_.best_step = h.header.at("best_step");
  state_.best_rougel = h.header.at("best_rougel");
  state_.evals_since_best = h.header.at("evals_since_best");
  state_.stopped_early = h.header.at("stopped_early");
  for (const auto& v : h.header.at("validations")) {
    state_.validations.push_back({v.at("step"), v.at("rougel_f"), v.at("balanced_acc")});
  }
  const auto& last = h.header.at("last");
  state_.last = StepRecord{last.at("step"),  last.at("L_g"), last.at("L_s"),
                           last.at("L_c"),   last.at("L"),   last.at("lr"),
                           last.at("grad_norm")};
}

TrainConfig read_checkpoint_config(const std::filesystem::path& checkpoint) {
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + checkpoint.string());
  return parse_train_config(read_header(in, checkpoint).header.at("config").get<std::string>());
}

LoadedModel load_model(const std::filesystem::path& checkpoint, const Dataset& data) {
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + checkpoint.string());
  const CheckpointHeader h = read_header(in, checkpoint);
  LoadedModel out;
  out.config = parse_train_config(h.header.at("config").get<std::string>());
  out.step = h.header.at("step");
  out.model = std::make_unique<Model>(make_model_config(out.config, data), out.config.seed);
  read_params(in, h.header, out.model->params(), nullptr, nullptr);
  return out;
}

}  // namespace revsum
