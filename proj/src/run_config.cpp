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


#include "revsum/run_config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "revsum/error.hpp"
#include "revsum/hashing.hpp"

namespace revsum {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw InputError("config: bad value '" + value + "' for " + key);
}

int as_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

uint64_t as_u64(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

double as_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  bad_value(key, v);
}

bool as_bool(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  bad_value(key, v);
}

ScalePreset as_preset(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "desk") return ScalePreset::kDesk;
  if (l == "large") return ScalePreset::kLarge;
  bad_value(key, v);
}

void set_key(TrainConfig& c, const std::string& key, const std::string& v) {
  bool* flag = nullptr;
  if (key == "model.d") {
    c.d = as_int(key, v);
  } else if (key == "model.n_layers") {
    c.n_layers = as_int(key, v);
  } else if (key == "model.n_heads") {
    c.n_heads = as_int(key, v);
  } else if (key == "model.ffn_dim") {
    c.ffn_dim = as_int(key, v);
  } else if (key == "model.dropout") {
    c.dropout = as_double(key, v);
  } else if (key == "model.rgcn_layers") {
    c.rgcn_layers = as_int(key, v);
  } else if (key == "model.directed_time") {
    c.directed_time = as_bool(key, v);
  } else if (key == "model.gate") {
    const std::string l = lower(v);
    if (l == "scalar") {
      c.gate = GateMode::kScalar;
    } else if (l == "vector") {
      c.gate = GateMode::kVector;
    } else {
      bad_value(key, v);
    }
  } else if (key == "contrastive.alpha") {
    c.alpha = as_double(key, v);
  } else if (key == "contrastive.tau") {
    c.tau = as_double(key, v);
  } else if (key == "contrastive.dropout") {
    c.augment_dropout = as_double(key, v);
  } else if (key == "train.preset") {
    c.preset = as_preset(key, v);
  } else if (key == "train.k") {
    c.k = as_int(key, v);
  } else if (key == "train.lr") {
    c.lr = as_double(key, v);
  } else if (key == "train.batch_size") {
    c.batch_size = as_int(key, v);
  } else if (key == "train.max_steps") {
    c.max_steps = as_int(key, v);
  } else if (key == "train.seed") {
    c.seed = as_u64(key, v);
  } else if (key == "train.clip_norm") {
    c.clip_norm = as_double(key, v);
  } else if (key == "train.divergence_threshold") {
    c.divergence_threshold = as_double(key, v);
  } else if (key == "train.eval_every") {
    c.eval_every = as_int(key, v);
  } else if (key == "train.eval_examples") {
    c.eval_examples = as_int(key, v);
  } else if (key == "train.patience") {
    c.patience = as_int(key, v);
  } else if (key == "train.checkpoint_every") {
    c.checkpoint_every = as_int(key, v);
  } else if (key == "train.optimizer") {
    const std::string l = lower(v);
    if (l == "adam") {
      c.optimizer = OptimizerKind::kAdam;
    } else if (l == "line_search") {
      c.optimizer = OptimizerKind::kLineSearch;
    } else {
      bad_value(key, v);
    }
  } else if (key == "ablation.flags") {
    c.ablation = Ablation::parse(v);
  } else if (key == "ablation.cr") {
    flag = &c.ablation.customer_reviews;
  } else if (key == "ablation.pr") {
    flag = &c.ablation.product_reviews;
  } else if (key == "ablation.mix") {
    flag = &c.ablation.mixed;
  } else if (key == "ablation.cl") {
    flag = &c.ablation.contrastive;
  } else if (key == "ablation.sc") {
    flag = &c.ablation.sentiment;
  } else if (key == "ablation.seg") {
    flag = &c.ablation.sentiment_gate;
  } else if (key == "ablation.hr") {
    flag = &c.ablation.history_rating;
  } else if (key == "ablation.graph") {
    flag = &c.ablation.graph;
  } else if (key == "ablation.time_edge") {
    flag = &c.ablation.time_edges;
  } else if (key == "ablation.rating_edge") {
    flag = &c.ablation.rating_edges;
  } else {
    throw InputError("config: unknown key " + key);
  }
  if (flag) *flag = as_bool(key, v);
}

std::vector<std::pair<std::string, std::string>> flatten(const pt::ptree& tree) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw InputError("config: key outside a section: " + section);
    for (const auto& [key, value] : body) {
      out.emplace_back(lower(section) + "." + lower(key), trim(value.data()));
    }
  }
  return out;
}

std::pair<std::string, std::string> split_override(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || s.find('.') > eq) {
    throw InputError("override must look like section.key=value: " + s);
  }
  return {lower(trim(s.substr(0, eq))), trim(s.substr(eq + 1))};
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

TrainConfig parse_train_config(const std::string& text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  auto entries = flatten(tree);
  for (const auto& o : overrides) entries.push_back(split_override(o));

  // The last preset wins and is applied before every other key.
  ScalePreset preset = ScalePreset::kDesk;
  for (const auto& [k, v] : entries) {
    if (k == "train.preset") preset = as_preset(k, v);
  }
  TrainConfig c = preset == ScalePreset::kLarge ? TrainConfig::large() : TrainConfig::desk();
  for (const auto& [k, v] : entries) {
    if (k != "train.preset") set_key(c, k, v);
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str(), overrides);
}

std::string to_ini(const TrainConfig& c) {
  const auto b = [](bool x) { return x ? "true" : "false"; };
  std::ostringstream s;
  s << "[model]\n"
    << "d = " << c.d << "\n"
    << "n_layers = " << c.n_layers << "\n"
    << "n_heads = " << c.n_heads << "\n"
    << "ffn_dim = " << c.ffn_dim << "\n"
    << "dropout = " << fmt(c.dropout) << "\n"
    << "rgcn_layers = " << c.rgcn_layers << "\n"
    << "directed_time = " << b(c.directed_time) << "\n"
    << "gate = " << (c.gate == GateMode::kScalar ? "scalar" : "vector") << "\n\n"
    << "[contrastive]\n"
    << "alpha = " << fmt(c.alpha) << "\n"
    << "tau = " << fmt(c.tau) << "\n"
    << "dropout = " << fmt(c.augment_dropout) << "\n\n"
    << "[train]\n"
    << "preset = " << (c.preset == ScalePreset::kDesk ? "desk" : "large") << "\n"
    << "k = " << c.k << "\n"
    << "lr = " << fmt(c.lr) << "\n"
    << "batch_size = " << c.batch_size << "\n"
    << "max_steps = " << c.max_steps << "\n"
    << "seed = " << c.seed << "\n"
    << "clip_norm = " << fmt(c.clip_norm) << "\n"
    << "divergence_threshold = " << fmt(c.divergence_threshold) << "\n"
    << "eval_every = " << c.eval_every << "\n"
    << "eval_examples = " << c.eval_examples << "\n"
    << "patience = " << c.patience << "\n"
    << "checkpoint_every = " << c.checkpoint_every << "\n"
    << "optimizer = " << (c.optimizer == OptimizerKind::kAdam ? "adam" : "line_search")
    << "\n\n"
    << "[ablation]\n"
    << "cr = " << b(c.ablation.customer_reviews) << "\n"
    << "pr = " << b(c.ablation.product_reviews) << "\n"
    << "mix = " << b(c.ablation.mixed) << "\n"
    << "cl = " << b(c.ablation.contrastive) << "\n"
    << "sc = " << b(c.ablation.sentiment) << "\n"
    << "seg = " << b(c.ablation.sentiment_gate) << "\n"
    << "hr = " << b(c.ablation.history_rating) << "\n"
    << "graph = " << b(c.ablation.graph) << "\n"
    << "time_edge = " << b(c.ablation.time_edges) << "\n"
    << "rating_edge = " << b(c.ablation.rating_edges) << "\n";
  return s.str();
}

std::string train_config_hash(const TrainConfig& config) {
  TrainConfig c = config;
  c.max_steps = 0;
  c.checkpoint_every = 0;
  return fnv1a_hex(to_ini(c));
}

}  // namespace revsum
