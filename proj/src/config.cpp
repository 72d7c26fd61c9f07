/*
 * Copyright (c) 2026 The ragqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ragqa/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <stdexcept>

namespace ragqa {

namespace {

std::string trim(const std::string &s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// key=value pairs, '#' comments, blank lines ignored.
std::map<std::string, std::string> parse_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

std::string env_name(const std::string &key) {
  std::string name = "RAGQA_";
  for (char c : key)
    name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return name;
}

class Binder {
 public:
  explicit Binder(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  void bind(const std::string &key, std::string &target) {
    if (auto v = take(key)) target = *v;
  }
  void bind(const std::string &key, int &target) {
    if (auto v = take(key)) target = parse_int(key, *v);
  }
  void bind(const std::string &key, uint64_t &target) {
    if (auto v = take(key)) target = static_cast<uint64_t>(std::stoull(*v));
  }
  void bind(const std::string &key, double &target) {
    if (auto v = take(key)) {
      try {
        target = std::stod(*v);
      } catch (const std::exception &) {
        throw std::runtime_error("config key '" + key + "': not a number: " + *v);
      }
    }
  }
  void bind(const std::string &key, bool &target) {
    if (auto v = take(key)) {
      if (*v == "true" || *v == "1")
        target = true;
      else if (*v == "false" || *v == "0")
        target = false;
      else
        throw std::runtime_error("config key '" + key + "': expected true/false: " + *v);
    }
  }

  void finish() const {
    if (kv_.empty()) return;
    std::string keys;
    for (const auto &[k, v] : kv_) keys += (keys.empty() ? "" : ", ") + k;
    throw std::runtime_error("unknown config keys: " + keys);
  }

 private:
  std::optional<std::string> take(const std::string &key) {
    std::optional<std::string> out;
    auto it = kv_.find(key);
    if (it != kv_.end()) {
      out = it->second;
      kv_.erase(it);
    }
    if (const char *env = std::getenv(env_name(key).c_str())) out = std::string(env);
    return out;
  }

  static int parse_int(const std::string &key, const std::string &v) {
    try {
      size_t pos = 0;
      int out = std::stoi(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception &) {
      throw std::runtime_error("config key '" + key + "': not an integer: " + v);
    }
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.model.vocab_size = 32128;  // training caps the built vocabulary here
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::string &path,
                                    const std::vector<std::string> &overrides) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) kv = parse_file(path);
  for (const std::string &ov : overrides) {
    size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set override must look like key=value: " + ov);
    kv[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
  }

  PipelineConfig cfg = defaults();
  Binder b(std::move(kv));

  b.bind("paths.corpus", cfg.paths.corpus);
  b.bind("paths.corpus_bin", cfg.paths.corpus_bin);
  b.bind("paths.qa", cfg.paths.qa);
  b.bind("paths.embeddings", cfg.paths.embeddings);
  b.bind("paths.query_embeddings", cfg.paths.query_embeddings);
  b.bind("paths.index", cfg.paths.index);
  b.bind("paths.checkpoint", cfg.paths.checkpoint);
  b.bind("paths.retrieval", cfg.paths.retrieval);
  b.bind("paths.predictions", cfg.paths.predictions);
  b.bind("paths.report", cfg.paths.report);
  b.bind("paths.loss_curve", cfg.paths.loss_curve);

  b.bind("retrieval.k", cfg.retrieval.k);
  b.bind("retrieval.provider", cfg.retrieval.provider);
  b.bind("retrieval.dim", cfg.retrieval.dim);
  b.bind("retrieval.backend", cfg.retrieval.backend);
  b.bind("retrieval.hnsw_m", cfg.retrieval.hnsw.m);
  b.bind("retrieval.hnsw_ef_construction", cfg.retrieval.hnsw.ef_construction);
  b.bind("retrieval.hnsw_ef_search", cfg.retrieval.hnsw.ef_search);

  b.bind("model.vocab_size", cfg.model.vocab_size);
  b.bind("model.hidden", cfg.model.hidden);
  b.bind("model.layers", cfg.model.layers);
  b.bind("model.heads", cfg.model.heads);
  b.bind("model.ffn_hidden", cfg.model.ffn_hidden);
  b.bind("model.max_input_len", cfg.model.max_input_len);
  b.bind("model.max_decode_len", cfg.model.max_decode_len);
  b.bind("model.tie_embeddings", cfg.model.tie_embeddings);

  b.bind("training.learning_rate", cfg.training.learning_rate);
  b.bind("training.warmup_steps", cfg.training.warmup_steps);
  b.bind("training.total_steps", cfg.training.total_steps);
  b.bind("training.schedule", cfg.training.schedule);
  b.bind("training.weight_decay", cfg.training.weight_decay);
  b.bind("training.batch_size", cfg.training.batch_size);

  b.bind("decoding.mode", cfg.decoding.mode);
  b.bind("decoding.beam_size", cfg.decoding.beam.beam_size);
  b.bind("decoding.max_len", cfg.decoding.beam.max_len);
  b.bind("decoding.early_stopping", cfg.decoding.beam.early_stopping);

  b.bind("seed", cfg.seed);
  b.finish();

  if (cfg.retrieval.k < 1) throw std::runtime_error("retrieval.k must be >= 1");
  if (cfg.retrieval.provider != "hashed" && cfg.retrieval.provider != "file")
    throw std::runtime_error("retrieval.provider must be hashed or file");
  if (cfg.retrieval.backend != "flat" && cfg.retrieval.backend != "hnsw" &&
      cfg.retrieval.backend != "bm25")
    throw std::runtime_error("retrieval.backend must be flat, hnsw or bm25");
  if (cfg.decoding.mode != "greedy" && cfg.decoding.mode != "beam")
    throw std::runtime_error("decoding.mode must be greedy or beam");

  // Randomness funnels through the one top-level seed.
  cfg.model.seed = cfg.seed;
  cfg.training.seed = cfg.seed;
  cfg.retrieval.hnsw.seed = cfg.seed;
  return cfg;
}

}  // namespace ragqa
