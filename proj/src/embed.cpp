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

#include "ragqa/embed.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ragqa/io.hpp"

namespace ragqa {

namespace {
constexpr char kEmbeddingMagic[4] = {'R', 'G', 'Q', 'E'};
constexpr uint32_t kEmbeddingVersion = 1;
// Salt prepended to the token for the sign hash so bucket and sign are
// decorrelated.
constexpr uint64_t kSignBasis = 0x9e3779b97f4a7c15ull;
}  // namespace

uint64_t fnv1a64(std::string_view s, uint64_t basis) {
  uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= static_cast<uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string> tokenize_whitespace_lower(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

HashedEncoder::HashedEncoder(int dim) : dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("HashedEncoder: dim must be positive");
}

EmbeddingVector HashedEncoder::encode_text(std::string_view text) const {
  EmbeddingVector v = EmbeddingVector::Zero(dim_);
  std::vector<std::string> tokens = tokenize_whitespace_lower(text);
  if (tokens.empty()) return v;
  for (const std::string &tok : tokens) {
    uint64_t bucket = fnv1a64(tok) % static_cast<uint64_t>(dim_);
    float sign = (fnv1a64(tok, kSignBasis) & 1u) ? 1.0f : -1.0f;
    v[static_cast<Eigen::Index>(bucket)] += sign;
  }
  v *= 1.0f / std::sqrt(static_cast<float>(tokens.size()));
  return v;
}

EmbeddingVector HashedEncoder::encode(std::string_view key, std::string_view text) const {
  (void)key;
  return encode_text(text);
}

EmbeddingVector FileEmbeddingProvider::encode(std::string_view key, std::string_view text) const {
  (void)text;
  auto it = vectors_.find(std::string(key));
  if (it == vectors_.end())
    throw std::runtime_error("missing embedding for id '" + std::string(key) + "'");
  return it->second;
}

FileEmbeddingProvider FileEmbeddingProvider::load(const std::string &path) {
  std::ifstream in = io::open_input(path);
  io::check_magic(in, kEmbeddingMagic, "embedding");
  uint32_t version = io::read_u32(in);
  if (version != kEmbeddingVersion)
    throw std::runtime_error("embedding: unsupported format version " + std::to_string(version));
  uint32_t dim = io::read_u32(in);
  uint64_t count = io::read_u64(in);
  FileEmbeddingProvider p;
  p.dim_ = static_cast<int>(dim);
  for (uint64_t i = 0; i < count; ++i) {
    std::string id = io::read_string(in);
    EmbeddingVector v(dim);
    io::read_f32_array(in, v.data(), dim);
    if (!v.allFinite())
      throw std::runtime_error("embedding: non-finite values in vector for id '" + id + "'");
    p.vectors_.emplace(std::move(id), std::move(v));
  }
  return p;
}

void save_embeddings(const std::string &path,
                     const std::vector<std::pair<std::string, EmbeddingVector>> &records) {
  int dim = records.empty() ? 0 : static_cast<int>(records.front().second.size());
  for (const auto &[id, v] : records) {
    if (v.size() != dim)
      throw std::runtime_error("embedding: dimension mismatch for id '" + id + "': expected " +
                               std::to_string(dim) + ", got " + std::to_string(v.size()));
  }
  std::ofstream out = io::open_output(path);
  io::write_magic(out, kEmbeddingMagic);
  io::write_u32(out, kEmbeddingVersion);
  io::write_u32(out, static_cast<uint32_t>(dim));
  io::write_u64(out, records.size());
  for (const auto &[id, v] : records) {
    io::write_string(out, id);
    io::write_f32_array(out, v.data(), static_cast<size_t>(v.size()));
  }
}

EmbeddingVector encode_query(const EmbeddingProvider &provider, const RetrievalQuery &query,
                             std::string_view query_id) {
  if (query.question.empty()) throw std::invalid_argument("encode_query: question must be non-empty");
  return provider.encode(query_id, query.text());
}

EmbeddingVector encode_passage(const EmbeddingProvider &provider, const Passage &passage) {
  std::string text = passage.title.empty() ? passage.body : passage.title + " " + passage.body;
  return provider.encode(passage.id, text);
}

}  // namespace ragqa
