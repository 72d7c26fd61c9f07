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

#ifndef RAGQA_EMBED_HPP
#define RAGQA_EMBED_HPP

#include <Eigen/Core>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ragqa/corpus.hpp"

namespace ragqa {

using EmbeddingVector = Eigen::VectorXf;

// Query text for retrieval: the question plus the image caption.
struct RetrievalQuery {
  std::string question;
  std::string caption;

  // Single-space concatenation, question first; empty caption contributes
  // nothing.
  std::string text() const {
    return caption.empty() ? question : question + " " + caption;
  }
};

// A source of fixed-dimension dense vectors. Queries and passages use
// independent provider instances; the engine never assumes they agree.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  // key identifies the record for id-backed providers; text feeds
  // text-hashing providers. Either may be ignored.
  virtual EmbeddingVector encode(std::string_view key, std::string_view text) const = 0;
};

// FNV-1a 64-bit, fully specified so vectors are identical across
// platforms and processes.
uint64_t fnv1a64(std::string_view s, uint64_t basis = 14695981039346656037ull);

// Signed feature hashing of lowercase whitespace tokens: each token is
// hashed once for its bucket and once (salted) for its sign, then the
// vector is scaled by 1/sqrt(token count). Empty text encodes to the zero
// vector.
class HashedEncoder final : public EmbeddingProvider {
 public:
  explicit HashedEncoder(int dim = 64);
  int dim() const override { return dim_; }
  EmbeddingVector encode(std::string_view key, std::string_view text) const override;
  EmbeddingVector encode_text(std::string_view text) const;

 private:
  int dim_;
};

// Serves externally computed vectors by record id.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  int dim() const override { return dim_; }
  EmbeddingVector encode(std::string_view key, std::string_view text) const override;

  bool contains(const std::string &id) const { return vectors_.count(id) > 0; }
  size_t size() const { return vectors_.size(); }

  static FileEmbeddingProvider load(const std::string &path);

 private:
  int dim_ = 0;
  std::unordered_map<std::string, EmbeddingVector> vectors_;
};

// Embedding file: magic, version, dim, count, then (id, f32 array) records.
void save_embeddings(const std::string &path,
                     const std::vector<std::pair<std::string, EmbeddingVector>> &records);

EmbeddingVector encode_query(const EmbeddingProvider &provider, const RetrievalQuery &query,
                             std::string_view query_id = {});
EmbeddingVector encode_passage(const EmbeddingProvider &provider, const Passage &passage);

// Lowercased whitespace tokens, shared by the hashed encoder and BM25.
std::vector<std::string> tokenize_whitespace_lower(std::string_view text);

}  // namespace ragqa

#endif  // RAGQA_EMBED_HPP
