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

#ifndef RAGQA_INDEX_HPP
#define RAGQA_INDEX_HPP

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragqa/embed.hpp"

namespace ragqa {

struct RetrievedEntry {
  std::string passage_id;
  float score;
};

// Top-k retrieval result: scores non-increasing, ids pairwise distinct,
// ties broken by ascending passage_id.
struct RetrievedSet {
  std::vector<RetrievedEntry> entries;
  int k = 0;
};

// Dot product of two encoded dense vectors. Throws on dimension mismatch.
float similarity(const EmbeddingVector &a, const EmbeddingVector &b);

struct HnswParams {
  int m = 16;                // max neighbors per node on levels >= 1
  int ef_construction = 200; // build-time candidate-list size
  int ef_search = 128;       // query-time candidate-list size
  uint64_t seed = 0;

  void validate() const;
};

// Exhaustive maximum-inner-product search; the oracle the approximate
// index is measured against.
class FlatIndex {
 public:
  explicit FlatIndex(int dim);

  void add(const std::string &id, const EmbeddingVector &v);
  size_t size() const { return ids_.size(); }
  int dim() const { return dim_; }

  RetrievedSet search(const EmbeddingVector &query, int k) const;

  void save(const std::string &path) const;
  static FlatIndex load(const std::string &path);

 private:
  int dim_;
  std::vector<std::string> ids_;
  std::vector<EmbeddingVector> vectors_;
};

// Navigable small-world graph over inner-product "distance" (negated dot
// product). Deterministic for a fixed seed and insertion order.
class HnswIndex {
 public:
  HnswIndex(int dim, HnswParams params);

  void add(const std::string &id, const EmbeddingVector &v);
  size_t size() const { return ids_.size(); }
  int dim() const { return dim_; }
  const HnswParams &params() const { return params_; }

  RetrievedSet search(const EmbeddingVector &query, int k) const;
  RetrievedSet search(const EmbeddingVector &query, int k, int ef_search) const;

  void save(const std::string &path) const;
  static HnswIndex load(const std::string &path);

 private:
  struct Node {
    // links[level] holds neighbor indices at that level; size() - 1 is the
    // node's top level.
    std::vector<std::vector<uint32_t>> links;
  };

  float dist(const EmbeddingVector &a, uint32_t node) const;
  int sample_level();
  uint32_t greedy_descend(const EmbeddingVector &query, uint32_t start, int from_level,
                          int to_level) const;
  // Best-first search at one level; returns (distance, node) pairs, closest
  // first, at most ef entries.
  std::vector<std::pair<float, uint32_t>> search_level(const EmbeddingVector &query, uint32_t start,
                                                       int ef, int level) const;
  std::vector<uint32_t> select_neighbors(std::vector<std::pair<float, uint32_t>> candidates,
                                         int max_links) const;
  void connect(uint32_t node, const std::vector<uint32_t> &neighbors, int level);

  int dim_;
  HnswParams params_;
  std::vector<std::string> ids_;
  std::vector<EmbeddingVector> vectors_;
  std::vector<Node> nodes_;
  uint32_t entry_point_ = 0;
  int max_level_ = -1;
  std::mt19937_64 rng_;
};

}  // namespace ragqa

#endif  // RAGQA_INDEX_HPP
