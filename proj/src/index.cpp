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

#include "ragqa/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

#include "ragqa/io.hpp"

namespace ragqa {

namespace {

constexpr char kFlatMagic[4] = {'R', 'G', 'Q', 'F'};
constexpr char kHnswMagic[4] = {'R', 'G', 'Q', 'H'};
constexpr uint32_t kIndexVersion = 1;
constexpr uint8_t kMetricInnerProduct = 0;

void check_query(const EmbeddingVector &query, int dim, int k) {
  if (query.size() != dim)
    throw std::invalid_argument("search: query dim " + std::to_string(query.size()) +
                                " does not match index dim " + std::to_string(dim));
  if (k <= 0) throw std::invalid_argument("search: k must be positive");
}

// Final ranking shared by both indexes: score descending, ties by
// ascending passage_id for determinism.
void sort_entries(std::vector<RetrievedEntry> &entries) {
  std::sort(entries.begin(), entries.end(), [](const RetrievedEntry &a, const RetrievedEntry &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
  });
}

}  // namespace

float similarity(const EmbeddingVector &a, const EmbeddingVector &b) {
  if (a.size() != b.size())
    throw std::invalid_argument("similarity: dimension mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  // Sequential accumulation, not Eigen's vectorized dot: scores must be
  // bit-identical to a plain left-to-right scan so exact-oracle checks and
  // cross-build determinism hold.
  float sum = 0.0f;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void HnswParams::validate() const {
  if (m <= 0 || ef_construction <= 0 || ef_search <= 0)
    throw std::invalid_argument("HnswParams: m, ef_construction and ef_search must be positive");
}

// ---------------------------------------------------------------------------
// FlatIndex

FlatIndex::FlatIndex(int dim) : dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("FlatIndex: dim must be positive");
}

void FlatIndex::add(const std::string &id, const EmbeddingVector &v) {
  if (v.size() != dim_)
    throw std::invalid_argument("FlatIndex::add: vector dim " + std::to_string(v.size()) +
                                " does not match index dim " + std::to_string(dim_));
  ids_.push_back(id);
  vectors_.push_back(v);
}

RetrievedSet FlatIndex::search(const EmbeddingVector &query, int k) const {
  check_query(query, dim_, k);
  std::vector<RetrievedEntry> all;
  all.reserve(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i)
    all.push_back({ids_[i], similarity(query, vectors_[i])});
  sort_entries(all);
  size_t n = std::min<size_t>(static_cast<size_t>(k), all.size());
  all.resize(n);
  return {std::move(all), k};
}

void FlatIndex::save(const std::string &path) const {
  std::ofstream out = io::open_output(path);
  io::write_magic(out, kFlatMagic);
  io::write_u32(out, kIndexVersion);
  io::write_u8(out, kMetricInnerProduct);
  io::write_u32(out, static_cast<uint32_t>(dim_));
  io::write_u64(out, ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) {
    io::write_string(out, ids_[i]);
    io::write_f32_array(out, vectors_[i].data(), static_cast<size_t>(dim_));
  }
}

FlatIndex FlatIndex::load(const std::string &path) {
  std::ifstream in = io::open_input(path);
  io::check_magic(in, kFlatMagic, "flat index");
  uint32_t version = io::read_u32(in);
  if (version != kIndexVersion)
    throw std::runtime_error("flat index: unsupported format version " + std::to_string(version));
  uint8_t metric = io::read_u8(in);
  if (metric != kMetricInnerProduct)
    throw std::runtime_error("flat index: unsupported metric tag " + std::to_string(metric));
  int dim = static_cast<int>(io::read_u32(in));
  uint64_t count = io::read_u64(in);
  FlatIndex idx(dim);
  for (uint64_t i = 0; i < count; ++i) {
    std::string id = io::read_string(in);
    EmbeddingVector v(dim);
    io::read_f32_array(in, v.data(), static_cast<size_t>(dim));
    idx.add(id, v);
  }
  return idx;
}

// ---------------------------------------------------------------------------
// HnswIndex

HnswIndex::HnswIndex(int dim, HnswParams params) : dim_(dim), params_(params), rng_(params.seed) {
  if (dim <= 0) throw std::invalid_argument("HnswIndex: dim must be positive");
  params_.validate();
}

float HnswIndex::dist(const EmbeddingVector &a, uint32_t node) const {
  return -similarity(a, vectors_[node]);
}

int HnswIndex::sample_level() {
  // Geometric level assignment, Sec 4.1 of the HNSW paper. The uniform
  // draw is mapped from raw mt19937_64 output so the sequence is fully
  // specified by the seed.
  const double mult = 1.0 / std::log(static_cast<double>(params_.m));
  double u = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  return static_cast<int>(-std::log(u) * mult);
}

uint32_t HnswIndex::greedy_descend(const EmbeddingVector &query, uint32_t start, int from_level,
                                   int to_level) const {
  uint32_t curr = start;
  float curr_dist = dist(query, curr);
  for (int level = from_level; level > to_level; --level) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (uint32_t next : nodes_[curr].links[level]) {
        float d = dist(query, next);
        if (d < curr_dist) {
          curr_dist = d;
          curr = next;
          changed = true;
        }
      }
    }
  }
  return curr;
}

std::vector<std::pair<float, uint32_t>> HnswIndex::search_level(const EmbeddingVector &query,
                                                                uint32_t start, int ef,
                                                                int level) const {
  using Pair = std::pair<float, uint32_t>;
  std::priority_queue<Pair> top;                               // max-heap on distance
  std::priority_queue<Pair, std::vector<Pair>, std::greater<>> cand;  // min-heap on distance
  std::vector<char> visited(nodes_.size(), 0);

  float d0 = dist(query, start);
  top.emplace(d0, start);
  cand.emplace(d0, start);
  visited[start] = 1;

  while (!cand.empty()) {
    auto [d, node] = cand.top();
    if (d > top.top().first && top.size() >= static_cast<size_t>(ef)) break;
    cand.pop();
    for (uint32_t next : nodes_[node].links[level]) {
      if (visited[next]) continue;
      visited[next] = 1;
      float dn = dist(query, next);
      if (top.size() < static_cast<size_t>(ef) || dn < top.top().first) {
        cand.emplace(dn, next);
        top.emplace(dn, next);
        if (top.size() > static_cast<size_t>(ef)) top.pop();
      }
    }
  }

  std::vector<Pair> result(top.size());
  for (size_t i = top.size(); i-- > 0;) {
    result[i] = top.top();
    top.pop();
  }
  return result;  // closest first
}

std::vector<uint32_t> HnswIndex::select_neighbors(std::vector<std::pair<float, uint32_t>> candidates,
                                                  int max_links) const {
  // Heuristic neighbor selection, Algorithm 4 of the HNSW paper: a
  // candidate is kept only if it is closer to the query node than to every
  // neighbor already kept.
  std::sort(candidates.begin(), candidates.end());
  std::vector<uint32_t> selected;
  for (const auto &[d, node] : candidates) {
    if (static_cast<int>(selected.size()) >= max_links) break;
    bool good = true;
    for (uint32_t s : selected) {
      if (dist(vectors_[node], s) < d) {
        good = false;
        break;
      }
    }
    if (good) selected.push_back(node);
  }
  return selected;
}

void HnswIndex::connect(uint32_t node, const std::vector<uint32_t> &neighbors, int level) {
  int max_links = level == 0 ? 2 * params_.m : params_.m;
  nodes_[node].links[level] = neighbors;
  for (uint32_t nb : neighbors) {
    auto &links = nodes_[nb].links[level];
    if (static_cast<int>(links.size()) < max_links) {
      links.push_back(node);
    } else {
      // Re-select among existing links plus the new node.
      std::vector<std::pair<float, uint32_t>> candidates;
      candidates.reserve(links.size() + 1);
      candidates.emplace_back(dist(vectors_[nb], node), node);
      for (uint32_t other : links) candidates.emplace_back(dist(vectors_[nb], other), other);
      links = select_neighbors(std::move(candidates), max_links);
    }
  }
}

void HnswIndex::add(const std::string &id, const EmbeddingVector &v) {
  if (v.size() != dim_)
    throw std::invalid_argument("HnswIndex::add: vector dim " + std::to_string(v.size()) +
                                " does not match index dim " + std::to_string(dim_));
  uint32_t node = static_cast<uint32_t>(ids_.size());
  int level = sample_level();
  ids_.push_back(id);
  vectors_.push_back(v);
  nodes_.push_back(Node{std::vector<std::vector<uint32_t>>(level + 1)});

  if (node == 0) {
    entry_point_ = 0;
    max_level_ = level;
    return;
  }

  uint32_t curr = entry_point_;
  if (level < max_level_) curr = greedy_descend(v, curr, max_level_, level);

  for (int l = std::min(level, max_level_); l >= 0; --l) {
    auto candidates = search_level(v, curr, params_.ef_construction, l);
    auto selected = select_neighbors(candidates, params_.m);
    connect(node, selected, l);
    if (!selected.empty()) curr = selected.front();  // closest selected neighbor
  }

  if (level > max_level_) {
    max_level_ = level;
    entry_point_ = node;
  }
}

RetrievedSet HnswIndex::search(const EmbeddingVector &query, int k) const {
  return search(query, k, params_.ef_search);
}

RetrievedSet HnswIndex::search(const EmbeddingVector &query, int k, int ef_search) const {
  check_query(query, dim_, k);
  if (ef_search < k)
    throw std::invalid_argument("search: ef_search " + std::to_string(ef_search) +
                                " must be >= k " + std::to_string(k));
  if (nodes_.empty()) return {{}, k};

  uint32_t curr = greedy_descend(query, entry_point_, max_level_, 0);
  auto found = search_level(query, curr, ef_search, 0);

  std::vector<RetrievedEntry> entries;
  entries.reserve(found.size());
  for (const auto &[d, node] : found) entries.push_back({ids_[node], similarity(query, vectors_[node])});
  sort_entries(entries);
  size_t n = std::min<size_t>(static_cast<size_t>(k), entries.size());
  entries.resize(n);
  return {std::move(entries), k};
}

void HnswIndex::save(const std::string &path) const {
  std::ofstream out = io::open_output(path);
  io::write_magic(out, kHnswMagic);
  io::write_u32(out, kIndexVersion);
  io::write_u8(out, kMetricInnerProduct);
  io::write_u32(out, static_cast<uint32_t>(dim_));
  io::write_u32(out, static_cast<uint32_t>(params_.m));
  io::write_u32(out, static_cast<uint32_t>(params_.ef_construction));
  io::write_u32(out, static_cast<uint32_t>(params_.ef_search));
  io::write_u64(out, params_.seed);
  io::write_u64(out, ids_.size());
  io::write_u32(out, entry_point_);
  io::write_u32(out, static_cast<uint32_t>(max_level_ + 1));
  for (size_t i = 0; i < ids_.size(); ++i) {
    io::write_string(out, ids_[i]);
    const Node &node = nodes_[i];
    io::write_u32(out, static_cast<uint32_t>(node.links.size()));
    for (const auto &links : node.links) {
      io::write_u32(out, static_cast<uint32_t>(links.size()));
      for (uint32_t nb : links) io::write_u32(out, nb);
    }
  }
  for (size_t i = 0; i < ids_.size(); ++i)
    io::write_f32_array(out, vectors_[i].data(), static_cast<size_t>(dim_));
}

HnswIndex HnswIndex::load(const std::string &path) {
  std::ifstream in = io::open_input(path);
  io::check_magic(in, kHnswMagic, "hnsw index");
  uint32_t version = io::read_u32(in);
  if (version != kIndexVersion)
    throw std::runtime_error("hnsw index: unsupported format version " + std::to_string(version));
  uint8_t metric = io::read_u8(in);
  if (metric != kMetricInnerProduct)
    throw std::runtime_error("hnsw index: unsupported metric tag " + std::to_string(metric));
  int dim = static_cast<int>(io::read_u32(in));
  HnswParams params;
  params.m = static_cast<int>(io::read_u32(in));
  params.ef_construction = static_cast<int>(io::read_u32(in));
  params.ef_search = static_cast<int>(io::read_u32(in));
  params.seed = io::read_u64(in);
  uint64_t count = io::read_u64(in);

  HnswIndex idx(dim, params);
  idx.entry_point_ = io::read_u32(in);
  idx.max_level_ = static_cast<int>(io::read_u32(in)) - 1;
  idx.ids_.resize(count);
  idx.nodes_.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    idx.ids_[i] = io::read_string(in);
    uint32_t levels = io::read_u32(in);
    idx.nodes_[i].links.resize(levels);
    for (auto &links : idx.nodes_[i].links) {
      links.resize(io::read_u32(in));
      for (uint32_t &nb : links) nb = io::read_u32(in);
    }
  }
  idx.vectors_.assign(count, EmbeddingVector(dim));
  for (uint64_t i = 0; i < count; ++i)
    io::read_f32_array(in, idx.vectors_[i].data(), static_cast<size_t>(dim));
  return idx;
}

}  // namespace ragqa
