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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ragqa/bm25.hpp"
#include "ragqa/index.hpp"
#include "testutil.hpp"

using namespace ragqa;
using testutil::TempDir;

namespace {

Eigen::VectorXf random_vector(std::mt19937 &rng, int dim) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Eigen::VectorXf v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  return v;
}

// O(N*d) scan, sorted by score descending then id ascending; the oracle
// flat_search is required to match exactly.
std::vector<RetrievedEntry> brute_force(const std::vector<std::pair<std::string, Eigen::VectorXf>> &data,
                                        const Eigen::VectorXf &q, int k) {
  std::vector<RetrievedEntry> all;
  for (const auto &[id, v] : data) {
    float s = 0.0f;
    for (int i = 0; i < q.size(); ++i) s += q[i] * v[i];
    all.push_back({id, s});
  }
  std::sort(all.begin(), all.end(), [](const RetrievedEntry &a, const RetrievedEntry &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
  });
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<size_t>(k));
  return all;
}

double recall_against(const RetrievedSet &truth, const RetrievedSet &approx) {
  std::set<std::string> truth_ids;
  for (const auto &e : truth.entries) truth_ids.insert(e.passage_id);
  int found = 0;
  for (const auto &e : approx.entries) found += truth_ids.count(e.passage_id) ? 1 : 0;
  return truth.entries.empty() ? 1.0 : static_cast<double>(found) / truth_ids.size();
}

}  // namespace

TEST_CASE("similarity is the dot product") {
  Eigen::VectorXf a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CHECK(similarity(a, b) == 0.0f);
  CHECK(similarity(a, a) == 1.0f);

  Eigen::VectorXf c(3), d(3);
  c << 0.5f, -2.0f, 3.0f;
  d << 4.0f, 1.0f, -1.0f;
  CHECK(similarity(c, d) == doctest::Approx(-3.0));
  CHECK(similarity(c, d) == similarity(d, c));

  Eigen::VectorXf e(4);
  CHECK_THROWS(similarity(a, e));
}

TEST_CASE("flat search on a single-vector corpus") {
  FlatIndex idx(4);
  idx.add("only", Eigen::VectorXf::Ones(4));
  for (int k : {1, 3, 10}) {
    RetrievedSet r = idx.search(Eigen::VectorXf::Ones(4), k);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].passage_id == "only");
  }
}

TEST_CASE("flat search with k equal to corpus size returns everything sorted") {
  std::mt19937 rng(7);
  FlatIndex idx(8);
  for (int i = 0; i < 20; ++i) idx.add("p" + std::to_string(i), random_vector(rng, 8));
  RetrievedSet r = idx.search(random_vector(rng, 8), 20);
  CHECK(r.entries.size() == 20);
  for (size_t i = 1; i < r.entries.size(); ++i)
    CHECK(r.entries[i - 1].score >= r.entries[i].score);
}

TEST_CASE("flat search equals the brute-force oracle on 100 random vectors") {
  std::mt19937 rng(42);
  const int dim = 16;
  std::vector<std::pair<std::string, Eigen::VectorXf>> data;
  FlatIndex idx(dim);
  for (int i = 0; i < 100; ++i) {
    auto v = random_vector(rng, dim);
    std::string id = "p" + std::to_string(i);
    data.emplace_back(id, v);
    idx.add(id, v);
  }
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXf q = random_vector(rng, dim);
    auto expected = brute_force(data, q, 10);
    RetrievedSet got = idx.search(q, 10);
    REQUIRE(got.entries.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
      CHECK(got.entries[i].passage_id == expected[i].passage_id);
      CHECK(got.entries[i].score == expected[i].score);
    }
  }
}

TEST_CASE("flat search ties break by ascending passage id") {
  FlatIndex idx(2);
  Eigen::VectorXf v(2);
  v << 1, 0;
  idx.add("zebra", v);
  idx.add("aardvark", v);
  idx.add("moose", v);
  RetrievedSet r = idx.search(v, 3);
  CHECK(r.entries[0].passage_id == "aardvark");
  CHECK(r.entries[1].passage_id == "moose");
  CHECK(r.entries[2].passage_id == "zebra");
}

TEST_CASE("flat search rejects non-positive k") {
  FlatIndex idx(2);
  idx.add("p", Eigen::VectorXf::Zero(2));
  CHECK_THROWS(idx.search(Eigen::VectorXf::Zero(2), 0));
  CHECK_THROWS(idx.search(Eigen::VectorXf::Zero(2), -3));
}

TEST_CASE("monotone containment: top-k is contained in top-(k+1)") {
  std::mt19937 rng(3);
  FlatIndex idx(8);
  for (int i = 0; i < 50; ++i) idx.add("p" + std::to_string(i), random_vector(rng, 8));
  Eigen::VectorXf q = random_vector(rng, 8);
  for (int k = 1; k < 20; ++k) {
    RetrievedSet small = idx.search(q, k);
    RetrievedSet big = idx.search(q, k + 1);
    std::set<std::string> big_ids;
    for (const auto &e : big.entries) big_ids.insert(e.passage_id);
    for (const auto &e : small.entries) CHECK(big_ids.count(e.passage_id) == 1);
  }
}

TEST_CASE("hnsw on an empty index returns empty results") {
  HnswIndex idx(8, HnswParams{});
  RetrievedSet r = idx.search(Eigen::VectorXf::Zero(8), 5, 16);
  CHECK(r.entries.empty());
}

TEST_CASE("hnsw insert rejects mismatched dimensions") {
  HnswIndex idx(8, HnswParams{});
  CHECK_THROWS(idx.add("bad", Eigen::VectorXf::Zero(4)));
}

TEST_CASE("hnsw rejects ef_search below k") {
  HnswIndex idx(4, HnswParams{});
  idx.add("p", Eigen::VectorXf::Ones(4));
  CHECK_THROWS(idx.search(Eigen::VectorXf::Ones(4), 10, 5));
}

TEST_CASE("hnsw self-retrieval ranks the stored vector first") {
  std::mt19937 rng(11);
  HnswParams params;
  params.seed = 5;
  HnswIndex idx(16, params);
  std::vector<Eigen::VectorXf> stored;
  for (int i = 0; i < 200; ++i) {
    // Unit-normalized so each vector maximizes the dot product with itself.
    Eigen::VectorXf v = random_vector(rng, 16).normalized();
    stored.push_back(v);
    idx.add("p" + std::to_string(i), v);
  }
  for (int i = 0; i < 200; i += 17) {
    RetrievedSet r = idx.search(stored[static_cast<size_t>(i)], 1, 64);
    REQUIRE(!r.entries.empty());
    CHECK(r.entries[0].passage_id == "p" + std::to_string(i));
  }
}

TEST_CASE("hnsw k=1 on two well-separated vectors finds the true nearest") {
  HnswParams params;
  HnswIndex idx(2, params);
  Eigen::VectorXf a(2), b(2), q(2);
  a << 1, 0;
  b << 0, 1;
  q << 0.9f, 0.1f;
  idx.add("a", a);
  idx.add("b", b);
  RetrievedSet r = idx.search(q, 1, 4);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].passage_id == "a");
}

TEST_CASE("hnsw build is deterministic for a fixed seed") {
  std::mt19937 rng(21);
  const int dim = 16;
  std::vector<Eigen::VectorXf> data;
  for (int i = 0; i < 300; ++i) data.push_back(random_vector(rng, dim));

  HnswParams params;
  params.seed = 9;
  HnswIndex a(dim, params), b(dim, params);
  for (int i = 0; i < 300; ++i) {
    a.add("p" + std::to_string(i), data[static_cast<size_t>(i)]);
    b.add("p" + std::to_string(i), data[static_cast<size_t>(i)]);
  }
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXf q = random_vector(rng, dim);
    RetrievedSet ra = a.search(q, 10, 64);
    RetrievedSet rb = b.search(q, 10, 64);
    REQUIRE(ra.entries.size() == rb.entries.size());
    for (size_t i = 0; i < ra.entries.size(); ++i) {
      CHECK(ra.entries[i].passage_id == rb.entries[i].passage_id);
      CHECK(ra.entries[i].score == rb.entries[i].score);
    }
  }
}

TEST_CASE("hnsw recall against the flat oracle on 2k vectors") {
  std::mt19937 rng(33);
  const int dim = 32;
  FlatIndex flat(dim);
  HnswParams params;
  params.seed = 1;
  HnswIndex hnsw(dim, params);
  for (int i = 0; i < 2000; ++i) {
    Eigen::VectorXf v = random_vector(rng, dim);
    std::string id = "p" + std::to_string(i);
    flat.add(id, v);
    hnsw.add(id, v);
  }
  double recall = 0.0;
  const int queries = 30;
  for (int t = 0; t < queries; ++t) {
    Eigen::VectorXf q = random_vector(rng, dim);
    recall += recall_against(flat.search(q, 10), hnsw.search(q, 10, 128));
  }
  recall /= queries;
  CHECK(recall >= 0.9);
}

TEST_CASE("index save/load preserves all search results exactly") {
  TempDir dir;
  std::mt19937 rng(55);
  const int dim = 12;
  FlatIndex flat(dim);
  HnswParams params;
  params.seed = 2;
  HnswIndex hnsw(dim, params);
  for (int i = 0; i < 150; ++i) {
    Eigen::VectorXf v = random_vector(rng, dim);
    flat.add("p" + std::to_string(i), v);
    hnsw.add("p" + std::to_string(i), v);
  }
  flat.save(dir.file("flat.bin"));
  hnsw.save(dir.file("hnsw.bin"));
  FlatIndex flat2 = FlatIndex::load(dir.file("flat.bin"));
  HnswIndex hnsw2 = HnswIndex::load(dir.file("hnsw.bin"));

  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXf q = random_vector(rng, dim);
    RetrievedSet f1 = flat.search(q, 7), f2 = flat2.search(q, 7);
    RetrievedSet h1 = hnsw.search(q, 7, 32), h2 = hnsw2.search(q, 7, 32);
    REQUIRE(f1.entries.size() == f2.entries.size());
    REQUIRE(h1.entries.size() == h2.entries.size());
    for (size_t i = 0; i < f1.entries.size(); ++i) {
      CHECK(f1.entries[i].passage_id == f2.entries[i].passage_id);
      CHECK(f1.entries[i].score == f2.entries[i].score);
    }
    for (size_t i = 0; i < h1.entries.size(); ++i) {
      CHECK(h1.entries[i].passage_id == h2.entries[i].passage_id);
      CHECK(h1.entries[i].score == h2.entries[i].score);
    }
  }
}

TEST_CASE("bm25: query terms absent from every document score zero") {
  Corpus corpus;
  corpus.add({"d1", "Giraffe", "giraffe has long neck"});
  corpus.add({"d2", "Okapi", "okapi has neck"});
  RetrievedSet r = bm25_search(corpus, "quantum submarine", 2);
  for (const auto &e : r.entries) CHECK(e.score == 0.0f);
}

TEST_CASE("bm25: single-doc corpus containing the term scores positive") {
  Corpus corpus;
  corpus.add({"d1", "Giraffe", "the giraffe has a long neck"});
  RetrievedSet r = bm25_search(corpus, "giraffe", 1);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].passage_id == "d1");
  CHECK(r.entries[0].score > 0.0f);
}

TEST_CASE("bm25 matches a hand computation on a 3-doc corpus") {
  Corpus corpus;
  corpus.add({"d1", "Giraffe", "giraffe has long neck"});
  corpus.add({"d2", "Okapi", "okapi has neck"});
  corpus.add({"d3", "Train", "train has wheels"});
  // Tokenized title+body lengths: d1 = 5, d2 = 4, d3 = 4; avgdl = 13/3.
  // df(giraffe) = 1 (tf 2 in d1), df(neck) = 2 (tf 1 in d1 and d2).
  const double k1 = 1.2, b = 0.75, avgdl = 13.0 / 3.0;
  auto idf = [&](double df) { return std::log(1.0 + (3.0 - df + 0.5) / (df + 0.5)); };
  auto tf_part = [&](double tf, double dl) {
    return tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
  };
  double d1_expected = idf(1) * tf_part(2, 5) + idf(2) * tf_part(1, 5);
  double d2_expected = idf(2) * tf_part(1, 4);

  RetrievedSet r = bm25_search(corpus, "giraffe neck", 3);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.entries[0].passage_id == "d1");
  CHECK(r.entries[0].score == doctest::Approx(d1_expected).epsilon(1e-6));
  CHECK(r.entries[1].passage_id == "d2");
  CHECK(r.entries[1].score == doctest::Approx(d2_expected).epsilon(1e-6));
  CHECK(r.entries[2].score == 0.0f);
}

TEST_CASE("every searcher returns non-increasing scores") {
  std::mt19937 rng(77);
  FlatIndex flat(8);
  HnswParams params;
  HnswIndex hnsw(8, params);
  Corpus corpus;
  for (int i = 0; i < 60; ++i) {
    Eigen::VectorXf v = random_vector(rng, 8);
    flat.add("p" + std::to_string(i), v);
    hnsw.add("p" + std::to_string(i), v);
    corpus.add({"p" + std::to_string(i), "title", "word" + std::to_string(i % 7) + " filler"});
  }
  Bm25Index bm25(corpus);
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXf q = random_vector(rng, 8);
    for (const RetrievedSet &r :
         {flat.search(q, 12), hnsw.search(q, 12, 48), bm25.search("word3 filler", 12)}) {
      for (size_t i = 1; i < r.entries.size(); ++i)
        CHECK(r.entries[i - 1].score >= r.entries[i].score);
    }
  }
}
