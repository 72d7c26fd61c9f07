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

#include <cmath>
#include <sstream>

#include "ragqa/embed.hpp"
#include "testutil.hpp"

using namespace ragqa;
using testutil::TempDir;

namespace {

// Independent re-statement of the hashing scheme, kept free of the
// production code path: FNV-1a for the bucket, salted FNV-1a for the sign,
// 1/sqrt(n_tokens) scaling.
Eigen::VectorXf reference_hash_embedding(const std::vector<std::string> &tokens, int dim) {
  auto fnv = [](const std::string &s, uint64_t h) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  };
  Eigen::VectorXf v = Eigen::VectorXf::Zero(dim);
  for (const std::string &t : tokens) {
    uint64_t bucket = fnv(t, 14695981039346656037ull) % static_cast<uint64_t>(dim);
    float sign = (fnv(t, 0x9e3779b97f4a7c15ull) & 1u) ? 1.0f : -1.0f;
    v[static_cast<int>(bucket)] += sign;
  }
  if (!tokens.empty()) v /= std::sqrt(static_cast<float>(tokens.size()));
  return v;
}

}  // namespace

TEST_CASE("same query text encodes to identical vectors") {
  HashedEncoder enc(16);
  RetrievalQuery q{"what animal has a long neck", "two giraffes standing"};
  EmbeddingVector a = encode_query(enc, q);
  EmbeddingVector b = encode_query(enc, q);
  CHECK(a == b);
  CHECK(a.size() == 16);
}

TEST_CASE("empty caption encodes the question text alone") {
  HashedEncoder enc(32);
  EmbeddingVector with_empty = encode_query(enc, {"what animal", ""});
  EmbeddingVector question_only = enc.encode_text("what animal");
  CHECK(with_empty == question_only);
}

TEST_CASE("hashed provider matches the reference implementation") {
  HashedEncoder enc(4);
  CHECK(enc.encode_text("cat") == reference_hash_embedding({"cat"}, 4));

  HashedEncoder enc64(64);
  CHECK(enc64.encode_text("The Giraffe has a LONG neck") ==
        reference_hash_embedding({"the", "giraffe", "has", "a", "long", "neck"}, 64));
}

TEST_CASE("empty text encodes to the zero vector") {
  HashedEncoder enc(8);
  CHECK(enc.encode_text("").isZero());
  CHECK(enc.encode_text("  \t ").isZero());
}

TEST_CASE("identical passages encode identically, titles matter") {
  HashedEncoder enc(64);
  Passage a{"p1", "Giraffe", "has a long neck"};
  Passage b{"p2", "Giraffe", "has a long neck"};
  Passage c{"p3", "Okapi", "has a long neck"};
  CHECK(encode_passage(enc, a) == encode_passage(enc, b));
  CHECK(encode_passage(enc, a) != encode_passage(enc, c));
}

TEST_CASE("batch encode equals single encodes") {
  HashedEncoder enc(32);
  std::vector<Passage> passages;
  for (int i = 0; i < 8; ++i)
    passages.push_back({"p" + std::to_string(i), "title " + std::to_string(i),
                        "body text number " + std::to_string(i)});
  std::vector<EmbeddingVector> batch;
  for (const Passage &p : passages) batch.push_back(encode_passage(enc, p));
  for (size_t i = 0; i < passages.size(); ++i)
    CHECK(batch[i] == encode_passage(enc, passages[i]));
}

TEST_CASE("dimension closure: every emitted vector has the provider dim") {
  for (int dim : {1, 3, 64, 257}) {
    HashedEncoder enc(dim);
    CHECK(enc.encode_text("one two three").size() == dim);
    CHECK(enc.encode_text("").size() == dim);
  }
}

TEST_CASE("embedding file round-trip is bitwise exact") {
  TempDir dir;
  std::vector<std::pair<std::string, EmbeddingVector>> records;
  HashedEncoder enc(8);
  for (int i = 0; i < 5; ++i)
    records.emplace_back("id" + std::to_string(i),
                         enc.encode_text("token" + std::to_string(i) + " extra"));
  save_embeddings(dir.file("e.bin"), records);

  FileEmbeddingProvider p = FileEmbeddingProvider::load(dir.file("e.bin"));
  CHECK(p.dim() == 8);
  CHECK(p.size() == 5);
  for (const auto &[id, v] : records) {
    EmbeddingVector got = p.encode(id, "");
    CHECK(got == v);  // bitwise: same f32 data through the file
  }
}

TEST_CASE("file provider reports missing embeddings") {
  TempDir dir;
  save_embeddings(dir.file("e.bin"), {{"known", Eigen::VectorXf::Ones(4)}});
  FileEmbeddingProvider p = FileEmbeddingProvider::load(dir.file("e.bin"));
  try {
    p.encode("unknown", "");
    FAIL("expected missing-embedding error");
  } catch (const std::exception &e) {
    CHECK(std::string(e.what()).find("unknown") != std::string::npos);
  }
}

TEST_CASE("mixed dimensions are rejected naming the offending id") {
  std::vector<std::pair<std::string, EmbeddingVector>> records = {
      {"a", Eigen::VectorXf::Zero(8)}, {"b", Eigen::VectorXf::Zero(16)}};
  TempDir dir;
  try {
    save_embeddings(dir.file("e.bin"), records);
    FAIL("expected dimension error");
  } catch (const std::exception &e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
}

TEST_CASE("encode_query requires a question") {
  HashedEncoder enc(8);
  CHECK_THROWS(encode_query(enc, {"", "caption only"}));
}
