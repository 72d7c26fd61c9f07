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

#ifndef RAGQA_BM25_HPP
#define RAGQA_BM25_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "ragqa/corpus.hpp"
#include "ragqa/index.hpp"

namespace ragqa {

// Okapi BM25 over lowercase whitespace tokens of title+body. Uses the
// non-negative idf variant ln(1 + (N - df + 0.5) / (df + 0.5)).
class Bm25Index {
 public:
  static constexpr double kK1 = 1.2;
  static constexpr double kB = 0.75;

  explicit Bm25Index(const Corpus &corpus);

  RetrievedSet search(const std::string &query_text, int k) const;

  size_t size() const { return doc_ids_.size(); }

 private:
  std::vector<std::string> doc_ids_;
  std::vector<double> doc_len_;
  std::vector<std::unordered_map<std::string, int>> term_freq_;
  std::unordered_map<std::string, int> doc_freq_;
  double avg_doc_len_ = 0.0;
};

// Convenience wrapper building a throwaway index.
RetrievedSet bm25_search(const Corpus &corpus, const std::string &query_text, int k);

}  // namespace ragqa

#endif  // RAGQA_BM25_HPP
