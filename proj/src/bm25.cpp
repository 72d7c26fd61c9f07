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

#include "ragqa/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ragqa {

Bm25Index::Bm25Index(const Corpus &corpus) {
  double total_len = 0.0;
  for (const Passage &p : corpus) {
    std::string text = p.title.empty() ? p.body : p.title + " " + p.body;
    std::vector<std::string> tokens = tokenize_whitespace_lower(text);
    std::unordered_map<std::string, int> tf;
    for (const std::string &t : tokens) ++tf[t];
    for (const auto &[term, count] : tf) ++doc_freq_[term];
    doc_ids_.push_back(p.id);
    doc_len_.push_back(static_cast<double>(tokens.size()));
    term_freq_.push_back(std::move(tf));
    total_len += static_cast<double>(tokens.size());
  }
  avg_doc_len_ = doc_ids_.empty() ? 0.0 : total_len / static_cast<double>(doc_ids_.size());
}

RetrievedSet Bm25Index::search(const std::string &query_text, int k) const {
  if (k <= 0) throw std::invalid_argument("bm25_search: k must be positive");
  const double n_docs = static_cast<double>(doc_ids_.size());

  // Unique query terms; Okapi's query-frequency component is omitted, which
  // is exact for the short queries this engine issues.
  std::set<std::string> terms;
  for (const std::string &t : tokenize_whitespace_lower(query_text)) terms.insert(t);

  std::vector<RetrievedEntry> all;
  all.reserve(doc_ids_.size());
  for (size_t i = 0; i < doc_ids_.size(); ++i) {
    double score = 0.0;
    for (const std::string &term : terms) {
      auto df_it = doc_freq_.find(term);
      if (df_it == doc_freq_.end()) continue;
      auto tf_it = term_freq_[i].find(term);
      if (tf_it == term_freq_[i].end()) continue;
      double df = static_cast<double>(df_it->second);
      double tf = static_cast<double>(tf_it->second);
      double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
      double norm = kK1 * (1.0 - kB + kB * doc_len_[i] / avg_doc_len_);
      score += idf * tf * (kK1 + 1.0) / (tf + norm);
    }
    all.push_back({doc_ids_[i], static_cast<float>(score)});
  }

  std::sort(all.begin(), all.end(), [](const RetrievedEntry &a, const RetrievedEntry &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
  });
  size_t n = std::min<size_t>(static_cast<size_t>(k), all.size());
  all.resize(n);
  return {std::move(all), k};
}

RetrievedSet bm25_search(const Corpus &corpus, const std::string &query_text, int k) {
  return Bm25Index(corpus).search(query_text, k);
}

}  // namespace ragqa
