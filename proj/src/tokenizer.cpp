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

#include "ragqa/tokenizer.hpp"

#include <algorithm>
#include <stdexcept>

#include "ragqa/embed.hpp"
#include "ragqa/io.hpp"

namespace ragqa {

Tokenizer Tokenizer::build(const std::vector<std::string> &texts, int vocab_size) {
  if (vocab_size <= kNumSpecial)
    throw std::invalid_argument("Tokenizer: vocab_size must exceed the special-token count");
  std::unordered_map<std::string, int64_t> counts;
  for (const std::string &text : texts)
    for (std::string &tok : tokenize_whitespace_lower(text)) ++counts[std::move(tok)];

  std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Tokenizer t;
  size_t keep = std::min<size_t>(ranked.size(), static_cast<size_t>(vocab_size - kNumSpecial));
  t.words_.reserve(keep);
  for (size_t i = 0; i < keep; ++i) {
    t.ids_.emplace(ranked[i].first, kNumSpecial + static_cast<int>(i));
    t.words_.push_back(std::move(ranked[i].first));
  }
  return t;
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  std::vector<int> out;
  for (const std::string &tok : tokenize_whitespace_lower(text)) out.push_back(word_id(tok));
  return out;
}

int Tokenizer::word_id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

std::string Tokenizer::decode(const std::vector<int> &ids) const {
  std::string out;
  for (int id : ids) {
    if (id < kNumSpecial) continue;
    size_t w = static_cast<size_t>(id - kNumSpecial);
    if (w >= words_.size()) throw std::out_of_range("Tokenizer::decode: id out of vocabulary");
    if (!out.empty()) out.push_back(' ');
    out += words_[w];
  }
  return out;
}

void Tokenizer::save(std::ostream &out) const {
  io::write_u32(out, static_cast<uint32_t>(words_.size()));
  for (const std::string &w : words_) io::write_string(out, w);
}

Tokenizer Tokenizer::load(std::istream &in) {
  uint32_t count = io::read_u32(in);
  Tokenizer t;
  t.words_.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    std::string w = io::read_string(in);
    t.ids_.emplace(w, kNumSpecial + static_cast<int>(i));
    t.words_.push_back(std::move(w));
  }
  return t;
}

}  // namespace ragqa
