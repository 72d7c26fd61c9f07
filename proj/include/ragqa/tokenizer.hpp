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

#ifndef RAGQA_TOKENIZER_HPP
#define RAGQA_TOKENIZER_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ragqa {

// Word-level vocabulary over lowercase whitespace tokens, with fixed
// special ids. Vocabulary order is frequency-descending with
// lexicographic tie-breaks, so building is deterministic.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSpecial = 4;

  Tokenizer() = default;

  // vocab_size caps the total vocabulary including the special tokens.
  static Tokenizer build(const std::vector<std::string> &texts, int vocab_size);

  std::vector<int> encode(std::string_view text) const;
  // Joins word tokens with single spaces, skipping special ids.
  std::string decode(const std::vector<int> &ids) const;

  int vocab_size() const { return kNumSpecial + static_cast<int>(words_.size()); }
  int word_id(std::string_view word) const;

  void save(std::ostream &out) const;
  static Tokenizer load(std::istream &in);

 private:
  std::vector<std::string> words_;  // id = kNumSpecial + position
  std::unordered_map<std::string, int> ids_;
};

}  // namespace ragqa

#endif  // RAGQA_TOKENIZER_HPP
