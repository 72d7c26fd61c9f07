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

#include "ragqa/fid.hpp"

namespace ragqa {
namespace fid {

std::string build_input_text(const std::string &question, const VisualContext &visual,
                             const Passage &passage) {
  // No separator tokens between segments; the "question:"/"title:"/
  // "context:" prefixes are plain words.
  std::vector<std::string> segments;
  segments.push_back("question:");
  if (!question.empty()) segments.push_back(question);
  if (!visual.caption.empty()) segments.push_back(visual.caption);
  for (const std::string &label : visual.dense_labels)
    if (!label.empty()) segments.push_back(label);
  for (const std::string &token : visual.ocr)
    if (!token.empty()) segments.push_back(token);
  segments.push_back("title:");
  if (!passage.title.empty()) segments.push_back(passage.title);
  segments.push_back("context:");
  if (!passage.body.empty()) segments.push_back(passage.body);

  std::string text;
  for (const std::string &seg : segments) {
    if (!text.empty()) text.push_back(' ');
    text += seg;
  }
  return text;
}

std::vector<int> build_input(const Tokenizer &tokenizer, const std::string &question,
                             const VisualContext &visual, const Passage &passage, int max_len) {
  if (max_len < 1) throw std::invalid_argument("build_input: max_len must be >= 1");
  std::vector<int> tokens = tokenizer.encode(build_input_text(question, visual, passage));
  if (static_cast<int>(tokens.size()) > max_len) tokens.resize(static_cast<size_t>(max_len));
  tokens.resize(static_cast<size_t>(max_len), Tokenizer::kPad);
  return tokens;
}

}  // namespace fid
}  // namespace ragqa
