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

#ifndef RAGQA_CORPUS_HPP
#define RAGQA_CORPUS_HPP

#include <string>
#include <unordered_map>
#include <vector>

namespace ragqa {

// One knowledge-base unit: a titled text passage.
struct Passage {
  std::string id;
  std::string title;
  std::string body;
};

// Textual surrogate of an image: caption, dense object/attribute labels,
// and OCR tokens. Any component may be empty.
struct VisualContext {
  std::string caption;
  std::vector<std::string> dense_labels;
  std::vector<std::string> ocr;
};

struct QAExample {
  std::string question_id;
  std::string image_id;  // reference only, image bytes never enter the system
  std::string question;
  VisualContext visual;
  std::vector<std::string> annotated_answers;  // exactly 10 when present
  std::string question_type;                   // optional category label
  std::vector<std::string> passages;           // optional: retrieved passage ids
                                               // (training dataset variant)
};

// Immutable after ingestion; iteration order equals file order.
class Corpus {
 public:
  Corpus() = default;

  // Appends a passage, rejecting duplicate ids. line is used in error
  // messages only (0 = unknown).
  void add(Passage p, size_t line = 0);

  size_t size() const { return passages_.size(); }
  bool empty() const { return passages_.empty(); }

  const Passage &at(size_t i) const { return passages_[i]; }

  // nullptr when the id is unknown; distinct from an I/O failure, which
  // throws.
  const Passage *lookup(const std::string &id) const;

  std::vector<Passage>::const_iterator begin() const { return passages_.begin(); }
  std::vector<Passage>::const_iterator end() const { return passages_.end(); }

  void save(const std::string &path) const;
  static Corpus load(const std::string &path);

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::string, size_t> by_id_;
};

// Reads one JSON record per line with fields id, title, text. Malformed
// lines and duplicate ids throw with the offending line number.
Corpus ingest_passages(const std::string &path);

// Reads one JSON record per line with fields question_id, image_id,
// question, caption, dense_labels, ocr, answers (10 when present),
// question_type, passages. Missing visual fields default to empty.
std::vector<QAExample> ingest_qa(const std::string &path);

// Parses a single QA record; line is used in error messages only.
QAExample parse_qa_record(const std::string &json_line, size_t line = 0);

void write_qa(const std::string &path, const std::vector<QAExample> &examples);

}  // namespace ragqa

#endif  // RAGQA_CORPUS_HPP
