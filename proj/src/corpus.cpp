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

#include "ragqa/corpus.hpp"

#include <fstream>
#include <stdexcept>

#include "ragqa/io.hpp"
#include <json.hpp>

namespace ragqa {

namespace {

constexpr char kCorpusMagic[4] = {'R', 'G', 'Q', 'C'};
constexpr uint32_t kCorpusVersion = 1;

using nlohmann::json;

std::string require_string(const json &j, const char *field, size_t line) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string())
    throw std::runtime_error("line " + std::to_string(line) + ": missing or non-string field '" +
                             field + "'");
  return it->get<std::string>();
}

std::string optional_string(const json &j, const char *field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw std::runtime_error(std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::string> optional_string_list(const json &j, const char *field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_array()) throw std::runtime_error(std::string("field '") + field + "' must be a list");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto &e : *it) {
    if (!e.is_string()) throw std::runtime_error(std::string("field '") + field + "' must be a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

// Iterates non-empty records of a line-delimited file. Blank lines are
// skipped but still counted for error reporting.
template <class Fn>
void for_each_line(const std::string &path, Fn &&fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = line.find_first_not_of(" \t") == std::string::npos;
    if (blank) continue;
    fn(line, line_no);
  }
}

json parse_json_line(const std::string &line, size_t line_no) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw std::runtime_error("line " + std::to_string(line_no) + ": malformed record");
  return j;
}

}  // namespace

void Corpus::add(Passage p, size_t line) {
  if (p.id.empty())
    throw std::runtime_error("line " + std::to_string(line) + ": passage id must be non-empty");
  if (p.body.empty())
    throw std::runtime_error("line " + std::to_string(line) + ": passage '" + p.id +
                             "' has an empty body");
  auto [it, inserted] = by_id_.emplace(p.id, passages_.size());
  if (!inserted)
    throw std::runtime_error("line " + std::to_string(line) + ": duplicate passage id '" + p.id +
                             "'");
  passages_.push_back(std::move(p));
}

const Passage *Corpus::lookup(const std::string &id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &passages_[it->second];
}

void Corpus::save(const std::string &path) const {
  std::ofstream out = io::open_output(path);
  io::write_magic(out, kCorpusMagic);
  io::write_u32(out, kCorpusVersion);
  io::write_u64(out, passages_.size());
  for (const Passage &p : passages_) {
    io::write_string(out, p.id);
    io::write_string(out, p.title);
    io::write_string(out, p.body);
  }
}

Corpus Corpus::load(const std::string &path) {
  std::ifstream in = io::open_input(path);
  io::check_magic(in, kCorpusMagic, "corpus");
  uint32_t version = io::read_u32(in);
  if (version != kCorpusVersion)
    throw std::runtime_error("corpus: unsupported format version " + std::to_string(version));
  uint64_t count = io::read_u64(in);
  Corpus c;
  for (uint64_t i = 0; i < count; ++i) {
    Passage p;
    p.id = io::read_string(in);
    p.title = io::read_string(in);
    p.body = io::read_string(in);
    c.add(std::move(p));
  }
  return c;
}

Corpus ingest_passages(const std::string &path) {
  Corpus c;
  for_each_line(path, [&](const std::string &line, size_t line_no) {
    json j = parse_json_line(line, line_no);
    Passage p;
    p.id = require_string(j, "id", line_no);
    p.title = optional_string(j, "title");
    p.body = require_string(j, "text", line_no);
    c.add(std::move(p), line_no);
  });
  return c;
}

QAExample parse_qa_record(const std::string &json_line, size_t line) {
  json j = parse_json_line(json_line, line);
  QAExample ex;
  ex.question_id = require_string(j, "question_id", line);
  ex.image_id = optional_string(j, "image_id");
  ex.question = require_string(j, "question", line);
  if (ex.question.empty())
    throw std::runtime_error("line " + std::to_string(line) + ": question '" + ex.question_id +
                             "' is empty");
  ex.visual.caption = optional_string(j, "caption");
  ex.visual.dense_labels = optional_string_list(j, "dense_labels");
  ex.visual.ocr = optional_string_list(j, "ocr");
  ex.annotated_answers = optional_string_list(j, "answers");
  if (!ex.annotated_answers.empty() && ex.annotated_answers.size() != 10)
    throw std::runtime_error("question '" + ex.question_id + "': expected 10 annotated answers, got " +
                             std::to_string(ex.annotated_answers.size()));
  ex.question_type = optional_string(j, "question_type");
  ex.passages = optional_string_list(j, "passages");
  return ex;
}

std::vector<QAExample> ingest_qa(const std::string &path) {
  std::vector<QAExample> out;
  for_each_line(path, [&](const std::string &line, size_t line_no) {
    out.push_back(parse_qa_record(line, line_no));
  });
  return out;
}

void write_qa(const std::string &path, const std::vector<QAExample> &examples) {
  std::ofstream out = io::open_output(path);
  for (const QAExample &ex : examples) {
    json j;
    j["question_id"] = ex.question_id;
    j["image_id"] = ex.image_id;
    j["question"] = ex.question;
    j["caption"] = ex.visual.caption;
    j["dense_labels"] = ex.visual.dense_labels;
    j["ocr"] = ex.visual.ocr;
    if (!ex.annotated_answers.empty()) j["answers"] = ex.annotated_answers;
    if (!ex.question_type.empty()) j["question_type"] = ex.question_type;
    if (!ex.passages.empty()) j["passages"] = ex.passages;
    out << j.dump() << "\n";
  }
}

}  // namespace ragqa
