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

#include "ragqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "ragqa/decode.hpp"
#include "ragqa/io.hpp"
#include <json.hpp>

namespace ragqa {

namespace {

using nlohmann::json;

int match_count(const std::string &prediction, const std::vector<std::string> &annotations) {
  std::string normalized = normalize_answer(prediction);
  int count = 0;
  for (const std::string &a : annotations)
    if (normalize_answer(a) == normalized) ++count;
  return count;
}

void require_annotations(const std::vector<std::string> &annotations, const std::string &where) {
  if (annotations.size() != 10)
    throw std::invalid_argument(where + ": expected 10 annotated answers, got " +
                                std::to_string(annotations.size()));
}

}  // namespace

int exact_match(const std::string &prediction, const std::vector<std::string> &annotated_answers) {
  require_annotations(annotated_answers, "exact_match");
  return match_count(prediction, annotated_answers) > 0 ? 1 : 0;
}

double vqa_score(const std::string &prediction, const std::vector<std::string> &annotated_answers,
                 bool official_variant) {
  require_annotations(annotated_answers, "vqa_score");
  std::string normalized = normalize_answer(prediction);
  if (!official_variant) {
    int count = match_count(prediction, annotated_answers);
    return std::min(1.0, static_cast<double>(count) / 3.0);
  }
  // Leave-one-out average: each annotator is held out in turn and the
  // prediction is scored against the remaining nine.
  double total = 0.0;
  for (size_t hold = 0; hold < annotated_answers.size(); ++hold) {
    int count = 0;
    for (size_t i = 0; i < annotated_answers.size(); ++i) {
      if (i == hold) continue;
      if (normalize_answer(annotated_answers[i]) == normalized) ++count;
    }
    total += std::min(1.0, static_cast<double>(count) / 3.0);
  }
  return total / static_cast<double>(annotated_answers.size());
}

double hit_at_k(const std::vector<QAExample> &examples,
                const std::vector<RetrievalRecord> &retrievals, const Corpus &corpus, int k) {
  if (k < 1) throw std::invalid_argument("hit_at_k: k must be >= 1");
  if (examples.empty()) throw std::invalid_argument("hit_at_k: no examples");
  std::map<std::string, const RetrievalRecord *> by_id;
  for (const RetrievalRecord &r : retrievals) by_id[r.question_id] = &r;

  int hits = 0;
  for (const QAExample &ex : examples) {
    auto it = by_id.find(ex.question_id);
    if (it == by_id.end())
      throw std::runtime_error("hit_at_k: no retrieval record for question '" + ex.question_id +
                               "'");
    const RetrievalRecord &rec = *it->second;
    if (static_cast<int>(rec.entries.size()) < k)
      throw std::runtime_error("hit_at_k: question '" + ex.question_id + "' has only " +
                               std::to_string(rec.entries.size()) + " retrieved passages, need " +
                               std::to_string(k));
    if (ex.annotated_answers.empty())
      throw std::runtime_error("hit_at_k: question '" + ex.question_id + "' has no answers");

    std::vector<std::string> normalized_answers;
    for (const std::string &a : ex.annotated_answers) {
      std::string n = normalize_answer(a);
      if (!n.empty()) normalized_answers.push_back(std::move(n));
    }

    bool hit = false;
    for (int i = 0; i < k && !hit; ++i) {
      const Passage *p = corpus.lookup(rec.entries[static_cast<size_t>(i)].passage_id);
      if (!p)
        throw std::runtime_error("hit_at_k: retrieved passage '" +
                                 rec.entries[static_cast<size_t>(i)].passage_id +
                                 "' is not in the corpus");
      std::string text = normalize_answer(p->title + " " + p->body);
      for (const std::string &a : normalized_answers) {
        if (text.find(a) != std::string::npos) {
          hit = true;
          break;
        }
      }
    }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

std::pair<double, double> best_of_beams(const std::vector<Prediction> &predictions,
                                        const std::vector<QAExample> &examples, int k) {
  if (k < 1) throw std::invalid_argument("best_of_beams: k must be >= 1");
  if (examples.empty()) throw std::invalid_argument("best_of_beams: no examples");
  std::map<std::string, const Prediction *> by_id;
  for (const Prediction &p : predictions) by_id[p.question_id] = &p;

  double em_total = 0.0, vqa_total = 0.0;
  for (const QAExample &ex : examples) {
    auto it = by_id.find(ex.question_id);
    if (it == by_id.end())
      throw std::runtime_error("best_of_beams: no prediction for question '" + ex.question_id +
                               "'");
    const std::vector<std::string> &beams = it->second->beam_answers;
    if (static_cast<int>(beams.size()) < k)
      throw std::runtime_error("best_of_beams: question '" + ex.question_id + "' has only " +
                               std::to_string(beams.size()) + " beam answers, need " +
                               std::to_string(k));
    int best_em = 0;
    double best_vqa = 0.0;
    for (int i = 0; i < k; ++i) {
      best_em = std::max(best_em, exact_match(beams[static_cast<size_t>(i)], ex.annotated_answers));
      best_vqa =
          std::max(best_vqa, vqa_score(beams[static_cast<size_t>(i)], ex.annotated_answers));
    }
    em_total += best_em;
    vqa_total += best_vqa;
  }
  double n = static_cast<double>(examples.size());
  return {em_total / n, vqa_total / n};
}

EvalReport evaluate(const std::vector<Prediction> &predictions,
                    const std::vector<QAExample> &examples,
                    const std::vector<RetrievalRecord> &retrievals, const Corpus &corpus,
                    const EvalOptions &options) {
  if (examples.empty()) throw std::invalid_argument("evaluate: no QA examples");

  std::map<std::string, const QAExample *> qa_by_id;
  for (const QAExample &ex : examples) qa_by_id[ex.question_id] = &ex;

  std::vector<std::string> unjoinable;
  std::map<std::string, const Prediction *> pred_by_id;
  for (const Prediction &p : predictions) {
    if (!qa_by_id.count(p.question_id)) unjoinable.push_back(p.question_id);
    pred_by_id[p.question_id] = &p;
  }
  if (!retrievals.empty()) {
    std::map<std::string, bool> has_retrieval;
    for (const RetrievalRecord &r : retrievals) {
      if (!qa_by_id.count(r.question_id)) unjoinable.push_back(r.question_id);
      has_retrieval[r.question_id] = true;
    }
    for (const QAExample &ex : examples)
      if (!has_retrieval.count(ex.question_id)) unjoinable.push_back(ex.question_id);
  }
  if (!unjoinable.empty()) {
    std::string ids;
    for (const std::string &id : unjoinable) ids += (ids.empty() ? "" : ", ") + id;
    throw std::runtime_error("evaluate: unjoinable question ids: " + ids);
  }

  EvalReport report;
  report.n_questions = static_cast<int>(examples.size());
  int missing = 0;
  for (const QAExample &ex : examples) {
    if (ex.annotated_answers.size() != 10)
      throw std::runtime_error("evaluate: question '" + ex.question_id +
                               "' lacks the 10 annotated answers");
    auto it = pred_by_id.find(ex.question_id);
    double em = 0.0, vqa = 0.0;
    if (it != pred_by_id.end()) {
      em = exact_match(it->second->answer, ex.annotated_answers);
      vqa = vqa_score(it->second->answer, ex.annotated_answers, options.official_vqa);
    } else {
      ++missing;  // missing prediction counts as wrong
    }
    report.exact_match += em;
    report.vqa_score += vqa;
    std::string type = ex.question_type.empty() ? "unknown" : ex.question_type;
    TypeMetrics &tm = report.per_type[type];
    tm.exact_match += em;
    tm.vqa_score += vqa;
    tm.count += 1;
  }
  if (missing > 0)
    std::cerr << "evaluate: warning: " << missing << " of " << examples.size()
              << " questions have no prediction\n";
  report.exact_match /= report.n_questions;
  report.vqa_score /= report.n_questions;
  for (auto &[type, tm] : report.per_type) {
    tm.exact_match /= tm.count;
    tm.vqa_score /= tm.count;
  }

  if (!retrievals.empty()) {
    size_t min_entries = retrievals.front().entries.size();
    for (const RetrievalRecord &r : retrievals) min_entries = std::min(min_entries, r.entries.size());
    for (int k : options.hit_ks)
      if (k >= 1 && static_cast<size_t>(k) <= min_entries)
        report.hit_at_k[k] = hit_at_k(examples, retrievals, corpus, k);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Record files

std::vector<Prediction> read_predictions(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  std::vector<Prediction> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw std::runtime_error("predictions line " + std::to_string(line_no) +
                               ": malformed record");
    Prediction p;
    p.question_id = j.at("question_id").get<std::string>();
    p.answer = j.at("answer").get<std::string>();
    p.normalized_answer = j.value("normalized_answer", normalize_answer(p.answer));
    if (j.contains("token_logprobs")) p.token_logprobs = j["token_logprobs"].get<std::vector<double>>();
    if (j.contains("beam_answers")) p.beam_answers = j["beam_answers"].get<std::vector<std::string>>();
    if (j.contains("attribution"))
      for (const auto &e : j["attribution"])
        p.attribution.emplace_back(e.at("passage_id").get<std::string>(),
                                   e.at("score").get<double>());
    out.push_back(std::move(p));
  }
  return out;
}

void write_predictions(const std::string &path, const std::vector<Prediction> &predictions) {
  std::ofstream out = io::open_output(path);
  for (const Prediction &p : predictions) {
    json j;
    j["question_id"] = p.question_id;
    j["answer"] = p.answer;
    j["normalized_answer"] = p.normalized_answer;
    j["token_logprobs"] = p.token_logprobs;
    j["beam_answers"] = p.beam_answers;
    json attr = json::array();
    for (const auto &[id, score] : p.attribution) attr.push_back({{"passage_id", id}, {"score", score}});
    j["attribution"] = attr;
    out << j.dump() << "\n";
  }
}

std::vector<RetrievalRecord> read_retrieval(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  std::vector<RetrievalRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw std::runtime_error("retrieval line " + std::to_string(line_no) + ": malformed record");
    RetrievalRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    for (const auto &e : j.at("passages"))
      r.entries.push_back(
          {e.at("passage_id").get<std::string>(), e.at("score").get<float>()});
    out.push_back(std::move(r));
  }
  return out;
}

void write_retrieval(const std::string &path, const std::vector<RetrievalRecord> &records) {
  std::ofstream out = io::open_output(path);
  for (const RetrievalRecord &r : records) {
    json passages = json::array();
    for (const RetrievedEntry &e : r.entries)
      passages.push_back({{"passage_id", e.passage_id}, {"score", e.score}});
    json j;
    j["question_id"] = r.question_id;
    j["passages"] = passages;
    out << j.dump() << "\n";
  }
}

void write_report(const std::string &path, const EvalReport &report) {
  json j;
  j["n_questions"] = report.n_questions;
  j["exact_match"] = report.exact_match;
  j["vqa_score"] = report.vqa_score;
  json hits = json::object();
  for (const auto &[k, v] : report.hit_at_k) hits[std::to_string(k)] = v;
  j["hit_at_k"] = hits;
  json types = json::object();
  for (const auto &[type, tm] : report.per_type)
    types[type] = {{"exact_match", tm.exact_match}, {"vqa_score", tm.vqa_score}, {"count", tm.count}};
  j["per_question_type"] = types;
  std::ofstream out = io::open_output(path);
  out << j.dump(2) << "\n";
}

EvalReport read_report(const std::string &path) {
  json j = json::parse(io::read_text_file(path));
  EvalReport r;
  r.n_questions = j.at("n_questions").get<int>();
  r.exact_match = j.at("exact_match").get<double>();
  r.vqa_score = j.at("vqa_score").get<double>();
  for (const auto &[k, v] : j.at("hit_at_k").items()) r.hit_at_k[std::stoi(k)] = v.get<double>();
  for (const auto &[type, tm] : j.at("per_question_type").items())
    r.per_type[type] = {tm.at("exact_match").get<double>(), tm.at("vqa_score").get<double>(),
                        tm.at("count").get<int>()};
  return r;
}

std::string render_report(const EvalReport &report) {
  std::ostringstream os;
  os << "questions: " << report.n_questions << "\n";
  os << "exact match: " << report.exact_match * 100.0 << "%\n";
  os << "vqa score: " << report.vqa_score * 100.0 << "\n";
  if (!report.hit_at_k.empty()) {
    os << "retrieval hit@k:\n";
    for (const auto &[k, v] : report.hit_at_k)
      os << "  top-" << k << ": " << v * 100.0 << "%\n";
  }
  if (!report.per_type.empty()) {
    os << "per question type (EM / VQA / n):\n";
    for (const auto &[type, tm] : report.per_type)
      os << "  " << type << ": " << tm.exact_match * 100.0 << "% / " << tm.vqa_score * 100.0
         << " / " << tm.count << "\n";
  }
  return os.str();
}

}  // namespace ragqa
