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

#ifndef RAGQA_METRICS_HPP
#define RAGQA_METRICS_HPP

#include <map>
#include <string>
#include <vector>

#include "ragqa/corpus.hpp"
#include "ragqa/index.hpp"

namespace ragqa {

struct Prediction {
  std::string question_id;
  std::string answer;
  std::string normalized_answer;
  std::vector<double> token_logprobs;
  std::vector<std::string> beam_answers;  // ranked best-first
  std::vector<std::pair<std::string, double>> attribution;  // (passage_id, score)
};

struct RetrievalRecord {
  std::string question_id;
  std::vector<RetrievedEntry> entries;  // ordered best-first
};

struct EvalOptions {
  std::vector<int> hit_ks = {1, 5, 10, 20, 50, 100};
  // Leave-one-out averaged voting instead of the plain min(count/3, 1).
  bool official_vqa = false;
};

struct TypeMetrics {
  double exact_match = 0.0;
  double vqa_score = 0.0;
  int count = 0;
};

struct EvalReport {
  double exact_match = 0.0;           // fraction in [0, 1]
  double vqa_score = 0.0;             // mean in [0, 1]
  std::map<int, double> hit_at_k;     // k -> fraction
  std::map<std::string, TypeMetrics> per_type;
  int n_questions = 0;
};

// 1 iff the normalized prediction equals any normalized annotation.
int exact_match(const std::string &prediction, const std::vector<std::string> &annotated_answers);

// Voting credit min(match_count / 3, 1); with official_variant the
// leave-one-out average used by the original evaluation server.
double vqa_score(const std::string &prediction, const std::vector<std::string> &annotated_answers,
                 bool official_variant = false);

// Fraction of questions whose top-k retrieved passages contain at least
// one normalized ground-truth answer as a substring of the normalized
// title+body. Throws when a question carries fewer than k entries.
double hit_at_k(const std::vector<QAExample> &examples,
                const std::vector<RetrievalRecord> &retrievals, const Corpus &corpus, int k);

// Best per-question (EM, VQA) over the top-k ranked beam answers,
// averaged over the dataset. Throws when a question has fewer than k
// beam answers.
std::pair<double, double> best_of_beams(const std::vector<Prediction> &predictions,
                                        const std::vector<QAExample> &examples, int k);

// Joins predictions, annotated QA examples and retrieval records on
// question_id. Missing predictions count as wrong; prediction or
// retrieval ids absent from the QA file raise an error listing them.
// Retrieval records may be empty, in which case the hit@k table is
// omitted; otherwise hit@k is reported for every configured k that does
// not exceed the shallowest retrieval list.
EvalReport evaluate(const std::vector<Prediction> &predictions,
                    const std::vector<QAExample> &examples,
                    const std::vector<RetrievalRecord> &retrievals, const Corpus &corpus,
                    const EvalOptions &options = {});

std::vector<Prediction> read_predictions(const std::string &path);
void write_predictions(const std::string &path, const std::vector<Prediction> &predictions);

std::vector<RetrievalRecord> read_retrieval(const std::string &path);
void write_retrieval(const std::string &path, const std::vector<RetrievalRecord> &records);

void write_report(const std::string &path, const EvalReport &report);
EvalReport read_report(const std::string &path);
std::string render_report(const EvalReport &report);

}  // namespace ragqa

#endif  // RAGQA_METRICS_HPP
