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

#ifndef RAGQA_DECODE_HPP
#define RAGQA_DECODE_HPP

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

namespace ragqa {

// A generated token sequence with per-token log-probabilities. The
// terminating EOS, when emitted, is included in both lists so candidate
// scores account for how confidently the sequence ended.
struct AnswerCandidate {
  std::vector<int> tokens;
  std::vector<double> token_logprobs;
  std::vector<double> attribution;  // per-passage scores; empty until filled

  double mean_logprob() const;
};

struct BeamConfig {
  int beam_size = 3;
  int max_len = 20;
  bool early_stopping = true;
};

// Anything that can produce next-token distributions; lets the search
// strategies run against toy table models as well as the full
// encoder-decoder.
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual int vocab_size() const = 0;
  virtual int eos_id() const = 0;
  // Ids never generated (e.g. padding and BOS); EOS must not be listed.
  virtual std::vector<int> forbidden_ids() const { return {}; }
  // Probability vector over the vocabulary given the generated prefix.
  virtual Eigen::VectorXd next_distribution(const std::vector<int> &prefix) const = 0;
};

// Highest-probability token at each step until EOS or max_len; argmax ties
// break toward the lowest token id.
AnswerCandidate greedy_decode(const StepModel &model, int max_len);

// Breadth-limited best-first search keeping beam_size hypotheses ranked by
// mean token log-probability (ties by lexicographic token order). A
// hypothesis ending in EOS is frozen; with early_stopping the search ends
// once the current top beam_size hypotheses are all frozen, otherwise it
// runs until no live hypothesis remains.
std::vector<AnswerCandidate> beam_search(const StepModel &model, const BeamConfig &cfg);

// Lowercases, strips ASCII punctuation, removes the articles a/an/the and
// collapses whitespace runs.
std::string normalize_answer(std::string_view text);

// Index of the candidate with the highest mean token log-probability;
// ties break toward the lowest index. Zero-length candidates are excluded
// with a warning on stderr; an empty or all-excluded list throws.
size_t ensemble_select(const std::vector<AnswerCandidate> &candidates);

}  // namespace ragqa

#endif  // RAGQA_DECODE_HPP
