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

#ifndef RAGQA_ANSWER_HPP
#define RAGQA_ANSWER_HPP

// Bridges the encoder-decoder model into the decoding strategies.

#include <algorithm>

#include "ragqa/decode.hpp"
#include "ragqa/fid.hpp"

namespace ragqa {
namespace fid {

template <class S>
class FidStepModel final : public StepModel {
 public:
  FidStepModel(const FidModel<S> &model, const FusedState<S> &fused)
      : model_(model), fused_(fused) {}

  int vocab_size() const override { return model_.config.vocab_size; }
  int eos_id() const override { return Tokenizer::kEos; }
  std::vector<int> forbidden_ids() const override { return {Tokenizer::kPad, Tokenizer::kBos}; }

  Eigen::VectorXd next_distribution(const std::vector<int> &prefix) const override {
    Vec<S> probs = decode_step(model_, fused_, prefix);
    return probs.template cast<double>();
  }

 private:
  const FidModel<S> &model_;
  const FusedState<S> &fused_;
};

template <class S>
AnswerCandidate greedy_decode(const FidModel<S> &model, const FusedState<S> &fused) {
  FidStepModel<S> stepper(model, fused);
  return ragqa::greedy_decode(stepper, model.config.max_decode_len);
}

template <class S>
std::vector<AnswerCandidate> beam_search(const FidModel<S> &model, const FusedState<S> &fused,
                                         const BeamConfig &cfg) {
  FidStepModel<S> stepper(model, fused);
  BeamConfig capped = cfg;
  capped.max_len = std::min(cfg.max_len, model.config.max_decode_len);
  return ragqa::beam_search(stepper, capped);
}

}  // namespace fid
}  // namespace ragqa

#endif  // RAGQA_ANSWER_HPP
