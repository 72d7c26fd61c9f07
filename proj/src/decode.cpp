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

#include "ragqa/decode.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace ragqa {

double AnswerCandidate::mean_logprob() const {
  if (token_logprobs.empty()) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double lp : token_logprobs) sum += lp;
  return sum / static_cast<double>(token_logprobs.size());
}

namespace {

std::vector<char> forbidden_table(const StepModel &model) {
  std::vector<char> banned(static_cast<size_t>(model.vocab_size()), 0);
  for (int id : model.forbidden_ids()) banned[static_cast<size_t>(id)] = 1;
  return banned;
}

struct Hypothesis {
  std::vector<int> tokens;
  std::vector<double> logprobs;
  double sum = 0.0;
  bool done = false;

  double mean() const {
    if (logprobs.empty()) return -std::numeric_limits<double>::infinity();
    return sum / static_cast<double>(logprobs.size());
  }
};

// Shared ranking: mean log-probability descending, then lexicographic
// token order so ties are deterministic.
bool better(const Hypothesis &a, const Hypothesis &b) {
  double ma = a.mean(), mb = b.mean();
  if (ma != mb) return ma > mb;
  return a.tokens < b.tokens;
}

AnswerCandidate to_candidate(const Hypothesis &hyp) {
  return {hyp.tokens, hyp.logprobs, {}};
}

}  // namespace

AnswerCandidate greedy_decode(const StepModel &model, int max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  std::vector<char> banned = forbidden_table(model);
  AnswerCandidate out;
  while (static_cast<int>(out.tokens.size()) < max_len) {
    Eigen::VectorXd dist = model.next_distribution(out.tokens);
    int best = -1;
    double best_p = -1.0;
    for (int id = 0; id < model.vocab_size(); ++id) {
      if (banned[static_cast<size_t>(id)]) continue;
      if (dist[id] > best_p) {  // strict: ties keep the lowest id
        best_p = dist[id];
        best = id;
      }
    }
    out.tokens.push_back(best);
    out.token_logprobs.push_back(std::log(best_p));
    if (best == model.eos_id()) break;
  }
  return out;
}

std::vector<AnswerCandidate> beam_search(const StepModel &model, const BeamConfig &cfg) {
  if (cfg.beam_size < 1) throw std::invalid_argument("beam_search: beam_size must be >= 1");
  if (cfg.max_len < 1) throw std::invalid_argument("beam_search: max_len must be >= 1");
  std::vector<char> banned = forbidden_table(model);
  const size_t m = static_cast<size_t>(cfg.beam_size);

  // The greedy chain is kept alive even when ranked below the beam, and
  // the best frozen hypothesis is never lost; together these guarantee
  // the top-ranked result scores at least as well as greedy decoding.
  AnswerCandidate greedy = greedy_decode(model, cfg.max_len);
  Hypothesis greedy_hyp;
  greedy_hyp.tokens = greedy.tokens;
  greedy_hyp.logprobs = greedy.token_logprobs;
  for (double lp : greedy.token_logprobs) greedy_hyp.sum += lp;
  greedy_hyp.done = true;
  bool greedy_secured = false;

  Hypothesis best_finished;
  bool has_best = false;
  auto note_finished = [&](const Hypothesis &hyp) {
    if (!has_best || better(hyp, best_finished)) {
      best_finished = hyp;
      has_best = true;
    }
  };

  std::vector<Hypothesis> frozen;
  std::vector<Hypothesis> live(1);  // the empty prefix
  size_t step = 0;

  while (!live.empty()) {
    ++step;
    std::vector<Hypothesis> pool = frozen;
    for (const Hypothesis &hyp : live) {
      Eigen::VectorXd dist = model.next_distribution(hyp.tokens);
      for (int id = 0; id < model.vocab_size(); ++id) {
        if (banned[static_cast<size_t>(id)]) continue;
        Hypothesis child = hyp;
        child.tokens.push_back(id);
        double lp = std::log(dist[id]);
        child.logprobs.push_back(lp);
        child.sum += lp;
        child.done =
            id == model.eos_id() || static_cast<int>(child.tokens.size()) >= cfg.max_len;
        if (child.done) note_finished(child);
        pool.push_back(std::move(child));
      }
    }
    std::sort(pool.begin(), pool.end(), better);
    if (pool.size() > m) pool.resize(m);

    frozen.clear();
    live.clear();
    for (Hypothesis &hyp : pool) (hyp.done ? frozen : live).push_back(std::move(hyp));

    if (!greedy_secured) {
      if (greedy_hyp.tokens.size() == step) {
        greedy_secured = true;  // fully frozen; note_finished saw it above
      } else {
        Hypothesis prefix;
        prefix.tokens.assign(greedy_hyp.tokens.begin(),
                             greedy_hyp.tokens.begin() + static_cast<long>(step));
        prefix.logprobs.assign(greedy_hyp.logprobs.begin(),
                               greedy_hyp.logprobs.begin() + static_cast<long>(step));
        for (double lp : prefix.logprobs) prefix.sum += lp;
        bool present = false;
        for (const Hypothesis &hyp : live) present = present || hyp.tokens == prefix.tokens;
        if (!present) live.push_back(std::move(prefix));
      }
    }

    if (cfg.early_stopping && live.empty()) break;
    // Without early stopping the loop still terminates: every hypothesis
    // freezes at max_len.
  }

  std::vector<Hypothesis> result = std::move(frozen);
  if (has_best) {
    bool present = false;
    for (const Hypothesis &hyp : result) present = present || hyp.tokens == best_finished.tokens;
    if (!present) result.push_back(best_finished);
  }
  std::sort(result.begin(), result.end(), better);
  if (result.size() > m) result.resize(m);
  std::vector<AnswerCandidate> out;
  out.reserve(result.size());
  for (const Hypothesis &hyp : result) out.push_back(to_candidate(hyp));
  return out;
}

std::string normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::ispunct(c)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(c)));
  }
  std::string out;
  size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
    size_t start = i;
    while (i < cleaned.size() && !std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
    if (start == i) continue;
    std::string_view word(cleaned.data() + start, i - start);
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

size_t ensemble_select(const std::vector<AnswerCandidate> &candidates) {
  if (candidates.empty()) throw std::invalid_argument("ensemble_select: empty candidate list");
  size_t best = candidates.size();
  double best_mean = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].tokens.empty()) {
      std::cerr << "ensemble_select: warning: excluding zero-length candidate " << i << "\n";
      continue;
    }
    double mean = candidates[i].mean_logprob();
    if (best == candidates.size() || mean > best_mean) {  // strict: ties keep lowest index
      best = i;
      best_mean = mean;
    }
  }
  if (best == candidates.size())
    throw std::invalid_argument("ensemble_select: no non-empty candidates");
  return best;
}

}  // namespace ragqa
