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

#ifndef RAGQA_TRAIN_HPP
#define RAGQA_TRAIN_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ragqa/fid.hpp"

namespace ragqa {
namespace fid {

struct TrainConfig {
  double learning_rate = 1e-4;
  int warmup_steps = 2000;
  int total_steps = 20000;
  std::string schedule = "linear";
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 1;
  uint64_t seed = 0;

  void validate() const {
    if (total_steps < 0 || warmup_steps < 0)
      throw std::invalid_argument("TrainConfig: step counts must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (schedule != "linear" && schedule != "constant")
      throw std::invalid_argument("TrainConfig: unknown schedule '" + schedule + "'");
  }
};

// Linear warmup to learning_rate over warmup_steps, then linear decay to
// zero at total_steps. step is 1-based.
inline double scheduled_lr(const TrainConfig &cfg, int step) {
  if (cfg.schedule == "constant") return cfg.learning_rate;
  if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps)
    return cfg.learning_rate * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  if (cfg.total_steps <= cfg.warmup_steps) return cfg.learning_rate;
  double remaining = static_cast<double>(cfg.total_steps - step);
  double span = static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.learning_rate * std::max(0.0, remaining / span);
}

struct TrainExample {
  std::vector<std::vector<int>> passage_tokens;  // k sequences of length L
  std::vector<int> target;                       // answer tokens + EOS
};

struct StepLog {
  int step;
  double loss;
  double lr;
};

// Decoupled weight decay Adam over the model's parameter list. Moments are
// stored in shape-matched model containers.
template <class S>
class AdamW {
 public:
  AdamW(const ModelConfig &config, const TrainConfig &train)
      : train_(train), m_(zeros_like<S>(config)), v_(zeros_like<S>(config)) {}

  void step(FidModel<S> &model, const FidModel<S> &grad, double lr) {
    ++t_;
    double bc1 = 1.0 - std::pow(train_.beta1, t_);
    double bc2 = 1.0 - std::pow(train_.beta2, t_);

    auto params = param_list(model);
    auto grads = param_list(const_cast<FidModel<S> &>(grad));
    auto ms = param_list(m_);
    auto vs = param_list(v_);
    for (size_t i = 0; i < params.size(); ++i) {
      Mat<S> &p = *params[i].mat;
      const Mat<S> &g = *grads[i].mat;
      Mat<S> &m = *ms[i].mat;
      Mat<S> &v = *vs[i].mat;
      m = static_cast<S>(train_.beta1) * m + static_cast<S>(1.0 - train_.beta1) * g;
      v = (static_cast<S>(train_.beta2) * v.array() +
           static_cast<S>(1.0 - train_.beta2) * g.array().square())
              .matrix();
      Mat<S> update =
          ((m.array() / static_cast<S>(bc1)) /
           ((v.array() / static_cast<S>(bc2)).sqrt() + static_cast<S>(train_.eps)))
              .matrix();
      if (params[i].decayable && train_.weight_decay > 0.0)
        update += static_cast<S>(train_.weight_decay) * p;
      p -= static_cast<S>(lr) * update;
    }
  }

 private:
  struct Entry {
    Mat<S> *mat;
    bool decayable;
  };

  static std::vector<Entry> param_list(FidModel<S> &m) {
    std::vector<Entry> out;
    visit_params(m, [&](const std::string &, Mat<S> &mat, bool decayable) {
      out.push_back({&mat, decayable});
    });
    return out;
  }

  TrainConfig train_;
  FidModel<S> m_, v_;
  int t_ = 0;
};

// Runs total_steps optimization steps, sampling batch_size examples per
// step from the seeded generator. Aborts on non-finite loss.
template <class S>
std::vector<StepLog> train(FidModel<S> &model, const std::vector<TrainExample> &data,
                           const TrainConfig &cfg,
                           const std::function<void(const StepLog &)> &on_step = nullptr) {
  cfg.validate();
  if (data.empty() && cfg.total_steps > 0)
    throw std::invalid_argument("train: empty dataset");

  AdamW<S> optimizer(model.config, cfg);
  std::mt19937_64 sampler(cfg.seed);
  FidModel<S> grad = zeros_like<S>(model.config);
  std::vector<StepLog> logs;
  logs.reserve(static_cast<size_t>(cfg.total_steps));

  for (int step = 1; step <= cfg.total_steps; ++step) {
    visit_params(grad, [](const std::string &, Mat<S> &mat, bool) { mat.setZero(); });
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const TrainExample &ex = data[sampler() % data.size()];
      ForwardTrace<S> trace = forward(model, ex.passage_tokens, ex.target);
      batch_loss += static_cast<double>(trace.loss);
      backward(model, trace, grad);
    }
    batch_loss /= cfg.batch_size;
    if (!std::isfinite(batch_loss))
      throw std::runtime_error("train: non-finite loss at step " + std::to_string(step) +
                               "; aborting (try a lower learning rate)");
    if (cfg.batch_size > 1) {
      S inv = S(1) / static_cast<S>(cfg.batch_size);
      visit_params(grad, [&](const std::string &, Mat<S> &mat, bool) { mat *= inv; });
    }
    double lr = scheduled_lr(cfg, step);
    optimizer.step(model, grad, lr);
    StepLog log{step, batch_loss, lr};
    logs.push_back(log);
    if (on_step) on_step(log);
  }
  return logs;
}

}  // namespace fid
}  // namespace ragqa

#endif  // RAGQA_TRAIN_HPP
