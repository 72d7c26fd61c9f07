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

#ifndef RAGQA_CHECKPOINT_HPP
#define RAGQA_CHECKPOINT_HPP

#include <string>

#include "ragqa/fid.hpp"
#include "ragqa/tokenizer.hpp"

namespace ragqa {
namespace fid {

// Checkpoint file: magic, version, ModelConfig, tokenizer vocabulary, then
// named parameter tensors as little-endian 32-bit floats in row-major
// order.
struct Checkpoint {
  FidModel<float> model;
  Tokenizer tokenizer;
};

void save_checkpoint(const std::string &path, const FidModel<float> &model,
                     const Tokenizer &tokenizer);
Checkpoint load_checkpoint(const std::string &path);

}  // namespace fid
}  // namespace ragqa

#endif  // RAGQA_CHECKPOINT_HPP
