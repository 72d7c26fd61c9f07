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

#ifndef RAGQA_CONFIG_HPP
#define RAGQA_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ragqa/decode.hpp"
#include "ragqa/fid.hpp"
#include "ragqa/index.hpp"
#include "ragqa/train.hpp"

namespace ragqa {

// One flat-keyed configuration file drives every pipeline command.
// Precedence: defaults < file < RAGQA_* environment variables < --set
// overrides. Unknown keys are rejected.
struct PipelineConfig {
  struct Paths {
    std::string corpus;            // passage records (one JSON object per line)
    std::string corpus_bin;        // persisted binary corpus (optional cache)
    std::string qa;                // QA records
    std::string embeddings;        // passage vectors (provider = file)
    std::string query_embeddings;  // query vectors (provider = file)
    std::string index;
    std::string checkpoint;        // comma-separated list enables ensembling
    std::string retrieval;
    std::string predictions;
    std::string report;
    std::string loss_curve;
  } paths;

  struct Retrieval {
    int k = 100;
    std::string provider = "hashed";  // hashed | file
    int dim = 64;                     // hashed-provider dimension
    std::string backend = "hnsw";     // flat | hnsw | bm25
    HnswParams hnsw;
  } retrieval;

  fid::ModelConfig model;  // vocab_size here is an upper bound for training

  fid::TrainConfig training;

  struct Decoding {
    std::string mode = "beam";  // greedy | beam
    BeamConfig beam;
  } decoding;

  uint64_t seed = 0;

  static PipelineConfig defaults();

  // Loads the file (empty path = defaults only), then applies environment
  // variables and --set overrides.
  static PipelineConfig load(const std::string &path,
                             const std::vector<std::string> &overrides = {});
};

}  // namespace ragqa

#endif  // RAGQA_CONFIG_HPP
