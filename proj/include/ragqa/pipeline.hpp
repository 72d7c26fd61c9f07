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

#ifndef RAGQA_PIPELINE_HPP
#define RAGQA_PIPELINE_HPP

#include <iosfwd>
#include <string>

#include "ragqa/config.hpp"

namespace ragqa {

// Pipeline commands behind the CLI subcommands. Each validates its inputs,
// writes its output files and prints a short summary; failures throw.
void cmd_ingest(const PipelineConfig &cfg, std::ostream &log);
void cmd_build_index(const PipelineConfig &cfg, std::ostream &log);
void cmd_retrieve(const PipelineConfig &cfg, std::ostream &log);
void cmd_train(const PipelineConfig &cfg, std::ostream &log);
void cmd_answer(const PipelineConfig &cfg, std::ostream &log);
void cmd_evaluate(const PipelineConfig &cfg, std::ostream &log);

// Loads the persisted binary corpus when configured and present, falling
// back to ingesting the line-delimited passage file.
Corpus load_corpus_for(const PipelineConfig &cfg);

}  // namespace ragqa

#endif  // RAGQA_PIPELINE_HPP
