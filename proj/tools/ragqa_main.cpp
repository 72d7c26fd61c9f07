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

#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ragqa/pipeline.hpp"

int main(int argc, char **argv) {
  CLI::App app{"retrieval-augmented generative question answering"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  bool seed_given = false;
  uint64_t seed = 0;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option("--set", overrides, "override a config key, e.g. --set retrieval.k=5")
      ->take_all();
  app.add_option("--seed", seed, "override the top-level seed")->each([&](const std::string &) {
    seed_given = true;
  });

  using Command = std::function<void(const ragqa::PipelineConfig &, std::ostream &)>;
  std::vector<std::pair<CLI::App *, Command>> commands = {
      {app.add_subcommand("ingest", "validate and persist the corpus and QA files"),
       ragqa::cmd_ingest},
      {app.add_subcommand("build-index", "encode passages and build the vector index"),
       ragqa::cmd_build_index},
      {app.add_subcommand("retrieve", "retrieve top-k passages per question"),
       ragqa::cmd_retrieve},
      {app.add_subcommand("train", "train the generative reader"), ragqa::cmd_train},
      {app.add_subcommand("answer", "generate answers for a QA file"), ragqa::cmd_answer},
      {app.add_subcommand("evaluate", "score predictions against annotations"),
       ragqa::cmd_evaluate},
  };

  CLI11_PARSE(app, argc, argv);

  try {
    if (seed_given) overrides.push_back("seed=" + std::to_string(seed));
    ragqa::PipelineConfig cfg = ragqa::PipelineConfig::load(config_path, overrides);
    for (auto &[sub, fn] : commands) {
      if (sub->parsed()) {
        fn(cfg, std::cout);
        return 0;
      }
    }
    std::cerr << "no subcommand selected\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
