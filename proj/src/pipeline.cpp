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

#include "ragqa/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "ragqa/answer.hpp"
#include "ragqa/bm25.hpp"
#include "ragqa/checkpoint.hpp"
#include "ragqa/io.hpp"
#include "ragqa/metrics.hpp"

namespace ragqa {

namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void require_path(const std::string &value, const std::string &key) {
  if (value.empty()) throw std::runtime_error("config key '" + key + "' is required");
}

void require_file(const std::string &path, const std::string &what) {
  if (!fs::exists(path)) throw std::runtime_error(what + " not found: " + path);
}

std::unique_ptr<EmbeddingProvider> passage_provider(const PipelineConfig &cfg) {
  if (cfg.retrieval.provider == "file") {
    require_path(cfg.paths.embeddings, "paths.embeddings");
    require_file(cfg.paths.embeddings, "embedding file");
    return std::make_unique<FileEmbeddingProvider>(
        FileEmbeddingProvider::load(cfg.paths.embeddings));
  }
  return std::make_unique<HashedEncoder>(cfg.retrieval.dim);
}

std::unique_ptr<EmbeddingProvider> query_provider(const PipelineConfig &cfg) {
  if (cfg.retrieval.provider == "file") {
    require_path(cfg.paths.query_embeddings, "paths.query_embeddings");
    require_file(cfg.paths.query_embeddings, "query embedding file");
    return std::make_unique<FileEmbeddingProvider>(
        FileEmbeddingProvider::load(cfg.paths.query_embeddings));
  }
  // Query and passage encoders are independent instances even though the
  // hashed scheme makes them numerically identical.
  return std::make_unique<HashedEncoder>(cfg.retrieval.dim);
}

std::vector<std::string> split_list(const std::string &joined) {
  std::vector<std::string> out;
  std::stringstream ss(joined);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<QAExample> load_qa_for(const PipelineConfig &cfg) {
  require_path(cfg.paths.qa, "paths.qa");
  require_file(cfg.paths.qa, "QA file");
  return ingest_qa(cfg.paths.qa);
}

// Retrieved passage ids per question: the retrieval file when present,
// otherwise the per-record passages field.
std::map<std::string, std::vector<std::string>> passage_ids_per_question(
    const PipelineConfig &cfg, const std::vector<QAExample> &examples) {
  std::map<std::string, std::vector<std::string>> out;
  if (!cfg.paths.retrieval.empty() && fs::exists(cfg.paths.retrieval)) {
    for (const RetrievalRecord &r : read_retrieval(cfg.paths.retrieval)) {
      std::vector<std::string> ids;
      for (const RetrievedEntry &e : r.entries) ids.push_back(e.passage_id);
      out[r.question_id] = std::move(ids);
    }
    return out;
  }
  for (const QAExample &ex : examples)
    if (!ex.passages.empty()) out[ex.question_id] = ex.passages;
  return out;
}

std::string train_target_answer(const QAExample &ex) {
  if (ex.annotated_answers.empty())
    throw std::runtime_error("training example '" + ex.question_id + "' has no answers");
  return ex.annotated_answers.front();
}

struct PreparedExample {
  const QAExample *qa;
  std::vector<const Passage *> passages;
};

std::vector<PreparedExample> join_examples(
    const PipelineConfig &cfg, const std::vector<QAExample> &examples, const Corpus &corpus,
    const std::map<std::string, std::vector<std::string>> &ids_per_question, int k) {
  std::vector<PreparedExample> out;
  for (const QAExample &ex : examples) {
    auto it = ids_per_question.find(ex.question_id);
    if (it == ids_per_question.end())
      throw std::runtime_error("question '" + ex.question_id +
                               "' has no retrieved passages; run retrieve first");
    PreparedExample prep;
    prep.qa = &ex;
    for (const std::string &id : it->second) {
      if (static_cast<int>(prep.passages.size()) >= k) break;
      const Passage *p = corpus.lookup(id);
      if (!p) throw std::runtime_error("retrieved passage '" + id + "' is not in the corpus");
      prep.passages.push_back(p);
    }
    if (prep.passages.empty())
      throw std::runtime_error("question '" + ex.question_id + "' has an empty passage list");
    out.push_back(std::move(prep));
  }
  return out;
}

std::vector<int> encode_target(const Tokenizer &tokenizer, const std::string &answer,
                               int max_decode_len) {
  std::vector<int> target = tokenizer.encode(answer);
  if (static_cast<int>(target.size()) > max_decode_len - 1)
    target.resize(static_cast<size_t>(max_decode_len - 1));
  target.push_back(Tokenizer::kEos);
  return target;
}

}  // namespace

Corpus load_corpus_for(const PipelineConfig &cfg) {
  if (!cfg.paths.corpus_bin.empty() && fs::exists(cfg.paths.corpus_bin))
    return Corpus::load(cfg.paths.corpus_bin);
  require_path(cfg.paths.corpus, "paths.corpus");
  require_file(cfg.paths.corpus, "corpus file");
  return ingest_passages(cfg.paths.corpus);
}

void cmd_ingest(const PipelineConfig &cfg, std::ostream &log) {
  require_path(cfg.paths.corpus, "paths.corpus");
  require_file(cfg.paths.corpus, "corpus file");
  Corpus corpus = ingest_passages(cfg.paths.corpus);
  log << "ingested " << corpus.size() << " passages from " << cfg.paths.corpus << "\n";
  if (!cfg.paths.corpus_bin.empty()) {
    corpus.save(cfg.paths.corpus_bin);
    log << "persisted corpus to " << cfg.paths.corpus_bin << "\n";
  }
  if (!cfg.paths.qa.empty()) {
    require_file(cfg.paths.qa, "QA file");
    std::vector<QAExample> qa = ingest_qa(cfg.paths.qa);
    log << "validated " << qa.size() << " QA records from " << cfg.paths.qa << "\n";
  }
}

void cmd_build_index(const PipelineConfig &cfg, std::ostream &log) {
  if (cfg.retrieval.backend == "bm25")
    throw std::runtime_error("bm25 scores straight from the corpus; no index file to build");
  require_path(cfg.paths.index, "paths.index");
  auto start = std::chrono::steady_clock::now();

  Corpus corpus = load_corpus_for(cfg);
  std::unique_ptr<EmbeddingProvider> provider = passage_provider(cfg);

  if (cfg.retrieval.backend == "flat") {
    FlatIndex index(provider->dim());
    for (const Passage &p : corpus) index.add(p.id, encode_passage(*provider, p));
    index.save(cfg.paths.index);
  } else {
    HnswIndex index(provider->dim(), cfg.retrieval.hnsw);
    for (const Passage &p : corpus) index.add(p.id, encode_passage(*provider, p));
    index.save(cfg.paths.index);
  }
  log << "indexed " << corpus.size() << " passages, dim " << provider->dim() << ", backend "
      << cfg.retrieval.backend << ", " << seconds_since(start) << " s\n";
}

void cmd_retrieve(const PipelineConfig &cfg, std::ostream &log) {
  require_path(cfg.paths.retrieval, "paths.retrieval");
  std::vector<QAExample> questions = load_qa_for(cfg);
  auto start = std::chrono::steady_clock::now();

  int k = cfg.retrieval.k;
  std::vector<RetrievalRecord> records;
  records.reserve(questions.size());

  if (cfg.retrieval.backend == "bm25") {
    Corpus corpus = load_corpus_for(cfg);
    if (k > static_cast<int>(corpus.size()))
      log << "warning: k " << k << " exceeds corpus size " << corpus.size() << "\n";
    Bm25Index index(corpus);
    for (const QAExample &ex : questions) {
      RetrievalQuery query{ex.question, ex.visual.caption};
      records.push_back({ex.question_id, index.search(query.text(), k).entries});
    }
  } else {
    require_path(cfg.paths.index, "paths.index");
    require_file(cfg.paths.index, "index file");
    std::unique_ptr<EmbeddingProvider> provider = query_provider(cfg);
    auto run = [&](auto index) {
      if (k > static_cast<int>(index.size()))
        log << "warning: k " << k << " exceeds index size " << index.size() << "\n";
      for (const QAExample &ex : questions) {
        RetrievalQuery query{ex.question, ex.visual.caption};
        EmbeddingVector v = encode_query(*provider, query, ex.question_id);
        records.push_back({ex.question_id, index.search(v, k).entries});
      }
    };
    if (cfg.retrieval.backend == "flat")
      run(FlatIndex::load(cfg.paths.index));
    else
      run(HnswIndex::load(cfg.paths.index));
  }

  write_retrieval(cfg.paths.retrieval, records);
  log << "retrieved top-" << k << " for " << records.size() << " questions, "
      << seconds_since(start) << " s\n";
}

void cmd_train(const PipelineConfig &cfg, std::ostream &log) {
  require_path(cfg.paths.checkpoint, "paths.checkpoint");
  Corpus corpus = load_corpus_for(cfg);
  std::vector<QAExample> examples = load_qa_for(cfg);
  auto ids = passage_ids_per_question(cfg, examples);
  std::vector<PreparedExample> prepared = join_examples(cfg, examples, corpus, ids, cfg.retrieval.k);

  // Vocabulary covers the whole knowledge base plus the training inputs and
  // targets, so unseen test-time entities still tokenize onto known ids.
  std::vector<std::string> vocab_texts;
  vocab_texts.reserve(corpus.size() + 2 * prepared.size());
  for (const Passage &p : corpus)
    vocab_texts.push_back(fid::build_input_text("", VisualContext{}, p));
  for (const PreparedExample &prep : prepared) {
    vocab_texts.push_back(
        fid::build_input_text(prep.qa->question, prep.qa->visual, Passage{}));
    vocab_texts.push_back(train_target_answer(*prep.qa));
  }
  Tokenizer tokenizer = Tokenizer::build(vocab_texts, cfg.model.vocab_size);

  fid::ModelConfig model_cfg = cfg.model;
  model_cfg.vocab_size = tokenizer.vocab_size();
  model_cfg.validate();

  std::vector<fid::TrainExample> dataset;
  dataset.reserve(prepared.size());
  for (const PreparedExample &prep : prepared) {
    fid::TrainExample ex;
    for (const Passage *p : prep.passages)
      ex.passage_tokens.push_back(
          fid::build_input(tokenizer, prep.qa->question, prep.qa->visual, *p,
                           model_cfg.max_input_len));
    ex.target = encode_target(tokenizer, train_target_answer(*prep.qa), model_cfg.max_decode_len);
    dataset.push_back(std::move(ex));
  }

  log << "training on " << dataset.size() << " examples, vocab " << model_cfg.vocab_size
      << ", steps " << cfg.training.total_steps << "\n";
  auto start = std::chrono::steady_clock::now();
  fid::FidModel<float> model = fid::init_model<float>(model_cfg);

  std::ofstream loss_out;
  if (!cfg.paths.loss_curve.empty()) {
    loss_out = io::open_output(cfg.paths.loss_curve);
    loss_out << "# seed=" << cfg.seed << "\nstep,loss,lr\n";
  }
  int report_every = std::max(1, cfg.training.total_steps / 10);
  fid::train<float>(model, dataset, cfg.training, [&](const fid::StepLog &s) {
    if (loss_out.is_open()) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", s.step, s.loss, s.lr);
      loss_out << buf;
    }
    if (s.step % report_every == 0)
      log << "step " << s.step << "  loss " << s.loss << "  lr " << s.lr << "\n";
  });

  fid::save_checkpoint(cfg.paths.checkpoint, model, tokenizer);
  log << "saved checkpoint to " << cfg.paths.checkpoint << " after " << seconds_since(start)
      << " s\n";
}

void cmd_answer(const PipelineConfig &cfg, std::ostream &log) {
  require_path(cfg.paths.predictions, "paths.predictions");
  require_path(cfg.paths.checkpoint, "paths.checkpoint");
  std::vector<std::string> checkpoint_paths = split_list(cfg.paths.checkpoint);
  if (checkpoint_paths.empty()) throw std::runtime_error("paths.checkpoint is empty");
  for (const std::string &p : checkpoint_paths) require_file(p, "checkpoint");

  std::vector<fid::Checkpoint> models;
  for (const std::string &p : checkpoint_paths) models.push_back(fid::load_checkpoint(p));

  Corpus corpus = load_corpus_for(cfg);
  std::vector<QAExample> examples = load_qa_for(cfg);
  auto ids = passage_ids_per_question(cfg, examples);
  std::vector<PreparedExample> prepared = join_examples(cfg, examples, corpus, ids, cfg.retrieval.k);

  auto start = std::chrono::steady_clock::now();
  std::vector<Prediction> predictions;
  predictions.reserve(prepared.size());

  for (const PreparedExample &prep : prepared) {
    // With an ensemble, the retrieved passages are split round-robin and
    // the answer with the best mean token log-probability wins.
    struct ModelOutput {
      AnswerCandidate top;
      std::vector<AnswerCandidate> beams;
      std::vector<const Passage *> passages;
      size_t model_index;
    };
    std::vector<ModelOutput> outputs;
    std::vector<AnswerCandidate> top_candidates;

    for (size_t mi = 0; mi < models.size(); ++mi) {
      std::vector<const Passage *> split;
      for (size_t pi = mi; pi < prep.passages.size(); pi += models.size())
        split.push_back(prep.passages[pi]);
      if (split.empty()) continue;

      const fid::FidModel<float> &model = models[mi].model;
      const Tokenizer &tokenizer = models[mi].tokenizer;
      std::vector<fid::EncodedPassage<float>> encodings;
      for (const Passage *p : split)
        encodings.push_back(fid::encode(
            model, fid::build_input(tokenizer, prep.qa->question, prep.qa->visual, *p,
                                    model.config.max_input_len)));
      fid::FusedState<float> fused = fid::fuse(encodings);

      ModelOutput out;
      out.model_index = mi;
      out.passages = split;
      if (cfg.decoding.mode == "greedy") {
        out.top = fid::greedy_decode(model, fused);
        out.beams = {out.top};
      } else {
        out.beams = fid::beam_search(model, fused, cfg.decoding.beam);
        out.top = out.beams.front();
      }
      auto attr = fid::attribution(model, fused, out.top.tokens);
      out.top.attribution.assign(attr.scores.begin(), attr.scores.end());
      top_candidates.push_back(out.top);
      outputs.push_back(std::move(out));
    }
    if (outputs.empty())
      throw std::runtime_error("question '" + prep.qa->question_id +
                               "' produced no decodable inputs");

    size_t winner = ensemble_select(top_candidates);
    const ModelOutput &best = outputs[winner];
    const Tokenizer &tokenizer = models[best.model_index].tokenizer;

    Prediction pred;
    pred.question_id = prep.qa->question_id;
    pred.answer = tokenizer.decode(best.top.tokens);
    pred.normalized_answer = normalize_answer(pred.answer);
    pred.token_logprobs = best.top.token_logprobs;
    for (const AnswerCandidate &beam : best.beams)
      pred.beam_answers.push_back(tokenizer.decode(beam.tokens));
    for (size_t pi = 0; pi < best.passages.size(); ++pi)
      pred.attribution.emplace_back(best.passages[pi]->id, best.top.attribution[pi]);
    predictions.push_back(std::move(pred));
  }

  write_predictions(cfg.paths.predictions, predictions);
  log << "answered " << predictions.size() << " questions with " << models.size() << " model(s), "
      << seconds_since(start) << " s\n";
}

void cmd_evaluate(const PipelineConfig &cfg, std::ostream &log) {
  require_path(cfg.paths.report, "paths.report");
  require_path(cfg.paths.predictions, "paths.predictions");
  require_file(cfg.paths.predictions, "prediction file");

  Corpus corpus = load_corpus_for(cfg);
  std::vector<QAExample> examples = load_qa_for(cfg);
  std::vector<Prediction> predictions = read_predictions(cfg.paths.predictions);
  std::vector<RetrievalRecord> retrievals;
  if (!cfg.paths.retrieval.empty() && fs::exists(cfg.paths.retrieval))
    retrievals = read_retrieval(cfg.paths.retrieval);

  EvalReport report = evaluate(predictions, examples, retrievals, corpus);
  write_report(cfg.paths.report, report);
  log << render_report(report);
  log << "report written to " << cfg.paths.report << "\n";
}

}  // namespace ragqa
