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

#include <doctest.h>

#include <string>

#include "ragqa/corpus.hpp"
#include "testutil.hpp"

using namespace ragqa;
using testutil::TempDir;
using testutil::write_file;

namespace {

const char *kThreePassages =
    R"({"id": "p1", "title": "Giraffe", "text": "The giraffe has a long neck."}
{"id": "p2", "title": "Wetsuit", "text": "A wetsuit keeps swimmers warm."}
{"id": "p3", "title": "Trains", "text": "Trains run on rails."}
)";

std::string qa_line(const std::string &qid, int n_answers) {
  std::string answers;
  for (int i = 0; i < n_answers; ++i) answers += (i ? "," : "") + std::string("\"neck\"");
  return "{\"question_id\": \"" + qid +
         "\", \"question\": \"what is long\", \"caption\": \"a giraffe\", \"answers\": [" +
         answers + "]}\n";
}

}  // namespace

TEST_CASE("ingest_passages keeps count and order") {
  TempDir dir;
  write_file(dir.file("p.jsonl"), kThreePassages);
  Corpus c = ingest_passages(dir.file("p.jsonl"));
  CHECK(c.size() == 3);
  CHECK(c.at(0).id == "p1");
  CHECK(c.at(1).id == "p2");
  CHECK(c.at(2).id == "p3");
  CHECK(c.at(0).title == "Giraffe");
  CHECK(c.at(0).body == "The giraffe has a long neck.");
}

TEST_CASE("ingest_passages accepts an empty file") {
  TempDir dir;
  write_file(dir.file("p.jsonl"), "");
  Corpus c = ingest_passages(dir.file("p.jsonl"));
  CHECK(c.size() == 0);
  CHECK(c.empty());
}

TEST_CASE("duplicate passage id names the id and line") {
  TempDir dir;
  write_file(dir.file("p.jsonl"),
             R"({"id": "p0", "title": "", "text": "a"}
{"id": "p1", "title": "", "text": "b"}
{"id": "p2", "title": "", "text": "c"}
{"id": "p3", "title": "", "text": "d"}
{"id": "p1", "title": "", "text": "e"}
)");
  try {
    ingest_passages(dir.file("p.jsonl"));
    FAIL("expected duplicate-id error");
  } catch (const std::exception &e) {
    std::string msg = e.what();
    CHECK(msg.find("p1") != std::string::npos);
    CHECK(msg.find("line 5") != std::string::npos);
  }
}

TEST_CASE("malformed line carries the line number") {
  TempDir dir;
  write_file(dir.file("p.jsonl"),
             "{\"id\": \"p1\", \"title\": \"\", \"text\": \"a\"}\nnot json at all\n");
  try {
    ingest_passages(dir.file("p.jsonl"));
    FAIL("expected parse error");
  } catch (const std::exception &e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("missing fields are rejected") {
  TempDir dir;
  write_file(dir.file("p.jsonl"), "{\"id\": \"p1\", \"title\": \"no text field\"}\n");
  CHECK_THROWS(ingest_passages(dir.file("p.jsonl")));
  write_file(dir.file("p2.jsonl"), "{\"id\": \"p1\", \"title\": \"t\", \"text\": \"\"}\n");
  CHECK_THROWS(ingest_passages(dir.file("p2.jsonl")));  // empty body
}

TEST_CASE("qa record with caption only gets empty labels and ocr") {
  TempDir dir;
  write_file(dir.file("qa.jsonl"),
             "{\"question_id\": \"q1\", \"question\": \"what is it\", \"caption\": \"a dog\"}\n");
  auto qa = ingest_qa(dir.file("qa.jsonl"));
  REQUIRE(qa.size() == 1);
  CHECK(qa[0].visual.caption == "a dog");
  CHECK(qa[0].visual.dense_labels.empty());
  CHECK(qa[0].visual.ocr.empty());
  CHECK(qa[0].annotated_answers.empty());
}

TEST_CASE("qa answer count validation") {
  TempDir dir;
  write_file(dir.file("ok.jsonl"), qa_line("q1", 10));
  CHECK(ingest_qa(dir.file("ok.jsonl")).size() == 1);

  write_file(dir.file("nine.jsonl"), qa_line("q9", 9));
  try {
    ingest_qa(dir.file("nine.jsonl"));
    FAIL("expected answer-count error");
  } catch (const std::exception &e) {
    CHECK(std::string(e.what()).find("q9") != std::string::npos);
  }

  write_file(dir.file("eleven.jsonl"), qa_line("q11", 11));
  CHECK_THROWS(ingest_qa(dir.file("eleven.jsonl")));
}

TEST_CASE("lookup round-trips and distinguishes not-found") {
  TempDir dir;
  write_file(dir.file("p.jsonl"), kThreePassages);
  Corpus c = ingest_passages(dir.file("p.jsonl"));
  const Passage *p = c.lookup("p1");
  REQUIRE(p != nullptr);
  CHECK(p->title == "Giraffe");
  CHECK(c.lookup("zzz") == nullptr);
}

TEST_CASE("persist, reload, lookup yields identical passages") {
  TempDir dir;
  write_file(dir.file("p.jsonl"), kThreePassages);
  Corpus c = ingest_passages(dir.file("p.jsonl"));
  c.save(dir.file("c.bin"));
  Corpus r = Corpus::load(dir.file("c.bin"));
  REQUIRE(r.size() == c.size());
  for (size_t i = 0; i < c.size(); ++i) {
    CHECK(r.at(i).id == c.at(i).id);
    CHECK(r.at(i).title == c.at(i).title);
    CHECK(r.at(i).body == c.at(i).body);
  }
  const Passage *p = r.lookup("p2");
  REQUIRE(p != nullptr);
  CHECK(p->body == "A wetsuit keeps swimmers warm.");
}

TEST_CASE("ingestion is deterministic: persisted corpora are byte-identical") {
  TempDir dir;
  write_file(dir.file("p.jsonl"), kThreePassages);
  ingest_passages(dir.file("p.jsonl")).save(dir.file("a.bin"));
  ingest_passages(dir.file("p.jsonl")).save(dir.file("b.bin"));
  CHECK(testutil::slurp(dir.file("a.bin")) == testutil::slurp(dir.file("b.bin")));
}

TEST_CASE("qa round-trip preserves records") {
  TempDir dir;
  write_file(dir.file("qa.jsonl"),
             "{\"question_id\": \"q1\", \"image_id\": \"img7\", \"question\": \"what animal\", "
             "\"caption\": \"two giraffes\", \"dense_labels\": [\"long neck\", \"brown spot\"], "
             "\"ocr\": [\"zoo\"], \"question_type\": \"animals\", \"passages\": [\"p1\", \"p2\"]}\n");
  auto qa = ingest_qa(dir.file("qa.jsonl"));
  write_qa(dir.file("copy.jsonl"), qa);
  auto again = ingest_qa(dir.file("copy.jsonl"));
  REQUIRE(again.size() == 1);
  CHECK(again[0].question_id == "q1");
  CHECK(again[0].image_id == "img7");
  CHECK(again[0].visual.dense_labels == std::vector<std::string>{"long neck", "brown spot"});
  CHECK(again[0].visual.ocr == std::vector<std::string>{"zoo"});
  CHECK(again[0].question_type == "animals");
  CHECK(again[0].passages == std::vector<std::string>{"p1", "p2"});
}
