// Copyright 2026 The Stylegen Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "stylegen/metrics/aligner.hpp"
#include "stylegen/metrics/contrast.hpp"
#include "stylegen/pipeline.hpp"
#include "stylegen/synth.hpp"

namespace stylegen {
namespace {

namespace fs = std::filesystem;
namespace pl = stylegen::pipeline;

TEST(Synth, ReferencesRealizeEverySlot) {
  for (const auto& r : synth::personality_corpus(200, 4)) {
    const auto al = align_slots(r.mr, tokenize(r.references.front()));
    const auto c = count_errors(al, ParaphraseTable::builtin());
    EXPECT_EQ(c.substitutions + c.deletions + c.repeats + c.hallucinations, 0) << r.references.front();
  }
  for (const auto& r : synth::plain_corpus(100, 4)) {
    const auto c = count_errors(align_slots(r.mr, tokenize(r.references.front())), ParaphraseTable::builtin());
    EXPECT_EQ(c.rate(), 0.0) << r.references.front();
  }
}

TEST(Synth, ContrastFlagIsRealized) {
  const auto recs = synth::contrast_corpus(100, 9);
  ASSERT_EQ(recs.size(), 200u);
  for (const auto& r : recs) {
    const auto j = contrast_judge(r.mr, tokenize(r.references.front()));
    if (*r.constraint.contrast_flag()) EXPECT_TRUE(j.valid) << r.references.front();
    else EXPECT_FALSE(j.attempted) << r.references.front();
  }
}

TEST(Synth, BalancedAndDeterministic) {
  const auto a = synth::personality_corpus(50, 3);
  const auto b = synth::personality_corpus(50, 3);
  ASSERT_EQ(a.size(), 50u);
  std::map<Personality, int> n;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(record_to_json_line(a[i]), record_to_json_line(b[i]));
    ++n[*a[i].constraint.personality_label()];
  }
  for (auto p : kAllPersonalities) EXPECT_EQ(n[p], 10);
  EXPECT_NE(record_to_json_line(synth::personality_corpus(1, 4)[0]), record_to_json_line(a[0]));
}

// ---------------------------------------------------------------------------

class PipelineTest : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("stylegen_pl_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  pl::RunConfig tiny(std::size_t n_train = 100) {
    pl::write_records((dir / "train.jsonl").string(), synth::personality_corpus(n_train, 1));
    pl::write_records((dir / "test.jsonl").string(), synth::personality_corpus(10, 2));
    pl::RunConfig c;
    c.train_path = (dir / "train.jsonl").string();
    c.test_path = (dir / "test.jsonl").string();
    c.data_dir = (dir / "data").string();
    c.run_dir = (dir / "run").string();
    c.model.rnn_size = 8;
    c.model.embed_size = 6;
    c.model.batch_size = 10;
    c.model.dropout_p = 0.0;
    c.model.beam_width = 2;
    c.train.max_epochs = 2;
    c.max_len = 20;
    return c;
  }
};

TEST_F(PipelineTest, ConfigParsing) {
  const auto c = pl::config_from_json(nlohmann::json::parse(
                                          R"({"train": "t.jsonl", "model": {"method": "m2", "rnn_size": 16},
                                              "training": {"learning_rate": 0.5, "clip_norm": null}, "seed": 9})"),
                                      "/base");
  EXPECT_EQ(c.train_path, "/base/t.jsonl");
  EXPECT_EQ(c.model.method, Method::kM2);
  EXPECT_EQ(c.model.rnn_size, 16);
  EXPECT_EQ(c.train.learning_rate, 0.5);
  EXPECT_FALSE(c.train.clip_norm);
  EXPECT_EQ(c.seed(), 9u);
  EXPECT_THROW(pl::config_from_json(nlohmann::json::parse(R"({"trian": "x"})")), ConfigError);
  EXPECT_THROW(pl::config_from_json(nlohmann::json::parse(R"({"model": {"rnn_size": "big"}})")), ConfigError);
  EXPECT_THROW(pl::config_from_json(nlohmann::json::parse(R"({"model": {"method": "m9"}})")), ConfigError);
  EXPECT_THROW(pl::load_config((dir / "missing.json").string()), ConfigError);
  // Hashes ignore file locations but not settings.
  auto d = c;
  d.train_path = "elsewhere";
  EXPECT_EQ(d.config_hash(), c.config_hash());
  d.train.seed = 10;
  EXPECT_NE(d.config_hash(), c.config_hash());
}

TEST_F(PipelineTest, IngestReportsBalancedClasses) {
  auto c = tiny(1000);
  c.dev_fraction = 0.2;
  const auto rep = pl::ingest(c);
  EXPECT_EQ(rep.records.at("train"), 800u);
  EXPECT_EQ(rep.records.at("dev"), 200u);
  std::size_t total = 0;
  for (auto p : kAllPersonalities) {
    const std::string k(to_string(p));
    EXPECT_EQ(rep.classes.at("train").at(k) + rep.classes.at("dev").at(k), 200u) << k;
    total += rep.classes.at("train").at(k);
  }
  EXPECT_EQ(total, 800u);
  EXPECT_EQ(rep.unmatched_delex, 0u);
  for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json", "vocab.target.txt"})
    EXPECT_TRUE(fs::exists(fs::path(c.data_dir) / f)) << f;
}

TEST_F(PipelineTest, LineageIsChecked) {
  auto c = tiny();
  pl::ingest(c);
  EXPECT_EQ(pl::load_split(c, "test").size(), 10u);
  // Different data settings: the processed directory no longer matches.
  auto other = c;
  other.min_count = 3;
  EXPECT_THROW(pl::load_split(other, "train"), ChecksumMismatch);
  // Tampered split file.
  {
    std::ofstream f(fs::path(c.data_dir) / "test.jsonl", std::ios::app);
    f << "\n";
  }
  EXPECT_THROW(pl::load_split(c, "test"), ChecksumMismatch);
  auto missing = c;
  missing.train_path = (dir / "nope.jsonl").string();
  EXPECT_THROW(pl::ingest(missing), ConfigError);
}

TEST_F(PipelineTest, EndToEndAndEvaluateLineage) {
  auto c = tiny();
  pl::ingest(c);
  pl::train_model(c, c.run_dir);
  const auto g = pl::generate(c);
  EXPECT_EQ(g.outputs.size(), 10u);
  const auto row = pl::evaluate(c);
  EXPECT_GE(row.bleu, 0.0);
  EXPECT_TRUE(fs::exists(fs::path(c.run_dir) / "report.jsonl"));
  // Evaluating under another seed must refuse the outputs.
  auto other = c;
  other.train.seed = 99;
  EXPECT_THROW(pl::evaluate(other), ChecksumMismatch);
  // Generating with a method the checkpoint was not trained with.
  auto swapped = c;
  swapped.model.method = c.model.method == Method::kM1 ? Method::kM2 : Method::kM1;
  EXPECT_THROW(pl::generate(swapped), ConfigError);
}

TEST_F(PipelineTest, GridCoversEveryCell) {
  auto c = tiny(40);
  c.train.max_epochs = 1;
  c.grid.sizes = {4, 5, 6, 7};
  pl::ingest(c);
  const auto rows = pl::train_grid(c);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0].layers, 1);
  EXPECT_EQ(rows[7].layers, 2);
  EXPECT_EQ(rows[7].size, 7);
  EXPECT_TRUE(fs::exists(fs::path(c.run_dir) / "checkpoint.bin"));
  const std::string txt = read_file((fs::path(c.run_dir) / "grid.txt").string());
  EXPECT_EQ(std::count(txt.begin(), txt.end(), '\n'), 9);
}

TEST(Score, ReferencesScorePerfectly) {
  const auto recs = synth::personality_corpus(30, 5);
  std::vector<std::string> outs;
  for (const auto& r : recs) outs.push_back(r.references.front());
  const auto row = pl::score(outs, recs, Task::kPersonality, pl::MetricTables{});
  EXPECT_NEAR(row.bleu, 100.0, 1e-9);
  EXPECT_EQ(row.ser, 0.0);
  // Model markers equal the gold ones: every non-degenerate row has r = 1.
  for (const auto& pr : row.prag_detail.rows)
    if (!pr.degenerate) EXPECT_NEAR(pr.r, 1.0, 1e-9);
  const std::vector<std::string> short_outs(29, "x");
  EXPECT_THROW(pl::score(short_outs, recs, Task::kPersonality, pl::MetricTables{}), DataError);

  const auto crecs = synth::contrast_corpus(10, 5);
  std::vector<std::string> couts;
  for (const auto& r : crecs) couts.push_back(r.references.front());
  const auto crow = pl::score(couts, crecs, Task::kContrast, pl::MetricTables{});
  EXPECT_EQ(crow.contrast.attempts, 10u);
  EXPECT_EQ(crow.contrast.accuracy, 1.0);
}

}  // namespace
}  // namespace stylegen
