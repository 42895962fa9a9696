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

#include <cmath>

#include "fixtures.hpp"
#include "stylegen/metrics/contrast.hpp"
#include "stylegen/metrics/entropy.hpp"
#include "stylegen/metrics/markers.hpp"
#include "stylegen/metrics/stats.hpp"

namespace stylegen {
namespace {

std::vector<TokenSequence> corpus_of(std::initializer_list<const char*> lines) {
  std::vector<TokenSequence> out;
  for (const char* l : lines) out.push_back(tokenize(l));
  return out;
}

TEST(Entropy, ClosedForms) {
  EXPECT_EQ(entropy(corpus_of({"a"})), 0.0);
  const auto aaa = corpus_of({"a a a"});
  const auto st = ngram_stats(aaa);
  EXPECT_EQ(st.total, 6);
  EXPECT_EQ(st.counts.size(), 3u);
  const double want = -(0.5 * std::log2(0.5) + (1.0 / 3) * std::log2(1.0 / 3) + (1.0 / 6) * std::log2(1.0 / 6));
  EXPECT_NEAR(entropy(aaa), want, 1e-12);
  EXPECT_NEAR(entropy(aaa), 1.459147917027245, 1e-9);
  // Four distinct unigrams, three bigrams, two trigrams: nine equiprobable n-grams.
  EXPECT_NEAR(entropy(corpus_of({"a b c d"})), std::log2(9.0), 1e-12);
  EXPECT_THROW(entropy(std::vector<TokenSequence>{}), EmptyCorpus);
}

TEST(Entropy, DuplicationInvariant) {
  auto c = corpus_of({"the eagle is cheap .", "it is a pub , also it has a decent rating .", "yeah !"});
  const double h = entropy(c);
  auto twice = c;
  twice.insert(twice.end(), c.begin(), c.end());
  EXPECT_NEAR(entropy(twice), h, 1e-12);
  // Merging statistics equals pooling the corpora.
  NgramStats merged = ngram_stats(c);
  merged += ngram_stats(c);
  EXPECT_EQ(entropy(merged), entropy(twice));
}

TEST(Pearson, AffineAndErrors) {
  const std::vector<double> xs = {1, 2, 3.5, 7, -2};
  std::vector<double> up, down;
  for (double x : xs) {
    up.push_back(2 * x + 3);
    down.push_back(-x);
  }
  EXPECT_NEAR(pearson(xs, up).r, 1.0, 1e-12);
  EXPECT_NEAR(pearson(xs, down).r, -1.0, 1e-12);
  EXPECT_EQ(pearson(xs, up).p_value, 0.0);
  const std::vector<double> flat(5, 1.0);
  EXPECT_THROW(pearson(xs, flat), ZeroVariance);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), ShapeMismatch);
  EXPECT_THROW(pearson(xs, std::vector<double>{1, 2}), ShapeMismatch);
  EXPECT_TRUE(std::isnan(pearson(std::vector<double>{1, 2}, std::vector<double>{3, 1}).p_value));
}

TEST(Pearson, Textbook) {
  // Anscombe's quartet, sets I and II: r = 0.816 for both.
  const std::vector<double> x = {10, 8, 13, 9, 11, 14, 6, 4, 12, 7, 5};
  const std::vector<double> y1 = {8.04, 6.95, 7.58, 8.81, 8.33, 9.96, 7.24, 4.26, 10.84, 4.82, 5.68};
  const std::vector<double> y2 = {9.14, 8.14, 8.74, 8.77, 9.26, 8.10, 6.13, 3.10, 9.13, 7.26, 4.74};
  const auto c1 = pearson(x, y1), c2 = pearson(x, y2);
  EXPECT_NEAR(c1.r, 0.816, 5e-4);
  // Frozen against an independent statistics package.
  EXPECT_NEAR(c1.r, 0.8164205163448396, 1e-6);
  EXPECT_NEAR(c1.p_value, 0.002169628873078804, 1e-6);
  EXPECT_NEAR(c2.r, 0.8162365060002426, 1e-6);
  EXPECT_NEAR(c2.p_value, 0.002178816236910809, 1e-6);
  const auto c3 = pearson(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{2, 1, 4, 3, 5});
  EXPECT_NEAR(c3.r, 0.8, 1e-12);
  EXPECT_NEAR(c3.p_value, 0.10408803866182799, 1e-6);
}

TEST(Pearson, CriticalValueTable) {
  // Critical r for df = 10 at alpha = .05 (two-sided) is 0.576 in standard
  // tables; t = 2.228.
  const double t = 2.228138851986274, df = 10.0;
  const double r = t / std::sqrt(df + t * t);
  EXPECT_NEAR(r, 0.576, 5e-4);
  // Build a 12-point sample with exactly that correlation and check p = .05.
  std::vector<double> x(12), y(12);
  std::vector<double> e(12);
  for (int i = 0; i < 12; ++i) x[i] = i - 5.5;
  for (int i = 0; i < 12; ++i) e[i] = (i % 2 ? 1.0 : -1.0) * (i < 6 ? 1.0 : -1.0);
  // Orthogonalize e against x, then mix to the target correlation.
  double ex = 0, xx = 0, ee = 0;
  for (int i = 0; i < 12; ++i) ex += e[i] * x[i], xx += x[i] * x[i];
  for (int i = 0; i < 12; ++i) e[i] -= ex / xx * x[i];
  for (int i = 0; i < 12; ++i) ee += e[i] * e[i];
  for (int i = 0; i < 12; ++i) y[i] = r * x[i] / std::sqrt(xx) + std::sqrt(1 - r * r) * e[i] / std::sqrt(ee);
  const auto c = pearson(x, y);
  EXPECT_NEAR(c.r, r, 1e-12);
  EXPECT_NEAR(c.p_value, 0.05, 1e-9);
}

// ---------------------------------------------------------------------------

TEST(Markers, Examples) {
  const auto& lex = MarkerLexicon::builtin();
  const auto a = count_markers(tokenize("yeah, i don't know. mmhm ..."), lex);
  EXPECT_GE(a.at("ack_yeah"), 1.0);
  EXPECT_GE(a.at("hedge_dont_know"), 1.0);
  EXPECT_GE(a.at("filler_mmhm"), 1.0);
  const auto b = count_markers(tokenize("X has Y, also it has Z."), lex);
  EXPECT_GE(b.at("also_cue"), 1.0);
  const auto c = count_markers(tokenize("X is Y and it is Z. X is Y, it is Z."), lex);
  EXPECT_EQ(c.at("conjunction"), 2.0);
  EXPECT_EQ(count_markers(tokenize("X is in Y, with Z."), lex).at("with_cue"), 1.0);
  const auto tags = count_markers(tokenize("it is cheap, alright? you see? ok?"), lex);
  EXPECT_EQ(tags.at("tag_question"), 3.0);
  const auto conf = count_markers(tokenize("let's see ..... did you say X?"), lex);
  EXPECT_EQ(conf.at("confirmation"), 2.0);
  EXPECT_TRUE(count_markers(tokenize("anything at all"), MarkerLexicon{}).empty());
}

TEST(Markers, EveryTableRowCovered) {
  const auto& lex = MarkerLexicon::builtin();
  const auto agg = lex.names(MarkerCategory::kAggregation);
  const auto prag = lex.names(MarkerCategory::kPragmatic);
  for (const char* n : {"with_cue", "conjunction", "also_cue"})
    EXPECT_NE(std::find(agg.begin(), agg.end(), n), agg.end()) << n;
  for (const char* n : {"ack_justification", "ack_yeah", "confirmation", "down_kind_of", "down_like", "exclaim",
                        "general_softener", "emphasizer", "tag_question"})
    EXPECT_NE(std::find(prag.begin(), prag.end(), n), prag.end()) << n;
}

TEST(Markers, AnchorsAndParseErrors) {
  const auto lex = MarkerLexicon::parse("opener | pragmatic | ^ well\ncloser | pragmatic | friend $\n");
  EXPECT_EQ(count_markers(tokenize("well, it is ok. well ok well"), lex).at("opener"), 2.0);
  EXPECT_EQ(count_markers(tokenize("hi friend. my friend is here, friend"), lex).at("closer"), 2.0);
  EXPECT_THROW(MarkerLexicon::parse("x | stylistic | y\n"), DataError);
  EXPECT_THROW(MarkerLexicon::parse("x | pragmatic\n"), DataError);
}

TEST(Markers, MeansAndCorrelation) {
  const auto lex = MarkerLexicon::parse("a | pragmatic | yeah\nb | pragmatic | like\nc | pragmatic | !\n");
  const std::vector<LabeledText> gold = {{"agreeable", tokenize("yeah yeah like")},
                                         {"agreeable", tokenize("yeah !")},
                                         {"extravert", tokenize("! ! like")}};
  const auto gm = marker_counts(gold, lex);
  EXPECT_DOUBLE_EQ(gm.means.at(Personality::kAgreeable).at("a"), 1.5);
  EXPECT_DOUBLE_EQ(gm.means.at(Personality::kAgreeable).at("b"), 0.5);
  EXPECT_EQ(gm.outputs.at(Personality::kAgreeable), 2u);

  const std::vector<LabeledText> model = {{"Agreeable", tokenize("yeah yeah yeah like !")},
                                          {"extravert", tokenize("nothing")}};
  const auto mm = marker_counts(model, lex);
  const auto corr = marker_correlation(mm, gm, lex, MarkerCategory::kPragmatic);
  ASSERT_EQ(corr.rows.size(), 2u);
  // Agreeable: model (3, 1, 1) vs gold (1.5, .5, .5) -> r = 1.
  EXPECT_NEAR(corr.rows[0].r, 1.0, 1e-12);
  // Extravert model output has no markers: degenerate, r reported as 0.
  EXPECT_TRUE(corr.rows[1].degenerate);
  EXPECT_EQ(corr.rows[1].r, 0.0);
  EXPECT_NEAR(corr.average, 0.5, 1e-12);

  const std::vector<LabeledText> bad = {{"grumpy", tokenize("yeah")}};
  EXPECT_THROW(marker_counts(bad, lex), UnknownPersonalityLabel);
}

// ---------------------------------------------------------------------------

TEST(Contrast, HandLabeledFixture) {
  const auto rows = testing::read_tsv("contrast_30.tsv");
  ASSERT_EQ(rows.size(), 30u);
  std::vector<ContrastJudgment> js;
  for (const auto& r : rows) {
    const auto want = testing::ints(r[0]);
    const auto j = contrast_judge(parse_mr(r[1]), tokenize(r[2]));
    EXPECT_EQ(j.attempted, want[0] == 1) << r[2];
    EXPECT_EQ(j.valid, want[1] == 1) << r[2];
    EXPECT_TRUE(j.attempted || !j.valid);
    js.push_back(j);
  }
  // The first four rows are the published sample outputs: all valid.
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(js[i].valid) << i;
}

TEST(Contrast, Examples) {
  const auto mr = parse_mr("name[Clowns], customerRating[high], familyFriendly[no]");
  const auto j = contrast_judge(mr, tokenize("it has a high customer rating but is not child friendly"));
  EXPECT_TRUE(j.attempted && j.valid);
  EXPECT_EQ(j.cue, "but");
  ASSERT_TRUE(j.left && j.right);
  EXPECT_EQ(j.left->slot, "customerrating");
  EXPECT_EQ(j.left->polarity, 1);
  EXPECT_EQ(j.right->slot, "familyfriendly");
  EXPECT_EQ(j.right->polarity, -1);

  EXPECT_FALSE(contrast_judge(mr, tokenize("it has a high customer rating and is not child friendly")).attempted);

  // A table that registers both values with the same polarity.
  const auto same = PolarityTable::parse("pricerange | cheap | +\ncustomerrating | low | +\n");
  const auto k = contrast_judge(parse_mr("name[Z], priceRange[cheap], customerRating[low]"),
                                tokenize("cheap but low rated"), same);
  EXPECT_TRUE(k.attempted);
  EXPECT_FALSE(k.valid);
  // With the built-in table the pair is opposed.
  EXPECT_TRUE(contrast_judge(parse_mr("name[Z], priceRange[cheap], customerRating[low]"),
                             tokenize("cheap but low rated"))
                  .valid);
}

TEST(Contrast, CustomCuesAndErrors) {
  const auto t = PolarityTable::parse("@cue whereas\nfamilyfriendly | yes | +\npricerange | high | -\n");
  EXPECT_EQ(t.cues, (std::vector<std::string>{"whereas"}));
  const auto mr = parse_mr("name[Z], familyFriendly[yes], priceRange[high]");
  EXPECT_TRUE(contrast_judge(mr, tokenize("it is family friendly whereas it is expensive"), t).valid);
  EXPECT_FALSE(contrast_judge(mr, tokenize("it is family friendly but it is expensive"), t).attempted);
  EXPECT_THROW(PolarityTable::parse("pricerange | high | maybe\n"), DataError);
}

TEST(Contrast, Accuracy) {
  EXPECT_TRUE(contrast_accuracy(std::vector<ContrastJudgment>{}).undefined);
  const std::vector<ContrastJudgment> none(5);
  const auto z = contrast_accuracy(none);
  EXPECT_EQ(z.accuracy, 0.0);
  EXPECT_EQ(z.attempts, 0u);
  EXPECT_TRUE(z.undefined);

  std::vector<ContrastJudgment> js(500);
  for (std::size_t i = 0; i < 474; ++i) js[i].attempted = true;
  for (std::size_t i = 0; i < 379; ++i) js[i].valid = true;
  const auto a = contrast_accuracy(js);
  EXPECT_EQ(a.attempts, 474u);
  EXPECT_NEAR(a.accuracy, 379.0 / 474.0, 1e-15);
  EXPECT_EQ(std::round(a.accuracy * 100) / 100, 0.80);

  std::vector<ContrastJudgment> all(3);
  for (auto& j : all) j.attempted = j.valid = true;
  EXPECT_EQ(contrast_accuracy(all).accuracy, 1.0);
}

}  // namespace
}  // namespace stylegen
