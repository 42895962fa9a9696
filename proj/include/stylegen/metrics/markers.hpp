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

// Stylistic marker counting and the per-personality correlation between
// model outputs and gold references.
//
// Lexicon grammar, '#' starts a comment:
//
//   <marker> | aggregation|pragmatic | <token pattern>
//
// A marker may have several lines; its count is the sum over its patterns.
// Patterns are literal token subsequences. A leading "^" anchors the
// pattern at a sentence start, a trailing "$" at a sentence end (before
// . ! ? or the end of the text).

#pragma once

#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "stylegen/error.hpp"
#include "stylegen/metrics/aligner.hpp"
#include "stylegen/metrics/stats.hpp"
#include "stylegen/mr.hpp"
#include "stylegen/text.hpp"

namespace stylegen {

enum class MarkerCategory : std::uint8_t { kAggregation, kPragmatic };

inline std::string to_string(MarkerCategory c) {
  return c == MarkerCategory::kAggregation ? "aggregation" : "pragmatic";
}

struct MarkerPattern {
  TokenSequence tokens;
  bool at_start = false;
  bool at_end = false;
};

struct MarkerEntry {
  std::string name;
  MarkerCategory category = MarkerCategory::kPragmatic;
  MarkerPattern pattern;
};

class MarkerLexicon {
 public:
  std::vector<MarkerEntry> entries;

  /// Distinct marker names of a category in first-appearance order.
  std::vector<std::string> names(MarkerCategory c) const {
    std::vector<std::string> out;
    for (const auto& e : entries)
      if (e.category == c && std::find(out.begin(), out.end(), e.name) == out.end()) out.push_back(e.name);
    return out;
  }

  static MarkerLexicon parse(std::string_view text) {
    MarkerLexicon lex;
    std::istringstream is{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
      ++line_no;
      std::string_view line = raw;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto f = detail::split_trim(line, '|');
      auto fail = [&](const std::string& why) {
        throw DataError("marker lexicon line " + std::to_string(line_no) + ": " + why);
      };
      if (f.size() != 3 || f[0].empty() || f[2].empty()) fail("expected '<marker> | <category> | <pattern>'");
      MarkerEntry e;
      e.name = f[0];
      if (f[1] == "aggregation") e.category = MarkerCategory::kAggregation;
      else if (f[1] == "pragmatic") e.category = MarkerCategory::kPragmatic;
      else fail("unknown category '" + f[1] + "'");
      std::string_view pat = f[2];
      if (pat.front() == '^') {
        e.pattern.at_start = true;
        pat = detail::trim(pat.substr(1));
      }
      if (!pat.empty() && pat.back() == '$') {
        e.pattern.at_end = true;
        pat = detail::trim(pat.substr(0, pat.size() - 1));
      }
      if (pat.empty()) fail("empty pattern");
      e.pattern.tokens = tokenize(pat);
      lex.entries.push_back(std::move(e));
    }
    return lex;
  }

  static const MarkerLexicon& builtin();
};

inline constexpr std::string_view kBuiltinMarkerLexicon = R"(# Aggregation operations
with_cue | aggregation | , with
conjunction | aggregation | and it
conjunction | aggregation | , it
also_cue | aggregation | also it
relative_clause | aggregation | , which

# Pragmatic markers
ack_justification | pragmatic | i see , well
ack_yeah | pragmatic | yeah
confirmation | pragmatic | did you say
confirmation | pragmatic | let's see
down_kind_of | pragmatic | kind of
down_like | pragmatic | like
exclaim | pragmatic | !
general_softener | pragmatic | sort of
general_softener | pragmatic | somewhat
general_softener | pragmatic | quite
general_softener | pragmatic | rather
emphasizer | pragmatic | really
emphasizer | pragmatic | basically
emphasizer | pragmatic | actually
emphasizer | pragmatic | just
tag_question | pragmatic | alright ?
tag_question | pragmatic | you see ?
tag_question | pragmatic | ok ?
in_group | pragmatic | friend
filler_mmhm | pragmatic | mmhm
filler_err | pragmatic | err
expletive_oh_god | pragmatic | oh god
expletive_damn | pragmatic | damn
hedge_i_mean | pragmatic | i mean
hedge_you_know | pragmatic | you know
hedge_i_think | pragmatic | i think
hedge_i_guess | pragmatic | i guess
hedge_perhaps | pragmatic | perhaps
hedge_dont_know | pragmatic | i don ' t know
come_on | pragmatic | come on
emph_pretty | pragmatic | pretty
emph_obviously | pragmatic | obviously
emph_everybody_knows | pragmatic | everybody knows
)";

inline const MarkerLexicon& MarkerLexicon::builtin() {
  static const MarkerLexicon lex = parse(kBuiltinMarkerLexicon);
  return lex;
}

namespace detail {

inline bool sentence_end(const std::string& t) { return t == "." || t == "!" || t == "?"; }

}  // namespace detail

/// Non-overlapping occurrences of one pattern, scanning left to right.
inline std::size_t count_pattern(const TokenSequence& text, const MarkerPattern& p) {
  const std::size_t n = p.tokens.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i + n <= text.size();) {
    bool ok = std::equal(p.tokens.begin(), p.tokens.end(), text.begin() + static_cast<std::ptrdiff_t>(i));
    if (ok && p.at_start) ok = i == 0 || detail::sentence_end(text[i - 1]);
    if (ok && p.at_end) ok = i + n == text.size() || detail::sentence_end(text[i + n]);
    if (ok) {
      ++count;
      i += n;
    } else {
      ++i;
    }
  }
  return count;
}

/// Per-marker counts for one text; every lexicon marker is present.
inline std::map<std::string, double> count_markers(const TokenSequence& text, const MarkerLexicon& lex) {
  std::map<std::string, double> out;
  for (const auto& e : lex.entries) out[e.name] += static_cast<double>(count_pattern(text, e.pattern));
  return out;
}

struct LabeledText {
  std::string personality;  // label as written, e.g. "agreeable"
  TokenSequence tokens;
};

struct MarkerMeans {
  std::map<Personality, std::map<std::string, double>> means;  // mean count per output
  std::map<Personality, std::size_t> outputs;
};

/// Mean occurrences per output of every marker, within each personality.
inline MarkerMeans marker_counts(std::span<const LabeledText> outputs, const MarkerLexicon& lex) {
  MarkerMeans m;
  for (const auto& o : outputs) {
    const auto p = parse_personality(o.personality);
    if (!p) throw UnknownPersonalityLabel(o.personality);
    auto& acc = m.means[*p];
    for (const auto& [name, c] : count_markers(o.tokens, lex)) acc[name] += c;
    ++m.outputs[*p];
  }
  for (auto& [p, acc] : m.means)
    for (auto& [_, v] : acc) v /= static_cast<double>(m.outputs[p]);
  return m;
}

struct PersonalityCorrelation {
  Personality personality = Personality::kAgreeable;
  double r = 0.0;
  double p_value = 0.0;
  bool degenerate = false;  // zero variance on one side; r reported as 0
};

struct CategoryCorrelation {
  MarkerCategory category = MarkerCategory::kPragmatic;
  std::vector<PersonalityCorrelation> rows;  // personalities present on both sides
  double average = 0.0;
};

/// For each personality, Pearson r between the model's and the gold mean
/// counts over the category's markers; `average` is the mean of the rows.
inline CategoryCorrelation marker_correlation(const MarkerMeans& model, const MarkerMeans& gold,
                                              const MarkerLexicon& lex, MarkerCategory cat) {
  CategoryCorrelation out;
  out.category = cat;
  const auto names = lex.names(cat);
  for (Personality p : kAllPersonalities) {
    auto mi = model.means.find(p);
    auto gi = gold.means.find(p);
    if (mi == model.means.end() || gi == gold.means.end()) continue;
    std::vector<double> xs, ys;
    for (const auto& n : names) {
      auto x = mi->second.find(n);
      auto y = gi->second.find(n);
      xs.push_back(x == mi->second.end() ? 0.0 : x->second);
      ys.push_back(y == gi->second.end() ? 0.0 : y->second);
    }
    PersonalityCorrelation row;
    row.personality = p;
    try {
      const auto c = pearson(xs, ys);
      row.r = c.r;
      row.p_value = c.p_value;
    } catch (const ZeroVariance&) {
      row.degenerate = true;
      row.p_value = 1.0;
    }
    out.rows.push_back(row);
  }
  if (!out.rows.empty()) {
    for (const auto& r : out.rows) out.average += r.r;
    out.average /= static_cast<double>(out.rows.size());
  }
  return out;
}

}  // namespace stylegen
