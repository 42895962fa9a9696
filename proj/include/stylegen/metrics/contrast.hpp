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

// Contrast judging: a cue word joining two clauses that realize MR values
// of opposite polarity.
//
// Polarity table grammar, '#' starts a comment:
//
//   <slot> | <value> | + or -
//   @cue <word>            adds a contrast cue (defaults apply if none given)
//
// Slot names follow the paraphrase-table normalization.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "stylegen/metrics/aligner.hpp"

namespace stylegen {

inline const std::vector<std::string>& default_contrast_cues() {
  static const std::vector<std::string> cues = {"but", "although", "however", "yet"};
  return cues;
}

class PolarityTable {
 public:
  std::vector<std::string> cues = default_contrast_cues();

  static PolarityTable parse(std::string_view text, const ParaphraseTable& slots = ParaphraseTable::builtin()) {
    PolarityTable t;
    std::vector<std::string> custom_cues;
    std::istringstream is{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
      ++line_no;
      std::string_view line = raw;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      auto fail = [&](const std::string& why) {
        throw DataError("polarity table line " + std::to_string(line_no) + ": " + why);
      };
      if (line.starts_with("@cue")) {
        const auto w = detail::trim(line.substr(4));
        if (w.empty()) fail("@cue needs a word");
        custom_cues.push_back(normalize_value(w));
        continue;
      }
      const auto f = detail::split_trim(line, '|');
      if (f.size() != 3 || f[0].empty() || f[1].empty()) fail("expected '<slot> | <value> | +|-'");
      int pol = 0;
      if (f[2] == "+") pol = 1;
      else if (f[2] == "-") pol = -1;
      else fail("polarity must be + or -");
      t.polarity_[{slots.canonical(f[0]), normalize_value(f[1])}] = pol;
    }
    if (!custom_cues.empty()) t.cues = std::move(custom_cues);
    return t;
  }

  /// +1, -1, or 0 for values without polarity.
  int polarity(const std::string& canonical_slot, const std::string& value_key) const {
    auto it = polarity_.find({canonical_slot, value_key});
    return it == polarity_.end() ? 0 : it->second;
  }

  void set(const std::string& canonical_slot, const std::string& value_key, int pol) {
    polarity_[{canonical_slot, value_key}] = pol;
  }

  static const PolarityTable& builtin();

 private:
  std::map<std::pair<std::string, std::string>, int> polarity_;
};

inline constexpr std::string_view kBuiltinPolarityTable = R"(# Polar values for contrastable slots. Average ratings carry no
# polarity; a moderate price reads as a selling point ("reasonable prices,
# but it is not child-friendly").
familyfriendly | yes | +
familyfriendly | no | -
pricerange | cheap | +
pricerange | moderate | +
pricerange | less than £20 | +
pricerange | less than $20 | +
pricerange | high | -
pricerange | more than £30 | -
pricerange | more than $30 | -
customerrating | high | +
customerrating | 5 out of 5 | +
customerrating | low | -
customerrating | 1 out of 5 | -
)";

inline const PolarityTable& PolarityTable::builtin() {
  static const PolarityTable t = parse(kBuiltinPolarityTable);
  return t;
}

struct RealizedValue {
  std::string slot;   // canonical
  std::string value;  // value key
  int polarity = 0;
};

struct ContrastJudgment {
  bool attempted = false;
  bool valid = false;
  std::string cue;                      // first cue found (or the one that validated)
  std::optional<RealizedValue> left;    // evidence when valid
  std::optional<RealizedValue> right;
};

namespace detail {

inline bool clause_break(const std::string& t) { return t == "." || t == "!" || t == "?"; }

}  // namespace detail

/// attempted: a cue token occurs. valid: for some cue, the clause before it
/// and the clause after it (within the sentence) realize two different MR
/// slots with opposite polarity. When the clause before the cue holds no
/// polar value ("although X, Y"), the clause after it is split at its first
/// comma instead; a sentence-initial cue may also pair with the previous
/// sentence.
inline ContrastJudgment contrast_judge(const MeaningRepresentation& mr, const TokenSequence& text,
                                       const PolarityTable& polar = PolarityTable::builtin(),
                                       const ParaphraseTable& table = ParaphraseTable::builtin()) {
  ContrastJudgment j;
  std::set<std::string> cues(polar.cues.begin(), polar.cues.end());
  std::vector<std::size_t> cue_pos;
  for (std::size_t i = 0; i < text.size(); ++i)
    if (cues.count(text[i])) cue_pos.push_back(i);
  if (cue_pos.empty()) return j;
  j.attempted = true;
  j.cue = text[cue_pos.front()];

  const Alignment al = align_slots(mr, text, table);
  std::map<std::string, std::string> mr_values;
  for (const auto& sv : mr.slots) mr_values[table.canonical(sv.slot_type)] = normalize_value(sv.slot_value);
  // Polar, correctly realized MR values with their token spans.
  struct Span {
    std::size_t begin, end;
    RealizedValue v;
  };
  std::vector<Span> polar_spans;
  for (const auto& m : al.matches) {
    auto it = mr_values.find(m.slot);
    if (it == mr_values.end() || it->second != m.value) continue;
    const int p = polar.polarity(m.slot, m.value);
    if (p != 0) polar_spans.push_back({m.start, m.start + m.length, {m.slot, m.value, p}});
  }
  auto in = [&](std::size_t b, std::size_t e) {
    std::vector<const RealizedValue*> out;
    for (const auto& s : polar_spans)
      if (s.begin >= b && s.end <= e) out.push_back(&s.v);
    return out;
  };
  auto opposed = [&](const std::vector<const RealizedValue*>& l, const std::vector<const RealizedValue*>& r) {
    for (const auto* a : l)
      for (const auto* b : r)
        if (a->slot != b->slot && a->polarity == -b->polarity) {
          j.left = *a;
          j.right = *b;
          return true;
        }
    return false;
  };
  for (std::size_t k : cue_pos) {
    std::size_t s0 = k;
    while (s0 > 0 && !detail::clause_break(text[s0 - 1])) --s0;
    std::size_t s1 = k + 1;
    while (s1 < text.size() && !detail::clause_break(text[s1])) ++s1;
    auto left = in(s0, k);
    std::size_t rb = k + 1;
    if (left.empty()) {
      std::size_t comma = k + 1;
      while (comma < s1 && text[comma] != ",") ++comma;
      if (comma < s1) {
        left = in(k + 1, comma);
        rb = comma + 1;
      }
    }
    if (left.empty() && s0 == k && s0 > 0) {
      // Sentence-initial cue ("X. However, Y"): contrast with the previous sentence.
      std::size_t p0 = s0 - 1;
      while (p0 > 0 && !detail::clause_break(text[p0 - 1])) --p0;
      left = in(p0, s0 - 1);
    }
    if (opposed(left, in(rb, s1))) {
      j.valid = true;
      j.cue = text[k];
      return j;
    }
  }
  return j;
}

struct ContrastAccuracy {
  double accuracy = 0.0;
  std::size_t attempts = 0;
  std::size_t valid = 0;
  bool undefined = false;  // no attempts; accuracy reported as 0
};

inline ContrastAccuracy contrast_accuracy(std::span<const ContrastJudgment> judgments) {
  ContrastAccuracy a;
  for (const auto& j : judgments) {
    if (j.attempted) ++a.attempts;
    if (j.valid) ++a.valid;
  }
  if (a.attempts == 0) a.undefined = true;
  else a.accuracy = static_cast<double>(a.valid) / static_cast<double>(a.attempts);
  return a;
}

}  // namespace stylegen
