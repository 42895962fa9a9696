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

// Rule-based slot aligner and slot error rate.
//
// A paraphrase table lists, per slot and value, the token phrases that
// realize it. Alignment collects every phrase occurrence in the text,
// keeps a non-overlapping set (longest first, then leftmost) and then
// classifies each MR slot as correct, wrong-value or absent. Phrases for
// slots missing from the MR are hallucinations.
//
// Table grammar, one directive per line, '#' starts a comment:
//
//   @alias <alias> <canonical>     slot-name synonym ("rating" -> customerrating)
//   @open <slot>                   open-class slot: MR value matched literally
//   @repeatable <slot>             repeated mentions are not errors
//   <slot> | <value> | <phrase> ; <phrase> ; ...
//
// Slot names are compared after lowercasing and dropping non-alphanumeric
// characters, so "customer rating", "customerRating" and "customer_rating"
// are the same slot.

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stylegen/error.hpp"
#include "stylegen/mr.hpp"
#include "stylegen/text.hpp"

namespace stylegen {

inline std::string normalize_slot_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    const char l = detail::ascii_lower(c);
    if ((l >= 'a' && l <= 'z') || (l >= '0' && l <= '9')) out += l;
  }
  return out;
}

/// Lowercased, tokenized, space-joined value; the lookup key for values.
inline std::string normalize_value(std::string_view v) {
  try {
    return join_tokens(tokenize(v));
  } catch (const EmptyInput&) {
    return {};
  }
}

namespace detail {

inline std::vector<std::string> split_trim(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

class ParaphraseTable {
 public:
  static ParaphraseTable parse(std::string_view text) {
    ParaphraseTable t;
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
        throw DataError("paraphrase table line " + std::to_string(line_no) + ": " + why);
      };
      if (line.front() == '@') {
        std::istringstream ds{std::string(line)};
        std::string directive, a, b;
        ds >> directive >> a;
        if (a.empty()) fail("directive needs an argument");
        if (directive == "@alias") {
          ds >> b;
          if (b.empty()) fail("@alias needs <alias> <canonical>");
          t.aliases_[normalize_slot_name(a)] = normalize_slot_name(b);
        } else if (directive == "@open") {
          t.open_.insert(normalize_slot_name(a));
        } else if (directive == "@repeatable") {
          t.repeatable_.insert(normalize_slot_name(a));
        } else {
          fail("unknown directive " + directive);
        }
        continue;
      }
      const auto fields = detail::split_trim(line, '|');
      if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
        fail("expected '<slot> | <value> | <phrases>'");
      auto& phrases = t.values_[t.canonical(fields[0])][normalize_value(fields[1])];
      for (const auto& p : detail::split_trim(fields[2], ';')) {
        if (p.empty()) fail("empty phrase");
        phrases.push_back(tokenize(p));
      }
    }
    return t;
  }

  /// Canonical slot name after normalization and alias resolution.
  std::string canonical(std::string_view slot_type) const {
    std::string n = normalize_slot_name(slot_type);
    if (auto it = aliases_.find(n); it != aliases_.end()) return it->second;
    return n;
  }

  bool is_open(const std::string& canonical_slot) const { return open_.count(canonical_slot) > 0; }
  bool is_repeatable(const std::string& canonical_slot) const { return repeatable_.count(canonical_slot) > 0; }

  /// canonical slot -> value key -> phrases
  const std::map<std::string, std::map<std::string, std::vector<TokenSequence>>>& values() const { return values_; }

  const std::vector<TokenSequence>* phrases(const std::string& canonical_slot, const std::string& value_key) const {
    auto s = values_.find(canonical_slot);
    if (s == values_.end()) return nullptr;
    auto v = s->second.find(value_key);
    return v == s->second.end() ? nullptr : &v->second;
  }

  static const ParaphraseTable& builtin();

 private:
  std::map<std::string, std::string> aliases_;
  std::set<std::string> open_;
  std::set<std::string> repeatable_;
  std::map<std::string, std::map<std::string, std::vector<TokenSequence>>> values_;
};

inline constexpr std::string_view kBuiltinParaphraseTable = R"(# Slot value realizations for restaurant-domain MRs.
@alias rating customerrating
@alias price pricerange
@alias cuisine food
@alias location area
@alias type eattype
@open name
@open near
@repeatable name

familyfriendly | yes | family friendly ; family-friendly ; kid friendly ; kid-friendly ; kids friendly ; child friendly ; child-friendly ; children friendly ; children-friendly ; family oriented ; welcomes families
familyfriendly | no | not family friendly ; not family-friendly ; not kid friendly ; not kid-friendly ; not kids friendly ; not child friendly ; not child-friendly ; not children friendly ; not children-friendly ; ' t family friendly ; ' t kid friendly ; ' t child friendly ; ' t children friendly ; non family friendly ; adults only ; no children

eattype | coffee shop | coffee shop ; coffee-shop ; cafe
eattype | restaurant | restaurant
eattype | pub | pub

food | italian | italian
food | english | english ; british
food | french | french
food | chinese | chinese
food | indian | indian
food | japanese | japanese ; sushi
food | fast food | fast food

pricerange | cheap | cheap ; inexpensive ; low price ; low prices ; low price range ; low-priced ; cheaply priced ; affordable
pricerange | moderate | moderate ; moderately priced ; moderate price ; moderate prices ; moderate price range ; reasonable prices ; reasonably priced ; average price ; average prices ; average price range ; mid-priced
pricerange | high | high price ; high prices ; high price range ; high-priced ; high priced ; expensive ; pricey ; price range is high ; prices are high
pricerange | less than £20 | less than £20 ; under £20 ; less than 20 pounds
pricerange | £20-25 | £20-25 ; £20 - 25 ; between £20 and £25
pricerange | more than £30 | more than £30 ; over £30 ; more than 30 pounds
pricerange | less than $20 | less than $20 ; under $20
pricerange | $20-25 | $20-25 ; between $20 and $25
pricerange | more than $30 | more than $30 ; over $30

customerrating | low | low customer rating ; low rating ; low ratings ; low rated ; low-rated ; rated low ; poorly rated ; poor rating ; poor customer rating ; rating is low ; customer rating is low ; ratings are low
customerrating | average | average customer rating ; average rating ; average ratings ; rated average ; rating is average ; customer rating is average ; decent rating ; decent customer rating ; mediocre rating
customerrating | high | high customer rating ; high rating ; high ratings ; highly rated ; rated high ; rated highly ; high-rated ; rating is high ; customer rating is high ; excellent rating ; great rating ; well rated
customerrating | 1 out of 5 | 1 out of 5 ; one out of five ; 1 star ; one star ; one-star ; 1-star
customerrating | 3 out of 5 | 3 out of 5 ; three out of five ; 3 star ; three star ; three-star ; 3-star ; 3 stars ; three stars
customerrating | 5 out of 5 | 5 out of 5 ; five out of five ; 5 star ; five star ; five-star ; 5-star ; 5 stars ; five stars

area | riverside | riverside ; river side ; by the river
area | city centre | city centre ; city center ; centre of the city ; center of the city ; city-centre ; downtown
)";

inline const ParaphraseTable& ParaphraseTable::builtin() {
  static const ParaphraseTable t = parse(kBuiltinParaphraseTable);
  return t;
}

// ---------------------------------------------------------------------------

struct PhraseMatch {
  std::string slot;       // canonical slot name
  std::string value;      // value key
  std::size_t start = 0;  // token offset
  std::size_t length = 0;
};

enum class SlotStatus : std::uint8_t { kCorrect, kWrongValue, kAbsent };

struct SlotAlignment {
  std::string slot_type;              // as written in the MR
  SlotStatus status = SlotStatus::kAbsent;
  std::size_t occurrences = 0;        // matches of the MR value
  std::vector<std::string> realized;  // other values realized for this slot
};

struct Alignment {
  std::vector<SlotAlignment> slots;        // one per MR slot, MR order
  std::vector<std::string> hallucinated;   // canonical slots absent from the MR
  std::vector<PhraseMatch> matches;        // selected, in text order
};

inline Alignment align_slots(const MeaningRepresentation& mr, const TokenSequence& text,
                             const ParaphraseTable& table = ParaphraseTable::builtin()) {
  struct Cand {
    PhraseMatch m;
    bool mr_value;  // matches the MR's own value for that slot
  };
  std::map<std::string, std::string> mr_values;  // canonical slot -> value key
  for (const auto& sv : mr.slots) mr_values[table.canonical(sv.slot_type)] = normalize_value(sv.slot_value);

  std::vector<Cand> cands;
  auto scan = [&](const std::string& slot, const std::string& value, const TokenSequence& phrase) {
    if (phrase.empty() || phrase.size() > text.size()) return;
    auto it = mr_values.find(slot);
    const bool own = it != mr_values.end() && it->second == value;
    for (std::size_t i = 0; i + phrase.size() <= text.size(); ++i)
      if (std::equal(phrase.begin(), phrase.end(), text.begin() + static_cast<std::ptrdiff_t>(i)))
        cands.push_back({{slot, value, i, phrase.size()}, own});
  };
  for (const auto& [slot, vals] : table.values())
    for (const auto& [value, phrases] : vals)
      for (const auto& p : phrases) scan(slot, value, p);
  std::set<std::string> placeholder_slots;
  for (const auto& [slot, _] : table.values()) placeholder_slots.insert(slot);
  for (const auto& sv : mr.slots) {
    const std::string slot = table.canonical(sv.slot_type);
    const std::string key = normalize_value(sv.slot_value);
    if (table.is_open(slot) || !table.phrases(slot, key)) {
      if (auto toks = normalize_value(sv.slot_value); !toks.empty()) scan(slot, key, tokenize(toks));
    }
    scan(slot, key, {placeholder_for(sv.slot_type)});
    placeholder_slots.erase(slot);
  }
  // Placeholders of known slots that are not in the MR still count as mentions.
  for (const auto& slot : placeholder_slots) scan(slot, "", {placeholder_for(slot)});
  for (const char* open : {"name", "near"})
    if (!mr_values.count(open)) scan(open, "", {placeholder_for(open)});

  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.m.length != b.m.length) return a.m.length > b.m.length;
    if (a.m.start != b.m.start) return a.m.start < b.m.start;
    return a.mr_value && !b.mr_value;
  });
  std::vector<bool> used(text.size(), false);
  Alignment out;
  for (const auto& c : cands) {
    bool free = true;
    for (std::size_t k = c.m.start; k < c.m.start + c.m.length; ++k) free = free && !used[k];
    if (!free) continue;
    for (std::size_t k = c.m.start; k < c.m.start + c.m.length; ++k) used[k] = true;
    out.matches.push_back(c.m);
  }
  std::sort(out.matches.begin(), out.matches.end(),
            [](const PhraseMatch& a, const PhraseMatch& b) { return a.start < b.start; });

  std::set<std::string> mentioned;
  for (const auto& m : out.matches) mentioned.insert(m.slot);
  for (const auto& sv : mr.slots) {
    const std::string slot = table.canonical(sv.slot_type);
    const std::string& key = mr_values[slot];
    SlotAlignment a;
    a.slot_type = sv.slot_type;
    for (const auto& m : out.matches) {
      if (m.slot != slot) continue;
      if (m.value == key) ++a.occurrences;
      else if (std::find(a.realized.begin(), a.realized.end(), m.value) == a.realized.end()) a.realized.push_back(m.value);
    }
    a.status = a.occurrences ? SlotStatus::kCorrect : (a.realized.empty() ? SlotStatus::kAbsent : SlotStatus::kWrongValue);
    out.slots.push_back(std::move(a));
  }
  for (const auto& slot : mentioned)
    if (!mr_values.count(slot)) out.hallucinated.push_back(slot);
  return out;
}

struct SlotErrorCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t repeats = 0;
  std::size_t hallucinations = 0;
  std::size_t slots = 0;  // N

  std::size_t errors() const { return substitutions + deletions + repeats + hallucinations; }
  /// (S + D + R + H) / N; may exceed 1.
  double rate() const { return slots ? static_cast<double>(errors()) / static_cast<double>(slots) : 0.0; }

  SlotErrorCounts& operator+=(const SlotErrorCounts& o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    repeats += o.repeats;
    hallucinations += o.hallucinations;
    slots += o.slots;
    return *this;
  }
  friend bool operator==(const SlotErrorCounts&, const SlotErrorCounts&) = default;
};

struct SerResult {
  SlotErrorCounts counts;
  double value = 0.0;
};

inline SlotErrorCounts count_errors(const Alignment& a, const ParaphraseTable& table) {
  SlotErrorCounts c;
  c.slots = a.slots.size();
  for (const auto& s : a.slots) {
    switch (s.status) {
      case SlotStatus::kCorrect:
        if (s.occurrences > 1 && !table.is_repeatable(table.canonical(s.slot_type))) c.repeats += s.occurrences - 1;
        break;
      case SlotStatus::kWrongValue: ++c.substitutions; break;
      case SlotStatus::kAbsent: ++c.deletions; break;
    }
  }
  c.hallucinations = a.hallucinated.size();
  return c;
}

inline SerResult ser(const MeaningRepresentation& mr, const TokenSequence& text,
                     const ParaphraseTable& table = ParaphraseTable::builtin()) {
  SerResult r;
  r.counts = count_errors(align_slots(mr, text, table), table);
  r.value = r.counts.rate();
  return r;
}

}  // namespace stylegen
