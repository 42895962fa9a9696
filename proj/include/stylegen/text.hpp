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

// Tokenization, delexicalization and vocabularies.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylegen/error.hpp"
#include "stylegen/mr.hpp"

namespace stylegen {

using TokenSequence = std::vector<std::string>;

namespace detail {

inline bool is_split_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':' || c == '\'';
}

inline bool is_placeholder_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline char ascii_upper(char c) {
  return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
}

// Length of a `__SLOT__` placeholder starting at s[pos], or 0.
inline std::size_t placeholder_len(std::string_view s, std::size_t pos) {
  if (s.compare(pos, 2, "__") != 0) return 0;
  std::size_t end = pos + 2;
  while (end < s.size() && is_placeholder_char(s[end])) ++end;
  const std::size_t len = end - pos;
  if (len < 5 || s.substr(end - 2, 2) != "__") return 0;
  return len;
}

}  // namespace detail

/// True for tokens of the form `__SLOT_TYPE__`.
inline bool is_placeholder(std::string_view tok) {
  return !tok.empty() && detail::placeholder_len(tok, 0) == tok.size();
}

/// Placeholder token for a slot type: uppercased, non-alphanumerics as '_'.
inline std::string placeholder_for(std::string_view slot_type) {
  std::string out = "__";
  for (char c : slot_type) {
    const char u = detail::ascii_upper(c);
    out += ((u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9')) ? u : '_';
  }
  out += "__";
  return out;
}

/// Lowercases and splits on whitespace, emitting each of `.,!?;:'` as its
/// own token. Placeholders pass through unchanged.
inline TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (detail::is_space(c)) {
      flush();
      ++i;
    } else if (const auto plen = cur.empty() ? detail::placeholder_len(text, i) : 0; plen) {
      out.emplace_back(text.substr(i, plen));
      i += plen;
    } else if (detail::is_split_punct(c)) {
      flush();
      out.emplace_back(1, c);
      ++i;
    } else {
      cur += detail::ascii_lower(c);
      ++i;
    }
  }
  flush();
  if (out.empty()) throw EmptyInput();
  return out;
}

inline std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

struct DelexEntry {
  std::string placeholder;
  std::string slot_type;
  std::string surface;

  friend bool operator==(const DelexEntry&, const DelexEntry&) = default;
};

struct DelexMap {
  std::vector<DelexEntry> placeholders;

  const DelexEntry* find(std::string_view placeholder) const {
    for (const auto& e : placeholders)
      if (e.placeholder == placeholder) return &e;
    return nullptr;
  }
};

struct DelexResult {
  TokenSequence tokens;
  DelexMap map;
  std::vector<std::string> unmatched;  // configured slots whose value never occurs
};

inline const std::set<std::string>& default_delex_slots() {
  static const std::set<std::string> slots = {"name", "near"};
  return slots;
}

/// Replaces every occurrence of each configured slot's value span with its
/// placeholder. Overlaps resolve longest-first, then leftmost-first.
inline DelexResult delexicalize(const MeaningRepresentation& mr, const TokenSequence& ref,
                                const std::set<std::string>& delex_slots) {
  struct Candidate {
    std::size_t start, len, slot;
  };
  std::vector<Candidate> cands;
  std::vector<std::size_t> configured;
  std::vector<TokenSequence> values(mr.slots.size());
  for (std::size_t s = 0; s < mr.slots.size(); ++s) {
    if (!delex_slots.count(mr.slots[s].slot_type)) continue;
    configured.push_back(s);
    values[s] = tokenize(mr.slots[s].slot_value);
    const auto& v = values[s];
    if (v.size() > ref.size()) continue;
    for (std::size_t i = 0; i + v.size() <= ref.size(); ++i)
      if (std::equal(v.begin(), v.end(), ref.begin() + static_cast<std::ptrdiff_t>(i)))
        cands.push_back({i, v.size(), s});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.len != b.len) return a.len > b.len;
    return a.start < b.start;
  });

  std::vector<int> owner(ref.size(), -1);  // candidate index covering each token
  std::vector<const Candidate*> chosen;
  for (const auto& c : cands) {
    bool free = true;
    for (std::size_t k = c.start; k < c.start + c.len; ++k) free = free && owner[k] < 0;
    if (!free) continue;
    for (std::size_t k = c.start; k < c.start + c.len; ++k)
      owner[k] = static_cast<int>(chosen.size());
    chosen.push_back(&c);
  }

  DelexResult out;
  std::vector<bool> matched(mr.slots.size(), false);
  for (std::size_t i = 0; i < ref.size();) {
    if (owner[i] < 0) {
      out.tokens.push_back(ref[i]);
      ++i;
      continue;
    }
    const Candidate& c = *chosen[static_cast<std::size_t>(owner[i])];
    const auto& sv = mr.slots[c.slot];
    const std::string ph = placeholder_for(sv.slot_type);
    out.tokens.push_back(ph);
    if (!matched[c.slot]) {
      matched[c.slot] = true;
      out.map.placeholders.push_back({ph, sv.slot_type, join_tokens(values[c.slot])});
    }
    i += c.len;
  }
  for (auto s : configured)
    if (!matched[s]) out.unmatched.push_back(mr.slots[s].slot_type);
  return out;
}

/// Map from each delexicalizable MR slot to its original surface form;
/// used at generation time when no reference is available.
inline DelexMap delex_map_from_mr(const MeaningRepresentation& mr,
                                  const std::set<std::string>& delex_slots) {
  DelexMap map;
  for (const auto& sv : mr.slots)
    if (delex_slots.count(sv.slot_type))
      map.placeholders.push_back({placeholder_for(sv.slot_type), sv.slot_type, sv.slot_value});
  return map;
}

/// Substitutes placeholders, reattaches punctuation and capitalizes
/// sentence starts.
inline std::string relexicalize(const TokenSequence& out, const DelexMap& map) {
  std::vector<std::string> toks;
  toks.reserve(out.size());
  for (const auto& t : out) {
    if (is_placeholder(t)) {
      const auto* e = map.find(t);
      if (!e) throw UnknownPlaceholder(t);
      toks.push_back(e->surface);
    } else {
      toks.push_back(t);
    }
  }

  std::string text;
  bool capitalize_next = true;
  bool glue_next = false;
  for (auto& t : toks) {
    if (t.empty()) continue;
    const bool punct = t.size() == 1 && detail::is_split_punct(t[0]);
    if (t == "i") t = "I";
    if (capitalize_next && !punct) {
      t[0] = detail::ascii_upper(t[0]);
      capitalize_next = false;
    }
    if (!text.empty() && !punct && !glue_next) text += ' ';
    text += t;
    glue_next = (t == "'");
    if (t == "." || t == "!" || t == "?") capitalize_next = true;
  }
  return text;
}

// ---------------------------------------------------------------------------

enum class VocabKind : std::uint8_t { kSlotType, kSlotValue, kTargetToken };

inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kNumReserved = 4;

/// Bijective token <-> id table with PAD, BOS, EOS, UNK at ids 0..3.
class Vocabulary {
 public:
  Vocabulary() : Vocabulary(VocabKind::kTargetToken) {}
  explicit Vocabulary(VocabKind kind) : kind_(kind) {
    for (const char* r : {"<pad>", "<s>", "</s>", "<unk>"}) add(r, 0);
  }

  VocabKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return entries_.size(); }

  int encode(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    return it == index_.end() ? kUnkId : it->second;
  }
  const std::string& decode(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) return entries_[kUnkId];
    return entries_[static_cast<std::size_t>(id)];
  }
  bool contains(std::string_view tok) const { return index_.count(std::string(tok)) > 0; }
  std::int64_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }

  std::vector<int> encode_all(std::span<const std::string> toks) const {
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(encode(t));
    return ids;
  }

  /// Adds a new entry; returns its id. Existing tokens keep their id.
  int add(std::string tok, std::int64_t count) {
    if (auto it = index_.find(tok); it != index_.end()) return it->second;
    const int id = static_cast<int>(entries_.size());
    index_.emplace(tok, id);
    entries_.push_back(std::move(tok));
    counts_.push_back(count);
    return id;
  }

  /// `<id>\t<string>\t<count>` per line, reserved ids included.
  std::string to_text() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      os << i << '\t' << entries_[i] << '\t' << counts_[i] << '\n';
    return os.str();
  }

  static Vocabulary from_text(std::string_view text, VocabKind kind) {
    Vocabulary v(kind);
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) throw DataError("vocab line " + std::to_string(line_no) + ": expected 3 fields");
      const long id = std::stol(line.substr(0, t1));
      std::string tok = line.substr(t1 + 1, t2 - t1 - 1);
      const long long cnt = std::stoll(line.substr(t2 + 1));
      if (id < kNumReserved) {
        if (v.decode(static_cast<int>(id)) != tok)
          throw DataError("vocab line " + std::to_string(line_no) + ": reserved id mismatch");
        continue;
      }
      if (static_cast<std::size_t>(id) != v.size() || v.contains(tok))
        throw DataError("vocab line " + std::to_string(line_no) + ": ids must be dense and unique");
      v.add(std::move(tok), cnt);
    }
    return v;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.kind_ == b.kind_ && a.entries_ == b.entries_ && a.counts_ == b.counts_;
  }

 private:
  VocabKind kind_;
  std::vector<std::string> entries_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> index_;
};

/// Encoder-side token for a slot value: the placeholder for delexicalized
/// slots, otherwise the lowercased value.
inline std::string source_value_token(const SlotValue& sv,
                                      const std::set<std::string>& delex_slots) {
  if (delex_slots.count(sv.slot_type)) return placeholder_for(sv.slot_type);
  std::string v = sv.slot_value;
  for (auto& c : v) c = detail::ascii_lower(c);
  return v;
}

/// Frequency-ordered vocabulary: items with count >= min_count, most
/// frequent first, ties lexicographic.
inline Vocabulary vocab_from_counts(const std::map<std::string, std::int64_t>& counts,
                                    VocabKind kind, std::int64_t min_count) {
  std::vector<std::pair<std::string, std::int64_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v(kind);
  for (auto& [tok, n] : items)
    if (n >= min_count) v.add(tok, n);
  return v;
}

inline Vocabulary build_vocab(std::span<const DatasetRecord> corpus, VocabKind kind,
                              std::int64_t min_count = 1,
                              const std::set<std::string>& delex_slots = default_delex_slots()) {
  if (corpus.empty()) throw EmptyCorpus();
  std::map<std::string, std::int64_t> counts;
  for (const auto& rec : corpus) {
    switch (kind) {
      case VocabKind::kSlotType:
        for (const auto& sv : rec.mr.slots) ++counts[sv.slot_type];
        break;
      case VocabKind::kSlotValue:
        for (const auto& sv : rec.mr.slots) ++counts[source_value_token(sv, delex_slots)];
        break;
      case VocabKind::kTargetToken:
        for (const auto& ref : rec.references)
          for (auto& tok : delexicalize(rec.mr, tokenize(ref), delex_slots).tokens) ++counts[tok];
        break;
    }
  }
  return vocab_from_counts(counts, kind, min_count);
}

}  // namespace stylegen
