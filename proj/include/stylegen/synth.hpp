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

// Synthetic restaurant-domain corpora with controllable style.
//
// MRs follow the E2E slot inventory. Realizations are template based and
// fully determined by (MR, style bits), so a model given the bits can in
// principle reproduce a reference exactly while a model given only the
// personality label cannot. Each personality samples the 36 bits from its
// own Bernoulli profile.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylegen/mr.hpp"
#include "stylegen/numerics/rng.hpp"

namespace stylegen::synth {

enum class Site : std::uint8_t { kModifier, kPrefix, kSuffix, kTag, kExclaim, kAggregation };

struct StyleBit {
  std::string_view name;
  std::string_view phrase;
  Site site;
};

// 31 pragmatic bits followed by 5 aggregation bits.
inline constexpr std::array<StyleBit, kNumStyleParams> kStyleBits = {{
    {"kind_of", "kind of", Site::kModifier},
    {"like", "like", Site::kModifier},
    {"sort_of", "sort of", Site::kModifier},
    {"somewhat", "somewhat", Site::kModifier},
    {"quite", "quite", Site::kModifier},
    {"rather", "rather", Site::kModifier},
    {"really", "really", Site::kModifier},
    {"basically", "basically", Site::kModifier},
    {"actually", "actually", Site::kModifier},
    {"just", "just", Site::kModifier},
    {"damn", "damn", Site::kModifier},
    {"pretty", "pretty", Site::kModifier},
    {"obviously", "obviously", Site::kModifier},
    {"yeah", "yeah,", Site::kPrefix},
    {"i_see_well", "i see, well,", Site::kPrefix},
    {"mmhm", "mmhm,", Site::kPrefix},
    {"oh_god", "oh god,", Site::kPrefix},
    {"come_on", "come on,", Site::kPrefix},
    {"dont_know", "i don't know,", Site::kPrefix},
    {"i_mean", "i mean,", Site::kPrefix},
    {"you_know", "you know,", Site::kPrefix},
    {"i_think", "i think,", Site::kPrefix},
    {"i_guess", "i guess,", Site::kPrefix},
    {"err", "err,", Site::kPrefix},
    {"everybody_knows", "everybody knows,", Site::kPrefix},
    {"confirmation", "let's see, did you say {name}?", Site::kPrefix},
    {"friend", "friend", Site::kSuffix},
    {"alright", "alright?", Site::kTag},
    {"you_see", "you see?", Site::kTag},
    {"ok", "ok?", Site::kTag},
    {"exclaim", "!", Site::kExclaim},
    {"with", ", with", Site::kAggregation},
    {"conj_and", " and it", Site::kAggregation},
    {"conj_comma", ", it", Site::kAggregation},
    {"also", ", also it", Site::kAggregation},
    {"relative", ", which", Site::kAggregation},
}};

inline constexpr std::array<std::string_view, 8> kSlotOrder = {
    "name", "eatType", "food", "priceRange", "customer rating", "area", "familyFriendly", "near"};

inline const std::vector<std::string>& slot_values(std::string_view slot) {
  static const std::vector<std::string> names = {
      "The Eagle", "Browns Cambridge", "Aromi", "Fitzbillies", "Clowns", "Cotto", "The Mill", "Wildwood",
      "Zizzi", "Strada", "Loch Fyne", "Giraffe", "The Vaults", "Bibimbap House", "The Golden Curry",
      "Midsummer House", "The Phoenix", "Green Man", "Alimentum", "Blue Spice", "The Cricketers",
      "The Punter", "The Rice Boat", "The Waterman", "The Wrestlers", "The Twenty Two", "The Dumpling Tree",
      "The Olive Grove", "The Plough", "Travellers Rest Beefeater"};
  static const std::vector<std::string> near = {
      "Burger King", "Clare Hall", "The Portland Arms", "Raja Indian Cuisine", "Crowne Plaza Hotel",
      "The Sorrento", "Yippee Noodle Bar", "All Bar One", "Express by Holiday Inn", "Ranch", "The Bakers",
      "Avalon", "The Six Bells", "Rainbow Vegetarian"};
  static const std::vector<std::string> eat = {"coffee shop", "restaurant", "pub"};
  static const std::vector<std::string> food = {"Italian", "English", "French", "Chinese", "Indian", "Japanese",
                                                "Fast food"};
  static const std::vector<std::string> price = {"cheap", "moderate", "high", "less than £20", "£20-25",
                                                 "more than £30"};
  static const std::vector<std::string> rating = {"low", "average", "high", "1 out of 5", "3 out of 5",
                                                  "5 out of 5"};
  static const std::vector<std::string> area = {"riverside", "city centre"};
  static const std::vector<std::string> family = {"yes", "no"};
  static const std::vector<std::string> none;
  if (slot == "name") return names;
  if (slot == "near") return near;
  if (slot == "eatType") return eat;
  if (slot == "food") return food;
  if (slot == "priceRange") return price;
  if (slot == "customer rating") return rating;
  if (slot == "area") return area;
  if (slot == "familyFriendly") return family;
  return none;
}

/// name plus between `min_extra` and `max_extra` other slots, in E2E order.
inline MeaningRepresentation random_mr(RngState& rng, std::size_t min_extra = 2, std::size_t max_extra = 5) {
  std::vector<std::size_t> others = {1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(others);
  const std::size_t k = min_extra + static_cast<std::size_t>(rng.below(max_extra - min_extra + 1));
  std::vector<bool> chosen(kSlotOrder.size(), false);
  chosen[0] = true;
  for (std::size_t i = 0; i < k && i < others.size(); ++i) chosen[others[i]] = true;
  MeaningRepresentation mr;
  for (std::size_t s = 0; s < kSlotOrder.size(); ++s) {
    if (!chosen[s]) continue;
    const auto& vals = slot_values(kSlotOrder[s]);
    mr.slots.push_back({std::string(kSlotOrder[s]), vals[rng.below(vals.size())]});
  }
  return mr;
}

namespace detail {

struct Proposition {
  std::string vp;  // verb phrase after the subject
  std::string np;  // noun phrase used after "with"
};

inline std::string lower(std::string s) {
  for (auto& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

// `m` holds the modifiers (each followed by a space) placed right before
// the value phrase.
inline Proposition proposition(const SlotValue& sv, const std::string& m) {
  const std::string& v = sv.slot_value;
  const std::string& s = sv.slot_type;
  if (s == "eatType") return {"is " + m + "a " + v, m + "a " + v + " setting"};
  if (s == "food") {
    const std::string f = lower(v) == "fast food" ? "fast food" : lower(v) + " food";
    return {"serves " + m + f, m + f};
  }
  if (s == "priceRange") {
    if (v == "cheap") return {"is " + m + "cheap", m + "low prices"};
    if (v == "moderate") return {"has " + m + "moderate prices", m + "moderate prices"};
    if (v == "high") return {"is " + m + "expensive", m + "high prices"};
    if (v == "£20-25") return {"has prices of " + m + v, "prices of " + m + v};
    return {"has prices " + m + v, "prices " + m + v};
  }
  if (s == "customer rating") {
    if (v.find("out of") != std::string::npos)
      return {"has a customer rating of " + m + v, "a customer rating of " + m + v};
    return {"has a " + m + v + " customer rating", "a " + m + v + " customer rating"};
  }
  if (s == "area") {
    const std::string place = v == "riverside" ? "the riverside area" : "the city centre";
    return {"is " + m + "in " + place, "a location " + m + "in " + place};
  }
  if (s == "familyFriendly") {
    if (v == "yes") return {"is " + m + "family friendly", "a " + m + "family friendly atmosphere"};
    return {"is " + m + "not family friendly", "an atmosphere that is " + m + "not family friendly"};
  }
  if (s == "near") return {"is " + m + "near " + v, "a location " + m + "near " + v};
  return {"has " + m + lower(s) + " " + v, m + lower(s) + " " + v};
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
  return s;
}

}  // namespace detail

/// Deterministic realization of an MR under 36 style bits. `join` overrides
/// the operator between the first two propositions (used by the contrast
/// corpus).
inline std::string realize(const MeaningRepresentation& mr, std::span<const std::uint8_t> bits,
                           std::optional<std::string_view> first_join = std::nullopt) {
  const SlotValue* name = mr.find("name");
  const std::string subject = name ? name->slot_value : std::string("it");
  std::vector<const SlotValue*> props;
  for (const auto& sv : mr.slots)
    if (&sv != name) props.push_back(&sv);
  if (props.empty()) return subject + ".";
  auto on = [&](std::size_t b) { return b < bits.size() && bits[b] != 0; };

  std::vector<std::string> mods(props.size());
  std::size_t mod_index = 0;
  std::vector<std::string_view> prefixes, tags, joins;
  bool exclaim = false, friend_ = false;
  for (std::size_t b = 0; b < kStyleBits.size(); ++b) {
    if (!on(b)) continue;
    const auto& sb = kStyleBits[b];
    switch (sb.site) {
      case Site::kModifier:
        mods[mod_index++ % props.size()] += std::string(sb.phrase) + " ";
        break;
      case Site::kPrefix: prefixes.push_back(sb.phrase); break;
      case Site::kSuffix: friend_ = true; break;
      case Site::kTag: tags.push_back(sb.phrase); break;
      case Site::kExclaim: exclaim = true; break;
      case Site::kAggregation: joins.push_back(sb.phrase); break;
    }
  }
  const std::string end = exclaim ? "!" : ".";

  std::string out;
  for (auto p : prefixes) out += detail::replace_all(std::string(p), "{name}", subject) + " ";
  out += subject + " " + detail::proposition(*props[0], mods[0]).vp;
  for (std::size_t k = 1; k < props.size(); ++k) {
    const auto prop = detail::proposition(*props[k], mods[k]);
    std::string_view op = joins.empty() ? "." : joins[(k - 1) % joins.size()];
    if (k == 1 && first_join) op = *first_join;
    if (op == ".") out += end + " it " + prop.vp;
    else if (op == ", with") out += ", with " + prop.np;
    else if (op == ", which") out += ", which " + prop.vp;
    else out += std::string(op) + " " + prop.vp;
  }
  if (friend_) out += ", friend";
  if (tags.empty()) {
    out += end;
  } else {
    out += ",";
    for (auto t : tags) out += " " + std::string(t);
  }
  return out;
}

/// Per-bit Bernoulli probabilities of one personality.
inline std::array<double, kNumStyleParams> personality_profile(Personality p) {
  constexpr double kBase = 0.03, kMid = 0.35, kHigh = 0.85;
  std::array<double, kNumStyleParams> prob;
  prob.fill(kBase);
  auto set = [&](std::initializer_list<std::size_t> ids, double v) {
    for (auto i : ids) prob[i] = v;
  };
  switch (p) {
    case Personality::kAgreeable:
      set({13, 26, 20, 14, 3, 32, 31}, kHigh);
      set({27, 21, 2, 34}, kMid);
      break;
    case Personality::kDisagreeable:
      set({10, 16, 17, 12, 24, 6}, kHigh);
      set({30, 9, 33}, kMid);
      break;
    case Personality::kConscientious:
      set({25, 8, 29, 35, 31}, kHigh);
      set({4, 32, 7}, kMid);
      break;
    case Personality::kUnconscientious:
      set({18, 23, 15, 1, 0, 22, 33}, kHigh);
      set({19, 5, 10}, kMid);
      break;
    case Personality::kExtravert:
      set({30, 13, 6, 9, 19, 28, 11, 34}, kHigh);
      set({26, 32, 20}, kMid);
      break;
  }
  return prob;
}

inline std::vector<std::uint8_t> sample_bits(Personality p, RngState& rng) {
  const auto prob = personality_profile(p);
  std::vector<std::uint8_t> bits(kNumStyleParams);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = rng.bernoulli(prob[i]) ? 1 : 0;
  return bits;
}

/// Balanced over the five personalities (record i has personality i mod 5).
/// Every record carries its fine-grained bits.
inline std::vector<DatasetRecord> personality_corpus(std::size_t n, std::uint64_t seed) {
  RngState rng(seed, 11);
  std::vector<DatasetRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Personality p = kAllPersonalities[i % kNumPersonalities];
    DatasetRecord r;
    r.mr = random_mr(rng);
    auto bits = sample_bits(p, rng);
    r.references = {realize(r.mr, bits)};
    r.constraint = StyleConstraint::personality(p, std::move(bits));
    out.push_back(std::move(r));
  }
  return out;
}

/// No side constraint and no style: one fixed realization per MR.
inline std::vector<DatasetRecord> plain_corpus(std::size_t n, std::uint64_t seed, std::size_t min_extra = 2,
                                               std::size_t max_extra = 4) {
  RngState rng(seed, 12);
  std::vector<DatasetRecord> out;
  const std::vector<std::uint8_t> none(kNumStyleParams, 0);
  for (std::size_t i = 0; i < n; ++i) {
    DatasetRecord r;
    r.mr = random_mr(rng, min_extra, max_extra);
    r.references = {realize(r.mr, none)};
    r.constraint = StyleConstraint::none();
    out.push_back(std::move(r));
  }
  return out;
}

/// MR holding two slots of opposite polarity (price, rating, family
/// friendliness) plus one to three others. The polar pair is realized first;
/// the contrast flag decides whether they are joined by "but" or "and".
inline MeaningRepresentation random_polar_mr(RngState& rng) {
  struct Polar {
    std::string_view slot;
    std::string_view pos, neg;
  };
  static constexpr std::array<Polar, 3> kPolar = {{{"priceRange", "cheap", "high"},
                                                   {"customer rating", "high", "low"},
                                                   {"familyFriendly", "yes", "no"}}};
  std::size_t a = rng.below(3), b = rng.below(2);
  if (b >= a) ++b;
  const bool a_pos = rng.bernoulli(0.5);
  MeaningRepresentation base = random_mr(rng, 1, 3);
  MeaningRepresentation mr;
  mr.slots.push_back(base.slots.front());
  mr.slots.push_back({std::string(kPolar[a].slot), std::string(a_pos ? kPolar[a].pos : kPolar[a].neg)});
  mr.slots.push_back({std::string(kPolar[b].slot), std::string(a_pos ? kPolar[b].neg : kPolar[b].pos)});
  for (std::size_t i = 1; i < base.slots.size(); ++i)
    if (base.slots[i].slot_type != kPolar[a].slot && base.slots[i].slot_type != kPolar[b].slot)
      mr.slots.push_back(base.slots[i]);
  return mr;
}

inline std::string realize_contrast(const MeaningRepresentation& mr, bool contrast) {
  const std::vector<std::uint8_t> none(kNumStyleParams, 0);
  return realize(mr, none, contrast ? std::string_view(" but it") : std::string_view(" and it"));
}

/// Each MR appears twice, once per contrast flag.
inline std::vector<DatasetRecord> contrast_corpus(std::size_t n_mrs, std::uint64_t seed) {
  RngState rng(seed, 13);
  std::vector<DatasetRecord> out;
  for (std::size_t i = 0; i < n_mrs; ++i) {
    const auto mr = random_polar_mr(rng);
    for (bool c : {true, false}) {
      DatasetRecord r;
      r.mr = mr;
      r.references = {realize_contrast(mr, c)};
      r.constraint = StyleConstraint::contrast(c);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace stylegen::synth
