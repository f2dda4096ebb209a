#pragma once

// Rules, conditions and rule templates, with the canonical text form used in
// model files:
//
//   IF contains("no") AND tag[-1]=SUGGEST THEN REJECT
//   IF none THEN SUGGEST

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/errors.hpp"

namespace dact {

struct ContainsCue {
  std::string substring;
  auto operator<=>(const ContainsCue&) const = default;
};

struct LengthLessThan {
  std::size_t n = 1;
  auto operator<=>(const LengthLessThan&) const = default;
};

struct ChangeOfSpeakerIs {
  bool value = true;
  auto operator<=>(const ChangeOfSpeakerIs&) const = default;
};

struct TagAtOffset {
  int offset = -1;
  Tag tag;
  auto operator<=>(const TagAtOffset&) const = default;
};

struct PunctuationContains {
  char symbol = '.';
  auto operator<=>(const PunctuationContains&) const = default;
};

struct WholeUtteranceIs {
  std::string tokens;  // space-joined, 1..3 tokens
  auto operator<=>(const WholeUtteranceIs&) const = default;
};

using Condition = std::variant<ContainsCue, LengthLessThan, ChangeOfSpeakerIs,
                               TagAtOffset, PunctuationContains,
                               WholeUtteranceIs>;

inline std::string to_string(const Condition& cond) {
  struct Visitor {
    std::string operator()(const ContainsCue& c) const {
      return "contains(\"" + c.substring + "\")";
    }
    std::string operator()(const LengthLessThan& c) const {
      return "length<" + std::to_string(c.n);
    }
    std::string operator()(const ChangeOfSpeakerIs& c) const {
      return std::string("speaker_change=") + (c.value ? "true" : "false");
    }
    std::string operator()(const TagAtOffset& c) const {
      return "tag[" + std::string(c.offset > 0 ? "+" : "") +
             std::to_string(c.offset) + "]=" + c.tag.str();
    }
    std::string operator()(const PunctuationContains& c) const {
      return std::string("punct=\"") + c.symbol + "\"";
    }
    std::string operator()(const WholeUtteranceIs& c) const {
      return "utterance=\"" + c.tokens + "\"";
    }
  };
  return std::visit(Visitor{}, cond);
}

namespace detail {

inline std::size_t token_count(const std::string& joined) {
  return split_ws(joined).size();
}

inline std::string quoted_arg(std::string_view text, std::string_view prefix,
                              std::string_view suffix) {
  if (!starts_with(text, prefix) || !ends_with(text, suffix) ||
      text.size() < prefix.size() + suffix.size())
    throw ValidationError("malformed condition '" + std::string(text) + "'");
  return std::string(
      text.substr(prefix.size(), text.size() - prefix.size() - suffix.size()));
}

inline int parse_int(std::string_view text) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(std::string(text), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty())
    throw ValidationError("bad integer '" + std::string(text) + "'");
  return v;
}

}  // namespace detail

inline void validate(const Condition& cond) {
  if (auto* c = std::get_if<ContainsCue>(&cond)) {
    const auto n = detail::token_count(c->substring);
    if (n < 1 || n > kMaxSubstringLength || join_tokens(detail::split_ws(c->substring)) != c->substring)
      throw ValidationError("cue must be 1-3 single-spaced tokens: '" +
                            c->substring + "'");
  } else if (auto* l = std::get_if<LengthLessThan>(&cond)) {
    if (l->n < 1) throw ValidationError("length bound must be >= 1");
  } else if (auto* t = std::get_if<TagAtOffset>(&cond)) {
    if (t->offset == 0) throw ValidationError("tag offset must be nonzero");
  } else if (auto* p = std::get_if<PunctuationContains>(&cond)) {
    if (!is_tracked_punctuation(p->symbol))
      throw ValidationError(std::string("untracked punctuation '") +
                            p->symbol + "'");
  } else if (auto* w = std::get_if<WholeUtteranceIs>(&cond)) {
    const auto n = detail::token_count(w->tokens);
    if (n < 1 || n > kMaxWholeUtteranceLength)
      throw ValidationError("whole-utterance condition needs 1-3 tokens");
  }
}

inline Condition parse_condition(std::string_view text) {
  using detail::starts_with;
  Condition cond;
  if (starts_with(text, "contains(")) {
    cond = ContainsCue{detail::quoted_arg(text, "contains(\"", "\")")};
  } else if (starts_with(text, "length<")) {
    const int n = detail::parse_int(text.substr(7));
    if (n < 1) throw ValidationError("length bound must be >= 1");
    cond = LengthLessThan{static_cast<std::size_t>(n)};
  } else if (text == "speaker_change=true") {
    cond = ChangeOfSpeakerIs{true};
  } else if (text == "speaker_change=false") {
    cond = ChangeOfSpeakerIs{false};
  } else if (starts_with(text, "tag[")) {
    const auto close = text.find("]=");
    if (close == std::string_view::npos)
      throw ValidationError("malformed condition '" + std::string(text) + "'");
    auto offsetText = text.substr(4, close - 4);
    if (starts_with(offsetText, "+")) offsetText.remove_prefix(1);
    cond = TagAtOffset{detail::parse_int(offsetText),
                       parse_tag(text.substr(close + 2))};
  } else if (starts_with(text, "punct=")) {
    const auto arg = detail::quoted_arg(text, "punct=\"", "\"");
    if (arg.size() != 1)
      throw ValidationError("malformed condition '" + std::string(text) + "'");
    cond = PunctuationContains{arg[0]};
  } else if (starts_with(text, "utterance=")) {
    cond = WholeUtteranceIs{detail::quoted_arg(text, "utterance=\"", "\"")};
  } else {
    throw ValidationError("unknown condition '" + std::string(text) + "'");
  }
  validate(cond);
  return cond;
}

/// Conjunction of conditions plus the tag assigned when all of them hold.
/// Conditions are kept in canonical (serialized-text) order.
struct Rule {
  std::vector<Condition> conditions;
  Tag newTag;

  bool operator==(const Rule&) const = default;
};

inline std::string to_string(const Rule& rule) {
  std::string out = "IF ";
  if (rule.conditions.empty()) out += "none";
  for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
    if (i) out += " AND ";
    out += to_string(rule.conditions[i]);
  }
  return out + " THEN " + rule.newTag.str();
}

/// Validates and canonicalizes a rule.
inline Rule make_rule(std::vector<Condition> conditions, Tag newTag) {
  if (newTag.is_none()) throw ValidationError("rule must assign a real tag");
  std::set<int> offsets;
  int lengthConds = 0;
  for (const auto& c : conditions) {
    validate(c);
    if (auto* t = std::get_if<TagAtOffset>(&c)) {
      if (!offsets.insert(t->offset).second)
        throw ValidationError("two tag conditions at offset " +
                              std::to_string(t->offset));
    }
    if (std::holds_alternative<LengthLessThan>(c) && ++lengthConds > 1)
      throw ValidationError("at most one length condition per rule");
  }
  std::vector<std::pair<std::string, Condition>> keyed;
  for (auto& c : conditions) keyed.emplace_back(to_string(c), std::move(c));
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  keyed.erase(std::unique(keyed.begin(), keyed.end(),
                          [](const auto& a, const auto& b) {
                            return a.first == b.first;
                          }),
              keyed.end());
  Rule rule;
  for (auto& [key, c] : keyed) rule.conditions.push_back(std::move(c));
  rule.newTag = std::move(newTag);
  return rule;
}

inline Rule parse_rule(std::string_view text) {
  text = detail::trim(text);
  if (!detail::starts_with(text, "IF "))
    throw ValidationError("rule must start with IF: '" + std::string(text) + "'");
  const auto then = text.rfind(" THEN ");
  if (then == std::string_view::npos || then < 3)
    throw ValidationError("rule without THEN: '" + std::string(text) + "'");
  const auto body = text.substr(3, then - 3);
  Tag tag = parse_tag(detail::trim(text.substr(then + 6)));
  std::vector<Condition> conds;
  if (body != "none") {
    std::string_view rest = body;
    while (true) {
      const auto sep = rest.find(" AND ");
      conds.push_back(parse_condition(rest.substr(0, sep)));
      if (sep == std::string_view::npos) break;
      rest.remove_prefix(sep + 5);
    }
  }
  return make_rule(std::move(conds), std::move(tag));
}

inline bool condition_holds(const Condition& cond, const FeatureView& view) {
  struct Visitor {
    const FeatureView& v;
    bool operator()(const ContainsCue& c) const {
      return v.substringsPresent.contains(c.substring);
    }
    bool operator()(const LengthLessThan& c) const { return v.length < c.n; }
    bool operator()(const ChangeOfSpeakerIs& c) const {
      return v.changeOfSpeaker == c.value;
    }
    bool operator()(const TagAtOffset& c) const {
      return v.tag_at(c.offset) == c.tag;
    }
    bool operator()(const PunctuationContains& c) const {
      return v.punctuation.contains(c.symbol);
    }
    bool operator()(const WholeUtteranceIs& c) const {
      return v.wholeUtterance && *v.wholeUtterance == c.tokens;
    }
  };
  return std::visit(Visitor{view}, cond);
}

/// Context window a rule needs to be evaluated (at least 1).
inline std::size_t required_window(const Rule& rule) {
  std::size_t w = 1;
  for (const auto& c : rule.conditions) {
    if (auto* t = std::get_if<TagAtOffset>(&c))
      w = std::max<std::size_t>(w, static_cast<std::size_t>(std::abs(t->offset)));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Templates

enum class SlotKind { Cue, TagAt, LengthLt, SpeakerChange, Punct, Whole };

/// One free variable of a template. TagAt slots carry their offset.
struct Slot {
  SlotKind kind = SlotKind::Cue;
  int offset = 0;
  bool operator==(const Slot&) const = default;
};

/// Bounds n tried for "length < n" slots.
inline constexpr std::size_t kLengthBoundMin = 2;
inline constexpr std::size_t kLengthBoundMax = 5;

/// A rule schema. Every rule built from it also binds the new tag, which is
/// always the gold tag of the utterance being corrected.
struct Template {
  std::string name;
  std::vector<Slot> slots;
  bool operator==(const Template&) const = default;
};

inline std::string slot_spec(const Template& t) {
  if (t.slots.empty()) return "always";
  std::string out;
  for (const auto& s : t.slots) {
    if (!out.empty()) out += '+';
    switch (s.kind) {
      case SlotKind::Cue: out += "cue"; break;
      case SlotKind::TagAt:
        out += "tag@" + std::string(s.offset > 0 ? "+" : "") +
               std::to_string(s.offset);
        break;
      case SlotKind::LengthLt: out += "len"; break;
      case SlotKind::SpeakerChange: out += "spk"; break;
      case SlotKind::Punct: out += "punct"; break;
      case SlotKind::Whole: out += "whole"; break;
    }
  }
  return out;
}

inline void validate(const Template& t) {
  std::set<int> offsets;
  std::map<SlotKind, int> kinds;
  for (const auto& s : t.slots) {
    if (s.kind == SlotKind::TagAt) {
      if (s.offset == 0) throw ValidationError("template tag offset 0");
      if (!offsets.insert(s.offset).second)
        throw ValidationError("template repeats tag offset");
    } else if (++kinds[s.kind] > 1) {
      throw ValidationError("template '" + slot_spec(t) +
                            "' repeats a slot kind");
    }
  }
}

/// The default template inventory (T1..T11).
inline const std::vector<Template>& default_templates() {
  static const std::vector<Template> kTemplates = [] {
    const Slot cue{SlotKind::Cue};
    const Slot prev{SlotKind::TagAt, -1};
    const Slot prev2{SlotKind::TagAt, -2};
    const Slot next{SlotKind::TagAt, +1};
    const Slot len{SlotKind::LengthLt};
    const Slot spk{SlotKind::SpeakerChange};
    return std::vector<Template>{
        {"T1", {cue}},
        {"T2", {cue, prev}},
        {"T3", {prev}},
        {"T4", {len, prev}},
        {"T5", {spk}},
        {"T6", {spk, prev}},
        {"T7", {Slot{SlotKind::Punct}}},
        {"T8", {Slot{SlotKind::Whole}}},
        {"T9", {}},
        {"T10", {cue, next}},
        {"T11", {prev2, prev}},
    };
  }();
  return kTemplates;
}

/// Parses one template: a catalog name ("T2") or a slot spec such as
/// "cue+tag@-1" ("always" is the unconditional template).
inline Template parse_template(std::string_view text) {
  text = detail::trim(text);
  for (const auto& t : default_templates()) {
    if (t.name == text) return t;
  }
  Template t;
  t.name = std::string(text);
  if (text != "always") {
    std::string_view rest = text;
    while (true) {
      const auto plus = rest.find('+', rest.starts_with("tag@+") ? 5 : 0);
      auto part = rest.substr(0, plus);
      if (part == "cue") t.slots.push_back({SlotKind::Cue});
      else if (part == "len") t.slots.push_back({SlotKind::LengthLt});
      else if (part == "spk") t.slots.push_back({SlotKind::SpeakerChange});
      else if (part == "punct") t.slots.push_back({SlotKind::Punct});
      else if (part == "whole") t.slots.push_back({SlotKind::Whole});
      else if (detail::starts_with(part, "tag@")) {
        auto off = part.substr(4);
        if (detail::starts_with(off, "+")) off.remove_prefix(1);
        t.slots.push_back({SlotKind::TagAt, detail::parse_int(off)});
      } else {
        throw ValidationError("unknown template slot '" + std::string(part) +
                              "'");
      }
      if (plus == std::string_view::npos) break;
      rest.remove_prefix(plus + 1);
    }
  }
  validate(t);
  return t;
}

/// Comma-separated template list, e.g. "T1,T2,T3,T9".
inline std::vector<Template> parse_templates(std::string_view text) {
  std::vector<Template> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    auto part = detail::trim(rest.substr(0, comma));
    if (!part.empty()) out.push_back(parse_template(part));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ValidationError("empty template list");
  return out;
}

/// Inverse of parse_templates: catalog names where possible.
inline std::string templates_to_string(const std::vector<Template>& ts) {
  std::string out;
  for (const auto& t : ts) {
    if (!out.empty()) out += ',';
    const bool catalog = std::any_of(
        default_templates().begin(), default_templates().end(),
        [&](const Template& d) { return d == t; });
    out += catalog ? t.name : slot_spec(t);
  }
  return out;
}

}  // namespace dact
