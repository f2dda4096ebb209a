#pragma once

// Transformation-based learning over dialogue corpora.
//
// Training starts with every working tag set to NONE and repeats:
//   1. collect candidate rules from every mistagged utterance by binding the
//      templates to values realized there (all bindings, or R random ones in
//      Monte Carlo mode), with the utterance's gold tag as the new tag;
//   2. score each candidate corpus-wide: weighted correct tags after a
//      hypothetical application minus correct tags before;
//   3. stop if the best score is below theta, otherwise append the best rule
//      (ties: the unconditional rule, else lowest canonical text) and apply it.
//
// A rule pass is simultaneous: conditions read the tags as they were before
// the pass started.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/cues.hpp"
#include "dact/errors.hpp"
#include "dact/random.hpp"
#include "dact/rule.hpp"

namespace dact {

/// One pass of the greedy loop. The last pass reported is the one that
/// stopped training (no rule, or bestScore below theta) unless maxRules ended it.
struct PassInfo {
  std::size_t pass = 0;
  std::size_t candidates = 0;
  double bestScore = 0.0;  // -inf when there were no candidates
  std::optional<Rule> rule;
};

struct TrainingConfig {
  double theta = 1.0;          // minimum improvement score of a learned rule
  std::size_t rSample = 14;    // Monte Carlo draws per mistagged utterance
  std::size_t maxRules = 1000;
  std::uint64_t seed = 0;
  std::vector<double> weights; // per utterance in corpus order; empty = all 1
  std::size_t window = kDefaultWindow;
  std::function<void(const PassInfo&)> onPass;
};

enum class Trainer { Exhaustive, MonteCarlo };

inline std::string_view to_string(Trainer t) {
  return t == Trainer::Exhaustive ? "exhaustive" : "monte-carlo";
}

/// Settings a model was trained with, stored in the model file header.
struct ModelInfo {
  double theta = 1.0;
  std::uint64_t seed = 0;
  std::size_t window = kDefaultWindow;
  std::vector<Template> templates;
  std::string cuesHash;
  std::string mode;
  Trainer trainer = Trainer::MonteCarlo;
  std::size_t rSample = 14;

  bool operator==(const ModelInfo&) const = default;
};

/// Ordered rule list. scores[i] is the improvement score rules[i] had when it
/// was selected (empty for hand-built models).
struct Model {
  std::vector<Rule> rules;
  std::vector<double> scores;
  ModelInfo info;

  bool operator==(const Model&) const = default;
};

inline constexpr double kScoreEpsilon = 1e-9;

namespace detail {

using TagId = std::int32_t;
inline constexpr TagId kNoneTag = 0;

class Interner {
 public:
  std::int32_t intern(const std::string& s) {
    auto [it, inserted] =
        ids_.emplace(s, static_cast<std::int32_t>(names_.size()));
    if (inserted) names_.push_back(s);
    return it->second;
  }
  std::int32_t find(const std::string& s) const {
    auto it = ids_.find(s);
    return it == ids_.end() ? -1 : it->second;
  }
  const std::string& name(std::int32_t id) const {
    return names_[static_cast<std::size_t>(id)];
  }
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, std::int32_t> ids_;
  std::vector<std::string> names_;
};

enum class CondKind : std::uint8_t {
  Cue,
  LengthLt,
  Speaker,
  TagAt,
  Punct,
  Whole
};

struct CompiledCondition {
  CondKind kind;
  std::int32_t a = 0;  // ngram id, bound, flag, offset or punct index
  std::int32_t b = 0;  // tag id for TagAt
  bool operator==(const CompiledCondition&) const = default;
};

struct CompiledRule {
  std::vector<CompiledCondition> conds;
  TagId newTag = kNoneTag;
  bool operator==(const CompiledRule&) const = default;
};

struct CompiledRuleHash {
  std::size_t operator()(const CompiledRule& r) const {
    std::uint64_t h = 1469598103934665603ULL ^ static_cast<std::uint64_t>(r.newTag);
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    for (const auto& c : r.conds) {
      mix(static_cast<std::uint64_t>(c.kind));
      mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.a)));
      mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.b)));
    }
    return static_cast<std::size_t>(h);
  }
};

inline int punct_index(char c) {
  return static_cast<int>(kPunctuationAlphabet.find(c));
}

/// Corpus flattened into integer features for fast matching and scoring.
class CompiledCorpus {
 public:
  struct Utt {
    std::size_t begin = 0;  // flat range of the enclosing dialogue
    std::size_t end = 0;
    std::size_t length = 0;
    bool speakerChange = true;
    std::uint32_t punctMask = 0;
    std::int32_t whole = -1;
    std::vector<std::int32_t> ngrams;  // sorted ids
    std::vector<std::int32_t> cues;    // sorted ids of cue-set members
    TagId gold = kNoneTag;
  };

  CompiledCorpus(const Corpus& corpus, const CueSet& cues) {
    tags_.intern("");  // id 0 is NONE
    for (const auto& t : corpus.tagSet) tags_.intern(t.str());
    for (const auto& d : corpus.dialogues) {
      const std::size_t begin = utts_.size();
      const std::size_t end = begin + d.utterances.size();
      for (std::size_t i = 0; i < d.utterances.size(); ++i) {
        const auto& src = d.utterances[i];
        Utt u;
        u.begin = begin;
        u.end = end;
        u.length = src.tokens.size();
        u.speakerChange = i == 0 || d.utterances[i - 1].speaker != src.speaker;
        for (char p : src.punctuation) {
          if (int k = punct_index(p); k >= 0) u.punctMask |= 1u << k;
        }
        for (const auto& s : substrings_of(src.tokens, kMaxSubstringLength)) {
          const auto id = ngrams_.intern(s);
          u.ngrams.push_back(id);
          if (cues.contains(s)) u.cues.push_back(id);
        }
        std::sort(u.ngrams.begin(), u.ngrams.end());
        std::sort(u.cues.begin(), u.cues.end());
        if (!src.tokens.empty() &&
            src.tokens.size() <= kMaxWholeUtteranceLength)
          u.whole = ngrams_.find(join_tokens(src.tokens));
        u.gold = tag_id(src.goldTag);
        utts_.push_back(std::move(u));
      }
    }
    postings_.resize(ngrams_.size());
    for (std::size_t i = 0; i < utts_.size(); ++i) {
      for (auto id : utts_[i].ngrams)
        postings_[static_cast<std::size_t>(id)].push_back(i);
    }
  }

  std::size_t size() const { return utts_.size(); }
  const Utt& utt(std::size_t i) const { return utts_[i]; }

  TagId tag_id(const Tag& t) {
    return t.is_none() ? kNoneTag : tags_.intern(t.str());
  }
  Tag tag(TagId id) const {
    return id == kNoneTag ? Tag::none() : Tag(tags_.name(id));
  }

  TagId tag_at(std::size_t i, int offset, const std::vector<TagId>& tags) const {
    const auto& u = utts_[i];
    const auto j = static_cast<std::ptrdiff_t>(i) + offset;
    if (j < static_cast<std::ptrdiff_t>(u.begin) ||
        j >= static_cast<std::ptrdiff_t>(u.end))
      return kNoneTag;
    return tags[static_cast<std::size_t>(j)];
  }

  bool holds(const CompiledCondition& c, std::size_t i,
             const std::vector<TagId>& tags) const {
    const auto& u = utts_[i];
    switch (c.kind) {
      case CondKind::Cue:
        return c.a >= 0 &&
               std::binary_search(u.ngrams.begin(), u.ngrams.end(), c.a);
      case CondKind::LengthLt:
        return u.length < static_cast<std::size_t>(c.a);
      case CondKind::Speaker:
        return u.speakerChange == (c.a != 0);
      case CondKind::TagAt:
        return tag_at(i, c.a, tags) == c.b;
      case CondKind::Punct:
        return (u.punctMask >> c.a) & 1u;
      case CondKind::Whole:
        return c.a >= 0 && u.whole == c.a;
    }
    return false;
  }

  bool matches(const CompiledRule& r, std::size_t i,
               const std::vector<TagId>& tags) const {
    for (const auto& c : r.conds) {
      if (!holds(c, i, tags)) return false;
    }
    return true;
  }

  /// Calls f(i) for every utterance the rule matches under `tags`.
  template <typename F>
  void for_each_match(const CompiledRule& r, const std::vector<TagId>& tags,
                      F&& f) const {
    for (const auto& c : r.conds) {
      if (c.kind == CondKind::Cue || c.kind == CondKind::Whole) {
        if (c.a < 0) return;
        for (auto i : postings_[static_cast<std::size_t>(c.a)]) {
          if (matches(r, i, tags)) f(i);
        }
        return;
      }
    }
    for (std::size_t i = 0; i < utts_.size(); ++i) {
      if (matches(r, i, tags)) f(i);
    }
  }

  CompiledRule compile(const Rule& rule) {
    CompiledRule out;
    for (const auto& cond : rule.conditions) {
      if (auto* c = std::get_if<ContainsCue>(&cond)) {
        out.conds.push_back({CondKind::Cue, ngrams_.find(c->substring)});
      } else if (auto* l = std::get_if<LengthLessThan>(&cond)) {
        out.conds.push_back(
            {CondKind::LengthLt, static_cast<std::int32_t>(
                                     std::min<std::size_t>(l->n, 1u << 30))});
      } else if (auto* s = std::get_if<ChangeOfSpeakerIs>(&cond)) {
        out.conds.push_back({CondKind::Speaker, s->value ? 1 : 0});
      } else if (auto* t = std::get_if<TagAtOffset>(&cond)) {
        out.conds.push_back({CondKind::TagAt, t->offset, tag_id(t->tag)});
      } else if (auto* p = std::get_if<PunctuationContains>(&cond)) {
        out.conds.push_back({CondKind::Punct, punct_index(p->symbol)});
      } else if (auto* w = std::get_if<WholeUtteranceIs>(&cond)) {
        out.conds.push_back({CondKind::Whole, ngrams_.find(w->tokens)});
      }
    }
    out.newTag = tag_id(rule.newTag);
    return out;
  }

  Rule decompile(const CompiledRule& r) const {
    std::vector<Condition> conds;
    for (const auto& c : r.conds) {
      switch (c.kind) {
        case CondKind::Cue: conds.push_back(ContainsCue{ngrams_.name(c.a)}); break;
        case CondKind::LengthLt:
          conds.push_back(LengthLessThan{static_cast<std::size_t>(c.a)});
          break;
        case CondKind::Speaker: conds.push_back(ChangeOfSpeakerIs{c.a != 0}); break;
        case CondKind::TagAt: conds.push_back(TagAtOffset{c.a, tag(c.b)}); break;
        case CondKind::Punct:
          conds.push_back(PunctuationContains{
              kPunctuationAlphabet[static_cast<std::size_t>(c.a)]});
          break;
        case CondKind::Whole:
          conds.push_back(WholeUtteranceIs{ngrams_.name(c.a)});
          break;
      }
    }
    return make_rule(std::move(conds), tag(r.newTag));
  }

  std::vector<TagId> gold_tags() const {
    std::vector<TagId> out;
    out.reserve(utts_.size());
    for (const auto& u : utts_) out.push_back(u.gold);
    return out;
  }

  // --- template instantiation -------------------------------------------

  /// Values a slot can take at utterance i (as condition prototypes).
  std::vector<CompiledCondition> slot_values(const Slot& slot, std::size_t i,
                                             const std::vector<TagId>& tags) const {
    const auto& u = utts_[i];
    std::vector<CompiledCondition> out;
    switch (slot.kind) {
      case SlotKind::Cue:
        for (auto id : u.cues) out.push_back({CondKind::Cue, id});
        break;
      case SlotKind::TagAt:
        out.push_back({CondKind::TagAt, slot.offset, tag_at(i, slot.offset, tags)});
        break;
      case SlotKind::LengthLt:
        for (std::size_t n = kLengthBoundMin; n <= kLengthBoundMax; ++n) {
          if (u.length < n)
            out.push_back({CondKind::LengthLt, static_cast<std::int32_t>(n)});
        }
        break;
      case SlotKind::SpeakerChange:
        out.push_back({CondKind::Speaker, u.speakerChange ? 1 : 0});
        break;
      case SlotKind::Punct:
        for (std::size_t k = 0; k < kPunctuationAlphabet.size(); ++k) {
          if ((u.punctMask >> k) & 1u)
            out.push_back({CondKind::Punct, static_cast<std::int32_t>(k)});
        }
        break;
      case SlotKind::Whole:
        if (u.whole >= 0) out.push_back({CondKind::Whole, u.whole});
        break;
    }
    return out;
  }

 private:
  std::vector<Utt> utts_;
  Interner ngrams_;
  Interner tags_;
  std::vector<std::vector<std::size_t>> postings_;
};

// Canonical condition order makes structurally equal rules compare equal.
inline void canonicalize(CompiledRule& r) {
  std::sort(r.conds.begin(), r.conds.end(), [](const auto& x, const auto& y) {
    if (x.kind != y.kind) return x.kind < y.kind;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
}

/// Per-slot value lists of one template at one utterance.
struct Bindings {
  std::vector<std::vector<CompiledCondition>> values;

  std::uint64_t pool_size() const {
    std::uint64_t n = 1;
    for (const auto& v : values) {
      n *= v.size();
      if (n == 0) return 0;
    }
    return n;
  }
};

inline std::vector<Bindings> bind_templates(const CompiledCorpus& cc,
                                            const std::vector<Template>& templates,
                                            std::size_t i,
                                            const std::vector<TagId>& tags) {
  std::vector<Bindings> out;
  out.reserve(templates.size());
  for (const auto& t : templates) {
    Bindings b;
    for (const auto& slot : t.slots) b.values.push_back(cc.slot_values(slot, i, tags));
    out.push_back(std::move(b));
  }
  return out;
}

template <typename F>
void enumerate_bindings(const Bindings& b, TagId newTag, F&& emit) {
  if (b.pool_size() == 0) return;
  std::vector<std::size_t> idx(b.values.size(), 0);
  while (true) {
    CompiledRule r;
    r.newTag = newTag;
    for (std::size_t s = 0; s < idx.size(); ++s) r.conds.push_back(b.values[s][idx[s]]);
    canonicalize(r);
    emit(std::move(r));
    std::size_t s = 0;
    for (; s < idx.size(); ++s) {
      if (++idx[s] < b.values[s].size()) break;
      idx[s] = 0;
    }
    if (s == idx.size()) return;
  }
}

inline void validate_templates(const std::vector<Template>& templates,
                               std::size_t window) {
  if (templates.empty()) throw ValidationError("no rule templates");
  for (const auto& t : templates) {
    validate(t);
    for (const auto& s : t.slots) {
      if (s.kind == SlotKind::TagAt &&
          static_cast<std::size_t>(std::abs(s.offset)) > window)
        throw ValidationError("template '" + slot_spec(t) +
                              "' reaches beyond the context window");
    }
  }
}

/// Greedy training loop shared by the exhaustive and Monte Carlo learners.
inline Model train(const Corpus& corpus, const std::vector<Template>& templates,
                   const CueSet& cues, const TrainingConfig& config,
                   Trainer trainer) {
  if (config.theta < 1.0) throw ValidationError("theta must be >= 1");
  if (config.rSample < 1) throw ValidationError("R must be >= 1");
  if (config.window < 1) throw ValidationError("window must be >= 1");
  validate_templates(templates, config.window);

  CompiledCorpus cc(corpus, cues);
  const std::size_t n = cc.size();
  std::vector<double> weights = config.weights;
  if (weights.empty()) weights.assign(n, 1.0);
  if (weights.size() != n)
    throw ValidationError("weight vector size does not match corpus");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw ValidationError("weights must be positive and finite");
  }

  Model model;
  model.info.theta = config.theta;
  model.info.seed = config.seed;
  model.info.window = config.window;
  model.info.templates = templates;
  model.info.cuesHash = cues_hash(cues);
  model.info.trainer = trainer;
  model.info.rSample = config.rSample;

  Rng rng(config.seed);
  std::vector<TagId> tags(n, kNoneTag);

  auto score = [&](const CompiledRule& r) {
    double s = 0.0;
    cc.for_each_match(r, tags, [&](std::size_t i) {
      const TagId gold = cc.utt(i).gold;
      if (gold == kNoneTag) return;
      const bool before = tags[i] == gold;
      const bool after = r.newTag == gold;
      if (before != after) s += after ? weights[i] : -weights[i];
    });
    return s;
  };

  while (model.rules.size() < config.maxRules) {
    std::unordered_set<CompiledRule, CompiledRuleHash> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      const TagId gold = cc.utt(i).gold;
      if (gold == kNoneTag || tags[i] == gold) continue;
      const auto bindings = bind_templates(cc, templates, i, tags);
      std::uint64_t pool = 0;
      std::vector<std::size_t> bindable;
      for (std::size_t t = 0; t < bindings.size(); ++t) {
        const auto size = bindings[t].pool_size();
        pool += size;
        if (size > 0) bindable.push_back(t);
      }
      auto insert = [&](CompiledRule r) { candidates.insert(std::move(r)); };
      if (trainer == Trainer::Exhaustive || pool <= config.rSample) {
        // R covering the whole pool is equivalent to drawing all of it.
        for (const auto& b : bindings) enumerate_bindings(b, gold, insert);
        continue;
      }
      for (std::size_t draw = 0; draw < config.rSample; ++draw) {
        const auto& b = bindings[bindable[uniform_index(rng, bindable.size())]];
        CompiledRule r;
        r.newTag = gold;
        for (const auto& values : b.values)
          r.conds.push_back(values[uniform_index(rng, values.size())]);
        canonicalize(r);
        insert(std::move(r));
      }
    }
    PassInfo info;
    info.pass = model.rules.size() + 1;
    info.candidates = candidates.size();
    info.bestScore = -std::numeric_limits<double>::infinity();
    if (candidates.empty()) {
      if (config.onPass) config.onPass(info);
      break;
    }

    double best = -std::numeric_limits<double>::infinity();
    std::vector<const CompiledRule*> tied;
    for (const auto& r : candidates) {
      const double s = score(r);
      if (s > best + kScoreEpsilon) {
        best = s;
        tied.assign(1, &r);
      } else if (s >= best - kScoreEpsilon) {
        tied.push_back(&r);
      }
    }
    info.bestScore = best;
    if (best < config.theta - kScoreEpsilon) {
      if (config.onPass) config.onPass(info);
      break;
    }

    // Ties: the unconditional rule, else the lowest rule text.
    const CompiledRule* chosen = nullptr;
    std::string chosenText;
    for (const auto* r : tied) {
      auto text = to_string(cc.decompile(*r));
      const bool better = !chosen || (r->conds.empty() != chosen->conds.empty()
                                          ? r->conds.empty()
                                          : text < chosenText);
      if (better) {
        chosen = r;
        chosenText = std::move(text);
      }
    }

    std::vector<std::size_t> hits;
    cc.for_each_match(*chosen, tags, [&](std::size_t i) { hits.push_back(i); });
    for (auto i : hits) tags[i] = chosen->newTag;
    model.rules.push_back(cc.decompile(*chosen));
    model.scores.push_back(best);
    if (config.onPass) {
      info.rule = model.rules.back();
      config.onPass(info);
    }
  }
  return model;
}

}  // namespace detail

/// Exhaustive TBL: every template instantiation at every mistagged utterance
/// is a candidate. Deterministic.
inline Model train_exhaustive(const Corpus& corpus,
                              const std::vector<Template>& templates,
                              const CueSet& cues, const TrainingConfig& config) {
  return detail::train(corpus, templates, cues, config, Trainer::Exhaustive);
}

/// Monte Carlo TBL: per mistagged utterance, R draws of (template uniformly
/// among those bindable there, then each variable uniformly among its realized
/// values), deduplicated. When R covers the utterance's whole instantiation
/// pool, the pool is taken as is. Reproducible from config.seed.
inline Model train_monte_carlo(const Corpus& corpus,
                               const std::vector<Template>& templates,
                               const CueSet& cues, const TrainingConfig& config) {
  return detail::train(corpus, templates, cues, config, Trainer::MonteCarlo);
}

inline Model train_model(const Corpus& corpus,
                         const std::vector<Template>& templates,
                         const CueSet& cues, const TrainingConfig& config,
                         Trainer trainer) {
  return detail::train(corpus, templates, cues, config, trainer);
}

/// True iff every condition of the rule holds for the utterance, reading the
/// working tags for context.
inline bool rule_matches(const Rule& rule, const Corpus& corpus,
                         std::size_t dialogueIdx, std::size_t uttIdx) {
  const auto view =
      feature_view(corpus, dialogueIdx, uttIdx, required_window(rule));
  return std::all_of(rule.conditions.begin(), rule.conditions.end(),
                     [&](const Condition& c) { return condition_holds(c, view); });
}

/// Applies one rule to the whole corpus against a snapshot of the working
/// tags. Returns how many tags changed.
inline std::size_t apply_rule(const Rule& rule, Corpus& corpus) {
  std::vector<std::pair<std::size_t, std::size_t>> hits;
  for (std::size_t d = 0; d < corpus.dialogues.size(); ++d) {
    for (std::size_t u = 0; u < corpus.dialogues[d].utterances.size(); ++u) {
      if (rule_matches(rule, corpus, d, u)) hits.emplace_back(d, u);
    }
  }
  std::size_t changed = 0;
  for (auto [d, u] : hits) {
    auto& tag = corpus.dialogues[d].utterances[u].workingTag;
    if (tag != rule.newTag) {
      tag = rule.newTag;
      ++changed;
    }
  }
  return changed;
}

/// Weighted change in correct tags if the rule were applied now. Weights
/// follow corpus order; empty means all 1. The corpus is not modified.
inline double improvement_score(const Rule& rule, const Corpus& corpus,
                                const std::vector<double>& weights = {}) {
  if (!weights.empty() && weights.size() != corpus.utterance_count())
    throw ValidationError("weight vector size does not match corpus");
  double score = 0.0;
  std::size_t flat = 0;
  for (std::size_t d = 0; d < corpus.dialogues.size(); ++d) {
    const auto& utts = corpus.dialogues[d].utterances;
    for (std::size_t u = 0; u < utts.size(); ++u, ++flat) {
      const auto& utt = utts[u];
      if (utt.goldTag.is_none() || !rule_matches(rule, corpus, d, u)) continue;
      const double w = weights.empty() ? 1.0 : weights[flat];
      const int delta = (rule.newTag == utt.goldTag ? 1 : 0) -
                        (utt.workingTag == utt.goldTag ? 1 : 0);
      score += w * delta;
    }
  }
  return score;
}

/// All rules obtainable by binding the templates to the values realized at
/// one mistagged utterance, with its gold tag as the new tag. Empty when the
/// utterance is already correct or unlabeled.
inline std::vector<Rule> instantiate_all(const Corpus& corpus,
                                         const std::vector<Template>& templates,
                                         const CueSet& cues,
                                         std::size_t dialogueIdx,
                                         std::size_t uttIdx) {
  if (dialogueIdx >= corpus.dialogues.size() ||
      uttIdx >= corpus.dialogues[dialogueIdx].utterances.size())
    throw std::out_of_range("utterance reference out of range");
  const auto& target = corpus.dialogues[dialogueIdx].utterances[uttIdx];
  if (target.goldTag.is_none() || target.workingTag == target.goldTag)
    return {};

  detail::CompiledCorpus cc(corpus, cues);
  std::vector<detail::TagId> tags;
  std::size_t flat = 0;
  for (std::size_t d = 0; d < corpus.dialogues.size(); ++d) {
    const auto& utts = corpus.dialogues[d].utterances;
    for (std::size_t u = 0; u < utts.size(); ++u) {
      if (d == dialogueIdx && u == uttIdx) flat = tags.size();
      tags.push_back(cc.tag_id(utts[u].workingTag));
    }
  }
  std::unordered_set<detail::CompiledRule, detail::CompiledRuleHash> seen;
  std::vector<Rule> out;
  const auto gold = cc.tag_id(target.goldTag);
  for (const auto& b : detail::bind_templates(cc, templates, flat, tags)) {
    detail::enumerate_bindings(b, gold, [&](detail::CompiledRule r) {
      if (seen.insert(r).second) out.push_back(cc.decompile(r));
    });
  }
  std::sort(out.begin(), out.end(), [](const Rule& a, const Rule& b) {
    return to_string(a) < to_string(b);
  });
  return out;
}

/// Resets working tags to NONE, then applies each rule in order.
inline Corpus tag_corpus(const Model& model, Corpus corpus) {
  detail::CompiledCorpus cc(corpus, CueSet{});
  std::vector<detail::TagId> tags(cc.size(), detail::kNoneTag);
  std::vector<std::size_t> hits;
  for (const auto& rule : model.rules) {
    const auto compiled = cc.compile(rule);
    hits.clear();
    cc.for_each_match(compiled, tags, [&](std::size_t i) { hits.push_back(i); });
    for (auto i : hits) tags[i] = compiled.newTag;
  }
  std::size_t flat = 0;
  corpus.for_each_utterance(
      [&](Utterance& u) { u.workingTag = cc.tag(tags[flat++]); });
  return corpus;
}

// ---------------------------------------------------------------------------
// Model files

namespace detail {
inline std::string format_number(double v) {
  char buf[40];
  if (std::nearbyint(v) == v && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  }
  return buf;
}
}  // namespace detail

/// Header block followed by one canonical rule per line.
inline std::string serialize_model(const Model& model) {
  std::ostringstream out;
  const auto& info = model.info;
  out << "#theta: " << detail::format_number(info.theta) << '\n'
      << "#seed: " << info.seed << '\n'
      << "#window: " << info.window << '\n'
      << "#templates: " << templates_to_string(info.templates) << '\n'
      << "#cues-hash: " << info.cuesHash << '\n'
      << "#mode: " << info.mode << '\n'
      << "#trainer: " << to_string(info.trainer) << '\n'
      << "#r-sample: " << info.rSample << '\n';
  out << "#scores:";
  for (double s : model.scores) out << ' ' << detail::format_number(s);
  out << '\n';
  for (const auto& r : model.rules) out << to_string(r) << '\n';
  return out.str();
}

inline Model parse_model(std::string_view text) {
  Model model;
  bool sawTemplates = false;
  detail::for_each_line(text, [&](std::size_t lineNo, std::string_view line) {
    if (detail::trim(line).empty() || detail::starts_with(line, "##")) return;
    try {
      if (line.front() == '#') {
        const auto colon = line.find(':');
        if (colon == std::string_view::npos)
          throw ParseError(lineNo, "header line without ':'");
        const auto key = line.substr(1, colon - 1);
        const auto value = std::string(detail::trim(line.substr(colon + 1)));
        auto& info = model.info;
        if (key == "theta") info.theta = std::stod(value);
        else if (key == "seed") info.seed = std::stoull(value);
        else if (key == "window") info.window = std::stoul(value);
        else if (key == "templates") {
          info.templates = parse_templates(value);
          sawTemplates = true;
        } else if (key == "cues-hash") info.cuesHash = value;
        else if (key == "mode") info.mode = value;
        else if (key == "trainer") {
          if (value == "exhaustive") info.trainer = Trainer::Exhaustive;
          else if (value == "monte-carlo") info.trainer = Trainer::MonteCarlo;
          else throw ParseError(lineNo, "unknown trainer '" + value + "'");
        } else if (key == "r-sample") info.rSample = std::stoul(value);
        else if (key == "scores") {
          for (const auto& s : detail::split_ws(value))
            model.scores.push_back(std::stod(s));
        } else {
          throw ParseError(lineNo, "unknown header '" + std::string(key) + "'");
        }
        return;
      }
      model.rules.push_back(parse_rule(line));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(lineNo, e.what());
    } catch (const std::logic_error&) {
      throw ParseError(lineNo, "bad numeric value");
    }
  });
  if (!sawTemplates) model.info.templates.clear();
  if (!model.scores.empty() && model.scores.size() != model.rules.size())
    throw ValidationError("model has " + std::to_string(model.rules.size()) +
                          " rules but " + std::to_string(model.scores.size()) +
                          " scores");
  return model;
}

/// Tags referenced by a model (assigned or tested in context).
inline std::set<Tag> model_tags(const Model& model) {
  std::set<Tag> out;
  for (const auto& r : model.rules) {
    out.insert(r.newTag);
    for (const auto& c : r.conditions) {
      if (auto* t = std::get_if<TagAtOffset>(&c); t && !t->tag.is_none())
        out.insert(t->tag);
    }
  }
  return out;
}

}  // namespace dact
