#pragma once

// Synthetic dialogue corpora with planted cues, for desk-scale experiments.
// Tags follow a first-order chain that may stop early after certain tags
// (never before minLength utterances); each utterance carries one signal phrase of
// its tag plus random filler words. Label noise replaces the gold tag by a
// uniformly chosen different tag after the text has been generated.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/errors.hpp"
#include "dact/random.hpp"

namespace dact {

struct GeneratorSpec {
  std::vector<std::string> tags;
  std::map<std::string, std::vector<std::string>> signals;  // raw phrases
  std::vector<std::string> fillers;
  std::size_t minFillers = 0;
  std::size_t maxFillers = 2;
  double noise = 0.0;
  std::size_t dialogues = 20;
  std::size_t minLength = 4;
  std::size_t maxLength = 10;
  double speakerAlternation = 0.85;
  std::vector<double> start;                     // P(first tag)
  std::vector<std::vector<double>> transitions;  // P(next | previous)
  std::vector<double> stop;  // P(dialogue ends after this tag); empty = never
};

namespace detail {

inline void check_distribution(const std::vector<double>& p, std::size_t n,
                               const std::string& what) {
  if (p.size() != n) throw ValidationError(what + ": wrong size");
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ValidationError(what + ": probabilities must be >= 0");
    total += x;
  }
  if (std::fabs(total - 1.0) > 1e-6)
    throw ValidationError(what + ": probabilities must sum to 1");
}

inline std::size_t draw(Rng& rng, const std::vector<double>& p) {
  const double u = uniform_unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // rounding left a sliver past the last bucket
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace detail

inline void validate(const GeneratorSpec& spec) {
  const auto n = spec.tags.size();
  if (n == 0) throw ValidationError("generator needs at least one tag");
  for (const auto& t : spec.tags) {
    Tag check(t);
    auto it = spec.signals.find(t);
    if (it == spec.signals.end() || it->second.empty())
      throw ValidationError("no signal phrases for tag " + t);
  }
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0))
    throw ValidationError("noise rate must be in [0, 1]");
  if (spec.noise > 0.0 && n < 2)
    throw ValidationError("label noise needs at least two tags");
  if (!(spec.speakerAlternation >= 0.0 && spec.speakerAlternation <= 1.0))
    throw ValidationError("speaker alternation must be in [0, 1]");
  if (spec.minLength < 1 || spec.minLength > spec.maxLength)
    throw ValidationError("bad dialogue length range");
  if (spec.minFillers > spec.maxFillers)
    throw ValidationError("bad filler count range");
  if (spec.maxFillers > 0 && spec.fillers.empty())
    throw ValidationError("filler words required");
  detail::check_distribution(spec.start, n, "start distribution");
  if (spec.transitions.size() != n)
    throw ValidationError("transition matrix must have one row per tag");
  for (std::size_t i = 0; i < n; ++i)
    detail::check_distribution(spec.transitions[i], n,
                               "transition row " + spec.tags[i]);
  if (!spec.stop.empty()) {
    if (spec.stop.size() != n)
      throw ValidationError("stop probabilities must have one entry per tag");
    for (double p : spec.stop) {
      if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("stop probabilities must be in [0, 1]");
    }
  }
}

inline Corpus generate_synthetic_corpus(const GeneratorSpec& spec,
                                        std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  Corpus corpus;
  for (const auto& t : spec.tags) corpus.tagSet.insert(Tag(t));
  const auto n = spec.tags.size();

  for (std::size_t d = 0; d < spec.dialogues; ++d) {
    Dialogue dialogue;
    dialogue.id = "d" + std::to_string(d + 1);
    const auto length =
        spec.minLength + uniform_index(rng, spec.maxLength - spec.minLength + 1);
    std::size_t state = detail::draw(rng, spec.start);
    bool speakerA = true;
    for (std::size_t i = 0; i < length; ++i) {
      if (i >= spec.minLength && !spec.stop.empty() &&
          bernoulli(rng, spec.stop[state]))
        break;
      if (i > 0) {
        state = detail::draw(rng, spec.transitions[state]);
        if (bernoulli(rng, spec.speakerAlternation)) speakerA = !speakerA;
      }
      const auto& phrases = spec.signals.at(spec.tags[state]);
      std::string text = phrases[uniform_index(rng, phrases.size())];
      const auto fillers =
          spec.minFillers + uniform_index(rng, spec.maxFillers - spec.minFillers + 1);
      for (std::size_t f = 0; f < fillers; ++f) {
        const auto& w = spec.fillers[uniform_index(rng, spec.fillers.size())];
        text = bernoulli(rng, 0.5) ? w + " " + text : text + " " + w;
      }
      std::size_t label = state;
      if (spec.noise > 0.0 && bernoulli(rng, spec.noise)) {
        label = uniform_index(rng, n - 1);
        if (label >= state) ++label;
      }
      dialogue.utterances.push_back(
          make_utterance(speakerA ? "A" : "B", text, Tag(spec.tags[label])));
    }
    add_dialogue(corpus, std::move(dialogue));
  }
  return corpus;
}

/// Appointment-scheduling dialogues with GREET/SUGGEST/ACCEPT/REJECT/BYE and
/// planted cues: weekday names for SUGGEST, "sounds" for ACCEPT, "no" for
/// REJECT (which only ever answers a SUGGEST), "see you" for BYE.
inline GeneratorSpec scheduling_spec(double noise = 0.0,
                                     std::size_t dialogues = 30) {
  GeneratorSpec s;
  s.tags = {"GREET", "SUGGEST", "ACCEPT", "REJECT", "BYE"};
  s.signals["GREET"] = {"hello", "hi", "hello there", "good morning",
                        "hi how are you"};
  s.signals["SUGGEST"] = {
      "how about monday ?",           "how 'bout tuesday at two ?",
      "what about wednesday",         "can we meet on thursday ?",
      "is friday good for you ?",     "let's meet on monday afternoon",
      "maybe tuesday morning then",   "how 'bout the wednesday after",
      "what about thursday at three", "could we do friday morning ?",
      "i could do monday at four",    "how about the tuesday after ?",
      "when are you free ?",          "what time works for you ?",
      "how about next week ?",        "how 'bout two o'clock",
  };
  s.signals["ACCEPT"] = {"that sounds good", "sounds great", "sounds fine to me",
                         "yes that works for me", "okay sounds good",
                         "sure that is fine"};
  s.signals["REJECT"] = {"no i can't", "no i'm busy then",
                         "no that doesn't work", "no sorry",
                         "no , that is too early", "no i have a meeting"};
  s.signals["BYE"] = {"see you then", "okay see you", "bye",
                      "no problem see you then", "great , see you",
                      "thanks bye"};
  s.fillers = {"well", "um",    "uh",     "so",     "actually", "really",
               "just", "maybe", "i",      "think",  "we",       "could",
               "then", "the",   "anyway", "right",  "hmm",      "yeah"};
  s.minFillers = 0;
  s.maxFillers = 2;
  s.noise = noise;
  s.dialogues = dialogues;
  s.minLength = 5;
  s.maxLength = 16;
  s.speakerAlternation = 0.9;
  //              GREET SUGGEST ACCEPT REJECT BYE
  s.start = {1.0, 0.0, 0.0, 0.0, 0.0};
  s.transitions = {
      {0.20, 0.80, 0.00, 0.00, 0.00},  // GREET
      {0.00, 0.25, 0.35, 0.40, 0.00},  // SUGGEST
      {0.00, 0.40, 0.00, 0.00, 0.60},  // ACCEPT
      {0.00, 0.95, 0.00, 0.00, 0.05},  // REJECT
      {0.00, 0.00, 0.00, 0.00, 1.00},  // BYE
  };
  s.stop = {0.0, 0.0, 0.0, 0.0, 0.7};
  return s;
}

/// Word classes matching the scheduling spec's vocabulary.
inline ClusterMap scheduling_clusters() {
  ClusterMap m;
  m.add("$weekday$", {"monday", "tuesday", "wednesday", "thursday", "friday"});
  m.add("$number$", {"two", "three", "four"});
  m.add("$daytime$", {"morning", "afternoon"});
  return m;
}

}  // namespace dact
