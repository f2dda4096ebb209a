#pragma once

// Dialogue-act cue discovery. A cue is a 1-3 token substring whose
// co-occurring dialogue acts have low conditional entropy and enough support:
//
//   C = { s | H(D|s) < theta1  and  #(s) > theta2 },
//   H(D|s) = -sum_d P(d|s) log2 P(d|s),   P(d|s) ~ #(d & s) / #(s).
//
// #(s) counts utterances containing s (presence, not multiplicity).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/errors.hpp"

namespace dact {

struct SubstringStats {
  std::string substring;
  std::size_t count = 0;
  std::map<Tag, std::size_t> perTagCounts;
};

struct Cue {
  std::string substring;
  std::size_t count = 0;
  double entropy = 0.0;  // bits; +inf when the substring never occurs

  bool operator==(const Cue&) const = default;
};

/// Where the substrings available to ContainsCue conditions come from.
enum class SubstringMode {
  None,
  ExternalList,
  AllNgrams,
  Entropy,
  EntropyFilter,
  EntropyCluster,
  EntropyFilterCluster,
};

inline constexpr SubstringMode kAllSubstringModes[] = {
    SubstringMode::None,          SubstringMode::ExternalList,
    SubstringMode::AllNgrams,     SubstringMode::Entropy,
    SubstringMode::EntropyFilter, SubstringMode::EntropyCluster,
    SubstringMode::EntropyFilterCluster,
};

inline std::string_view to_string(SubstringMode mode) {
  switch (mode) {
    case SubstringMode::None: return "none";
    case SubstringMode::ExternalList: return "external-list";
    case SubstringMode::AllNgrams: return "all-ngrams";
    case SubstringMode::Entropy: return "entropy";
    case SubstringMode::EntropyFilter: return "entropy+filter";
    case SubstringMode::EntropyCluster: return "entropy+cluster";
    case SubstringMode::EntropyFilterCluster: return "entropy+filter+cluster";
  }
  return "?";
}

inline SubstringMode parse_substring_mode(std::string_view text) {
  for (auto mode : kAllSubstringModes) {
    if (to_string(mode) == text) return mode;
  }
  throw ValidationError("unknown substring mode '" + std::string(text) + "'");
}

inline bool uses_clustering(SubstringMode mode) {
  return mode == SubstringMode::EntropyCluster ||
         mode == SubstringMode::EntropyFilterCluster;
}

inline bool uses_filtering(SubstringMode mode) {
  return mode == SubstringMode::EntropyFilter ||
         mode == SubstringMode::EntropyFilterCluster;
}

struct CueConfig {
  std::optional<double> theta1;  // unset: entropy of the gold tag marginal
  double theta2 = 6;
  std::size_t maxLen = kMaxSubstringLength;
  SubstringMode mode = SubstringMode::EntropyFilterCluster;
};

/// Cue inventory, kept sorted by entropy ascending, count descending, then
/// substring.
class CueSet {
 public:
  CueSet() = default;
  explicit CueSet(std::vector<Cue> cues) : cues_(std::move(cues)) {
    std::sort(cues_.begin(), cues_.end(), [](const Cue& a, const Cue& b) {
      if (a.entropy != b.entropy) return a.entropy < b.entropy;
      if (a.count != b.count) return a.count > b.count;
      return a.substring < b.substring;
    });
    for (std::size_t i = 0; i < cues_.size(); ++i) {
      if (!index_.emplace(cues_[i].substring, i).second)
        throw ValidationError("duplicate cue '" + cues_[i].substring + "'");
    }
  }

  const std::vector<Cue>& cues() const { return cues_; }
  std::size_t size() const { return cues_.size(); }
  bool empty() const { return cues_.empty(); }
  bool contains(const std::string& s) const { return index_.contains(s); }

  const Cue* find(const std::string& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? nullptr : &cues_[it->second];
  }

  std::set<std::string> substrings() const {
    std::set<std::string> out;
    for (const auto& c : cues_) out.insert(c.substring);
    return out;
  }

  bool operator==(const CueSet& o) const { return cues_ == o.cues_; }

 private:
  std::vector<Cue> cues_;
  std::map<std::string, std::size_t> index_;
};

/// Counts every contiguous n-gram (1..maxLen tokens) over gold-tagged
/// utterances, once per utterance.
inline std::map<std::string, SubstringStats> enumerate_substrings(
    const Corpus& corpus, std::size_t maxLen = kMaxSubstringLength) {
  std::map<std::string, SubstringStats> stats;
  corpus.for_each_utterance([&](const Utterance& u) {
    if (u.goldTag.is_none()) return;
    for (const auto& s : substrings_of(u.tokens, maxLen)) {
      auto& entry = stats[s];
      entry.substring = s;
      ++entry.count;
      ++entry.perTagCounts[u.goldTag];
    }
  });
  return stats;
}

/// Shannon entropy in bits of a count vector. Zero entries are skipped.
inline double entropy_bits(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw ValidationError("entropy of an empty distribution");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  // -0.0 for single-outcome distributions
  return h <= 0.0 ? 0.0 : h;
}

namespace detail {
inline std::vector<std::size_t> count_vector(
    const std::map<Tag, std::size_t>& m) {
  std::vector<std::size_t> v;
  v.reserve(m.size());
  for (const auto& [tag, c] : m) v.push_back(c);
  return v;
}
}  // namespace detail

/// H(D|s) with P(d|s) estimated as #(d & s) / #(s).
inline double conditional_entropy(const SubstringStats& stats) {
  if (stats.count == 0)
    throw ValidationError("conditional entropy of substring with count 0");
  return entropy_bits(detail::count_vector(stats.perTagCounts));
}

/// H(T) over the gold tags of all labeled utterances.
inline double tag_marginal_entropy(const Corpus& corpus) {
  std::map<Tag, std::size_t> counts;
  corpus.for_each_utterance([&](const Utterance& u) {
    if (!u.goldTag.is_none()) ++counts[u.goldTag];
  });
  if (counts.empty())
    throw ValidationError("tag entropy of a corpus without gold tags");
  return entropy_bits(detail::count_vector(counts));
}

inline Cue make_cue(const SubstringStats& stats) {
  return Cue{stats.substring, stats.count, conditional_entropy(stats)};
}

/// Substrings with H(D|s) < theta1 and #(s) > theta2 (both strict).
inline CueSet select_cues(const Corpus& corpus, const CueConfig& config) {
  if (config.theta2 < 0) throw ValidationError("theta2 must be >= 0");
  if (config.maxLen < 1 || config.maxLen > kMaxSubstringLength)
    throw ValidationError("maxLen must be in 1..3");
  const auto stats = enumerate_substrings(corpus, config.maxLen);
  if (stats.empty()) return {};
  const double theta1 = config.theta1.value_or(tag_marginal_entropy(corpus));
  std::vector<Cue> selected;
  for (const auto& [s, st] : stats) {
    const double h = conditional_entropy(st);
    if (h < theta1 && static_cast<double>(st.count) > config.theta2)
      selected.push_back(Cue{s, st.count, h});
  }
  return CueSet(std::move(selected));
}

/// Proper contiguous sub-n-grams of a space-joined n-gram.
inline std::vector<std::string> proper_substrings(const std::string& ngram) {
  const auto tokens = detail::split_ws(ngram);
  std::vector<std::string> out;
  for (std::size_t len = 1; len < tokens.size(); ++len) {
    for (std::size_t i = 0; i + len <= tokens.size(); ++i)
      out.push_back(join_tokens(tokens, i, i + len));
  }
  return out;
}

/// Drops every cue that contains another cue of the input with an equal or
/// lower entropy. Decisions are made against the unfiltered input.
inline CueSet filter_superstrings(const CueSet& cues) {
  std::vector<Cue> kept;
  for (const auto& cue : cues.cues()) {
    bool subsumed = false;
    for (const auto& sub : proper_substrings(cue.substring)) {
      const Cue* other = cues.find(sub);
      if (other && other->entropy <= cue.entropy) {
        subsumed = true;
        break;
      }
    }
    if (!subsumed) kept.push_back(cue);
  }
  return CueSet(std::move(kept));
}

/// Cue phrases from an external inventory, one per line, normalized with the
/// corpus tokenizer. Phrases longer than maxLen tokens are skipped.
inline std::vector<std::string> parse_cue_list(std::string_view text,
                                               std::size_t maxLen =
                                                   kMaxSubstringLength) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  detail::for_each_line(text, [&](std::size_t, std::string_view line) {
    if (detail::trim(line).empty() || detail::starts_with(line, "#")) return;
    const auto tokens = tokenize(line).tokens;
    if (tokens.empty() || tokens.size() > maxLen) return;
    auto phrase = join_tokens(tokens);
    if (seen.insert(phrase).second) out.push_back(std::move(phrase));
  });
  return out;
}

/// Substrings for one experimental configuration. Clustering modes expect the
/// corpus to have been clustered already.
inline CueSet substring_source(
    const Corpus& corpus, const CueConfig& config,
    const std::optional<std::vector<std::string>>& externalList =
        std::nullopt) {
  switch (config.mode) {
    case SubstringMode::None:
      return {};
    case SubstringMode::ExternalList: {
      if (!externalList)
        throw ValidationError("external-list mode needs a cue phrase list");
      const auto stats = enumerate_substrings(corpus, config.maxLen);
      std::vector<Cue> cues;
      for (const auto& phrase : *externalList) {
        if (auto it = stats.find(phrase); it != stats.end()) {
          cues.push_back(make_cue(it->second));
        } else {
          cues.push_back(
              Cue{phrase, 0, std::numeric_limits<double>::infinity()});
        }
      }
      return CueSet(std::move(cues));
    }
    case SubstringMode::AllNgrams: {
      std::vector<Cue> cues;
      for (const auto& [s, st] : enumerate_substrings(corpus, config.maxLen))
        cues.push_back(make_cue(st));
      return CueSet(std::move(cues));
    }
    case SubstringMode::Entropy:
    case SubstringMode::EntropyCluster:
      return select_cues(corpus, config);
    case SubstringMode::EntropyFilter:
    case SubstringMode::EntropyFilterCluster:
      return filter_superstrings(select_cues(corpus, config));
  }
  return {};
}

/// TSV: substring, count, entropy in bits ("inf" for unseen phrases).
inline std::string serialize_cue_set(const CueSet& cues) {
  std::ostringstream out;
  for (const auto& c : cues.cues()) {
    out << c.substring << '\t' << c.count << '\t';
    if (std::isinf(c.entropy)) {
      out << "inf";
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", c.entropy);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

inline CueSet parse_cue_set(std::string_view text) {
  std::vector<Cue> cues;
  detail::for_each_line(text, [&](std::size_t lineNo, std::string_view line) {
    if (detail::trim(line).empty() || detail::starts_with(line, "#")) return;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos)
      throw ParseError(lineNo, "expected substring\\tcount\\tentropy");
    Cue c;
    c.substring = join_tokens(detail::split_ws(line.substr(0, t1)));
    if (c.substring.empty()) throw ParseError(lineNo, "empty substring");
    try {
      c.count = std::stoul(std::string(line.substr(t1 + 1, t2 - t1 - 1)));
      const auto h = std::string(detail::trim(line.substr(t2 + 1)));
      c.entropy = h == "inf" ? std::numeric_limits<double>::infinity()
                             : std::stod(h);
    } catch (const std::exception&) {
      throw ParseError(lineNo, "bad count or entropy field");
    }
    cues.push_back(std::move(c));
  });
  try {
    return CueSet(std::move(cues));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("cue file: ") + e.what());
  }
}

/// Stable fingerprint of the substrings in a cue set (FNV-1a, 64 bit).
inline std::string cues_hash(const CueSet& cues) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : cues.substrings()) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= '\n';
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dact
