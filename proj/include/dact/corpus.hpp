#pragma once

// Tagged dialogue corpora: file format, tokenizer, semantic clusters and the
// per-utterance feature view that rule conditions are evaluated against.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dact/errors.hpp"

namespace dact {

/// Dialogue-act label. A default-constructed Tag is the NONE sentinel, which
/// stands for "untagged" and for context positions outside the dialogue.
class Tag {
 public:
  Tag() = default;

  explicit Tag(std::string label) : label_(std::move(label)) {
    if (label_.empty()) throw ValidationError("empty tag label");
    if (label_ == "NONE" || label_ == "?")
      throw ValidationError("tag label '" + label_ + "' is reserved");
    for (char c : label_) {
      if (std::isspace(static_cast<unsigned char>(c)))
        throw ValidationError("tag label '" + label_ + "' contains whitespace");
    }
  }

  static Tag none() { return Tag(); }

  bool is_none() const { return label_.empty(); }

  /// Label as written in model files; the sentinel renders as "NONE".
  std::string str() const { return is_none() ? std::string("NONE") : label_; }

  auto operator<=>(const Tag&) const = default;

 private:
  std::string label_;
};

/// Parses a tag as written in model or corpus files ("NONE" and "?" are the
/// sentinel).
inline Tag parse_tag(std::string_view text) {
  if (text == "NONE" || text == "?") return Tag::none();
  return Tag(std::string(text));
}

/// Punctuation symbols tracked as a feature. Anything else is dropped by the
/// tokenizer.
inline constexpr std::string_view kPunctuationAlphabet = ".,?!;:-";

inline bool is_tracked_punctuation(char c) {
  return kPunctuationAlphabet.find(c) != std::string_view::npos;
}

struct Tokenized {
  std::vector<std::string> tokens;
  std::set<char> punctuation;
};

namespace detail {

inline bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '\'' || c == '$' || c == '_' || u >= 0x80;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

// Splits an English clitic off a lowercased word: "can't" -> "ca" "n't",
// "i'm" -> "i" "'m". Words with a leading apostrophe ("'bout") and other
// apostrophe words ("o'clock") are left whole.
inline void push_word(std::string word, std::vector<std::string>& out) {
  if (word.empty() || word == "'") return;
  if (word.front() != '\'' && word.size() > 3 && ends_with(word, "n't")) {
    out.push_back(word.substr(0, word.size() - 3));
    out.emplace_back("n't");
    return;
  }
  static constexpr std::string_view kClitics[] = {"'s", "'m", "'re", "'ve",
                                                  "'ll", "'d"};
  if (word.front() != '\'') {
    for (auto clitic : kClitics) {
      if (word.size() > clitic.size() && ends_with(word, clitic)) {
        const auto stem = word.substr(0, word.size() - clitic.size());
        if (stem.find('\'') != std::string::npos) break;
        out.push_back(stem);
        out.emplace_back(clitic);
        return;
      }
    }
  }
  out.push_back(std::move(word));
}

}  // namespace detail

/// Lowercases, splits on whitespace and punctuation, collects tracked
/// punctuation symbols and splits contractions. Total; never yields empty
/// tokens.
inline Tokenized tokenize(std::string_view raw) {
  Tokenized result;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) detail::push_word(std::move(word), result.tokens);
    word.clear();
  };
  for (char c : raw) {
    if (detail::is_word_char(c)) {
      word.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(c))));
      continue;
    }
    flush();
    if (is_tracked_punctuation(c)) result.punctuation.insert(c);
  }
  flush();
  return result;
}

inline std::string join_tokens(const std::vector<std::string>& tokens,
                               std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i != begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  return join_tokens(tokens, 0, tokens.size());
}

/// Distinct contiguous token n-grams of length 1..maxLen, space-joined.
inline std::set<std::string> substrings_of(
    const std::vector<std::string>& tokens, std::size_t maxLen) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t n = 1; n <= maxLen && i + n <= tokens.size(); ++n)
      out.insert(join_tokens(tokens, i, i + n));
  }
  return out;
}

struct Utterance {
  std::string speaker;
  std::string text;  // raw text as read, kept for serialization
  std::vector<std::string> tokens;
  std::set<char> punctuation;
  Tag goldTag;
  Tag workingTag;
  std::size_t indexInDialogue = 0;

  bool operator==(const Utterance&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;

  bool operator==(const Dialogue&) const = default;
};

struct Corpus {
  std::vector<Dialogue> dialogues;
  std::set<Tag> tagSet;

  std::size_t utterance_count() const {
    std::size_t n = 0;
    for (const auto& d : dialogues) n += d.utterances.size();
    return n;
  }

  template <typename F>
  void for_each_utterance(F&& f) const {
    for (const auto& d : dialogues)
      for (const auto& u : d.utterances) f(u);
  }

  template <typename F>
  void for_each_utterance(F&& f) {
    for (auto& d : dialogues)
      for (auto& u : d.utterances) f(u);
  }

  void reset_working_tags() {
    for_each_utterance([](Utterance& u) { u.workingTag = Tag::none(); });
  }

  bool operator==(const Corpus&) const = default;
};

inline Utterance make_utterance(std::string speaker, std::string text,
                                Tag gold = Tag::none()) {
  Utterance u;
  u.speaker = std::move(speaker);
  u.text = std::move(text);
  auto tok = tokenize(u.text);
  u.tokens = std::move(tok.tokens);
  u.punctuation = std::move(tok.punctuation);
  u.goldTag = std::move(gold);
  return u;
}

/// Appends a dialogue, fixing up utterance indices and the tag set.
inline void add_dialogue(Corpus& corpus, Dialogue dialogue) {
  for (std::size_t i = 0; i < dialogue.utterances.size(); ++i) {
    auto& u = dialogue.utterances[i];
    u.indexInDialogue = i;
    if (!u.goldTag.is_none()) corpus.tagSet.insert(u.goldTag);
  }
  corpus.dialogues.push_back(std::move(dialogue));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string item;
  while (in >> item) out.push_back(item);
  return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Calls f(lineNumber, line) for every line with any trailing '\r' removed.
template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t lineNo = 0;
  while (!text.empty()) {
    ++lineNo;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    f(lineNo, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

}  // namespace detail

/// Parses the line-oriented corpus format:
///
///   #tags: SUGGEST ACCEPT ...        (optional declaration)
///   #dialogue: <id>
///   <speaker>\t<tag or ?>\t<raw text>
///
/// Blank lines and lines starting with "##" are ignored.
inline Corpus parse_corpus(std::string_view text) {
  Corpus corpus;
  std::optional<std::set<Tag>> declared;
  std::optional<Dialogue> current;
  std::vector<std::pair<std::size_t, Tag>> observed;

  auto close = [&] {
    if (current) add_dialogue(corpus, std::move(*current));
    current.reset();
  };

  detail::for_each_line(text, [&](std::size_t lineNo, std::string_view line) {
    if (detail::trim(line).empty() || detail::starts_with(line, "##")) return;
    try {
      if (detail::starts_with(line, "#tags:")) {
        if (!declared) declared.emplace();
        for (auto& label : detail::split_ws(line.substr(6)))
          declared->insert(Tag(label));
        return;
      }
      if (detail::starts_with(line, "#dialogue:")) {
        close();
        auto id = detail::trim(line.substr(10));
        if (id.empty()) throw ParseError(lineNo, "dialogue without an id");
        current.emplace();
        current->id = std::string(id);
        return;
      }
      if (line.front() == '#')
        throw ParseError(lineNo, "unknown directive '" + std::string(line) + "'");

      const auto tab1 = line.find('\t');
      const auto tab2 = tab1 == std::string_view::npos
                            ? std::string_view::npos
                            : line.find('\t', tab1 + 1);
      if (tab2 == std::string_view::npos)
        throw ParseError(lineNo, "expected <speaker>\\t<tag>\\t<text>");
      if (!current) throw ParseError(lineNo, "utterance before any #dialogue");
      const auto speaker = line.substr(0, tab1);
      const auto tagText = line.substr(tab1 + 1, tab2 - tab1 - 1);
      if (speaker.empty() || detail::trim(speaker) != speaker)
        throw ParseError(lineNo, "empty or padded speaker field");
      Tag gold = tagText == "?" ? Tag::none() : Tag(std::string(tagText));
      if (!gold.is_none()) observed.emplace_back(lineNo, gold);
      current->utterances.push_back(make_utterance(
          std::string(speaker), std::string(line.substr(tab2 + 1)), gold));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(lineNo, e.what());
    }
  });
  close();

  if (declared) {
    for (const auto& [lineNo, tag] : observed) {
      if (!declared->contains(tag))
        throw ValidationError("line " + std::to_string(lineNo) + ": tag '" +
                              tag.str() + "' not declared in #tags");
    }
    corpus.tagSet.insert(declared->begin(), declared->end());
  }
  return corpus;
}

enum class TagColumn { Gold, Working };

/// Writes a corpus back in the file format. With TagColumn::Working the tag
/// column carries the assigned tags, which is how tagged output is stored.
inline std::string serialize_corpus(const Corpus& corpus,
                                    TagColumn column = TagColumn::Gold) {
  std::ostringstream out;
  if (!corpus.tagSet.empty()) {
    out << "#tags:";
    for (const auto& t : corpus.tagSet) out << ' ' << t.str();
    out << '\n';
  }
  for (const auto& d : corpus.dialogues) {
    out << "#dialogue: " << d.id << '\n';
    for (const auto& u : d.utterances) {
      const Tag& t = column == TagColumn::Gold ? u.goldTag : u.workingTag;
      out << u.speaker << '\t' << (t.is_none() ? "?" : t.str()) << '\t'
          << u.text << '\n';
    }
  }
  return out.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return buf.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("error writing '" + path + "'");
}

inline Corpus read_corpus_file(const std::string& path) {
  return parse_corpus(read_file(path));
}

/// Word classes whose members are replaced by the class label, e.g.
/// "$weekday$" for monday..friday.
class ClusterMap {
 public:
  ClusterMap() = default;

  void add(const std::string& label, const std::set<std::string>& words) {
    if (label.size() < 3 || label.front() != '$' || label.back() != '$')
      throw ValidationError("cluster label '" + label +
                            "' must be of the form $name$");
    if (clusters_.contains(label))
      throw ValidationError("duplicate cluster '" + label + "'");
    for (const auto& w : words) {
      if (w.empty()) throw ValidationError("empty word in cluster " + label);
      if (is_label(w) || w == label)
        throw ValidationError("word '" + w + "' is a cluster label");
      if (auto it = wordToLabel_.find(w); it != wordToLabel_.end())
        throw ValidationError("word '" + w + "' is in both " + it->second +
                              " and " + label);
    }
    for (const auto& w : words) wordToLabel_.emplace(w, label);
    clusters_.emplace(label, words);
  }

  const std::map<std::string, std::set<std::string>>& clusters() const {
    return clusters_;
  }

  bool empty() const { return clusters_.empty(); }

  /// Cluster label for a word, or the word itself.
  const std::string& map(const std::string& word) const {
    auto it = wordToLabel_.find(word);
    return it == wordToLabel_.end() ? word : it->second;
  }

 private:
  static bool is_label(const std::string& w) {
    return w.size() >= 2 && w.front() == '$' && w.back() == '$';
  }

  std::map<std::string, std::set<std::string>> clusters_;
  std::map<std::string, std::string> wordToLabel_;
};

/// One cluster per line: "$label$: word1 word2 ...". Words are normalized
/// with the corpus tokenizer so they match corpus tokens.
inline ClusterMap parse_cluster_map(std::string_view text) {
  ClusterMap map;
  detail::for_each_line(text, [&](std::size_t lineNo, std::string_view line) {
    if (detail::trim(line).empty() || detail::starts_with(line, "#")) return;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos)
      throw ParseError(lineNo, "expected '$label$: words...'");
    std::set<std::string> words;
    for (auto& raw : detail::split_ws(line.substr(colon + 1))) {
      for (auto& tok : tokenize(raw).tokens) words.insert(tok);
    }
    try {
      map.add(std::string(detail::trim(line.substr(0, colon))), words);
    } catch (const ValidationError& e) {
      throw ParseError(lineNo, e.what());
    }
  });
  return map;
}

inline std::string serialize_cluster_map(const ClusterMap& map) {
  std::ostringstream out;
  for (const auto& [label, words] : map.clusters()) {
    out << label << ':';
    for (const auto& w : words) out << ' ' << w;
    out << '\n';
  }
  return out.str();
}

inline std::vector<std::string> apply_clusters(
    const std::vector<std::string>& tokens, const ClusterMap& map) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(map.map(t));
  return out;
}

/// Replaces every cluster member token by its cluster label. Idempotent.
inline Corpus apply_clusters(Corpus corpus, const ClusterMap& map) {
  if (map.empty()) return corpus;
  corpus.for_each_utterance(
      [&](Utterance& u) { u.tokens = apply_clusters(u.tokens, map); });
  return corpus;
}

inline constexpr std::size_t kDefaultWindow = 2;
inline constexpr std::size_t kMaxSubstringLength = 3;
inline constexpr std::size_t kMaxWholeUtteranceLength = 3;

/// Everything a rule condition can look at for one utterance.
struct FeatureView {
  bool changeOfSpeaker = true;
  std::size_t length = 0;
  std::vector<Tag> precedingTags;  // [0] is offset -1
  std::vector<Tag> followingTags;  // [0] is offset +1
  std::optional<std::string> wholeUtterance;
  std::set<char> punctuation;
  std::set<std::string> substringsPresent;

  /// Working tag at a nonzero offset within the window.
  const Tag& tag_at(int offset) const {
    if (offset < 0) return precedingTags.at(static_cast<std::size_t>(-offset) - 1);
    return followingTags.at(static_cast<std::size_t>(offset) - 1);
  }
};

/// Builds the feature view of one utterance. Tag context reads working tags
/// and never crosses dialogue boundaries.
inline FeatureView feature_view(const Corpus& corpus, std::size_t dialogueIdx,
                                std::size_t uttIdx,
                                std::size_t window = kDefaultWindow) {
  if (window < 1) throw std::out_of_range("window must be >= 1");
  if (dialogueIdx >= corpus.dialogues.size())
    throw std::out_of_range("dialogue index out of range");
  const auto& utts = corpus.dialogues[dialogueIdx].utterances;
  if (uttIdx >= utts.size())
    throw std::out_of_range("utterance index out of range");
  const auto& u = utts[uttIdx];

  FeatureView v;
  v.changeOfSpeaker = uttIdx == 0 || utts[uttIdx - 1].speaker != u.speaker;
  v.length = u.tokens.size();
  for (std::size_t k = 1; k <= window; ++k) {
    v.precedingTags.push_back(k <= uttIdx ? utts[uttIdx - k].workingTag
                                          : Tag::none());
    v.followingTags.push_back(uttIdx + k < utts.size()
                                  ? utts[uttIdx + k].workingTag
                                  : Tag::none());
  }
  if (!u.tokens.empty() && u.tokens.size() <= kMaxWholeUtteranceLength)
    v.wholeUtterance = join_tokens(u.tokens);
  v.punctuation = u.punctuation;
  v.substringsPresent = substrings_of(u.tokens, kMaxSubstringLength);
  return v;
}

}  // namespace dact
