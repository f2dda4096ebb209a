#include <gtest/gtest.h>

#include <random>

#include "dact/corpus.hpp"

using namespace dact;

namespace {

using Tokens = std::vector<std::string>;

TEST(Tokenize, ContractionAndPunctuation) {
  const auto t = tokenize("No, I can't.");
  EXPECT_EQ(t.tokens, (Tokens{"no", "i", "ca", "n't"}));
  EXPECT_EQ(t.punctuation, (std::set<char>{',', '.'}));
}

TEST(Tokenize, LowercaseOnly) {
  const auto t = tokenize("OK");
  EXPECT_EQ(t.tokens, (Tokens{"ok"}));
  EXPECT_TRUE(t.punctuation.empty());
}

TEST(Tokenize, LeadingApostropheKept) {
  const auto t = tokenize("how 'bout Monday?");
  EXPECT_EQ(t.tokens, (Tokens{"how", "'bout", "monday"}));
  EXPECT_EQ(t.punctuation, (std::set<char>{'?'}));
}

TEST(Tokenize, Clitics) {
  EXPECT_EQ(tokenize("I'm sure it's fine").tokens,
            (Tokens{"i", "'m", "sure", "it", "'s", "fine"}));
  EXPECT_EQ(tokenize("two o'clock").tokens, (Tokens{"two", "o'clock"}));
  EXPECT_EQ(tokenize("don't").tokens, (Tokens{"do", "n't"}));
  EXPECT_EQ(tokenize("' hi '").tokens, (Tokens{"hi"}));
}

TEST(Tokenize, UntrackedSymbolsDropped) {
  const auto t = tokenize("a/b (c) \"d\" e&f");
  EXPECT_EQ(t.tokens, (Tokens{"a", "b", "c", "d", "e", "f"}));
  EXPECT_TRUE(t.punctuation.empty());
}

TEST(Tokenize, NeverEmptyTokensRandom) {
  std::mt19937 gen(3);
  const std::string alphabet = "ab' ,.?!;:-\t/'$n't";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    for (int k = 0, n = gen() % 20; k < n; ++k) s += alphabet[gen() % alphabet.size()];
    const auto t = tokenize(s);
    for (const auto& tok : t.tokens) EXPECT_FALSE(tok.empty()) << s;
    for (char c : t.punctuation) EXPECT_NE(kPunctuationAlphabet.find(c), std::string_view::npos);
  }
}

TEST(Tag, SentinelAndValidation) {
  EXPECT_TRUE(Tag().is_none());
  EXPECT_EQ(Tag().str(), "NONE");
  EXPECT_TRUE(parse_tag("?").is_none());
  EXPECT_THROW(Tag(""), ValidationError);
  EXPECT_THROW(Tag("NONE"), ValidationError);
  EXPECT_THROW(Tag("A B"), ValidationError);
}

const char* kTwoLines =
    "#dialogue: d1\n"
    "A\tSUGGEST\thow about monday\n"
    "B\tREJECT\tno\n";

TEST(ParseCorpus, OneDialogue) {
  const auto c = parse_corpus(kTwoLines);
  ASSERT_EQ(c.dialogues.size(), 1u);
  ASSERT_EQ(c.dialogues[0].utterances.size(), 2u);
  EXPECT_TRUE(c.tagSet.contains(Tag("SUGGEST")));
  EXPECT_TRUE(c.tagSet.contains(Tag("REJECT")));
  EXPECT_EQ(c.dialogues[0].utterances[1].indexInDialogue, 1u);
  EXPECT_TRUE(c.dialogues[0].utterances[0].workingTag.is_none());
}

TEST(ParseCorpus, EmptyInput) {
  const auto c = parse_corpus("");
  EXPECT_TRUE(c.dialogues.empty());
  EXPECT_TRUE(c.tagSet.empty());
}

TEST(ParseCorpus, QuestionMarkIsNone) {
  const auto c = parse_corpus("#dialogue: x\nA\t?\thello\n");
  EXPECT_TRUE(c.dialogues[0].utterances[0].goldTag.is_none());
}

TEST(ParseCorpus, ErrorsCarryLineNumbers) {
  try {
    parse_corpus("#dialogue: d\nA\tX\tfine\n\nbroken line\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_corpus("A\tX\tbefore any dialogue\n"), ParseError);
  EXPECT_THROW(parse_corpus("#bogus: 1\n"), ParseError);
  EXPECT_THROW(parse_corpus("#tags: A B\n#dialogue: d\nA\tC\thi\n"), ValidationError);
}

TEST(ParseCorpus, CommentsAndBlankLinesIgnored) {
  const auto c = parse_corpus("## note\n\n#dialogue: d\r\n## more\nA\tX\thi\r\n");
  ASSERT_EQ(c.utterance_count(), 1u);
  EXPECT_EQ(c.dialogues[0].utterances[0].text, "hi");
}

TEST(ParseCorpus, RoundTrip) {
  const auto text =
      "#tags: A B C\n#dialogue: one\nx\tA\tHello, there!\ny\t?\tno i can't\n"
      "#dialogue: two\nx\tC\tsee you\n";
  const auto c = parse_corpus(text);
  const auto again = parse_corpus(serialize_corpus(c));
  EXPECT_EQ(c, again);
  EXPECT_EQ(serialize_corpus(again), serialize_corpus(c));
}

TEST(Clusters, ReplacesMembers) {
  ClusterMap m;
  m.add("$weekday$", {"monday", "tuesday"});
  EXPECT_EQ(apply_clusters(Tokens{"meet", "monday"}, m), (Tokens{"meet", "$weekday$"}));
}

TEST(Clusters, EmptyMapIsIdentity) {
  const auto c = parse_corpus(kTwoLines);
  EXPECT_EQ(apply_clusters(c, ClusterMap{}), c);
}

TEST(Clusters, Idempotent) {
  ClusterMap m;
  m.add("$weekday$", {"monday", "tuesday"});
  const auto c = parse_corpus(kTwoLines);
  const auto once = apply_clusters(c, m);
  EXPECT_EQ(apply_clusters(once, m), once);
  EXPECT_EQ(once.utterance_count(), c.utterance_count());
  EXPECT_EQ(once.dialogues[0].utterances[0].tokens.size(), 3u);
  EXPECT_EQ(once.dialogues[0].utterances[0].text, "how about monday");
}

TEST(Clusters, Validation) {
  ClusterMap m;
  EXPECT_THROW(m.add("weekday", {"monday"}), ValidationError);
  m.add("$a$", {"x"});
  EXPECT_THROW(m.add("$b$", {"x"}), ValidationError);
  EXPECT_THROW(m.add("$c$", {"$a$"}), ValidationError);
}

TEST(Clusters, FileRoundTrip) {
  const auto m = parse_cluster_map("$weekday$: Monday tuesday\n$n$: two\n");
  EXPECT_EQ(m.map("monday"), "$weekday$");
  EXPECT_EQ(parse_cluster_map(serialize_cluster_map(m)).clusters(), m.clusters());
}

Corpus three_speakers() {
  return parse_corpus(
      "#dialogue: a\nA\tX\tone two three\nA\tY\tone two three four\nB\tX\thi\n"
      "#dialogue: b\nC\tY\tbye\n");
}

TEST(FeatureView, FirstUtterance) {
  auto c = three_speakers();
  c.for_each_utterance([](Utterance& u) { u.workingTag = Tag("X"); });
  const auto v = feature_view(c, 1, 0);
  EXPECT_TRUE(v.changeOfSpeaker);
  for (const auto& t : v.precedingTags) EXPECT_TRUE(t.is_none());
  for (const auto& t : v.followingTags) EXPECT_TRUE(t.is_none());
}

TEST(FeatureView, SameSpeakerAndWholeUtterance) {
  const auto c = three_speakers();
  const auto first = feature_view(c, 0, 0);
  const auto second = feature_view(c, 0, 1);
  EXPECT_FALSE(second.changeOfSpeaker);
  EXPECT_TRUE(feature_view(c, 0, 2).changeOfSpeaker);
  ASSERT_TRUE(first.wholeUtterance);
  EXPECT_EQ(*first.wholeUtterance, "one two three");
  EXPECT_FALSE(second.wholeUtterance);
  EXPECT_EQ(second.length, 4u);
  EXPECT_TRUE(second.substringsPresent.contains("two three four"));
  EXPECT_FALSE(second.substringsPresent.contains("one two three four"));
}

TEST(FeatureView, ContextStaysInDialogue) {
  auto c = three_speakers();
  c.for_each_utterance([](Utterance& u) { u.workingTag = u.goldTag; });
  const auto last = feature_view(c, 0, 2);
  EXPECT_EQ(last.tag_at(-1), Tag("Y"));
  EXPECT_EQ(last.tag_at(-2), Tag("X"));
  EXPECT_TRUE(last.tag_at(1).is_none());
  EXPECT_THROW(feature_view(c, 2, 0), std::out_of_range);
  EXPECT_THROW(feature_view(c, 0, 3), std::out_of_range);
}

TEST(Files, MissingFileIsIoError) {
  EXPECT_THROW(read_corpus_file("/nonexistent/dir/file.txt"), IoError);
}

}  // namespace
