#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "brute_force.hpp"
#include "dact/cues.hpp"

using namespace dact;

namespace {

Corpus make(const std::vector<std::pair<std::string, std::string>>& lines) {
  Corpus c;
  Dialogue d{"d", {}};
  for (const auto& [tag, text] : lines)
    d.utterances.push_back(make_utterance("A", text, tag == "?" ? Tag() : Tag(tag)));
  add_dialogue(c, std::move(d));
  return c;
}

SubstringStats stats(std::map<std::string, std::size_t> perTag) {
  SubstringStats s;
  s.substring = "s";
  for (auto& [t, n] : perTag) {
    s.perTagCounts[Tag(t)] = n;
    s.count += n;
  }
  return s;
}

TEST(Enumerate, SingleUtterance) {
  const auto s = enumerate_substrings(make({{"BYE", "see you"}}));
  ASSERT_EQ(s.size(), 3u);
  for (const auto* k : {"see", "you", "see you"}) EXPECT_EQ(s.at(k).count, 1u);
}

TEST(Enumerate, PresenceSemantics) {
  const auto s = enumerate_substrings(make({{"REJECT", "no no"}, {"REJECT", "no"}}));
  EXPECT_EQ(s.at("no").count, 2u);
  EXPECT_EQ(s.at("no no").count, 1u);
}

TEST(Enumerate, MatchesBruteForceCounter) {
  std::mt19937 gen(5);
  const std::vector<std::string> words = {"a", "b", "c", "no"};
  std::vector<std::pair<std::string, std::string>> lines;
  for (int i = 0; i < 60; ++i) {
    std::string t;
    for (int k = 0, n = 1 + gen() % 6; k < n; ++k) t += (k ? " " : "") + words[gen() % 4];
    lines.push_back({gen() % 2 ? "X" : "Y", t});
  }
  const auto s = enumerate_substrings(make(lines));
  std::map<std::string, std::size_t> ref;
  for (const auto& [tag, text] : lines)
    for (const auto& g : oracle::ngrams(tokenize(text).tokens, 3)) ++ref[g];
  ASSERT_EQ(s.size(), ref.size());
  for (const auto& [k, n] : ref) EXPECT_EQ(s.at(k).count, n) << k;
}

TEST(Enumerate, SkipsUnlabeled) {
  const auto s = enumerate_substrings(make({{"?", "hello"}, {"X", "bye"}}));
  EXPECT_FALSE(s.contains("hello"));
}

TEST(Entropy, Anchors) {
  EXPECT_EQ(conditional_entropy(stats({{"SUGGEST", 6}})), 0.0);
  EXPECT_NEAR(conditional_entropy(stats({{"ACCEPT", 2}, {"REJECT", 2}})), 1.0, 1e-12);
  EXPECT_NEAR(conditional_entropy(stats({{"SUGGEST", 6}, {"REJECT", 2}})), 0.8113, 1e-4);
}

TEST(Entropy, Marginal) {
  EXPECT_EQ(tag_marginal_entropy(make({{"S", "a"}, {"S", "b"}})), 0.0);
  EXPECT_NEAR(tag_marginal_entropy(make({{"S", "a"}, {"R", "b"}})), 1.0, 1e-12);
  EXPECT_NEAR(tag_marginal_entropy(make({{"A", "a"}, {"B", "b"}, {"C", "c"}, {"C", "d"}})),
              1.5, 1e-12);
}

TEST(Entropy, BoundedByLogTags) {
  std::mt19937 gen(11);
  for (int i = 0; i < 200; ++i) {
    std::map<std::string, std::size_t> m;
    const int k = 1 + gen() % 6;
    for (int t = 0; t < k; ++t) m["T" + std::to_string(t)] = 1 + gen() % 9;
    const double h = conditional_entropy(stats(m));
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(static_cast<double>(k)) + 1e-12);
  }
}

TEST(SelectCues, StrictCount) {
  std::vector<std::pair<std::string, std::string>> lines;
  for (int i = 0; i < 6; ++i) lines.push_back({"S", "six"});
  for (int i = 0; i < 3; ++i) lines.push_back({"R", "other"});
  CueConfig cfg;
  EXPECT_FALSE(select_cues(make(lines), cfg).contains("six"));
  cfg.theta2 = 5;
  EXPECT_TRUE(select_cues(make(lines), cfg).contains("six"));
}

TEST(SelectCues, SoundsAlwaysAccept) {
  std::vector<std::pair<std::string, std::string>> lines;
  for (int i = 0; i < 10; ++i) lines.push_back({"ACCEPT", i % 2 ? "sounds good" : "that sounds fine"});
  for (int i = 0; i < 10; ++i) lines.push_back({"REJECT", "no"});
  const auto cues = select_cues(make(lines), {});
  const Cue* c = cues.find("sounds");
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->count, 10u);
  EXPECT_EQ(c->entropy, 0.0);
}

TEST(SelectCues, MonotoneInThresholds) {
  std::mt19937 gen(17);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f"};
  std::vector<std::pair<std::string, std::string>> lines;
  for (int i = 0; i < 120; ++i) {
    std::string t;
    for (int k = 0, n = 1 + gen() % 5; k < n; ++k) t += (k ? " " : "") + words[gen() % 6];
    lines.push_back({std::string(1, static_cast<char>('P' + gen() % 3)), t});
  }
  const auto c = make(lines);
  const auto keys = enumerate_substrings(c);
  CueConfig tight;
  tight.theta1 = 1.0;
  tight.theta2 = 8;
  CueConfig loose = tight;
  loose.theta1 = 1.4;
  loose.theta2 = 4;
  const auto a = select_cues(c, tight);
  const auto b = select_cues(c, loose);
  for (const auto& s : a.substrings()) {
    EXPECT_TRUE(b.contains(s)) << s;
    EXPECT_TRUE(keys.contains(s));
  }
}

TEST(Filter, Examples) {
  EXPECT_FALSE(filter_superstrings(CueSet({{"how 'bout", 9, 0.4}, {"how 'bout the", 7, 0.5}}))
                   .contains("how 'bout the"));
  EXPECT_FALSE(filter_superstrings(CueSet({{"how 'bout", 9, 0.5}, {"how 'bout the", 7, 0.5}}))
                   .contains("how 'bout the"));
  EXPECT_TRUE(filter_superstrings(CueSet({{"how 'bout", 9, 0.6}, {"how 'bout the", 7, 0.5}}))
                  .contains("how 'bout the"));
}

TEST(Filter, DecidesAgainstOriginalSet) {
  // "a b c" is removed by "b" even though "a b" is removed too.
  const CueSet in({{"b", 9, 0.1}, {"a b", 8, 0.2}, {"a b c", 7, 0.3}});
  const auto out = filter_superstrings(in);
  EXPECT_EQ(out.substrings(), (std::set<std::string>{"b"}));
}

TEST(Filter, NoTokenBoundaryConfusion) {
  // "no" is not a token substring of "know what"
  const CueSet in({{"no", 9, 0.1}, {"know what", 8, 0.2}});
  EXPECT_TRUE(filter_superstrings(in).contains("know what"));
}

TEST(CueSet, DuplicateRejected) {
  EXPECT_THROW(CueSet({{"a", 1, 0}, {"a", 2, 0}}), ValidationError);
}

TEST(CueSet, TsvRoundTrip) {
  const CueSet in({{"how 'bout", 9, 0.4}, {"x", 0, std::numeric_limits<double>::infinity()}});
  const auto out = parse_cue_set(serialize_cue_set(in));
  EXPECT_EQ(out.substrings(), in.substrings());
  EXPECT_TRUE(std::isinf(out.find("x")->entropy));
  EXPECT_EQ(cues_hash(out), cues_hash(in));
}

TEST(SubstringSource, Modes) {
  const auto c = make({{"S", "how about monday"}, {"R", "no way"}});
  CueConfig cfg;
  cfg.mode = SubstringMode::None;
  EXPECT_EQ(substring_source(c, cfg).size(), 0u);
  cfg.mode = SubstringMode::AllNgrams;
  const auto all = substring_source(c, cfg);
  std::set<std::string> keys;
  for (const auto& [k, v] : enumerate_substrings(c)) keys.insert(k);
  EXPECT_EQ(all.substrings(), keys);
}

TEST(SubstringSource, ExternalListTakenAsIs) {
  const auto c = make({{"S", "how 'bout monday"}, {"S", "how 'bout tuesday"}});
  CueConfig cfg;
  cfg.mode = SubstringMode::ExternalList;
  const auto list = parse_cue_list("How 'bout\nhow\nnever seen\na phrase far too long\n");
  EXPECT_EQ(list.size(), 3u);
  const auto cues = substring_source(c, cfg, list);
  EXPECT_TRUE(cues.contains("how 'bout"));
  EXPECT_TRUE(cues.contains("how"));
  EXPECT_EQ(cues.find("never seen")->count, 0u);
  EXPECT_THROW(substring_source(c, cfg), ValidationError);
}

TEST(SubstringMode, Names) {
  for (auto m : kAllSubstringModes) EXPECT_EQ(parse_substring_mode(to_string(m)), m);
  EXPECT_THROW(parse_substring_mode("bogus"), ValidationError);
}

}  // namespace
