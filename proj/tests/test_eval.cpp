#include <gtest/gtest.h>

#include <random>

#include "dact/eval.hpp"
#include "dact/experiment.hpp"
#include "dact/synthetic.hpp"

using namespace dact;

namespace {

Corpus four() {
  return parse_corpus("#dialogue: d\nA\tS\ta\nB\tR\tb\nA\tS\tc\nB\tA\td\n");
}

void set_working(Corpus& c, std::vector<const char*> tags) {
  std::size_t i = 0;
  c.for_each_utterance([&](Utterance& u) { u.workingTag = parse_tag(tags[i++]); });
}

TEST(Evaluate, Identical) {
  auto c = four();
  c.for_each_utterance([](Utterance& u) { u.workingTag = u.goldTag; });
  EXPECT_EQ(evaluate(c, four()).accuracy, 1.0);
}

TEST(Evaluate, AllNone) {
  EXPECT_EQ(evaluate(four(), four()).accuracy, 0.0);
}

TEST(Evaluate, ThreeOfFour) {
  auto c = four();
  set_working(c, {"S", "R", "S", "S"});
  const auto r = evaluate(c, four());
  EXPECT_EQ(r.accuracy, 0.75);
  std::size_t offDiagonal = 0;
  for (const auto& [k, n] : r.confusion) offDiagonal += k.first != k.second ? n : 0;
  EXPECT_EQ(offDiagonal, 1u);
  EXPECT_EQ(r.confusion.at({Tag("A"), Tag("S")}), 1u);
  EXPECT_DOUBLE_EQ(r.perTag.at(Tag("S")).precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.perTag.at(Tag("A")).recall, 0.0);
  EXPECT_NE(format_report(r).find("accuracy\t0.7500\t3/4"), std::string::npos);
}

TEST(Evaluate, UnlabeledNotScoredAndStructureChecked) {
  auto gold = parse_corpus("#dialogue: d\nA\t?\ta\nB\tR\tb\n");
  auto pred = gold;
  set_working(pred, {"S", "R"});
  EXPECT_EQ(evaluate(pred, gold).total, 1u);
  EXPECT_EQ(evaluate(pred, gold).accuracy, 1.0);
  EXPECT_THROW(evaluate(four(), gold), ValidationError);
}

TEST(Summarize, PopulationSigma) {
  const auto s = summarize({0.70, 0.72, 0.74});
  EXPECT_NEAR(s.mean, 0.72, 1e-12);
  EXPECT_NEAR(s.sigma, 0.016329931618554516, 1e-12);
  const auto one = summarize({0.5});
  EXPECT_EQ(one.mean, 0.5);
  EXPECT_EQ(one.sigma, 0.0);
  EXPECT_EQ(summarize({0.1, 0.1, 0.1}).sigma, 0.0);
  EXPECT_THROW(summarize({}), ValidationError);
}

TEST(Summarize, MeanWithinRange) {
  std::mt19937 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> runs(1 + gen() % 10);
    for (auto& x : runs) x = u(gen);
    const auto s = summarize(runs);
    EXPECT_GE(s.mean, *std::min_element(runs.begin(), runs.end()));
    EXPECT_LE(s.mean, *std::max_element(runs.begin(), runs.end()));
  }
}

TEST(TTest, Examples) {
  const auto r = t_test(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{2, 3, 4, 5, 6});
  EXPECT_NEAR(r.t, -1.0, 1e-12);
  EXPECT_EQ(r.df, 8.0);
  EXPECT_NEAR(r.p, 0.34659350708733416, 1e-9);
  EXPECT_FALSE(r.significantAt05);

  const auto same = t_test(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3});
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
}

TEST(TTest, Degenerate) {
  const auto r = t_test(std::vector<double>{0.4, 0.4, 0.4}, std::vector<double>{0.6, 0.6});
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_LT(r.t, 0);
  EXPECT_EQ(t_test(std::vector<double>{0.4, 0.4}, std::vector<double>{0.4}).p, 1.0);
  EXPECT_THROW(t_test(std::vector<double>{1}, std::vector<double>{2}), ValidationError);
  EXPECT_THROW(t_test(std::vector<double>{}, std::vector<double>{2, 3, 4}), ValidationError);
}

TEST(TTest, Antisymmetric) {
  std::mt19937 gen(2);
  std::normal_distribution<double> n(0, 1);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a(2 + gen() % 6), b(2 + gen() % 6);
    for (auto& x : a) x = n(gen);
    for (auto& x : b) x = n(gen) + 0.5;
    const auto ab = t_test(a, b), ba = t_test(b, a);
    EXPECT_DOUBLE_EQ(ab.t, -ba.t);
    EXPECT_DOUBLE_EQ(ab.p, ba.p);
    EXPECT_GE(ab.p, 0.0);
    EXPECT_LE(ab.p, 1.0);
  }
}

TEST(IncompleteBeta, KnownValues) {
  EXPECT_NEAR(incomplete_beta(1, 1, 0.3), 0.3, 1e-14);
  EXPECT_NEAR(incomplete_beta(2, 3, 0.4), 0.5248, 1e-12);
  EXPECT_EQ(incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1.0), 1.0);
  // symmetric t: |t| = 0 gives p = 1
  EXPECT_NEAR(student_t_two_tailed(0.0, 5), 1.0, 1e-14);
}

TEST(Experiment, DeterministicConfigHasZeroSigma) {
  const auto train = generate_synthetic_corpus(scheduling_spec(0.05, 10), 1);
  const auto test = generate_synthetic_corpus(scheduling_spec(0.05, 10), 2);
  ExperimentConfig cfg;
  cfg.clusters = scheduling_clusters();
  cfg.trainer = Trainer::Exhaustive;
  const auto s = run_trials(train, test, cfg, 3, 1);
  EXPECT_EQ(s.sigma, 0.0);
  cfg.clusters.reset();
  EXPECT_THROW(run_trials(train, test, cfg, 3, 1), ValidationError);
}

TEST(Experiment, ComparisonTable) {
  const auto train = generate_synthetic_corpus(scheduling_spec(0.05, 15), 3);
  const auto test = generate_synthetic_corpus(scheduling_spec(0.05, 15), 4);
  ExperimentConfig cfg;
  const auto c = compare_modes(train, test, cfg, {SubstringMode::None, SubstringMode::AllNgrams}, 3, 1);
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(c.rows[0].substrings, 0u);
  EXPECT_GT(c.rows[1].stats.mean, c.rows[0].stats.mean);
  EXPECT_EQ(c.p.size(), 2u);
  const auto text = format_comparison(c);
  EXPECT_NE(text.find("none\t0\t"), std::string::npos);
  EXPECT_NE(text.find("p_two_tailed"), std::string::npos);

  const auto single = compare_modes(train, test, cfg, {SubstringMode::None}, 1, 1);
  EXPECT_TRUE(single.p.empty());
  EXPECT_EQ(format_comparison(single).find("p_two_tailed"), std::string::npos);
}

}  // namespace
