#pragma once

// Accuracy reports, multi-run statistics and the two-sample t test used to
// compare configurations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/errors.hpp"

namespace dact {

struct PrecisionRecall {
  double precision = 0.0;  // 0 when the tag was never predicted
  double recall = 0.0;     // 0 when the tag never occurs in gold
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t correct = 0;
};

struct EvaluationReport {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  std::map<Tag, PrecisionRecall> perTag;
  std::map<std::pair<Tag, Tag>, std::size_t> confusion;  // (gold, predicted)
};

/// Exact-match accuracy of working tags against gold tags. `predicted` carries
/// the working tags, `gold` the reference; both must have the same structure.
/// Utterances with a NONE gold tag are not scored.
inline EvaluationReport evaluate(const Corpus& predicted, const Corpus& gold) {
  if (predicted.dialogues.size() != gold.dialogues.size())
    throw ValidationError("dialogue count mismatch");
  EvaluationReport r;
  for (std::size_t d = 0; d < gold.dialogues.size(); ++d) {
    const auto& pu = predicted.dialogues[d].utterances;
    const auto& gu = gold.dialogues[d].utterances;
    if (pu.size() != gu.size())
      throw ValidationError("utterance count mismatch in dialogue '" +
                            gold.dialogues[d].id + "'");
    for (std::size_t i = 0; i < gu.size(); ++i) {
      const Tag& g = gu[i].goldTag;
      if (g.is_none()) continue;
      const Tag& p = pu[i].workingTag;
      ++r.total;
      ++r.confusion[{g, p}];
      ++r.perTag[g].gold;
      if (!p.is_none()) ++r.perTag[p].predicted;
      if (p == g) {
        ++r.correct;
        ++r.perTag[g].correct;
      }
    }
  }
  r.accuracy = r.total ? static_cast<double>(r.correct) / r.total : 0.0;
  for (auto& [tag, pr] : r.perTag) {
    pr.precision = pr.predicted ? static_cast<double>(pr.correct) / pr.predicted : 0.0;
    pr.recall = pr.gold ? static_cast<double>(pr.correct) / pr.gold : 0.0;
  }
  return r;
}

inline std::string format_report(const EvaluationReport& r) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "accuracy\t%.4f\t%zu/%zu\n", r.accuracy,
                r.correct, r.total);
  out << buf << "tag\tprecision\trecall\tgold\tpredicted\tcorrect\n";
  for (const auto& [tag, pr] : r.perTag) {
    std::snprintf(buf, sizeof buf, "%s\t%.4f\t%.4f\t%zu\t%zu\t%zu\n",
                  tag.str().c_str(), pr.precision, pr.recall, pr.gold,
                  pr.predicted, pr.correct);
    out << buf;
  }
  out << "## confusion: gold\tpredicted\tcount\n";
  for (const auto& [key, n] : r.confusion)
    out << key.first.str() << '\t' << key.second.str() << '\t' << n << '\n';
  return out.str();
}

struct TrialStats {
  std::vector<double> runs;
  double mean = 0.0;
  double sigma = 0.0;  // population standard deviation
};

inline TrialStats summarize(std::vector<double> runs) {
  if (runs.empty()) throw ValidationError("no runs to summarize");
  TrialStats s;
  s.runs = std::move(runs);
  const double n = static_cast<double>(s.runs.size());
  s.mean = std::accumulate(s.runs.begin(), s.runs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : s.runs) ss += (x - s.mean) * (x - s.mean);
  s.sigma = std::sqrt(ss / n);
  // identical runs must report exactly zero spread
  if (std::all_of(s.runs.begin(), s.runs.end(),
                  [&](double x) { return x == s.runs.front(); })) {
    s.mean = s.runs.front();
    s.sigma = 0.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Student t distribution

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lnFront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(lnFront);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with df degrees of freedom.
inline double student_t_two_tailed(double t, double df) {
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significantAt05 = false;
};

/// Two-sample Student t test with pooled variance, two-tailed. With zero
/// pooled variance the test degenerates: p = 1 for equal means, else 0.
inline TTestResult t_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty() || a.size() + b.size() < 3)
    throw ValidationError("t test needs samples with nA + nB >= 3");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  double ssa = 0.0, ssb = 0.0;
  for (double x : a) ssa += (x - ma) * (x - ma);
  for (double x : b) ssb += (x - mb) * (x - mb);

  TTestResult r;
  r.df = na + nb - 2.0;
  const double pooled = (ssa + ssb) / r.df;
  const double se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  auto constant = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [&](double x) { return x == s.front(); });
  };
  // constant samples can leave rounding residue in the variance
  if (se == 0.0 || (constant(a) && constant(b))) {
    const double ca = a.front(), cb = b.front();
    if (ca == cb) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = ca > cb ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
  } else {
    r.t = (ma - mb) / se;
    r.p = student_t_two_tailed(r.t, r.df);
  }
  r.significantAt05 = r.p < 0.05;
  return r;
}

inline TTestResult t_test(const std::vector<double>& a,
                          const std::vector<double>& b) {
  return t_test(std::span<const double>(a), std::span<const double>(b));
}

}  // namespace dact
