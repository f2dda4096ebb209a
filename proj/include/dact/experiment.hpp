#pragma once

// Train/test experiments: seeded repeated runs and substring-mode comparisons.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/cues.hpp"
#include "dact/eval.hpp"
#include "dact/rule.hpp"
#include "dact/tbl.hpp"

namespace dact {

struct ExperimentConfig {
  CueConfig cues;
  TrainingConfig training;
  std::vector<Template> templates = default_templates();
  Trainer trainer = Trainer::MonteCarlo;
  std::optional<ClusterMap> clusters;
  std::optional<std::vector<std::string>> externalList;
};

/// Corpora after optional clustering, plus the substring inventory.
struct PreparedData {
  Corpus train;
  Corpus test;
  CueSet cues;
};

inline PreparedData prepare(const Corpus& train, const Corpus& test,
                            const ExperimentConfig& config) {
  PreparedData p{train, test, {}};
  if (uses_clustering(config.cues.mode)) {
    if (!config.clusters)
      throw ValidationError(std::string(to_string(config.cues.mode)) +
                            " mode needs a cluster map");
    p.train = apply_clusters(std::move(p.train), *config.clusters);
    p.test = apply_clusters(std::move(p.test), *config.clusters);
  }
  p.cues = substring_source(p.train, config.cues, config.externalList);
  return p;
}

/// Accuracy on `test` of a model trained on `train`, for seeds
/// seedBase .. seedBase + nRuns - 1. Runs execute concurrently.
inline TrialStats run_trials(const Corpus& train, const Corpus& test,
                             const ExperimentConfig& config, std::size_t nRuns,
                             std::uint64_t seedBase) {
  if (nRuns < 1) throw ValidationError("need at least one run");
  const auto data = prepare(train, test, config);
  std::vector<std::future<double>> runs;
  for (std::size_t i = 0; i < nRuns; ++i) {
    runs.push_back(std::async(std::launch::async, [&, i] {
      auto tc = config.training;
      tc.seed = seedBase + i;
      const auto model =
          train_model(data.train, config.templates, data.cues, tc, config.trainer);
      return evaluate(tag_corpus(model, data.test), data.test).accuracy;
    }));
  }
  std::vector<double> acc;
  for (auto& f : runs) acc.push_back(f.get());
  return summarize(std::move(acc));
}

struct ComparisonRow {
  SubstringMode mode;
  std::size_t substrings = 0;
  TrialStats stats;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  // p[i][j]: two-tailed p of rows i vs j (empty with fewer than 2 runs)
  std::vector<std::vector<double>> p;
};

inline Comparison compare_modes(const Corpus& train, const Corpus& test,
                                ExperimentConfig config,
                                const std::vector<SubstringMode>& modes,
                                std::size_t nRuns, std::uint64_t seedBase) {
  Comparison c;
  for (auto mode : modes) {
    config.cues.mode = mode;
    ComparisonRow row;
    row.mode = mode;
    row.substrings = prepare(train, test, config).cues.size();
    row.stats = run_trials(train, test, config, nRuns, seedBase);
    c.rows.push_back(std::move(row));
  }
  if (nRuns >= 2) {
    c.p.assign(c.rows.size(), std::vector<double>(c.rows.size(), 1.0));
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      for (std::size_t j = 0; j < c.rows.size(); ++j) {
        if (i != j)
          c.p[i][j] = t_test(c.rows[i].stats.runs, c.rows[j].stats.runs).p;
      }
    }
  }
  return c;
}

/// Table with mode, substring count, mean accuracy and sigma (percent),
/// followed by pairwise p-values when available.
inline std::string format_comparison(const Comparison& c) {
  std::ostringstream out;
  char buf[160];
  out << "mode\tsubstrings\tmean_accuracy\tsigma\n";
  for (const auto& r : c.rows) {
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%.2f%%\t%.2f%%\n",
                  std::string(to_string(r.mode)).c_str(), r.substrings,
                  100.0 * r.stats.mean, 100.0 * r.stats.sigma);
    out << buf;
  }
  if (!c.p.empty() && c.rows.size() > 1) {
    out << "\nmode_a\tmode_b\tp_two_tailed\tsignificant_05\n";
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      for (std::size_t j = i + 1; j < c.rows.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%s\t%s\t%.4g\t%s\n",
                      std::string(to_string(c.rows[i].mode)).c_str(),
                      std::string(to_string(c.rows[j].mode)).c_str(), c.p[i][j],
                      c.p[i][j] < 0.05 ? "yes" : "no");
        out << buf;
      }
    }
  }
  return out.str();
}

}  // namespace dact
