// dact: dialogue-act tagging with transformation-based learning.
//
// Commands: gen-corpus, extract-cues, train, tag, evaluate, committee-train,
// compare. Every option can also come from a config file (--config), with
// command-line flags taking precedence. Exit codes: 0 success, 1 validation
// or domain error, 2 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dact/dact.hpp"

namespace {

using namespace dact;

struct Options {
  // inputs and outputs
  std::string train;
  std::string test;
  std::string input;
  std::string gold;
  std::string predicted;
  std::string cues;
  std::string clusters;
  std::string cueList;
  std::string model;
  std::string committee;
  std::string out;
  std::string confidenceOut;
  std::string clustersOut;

  // cue extraction
  std::string mode = "entropy+filter+cluster";
  std::optional<double> theta1;
  double theta2 = 6;
  std::size_t maxLen = kMaxSubstringLength;

  // training
  double theta = 1;
  std::size_t rSample = 14;
  std::size_t maxRules = 1000;
  std::uint64_t seed = 1;
  std::size_t window = kDefaultWindow;
  std::string templates = "T1,T2,T3,T4,T5,T6,T7,T8,T9,T10,T11";
  bool exhaustive = false;

  // committee and trials
  std::size_t k = kDefaultCommitteeSize;
  double beta = kDefaultBeta;
  std::size_t runs = 10;
  std::string modes = "none,all-ngrams,entropy,entropy+cluster,entropy+filter,entropy+filter+cluster";

  // synthetic corpora
  double noise = 0.0;
  std::size_t dialogues = 40;

  int verbosity = 0;
};

void add_cue_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--mode", o.mode, "Substring source")
      ->check(CLI::IsMember({"none", "external-list", "all-ngrams", "entropy",
                             "entropy+filter", "entropy+cluster",
                             "entropy+filter+cluster"}))
      ->capture_default_str();
  cmd->add_option("--theta1", o.theta1,
                  "Entropy threshold in bits (default: tag entropy H(T))");
  cmd->add_option("--theta2", o.theta2, "Count threshold")->capture_default_str();
  cmd->add_option("--max-len", o.maxLen, "Longest substring in tokens")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  cmd->add_option("--clusters", o.clusters, "Cluster map file");
  cmd->add_option("--cue-list", o.cueList, "External cue phrase list");
}

void add_training_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--theta", o.theta, "Improvement score threshold")
      ->check(CLI::Range(1.0, 1e12))
      ->capture_default_str();
  cmd->add_option("--r-sample", o.rSample, "Monte Carlo samples per utterance")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30))
      ->capture_default_str();
  cmd->add_option("--max-rules", o.maxRules)->capture_default_str();
  cmd->add_option("--seed", o.seed)->capture_default_str();
  cmd->add_option("--window", o.window, "Tag context window")
      ->check(CLI::Range(1, 16))
      ->capture_default_str();
  cmd->add_option("--templates", o.templates,
                  "Comma-separated template names or slot specs")
      ->capture_default_str();
  cmd->add_flag("--exhaustive", o.exhaustive,
                "Exhaustive candidate generation instead of Monte Carlo");
}

CueConfig cue_config(const Options& o) {
  CueConfig c;
  c.mode = parse_substring_mode(o.mode);
  c.theta1 = o.theta1;
  c.theta2 = o.theta2;
  c.maxLen = o.maxLen;
  return c;
}

TrainingConfig training_config(const Options& o) {
  TrainingConfig t;
  t.theta = o.theta;
  t.rSample = o.rSample;
  t.maxRules = o.maxRules;
  t.seed = o.seed;
  t.window = o.window;
  if (o.verbosity >= 1) {
    t.onPass = [](const PassInfo& p) {
      std::cerr << "pass " << p.pass << "\tcandidates " << p.candidates
                << "\tbest " << detail::format_number(p.bestScore) << '\t'
                << (p.rule ? to_string(*p.rule) : std::string("(stop)")) << '\n';
    };
  }
  return t;
}

std::optional<ClusterMap> load_clusters(const Options& o) {
  if (o.clusters.empty()) return std::nullopt;
  return parse_cluster_map(read_file(o.clusters));
}

std::optional<std::vector<std::string>> load_cue_list(const Options& o) {
  if (o.cueList.empty()) return std::nullopt;
  return parse_cue_list(read_file(o.cueList), o.maxLen);
}

void require(const std::string& value, const char* flag) {
  if (value.empty())
    throw ValidationError(std::string("missing required option ") + flag);
}

Corpus load_training_corpus(const Options& o) {
  require(o.train, "--train");
  auto corpus = read_corpus_file(o.train);
  if (corpus.utterance_count() == 0)
    throw ValidationError("training corpus '" + o.train + "' is empty");
  return corpus;
}

/// Clusters the corpus when the mode asks for it (or a map was given) and
/// builds the substring inventory.
CueSet build_cues(const Options& o, Corpus& corpus) {
  const auto config = cue_config(o);
  const auto clusters = load_clusters(o);
  if (uses_clustering(config.mode) && !clusters)
    throw ValidationError("mode " + o.mode + " needs --clusters");
  if (clusters) corpus = apply_clusters(std::move(corpus), *clusters);
  return substring_source(corpus, config, load_cue_list(o));
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

std::string rule_table(const Model& model) {
  std::ostringstream out;
  out << "#\tscore\trule\n";
  for (std::size_t i = 0; i < model.rules.size(); ++i) {
    out << i + 1 << '\t'
        << (i < model.scores.size() ? detail::format_number(model.scores[i])
                                    : std::string("-"))
        << '\t' << to_string(model.rules[i]) << '\n';
  }
  return out.str();
}

int cmd_gen_corpus(const Options& o) {
  require(o.out, "--out");
  const auto corpus =
      generate_synthetic_corpus(scheduling_spec(o.noise, o.dialogues), o.seed);
  write_file(o.out, serialize_corpus(corpus));
  if (!o.clustersOut.empty())
    write_file(o.clustersOut, serialize_cluster_map(scheduling_clusters()));
  std::cout << "wrote " << corpus.dialogues.size() << " dialogues, "
            << corpus.utterance_count() << " utterances to " << o.out << '\n';
  return 0;
}

int cmd_extract_cues(const Options& o) {
  auto corpus = load_training_corpus(o);
  const auto cues = build_cues(o, corpus);
  write_output(o.out, serialize_cue_set(cues));
  auto& log = o.out.empty() ? std::cerr : std::cout;
  const auto config = cue_config(o);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f",
                config.theta1.value_or(tag_marginal_entropy(corpus)));
  log << "mode\t" << o.mode << "\ncues\t" << cues.size() << "\ntheta1\t" << buf
      << "\ntheta2\t" << detail::format_number(config.theta2) << '\n';
  return 0;
}

// Cue set for training: from --cues when given, else extracted per --mode.
CueSet training_cues(const Options& o, Corpus& corpus) {
  if (o.cues.empty()) return build_cues(o, corpus);
  if (auto clusters = load_clusters(o))
    corpus = apply_clusters(std::move(corpus), *clusters);
  auto cues = parse_cue_set(read_file(o.cues));
  std::set<std::string> present;
  corpus.for_each_utterance([&](const Utterance& u) {
    for (auto& s : substrings_of(u.tokens, kMaxSubstringLength)) present.insert(s);
  });
  std::size_t missing = 0;
  for (const auto& c : cues.cues()) missing += present.contains(c.substring) ? 0 : 1;
  if (missing > 0)
    std::cerr << "warning: " << missing << " of " << cues.size()
              << " cues never occur in the training corpus (tokenization or "
                 "clustering mismatch?)\n";
  return cues;
}

int cmd_train(const Options& o) {
  require(o.out, "--out");
  auto corpus = load_training_corpus(o);
  const auto cues = training_cues(o, corpus);
  const auto templates = parse_templates(o.templates);
  auto model = train_model(corpus, templates, cues, training_config(o),
                           o.exhaustive ? Trainer::Exhaustive : Trainer::MonteCarlo);
  model.info.mode = o.cues.empty() ? o.mode : "file";
  write_file(o.out, serialize_model(model));
  const auto report = evaluate(tag_corpus(model, corpus), corpus);
  std::cout << rule_table(model);
  char buf[96];
  std::snprintf(buf, sizeof buf, "rules\t%zu\ntraining_accuracy\t%.4f\n",
                model.rules.size(), report.accuracy);
  std::cout << buf;
  if (o.verbosity >= 1)
    std::cerr << "cues\t" << cues.size() << "\ncues_hash\t" << model.info.cuesHash
              << '\n';
  return 0;
}

void check_model_tags(const Model& model, const Corpus& corpus) {
  if (corpus.tagSet.empty()) return;
  for (const auto& t : model_tags(model)) {
    if (!corpus.tagSet.contains(t))
      throw ValidationError("model uses tag '" + t.str() +
                            "' which is not in the corpus tag set");
  }
}

int cmd_tag(const Options& o) {
  require(o.input, "--input");
  require(o.out, "--out");
  if (o.model.empty() == o.committee.empty())
    throw ValidationError("give exactly one of --model or --committee");
  auto corpus = read_corpus_file(o.input);
  const auto clusters = load_clusters(o);
  // Tagging sees cluster labels; output keeps the original text.
  const auto view = clusters ? apply_clusters(corpus, *clusters) : corpus;

  if (!o.model.empty()) {
    const auto model = parse_model(read_file(o.model));
    check_model_tags(model, corpus);
    const auto tagged = tag_corpus(model, view);
    std::size_t i = 0;
    std::vector<Tag> out;
    tagged.for_each_utterance([&](const Utterance& u) { out.push_back(u.workingTag); });
    corpus.for_each_utterance([&](Utterance& u) { u.workingTag = out[i++]; });
    write_file(o.out, serialize_corpus(corpus, TagColumn::Working));
    return 0;
  }

  const auto committee = load_committee(o.committee);
  for (const auto& m : committee.members) check_model_tags(m, corpus);
  const auto tags = tag_with_confidence(committee, view);
  corpus = apply_confident_tags(std::move(corpus), tags);
  write_file(o.out, serialize_corpus(corpus, TagColumn::Working));
  const auto confPath =
      o.confidenceOut.empty() ? o.out + ".confidence.tsv" : o.confidenceOut;
  write_file(confPath, serialize_confidence(corpus, tags));
  return 0;
}

int cmd_evaluate(const Options& o) {
  require(o.predicted, "--predicted");
  require(o.gold, "--gold");
  auto predicted = read_corpus_file(o.predicted);
  // the predicted file stores its assignments in the tag column
  predicted.for_each_utterance([](Utterance& u) { u.workingTag = u.goldTag; });
  const auto gold = read_corpus_file(o.gold);
  write_output(o.out, format_report(evaluate(predicted, gold)));
  return 0;
}

int cmd_committee_train(const Options& o) {
  require(o.out, "--out");
  auto corpus = load_training_corpus(o);
  const auto cues = training_cues(o, corpus);
  const auto templates = parse_templates(o.templates);
  auto committee =
      train_committee(corpus, templates, cues, training_config(o), o.k, o.beta);
  for (auto& m : committee.members) m.info.mode = o.cues.empty() ? o.mode : "file";
  save_committee(committee, o.out);
  std::cout << "member\tseed\trules\ttraining_accuracy\n";
  for (std::size_t j = 0; j < committee.members.size(); ++j) {
    const auto& m = committee.members[j];
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu\t%llu\t%zu\t%.4f\n", j + 1,
                  static_cast<unsigned long long>(committee.seeds[j]),
                  m.rules.size(), evaluate(tag_corpus(m, corpus), corpus).accuracy);
    std::cout << buf;
  }
  return 0;
}

int cmd_compare(const Options& o) {
  require(o.test, "--test");
  const auto train = load_training_corpus(o);
  const auto test = read_corpus_file(o.test);
  std::vector<SubstringMode> modes;
  std::string_view rest = o.modes;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto part = detail::trim(rest.substr(0, comma));
    if (!part.empty()) modes.push_back(parse_substring_mode(part));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (modes.empty()) throw ValidationError("no modes to compare");
  ExperimentConfig config;
  config.cues = cue_config(o);
  config.training = training_config(o);
  config.templates = parse_templates(o.templates);
  config.trainer = o.exhaustive ? Trainer::Exhaustive : Trainer::MonteCarlo;
  config.clusters = load_clusters(o);
  config.externalList = load_cue_list(o);
  const auto table = compare_modes(train, test, config, modes, o.runs, o.seed);
  write_output(o.out, format_comparison(table));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialogue-act tagging with transformation-based learning"};
  app.set_config("--config", "", "Configuration file (flags override it)");
  app.require_subcommand(1);
  Options o;
  app.add_flag("-v,--verbose", o.verbosity, "Increase logging");

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic scheduling corpus");
  gen->add_option("--seed", o.seed)->capture_default_str();
  gen->add_option("--noise", o.noise, "Label noise rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen->add_option("--dialogues", o.dialogues)->capture_default_str();
  gen->add_option("--out", o.out, "Corpus file to write");
  gen->add_option("--clusters-out", o.clustersOut, "Also write the cluster map");

  auto* extract = app.add_subcommand("extract-cues", "Select dialogue-act cues");
  extract->add_option("--train", o.train, "Gold-tagged corpus");
  extract->add_option("--out", o.out, "Cue TSV (default stdout)");
  add_cue_options(extract, o);

  auto* train = app.add_subcommand("train", "Learn a rule sequence");
  train->add_option("--train", o.train, "Gold-tagged corpus");
  train->add_option("--cues", o.cues, "Cue TSV (default: extract per --mode)");
  train->add_option("--out", o.out, "Model file to write");
  add_cue_options(train, o);
  add_training_options(train, o);

  auto* tag = app.add_subcommand("tag", "Tag a corpus with a model or committee");
  tag->add_option("--input", o.input, "Corpus to tag");
  tag->add_option("--model", o.model, "Model file");
  tag->add_option("--committee", o.committee, "Committee manifest");
  tag->add_option("--clusters", o.clusters, "Cluster map used in training");
  tag->add_option("--out", o.out, "Tagged corpus to write");
  tag->add_option("--confidence-out", o.confidenceOut,
                  "Confidence TSV (committee only; default <out>.confidence.tsv)");

  auto* eval = app.add_subcommand("evaluate", "Score a tagged corpus");
  eval->add_option("--predicted", o.predicted, "Tagged corpus");
  eval->add_option("--gold", o.gold, "Reference corpus");
  eval->add_option("--out", o.out, "Report file (default stdout)");

  auto* committee = app.add_subcommand("committee-train", "Train a committee");
  committee->add_option("--train", o.train, "Gold-tagged corpus");
  committee->add_option("--cues", o.cues, "Cue TSV (default: extract per --mode)");
  committee->add_option("--out", o.out, "Manifest file to write");
  committee->add_option("--k", o.k, "Members")->check(CLI::Range(2, 1000))->capture_default_str();
  committee->add_option("--beta", o.beta, "Error reweighting factor")->capture_default_str();
  add_cue_options(committee, o);
  add_training_options(committee, o);

  auto* compare = app.add_subcommand("compare", "Compare substring modes");
  compare->add_option("--train", o.train, "Gold-tagged training corpus");
  compare->add_option("--test", o.test, "Gold-tagged held-out corpus");
  compare->add_option("--modes", o.modes, "Comma-separated modes")->capture_default_str();
  compare->add_option("--runs", o.runs, "Seeded runs per mode")->check(CLI::Range(1, 1000))->capture_default_str();
  compare->add_option("--out", o.out, "Table file (default stdout)");
  add_cue_options(compare, o);
  add_training_options(compare, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen_corpus(o);
    if (*extract) return cmd_extract_cues(o);
    if (*train) return cmd_train(o);
    if (*tag) return cmd_tag(o);
    if (*eval) return cmd_evaluate(o);
    if (*committee) return cmd_committee_train(o);
    if (*compare) return cmd_compare(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
