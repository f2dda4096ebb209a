#pragma once

// Committees of TBL models. Members are trained one after another; before each
// new member, the utterances the previous member got wrong on the training
// corpus have their weight multiplied by beta, and weights are renormalized to
// sum to the utterance count. Tagging reports the modal vote and the fraction
// of members that cast it.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/cues.hpp"
#include "dact/errors.hpp"
#include "dact/tbl.hpp"

namespace dact {

inline constexpr std::size_t kDefaultCommitteeSize = 5;
inline constexpr double kDefaultBeta = 2.0;

struct Committee {
  std::vector<Model> members;
  double beta = kDefaultBeta;
  std::vector<std::uint64_t> seeds;

  bool operator==(const Committee&) const = default;
};

struct ConfidentTag {
  Tag tag;
  double confidence = 0.0;
  std::vector<Tag> perMemberTags;
};

/// Multiplies the weight of every mistagged utterance by beta and rescales so
/// the weights sum to their count. Utterances without a gold tag are never
/// counted as errors.
inline void boost_weights(std::vector<double>& weights, const Corpus& tagged,
                          double beta) {
  std::size_t i = 0;
  tagged.for_each_utterance([&](const Utterance& u) {
    if (!u.goldTag.is_none() && u.workingTag != u.goldTag) weights[i] *= beta;
    ++i;
  });
  double total = 0.0;
  for (double w : weights) total += w;
  const double scale = static_cast<double>(weights.size()) / total;
  for (double& w : weights) w *= scale;
}

/// Trains k Monte Carlo members. Member j uses seed config.seed + j.
inline Committee train_committee(const Corpus& corpus,
                                 const std::vector<Template>& templates,
                                 const CueSet& cues, TrainingConfig config,
                                 std::size_t k = kDefaultCommitteeSize,
                                 double beta = kDefaultBeta,
                                 std::vector<std::vector<double>>* weightLog =
                                     nullptr) {
  if (k < 2) throw ValidationError("a committee needs at least 2 members");
  if (!(beta > 1.0)) throw ValidationError("beta must be > 1");
  Committee committee;
  committee.beta = beta;
  const std::uint64_t baseSeed = config.seed;
  std::vector<double> weights(corpus.utterance_count(), 1.0);
  for (std::size_t j = 0; j < k; ++j) {
    if (j > 0) {
      const auto tagged = tag_corpus(committee.members.back(), corpus);
      boost_weights(weights, tagged, beta);
    }
    if (weightLog) weightLog->push_back(weights);
    config.seed = baseSeed + j;
    config.weights = weights;
    committee.seeds.push_back(config.seed);
    committee.members.push_back(train_monte_carlo(corpus, templates, cues, config));
  }
  return committee;
}

/// Modal tag per utterance (corpus order) with agreement fraction. Ties go to
/// the tied tag emitted by the earliest member.
inline std::vector<ConfidentTag> tag_with_confidence(const Committee& committee,
                                                     const Corpus& corpus) {
  if (committee.members.empty()) throw ValidationError("empty committee");
  std::vector<Corpus> outputs;
  for (const auto& m : committee.members) outputs.push_back(tag_corpus(m, corpus));

  const double k = static_cast<double>(committee.members.size());
  std::vector<ConfidentTag> result;
  for (std::size_t d = 0; d < corpus.dialogues.size(); ++d) {
    for (std::size_t u = 0; u < corpus.dialogues[d].utterances.size(); ++u) {
      ConfidentTag ct;
      std::map<Tag, std::size_t> votes;
      for (const auto& out : outputs) {
        const auto& t = out.dialogues[d].utterances[u].workingTag;
        ct.perMemberTags.push_back(t);
        ++votes[t];
      }
      std::size_t best = 0;
      for (const auto& t : ct.perMemberTags) {
        // first member whose tag has the top count wins
        if (votes[t] > best) {
          best = votes[t];
          ct.tag = t;
        }
      }
      ct.confidence = static_cast<double>(best) / k;
      result.push_back(std::move(ct));
    }
  }
  return result;
}

/// Corpus copy whose working tags are the committee's modal votes.
inline Corpus apply_confident_tags(Corpus corpus,
                                   const std::vector<ConfidentTag>& tags) {
  if (tags.size() != corpus.utterance_count())
    throw ValidationError("confidence list does not match corpus");
  std::size_t i = 0;
  corpus.for_each_utterance([&](Utterance& u) { u.workingTag = tags[i++].tag; });
  return corpus;
}

// ---------------------------------------------------------------------------
// Files

/// Manifest lines: "#beta: <b>", "#k: <K>", then "member<TAB>seed<TAB>file"
/// with member files relative to the manifest directory.
inline std::string serialize_committee_manifest(
    const Committee& committee, const std::vector<std::string>& memberFiles) {
  std::ostringstream out;
  out << "#committee\n#beta: " << detail::format_number(committee.beta)
      << "\n#k: " << committee.members.size() << '\n';
  for (std::size_t j = 0; j < memberFiles.size(); ++j)
    out << "member\t" << committee.seeds.at(j) << '\t' << memberFiles[j] << '\n';
  return out.str();
}

struct CommitteeManifest {
  double beta = kDefaultBeta;
  std::size_t k = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> files;
};

inline CommitteeManifest parse_committee_manifest(std::string_view text) {
  CommitteeManifest m;
  bool header = false;
  detail::for_each_line(text, [&](std::size_t lineNo, std::string_view line) {
    if (detail::trim(line).empty() || detail::starts_with(line, "##")) return;
    try {
      if (line == "#committee") {
        header = true;
      } else if (detail::starts_with(line, "#beta:")) {
        m.beta = std::stod(std::string(line.substr(6)));
      } else if (detail::starts_with(line, "#k:")) {
        m.k = std::stoul(std::string(line.substr(3)));
      } else if (detail::starts_with(line, "member\t")) {
        const auto rest = line.substr(7);
        const auto tab = rest.find('\t');
        if (tab == std::string_view::npos)
          throw ParseError(lineNo, "expected member\\tseed\\tfile");
        m.seeds.push_back(std::stoull(std::string(rest.substr(0, tab))));
        m.files.emplace_back(detail::trim(rest.substr(tab + 1)));
      } else {
        throw ParseError(lineNo, "unexpected line in committee manifest");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::logic_error&) {
      throw ParseError(lineNo, "bad numeric value");
    }
  });
  if (!header) throw ValidationError("not a committee manifest");
  if (m.files.size() != m.k)
    throw ValidationError("manifest declares " + std::to_string(m.k) +
                          " members but lists " +
                          std::to_string(m.files.size()));
  return m;
}

/// Writes the manifest plus one model file per member next to it.
inline void save_committee(const Committee& committee,
                           const std::string& manifestPath) {
  namespace fs = std::filesystem;
  const fs::path manifest(manifestPath);
  const auto stem = manifest.stem().string();
  std::vector<std::string> files;
  for (std::size_t j = 0; j < committee.members.size(); ++j) {
    const auto name = stem + ".m" + std::to_string(j + 1) + ".model";
    write_file((manifest.parent_path() / name).string(),
               serialize_model(committee.members[j]));
    files.push_back(name);
  }
  write_file(manifestPath, serialize_committee_manifest(committee, files));
}

inline Committee load_committee(const std::string& manifestPath) {
  namespace fs = std::filesystem;
  const auto m = parse_committee_manifest(read_file(manifestPath));
  Committee c;
  c.beta = m.beta;
  c.seeds = m.seeds;
  const auto dir = fs::path(manifestPath).parent_path();
  for (const auto& f : m.files) {
    const fs::path p(f);
    c.members.push_back(
        parse_model(read_file((p.is_absolute() ? p : dir / p).string())));
  }
  return c;
}

/// TSV: dialogue, index, modal tag, confidence, comma-separated votes.
inline std::string serialize_confidence(const Corpus& corpus,
                                        const std::vector<ConfidentTag>& tags) {
  std::ostringstream out;
  std::size_t i = 0;
  for (const auto& d : corpus.dialogues) {
    for (std::size_t u = 0; u < d.utterances.size(); ++u, ++i) {
      const auto& ct = tags.at(i);
      char conf[16];
      std::snprintf(conf, sizeof conf, "%.4f", ct.confidence);
      out << d.id << '\t' << u << '\t'
          << (ct.tag.is_none() ? "?" : ct.tag.str()) << '\t' << conf << '\t';
      for (std::size_t j = 0; j < ct.perMemberTags.size(); ++j) {
        if (j) out << ',';
        const auto& t = ct.perMemberTags[j];
        out << (t.is_none() ? "?" : t.str());
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace dact
