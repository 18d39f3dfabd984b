#include "dskd/composer.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace dskd {

ComposeOutcome compose_word(const std::string& word, const SenseDict& dict,
                            const VocabSpec& spec,
                            const CompositionConfig& cfg) {
  cfg.validate();
  auto wt = spec.word_tokens.find(word);
  if (wt == spec.word_tokens.end())
    return {std::nullopt, "word '" + word + "' not in vocabulary"};
  const auto& tokens = wt->second;
  const std::size_t m = tokens.size();
  if (m > cfg.m_max)
    return {std::nullopt, "word '" + word + "' spans " + std::to_string(m) +
                              " tokens, limit " + std::to_string(cfg.m_max)};
  std::vector<const Eigen::MatrixXd*> senses(m);
  for (std::size_t h = 0; h < m; ++h) {
    senses[h] = lookup(dict, tokens[h]);
    if (!senses[h])
      return {std::nullopt, "constituent token " + std::to_string(tokens[h]) +
                                " of '" + word + "' absent from dictionary"};
  }
  if (m == 1) return {*senses[0], ""};

  const auto& first = *senses[0];
  Eigen::MatrixXd composed(first.rows(), first.cols());
  for (int i = 0; i < first.rows(); ++i) {
    std::vector<Eigen::RowVectorXd> aligned;
    aligned.reserve(m);
    aligned.push_back(first.row(i));
    for (std::size_t h = 1; h < m; ++h) {
      Eigen::RowVectorXd mean =
          Eigen::RowVectorXd::Zero(first.cols());
      for (const auto& a : aligned) mean += a;
      mean /= static_cast<double>(aligned.size());
      auto idx = nearest(mean.transpose(), *senses[h], 1);
      aligned.push_back(senses[h]->row(idx[0]));
    }
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(first.cols());
    for (const auto& a : aligned) sum += a;
    composed.row(i) = sum / static_cast<double>(m);
  }
  return {composed, ""};
}

KeepRate keep_rate(const RelationSet& rels, const VocabSpec& spec, u32 m) {
  if (m < 1) throw validation_error("keep_rate: m must be >= 1");
  KeepRate out;
  auto span_ok = [&](const std::string& w) {
    auto it = spec.word_tokens.find(w);
    return it != spec.word_tokens.end() && it->second.size() <= m;
  };
  for (const auto& [key, label] : rels.pairs) {
    bool kept = span_ok(key.first) && span_ok(key.second);
    if (label == RelationLabel::synonym) {
      out.synonym_total += 1;
      out.synonym_kept += kept ? 1 : 0;
    } else {
      out.antonym_total += 1;
      out.antonym_kept += kept ? 1 : 0;
    }
  }
  out.vacuous = rels.pairs.empty();
  out.synonym_rate = out.synonym_total == 0
                         ? 100.0
                         : 100.0 * static_cast<double>(out.synonym_kept) /
                               static_cast<double>(out.synonym_total);
  out.antonym_rate = out.antonym_total == 0
                         ? 100.0
                         : 100.0 * static_cast<double>(out.antonym_kept) /
                               static_cast<double>(out.antonym_total);
  return out;
}

void write_keep_rate_csv(const std::string& path, const RelationSet& rels,
                         const VocabSpec& spec, const std::vector<u32>& ms) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  os << "m,label,kept,total,rate\n";
  char buf[64];
  for (u32 m : ms) {
    KeepRate kr = keep_rate(rels, spec, m);
    std::snprintf(buf, sizeof(buf), "%.2f", kr.synonym_rate);
    os << m << ",synonym," << kr.synonym_kept << "," << kr.synonym_total << ","
       << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.2f", kr.antonym_rate);
    os << m << ",antonym," << kr.antonym_kept << "," << kr.antonym_total << ","
       << buf << "\n";
  }
}

SenseDict populate_word_senses(const SenseDict& dict, const RelationSet& rels,
                               const VocabSpec& spec,
                               const CompositionConfig& cfg,
                               std::vector<std::string>* log) {
  SenseDict out = dict;
  std::set<std::string> words;
  for (const auto& [key, _] : rels.pairs) {
    words.insert(key.first);
    words.insert(key.second);
  }
  for (const auto& word : words) {
    auto wt = spec.word_tokens.find(word);
    if (wt != spec.word_tokens.end() && wt->second.size() == 1)
      continue;  // resolves through the token entry
    ComposeOutcome res = compose_word(word, dict, spec, cfg);
    if (res.senses) {
      out.word_senses[word] = *res.senses;
    } else if (log) {
      log->push_back("skip: " + res.skip_reason);
    }
  }
  return out;
}

}  // namespace dskd
