#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dskd/common.hpp"
#include "dskd/corpus.hpp"
#include "dskd/lexicon.hpp"
#include "dskd/sensedict.hpp"

namespace dskd {

struct CompositionConfig {
  u32 m_max = 3;
  u32 k = 5;

  void validate() const {
    if (m_max < 1)
      throw validation_error("CompositionConfig: m_max must be >= 1");
  }
};

// Word-level sense composition by iterative mean-guided nearest-neighbor
// alignment. Returns the composed k_t1 x d matrix, or the skip reason.
struct ComposeOutcome {
  std::optional<Eigen::MatrixXd> senses;
  std::string skip_reason;  // set when senses is empty
};

ComposeOutcome compose_word(const std::string& word, const SenseDict& dict,
                            const VocabSpec& spec,
                            const CompositionConfig& cfg);

// Keep rate per label at span limit m: a pair is kept iff both words
// tokenize to at most m tokens.
struct KeepRate {
  double synonym_rate = 100.0;
  double antonym_rate = 100.0;
  u64 synonym_kept = 0, synonym_total = 0;
  u64 antonym_kept = 0, antonym_total = 0;
  bool vacuous = false;  // empty relation set
};

KeepRate keep_rate(const RelationSet& rels, const VocabSpec& spec, u32 m);

// CSV rows `m,label,kept,total,rate` over a range of span limits.
void write_keep_rate_csv(const std::string& path, const RelationSet& rels,
                         const VocabSpec& spec, const std::vector<u32>& ms);

// Adds a word-keyed entry for every multi-token relation word that composes;
// single-token relation words resolve through their token entry and get no
// word entry. Skips are logged.
SenseDict populate_word_senses(const SenseDict& dict, const RelationSet& rels,
                               const VocabSpec& spec,
                               const CompositionConfig& cfg,
                               std::vector<std::string>* log = nullptr);

}  // namespace dskd
