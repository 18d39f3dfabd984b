#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dskd/common.hpp"

namespace dskd {

// Sense label written to the sidecar for positions without ground truth.
constexpr u32 kNoSenseLabel = 0xFFFFFFFFu;

// ---------------------------------------------------------------------------
// VocabSpec: the synthetic vocabulary. Every surface word is registered with
// its full token-id sequence; length-1 entries are "single-token words" and
// own their token id exclusively. Planted structure (polysemy, synonym /
// antonym word pairs, contrast marker) drives the corpus generator.
// ---------------------------------------------------------------------------
struct VocabSpec {
  u32 vocab_size = 0;
  u32 m_max = 3;  // registration cap on tokens per word
  double signal_ratio = 0.7;
  u64 seed = 0;

  std::map<std::string, std::vector<u32>> word_tokens;
  std::map<u32, u32> planted_senses;  // token id -> sense count (absent = 1)
  std::vector<std::pair<std::string, std::string>> planted_synonyms;
  std::vector<std::pair<std::string, std::string>> planted_antonyms;
  std::optional<u32> contrast_marker;

  // Registers a word; rejects bad ids, over-long sequences, and a second
  // single-token word claiming an already-owned token id.
  void add_word(const std::string& word, std::vector<u32> ids);

  u32 senses_of(u32 token) const {
    auto it = planted_senses.find(token);
    return it == planted_senses.end() ? 1u : it->second;
  }

  std::vector<std::string> words() const;

  void validate() const;
};

// Token sequence of a registered word. Throws validation_error for unknown
// words.
std::vector<u32> tokenize(const std::string& word, const VocabSpec& spec);

// Reverse map token id -> owning word, for single-token words only.
std::map<u32, std::string> single_token_owners(const VocabSpec& spec);

// ---------------------------------------------------------------------------
// Corpus: token sequences plus generator-known sense labels (sidecar data,
// never visible to training).
// ---------------------------------------------------------------------------
struct Corpus {
  u32 vocab_size = 0;
  u32 seq_len = 0;
  std::vector<std::vector<u32>> sequences;
  std::vector<std::vector<u32>> sense_labels;  // same shape; kNoSenseLabel = none

  std::size_t num_positions() const {
    return sequences.size() * static_cast<std::size_t>(seq_len);
  }
};

// One emitted focus event, kept by the tracing generator for eval-set
// construction.
struct FocusEvent {
  u32 sequence = 0;
  u32 position = 0;
  u32 token = 0;
  u32 sense = 0;
};

Corpus generate_corpus(const VocabSpec& spec, u32 num_sequences, u32 seq_len);
Corpus generate_corpus_traced(const VocabSpec& spec, u32 num_sequences,
                              u32 seq_len, std::vector<FocusEvent>* trace);

// Binary persistence: "DSKDCORP" tokens file plus "DSKDLABL" sidecar of the
// same shape.
void save_corpus(const Corpus& corpus, const std::string& tokens_path,
                 const std::string& labels_path);
Corpus load_corpus(const std::string& tokens_path,
                   const std::string& labels_path = "");

// JSON persistence of the vocabulary spec.
void save_vocab_spec(const VocabSpec& spec, const std::string& path);
VocabSpec load_vocab_spec(const std::string& path);

// ---------------------------------------------------------------------------
// Cloze evaluation sets: held-out sequences plus multiple-choice items whose
// context is a truncated frame and whose options are registered words.
// ---------------------------------------------------------------------------
struct ClozeItem {
  std::vector<u32> context;
  std::vector<std::vector<u32>> options;  // token sequences
  u32 correct = 0;
};

struct EvalSet {
  u32 vocab_size = 0;
  u32 num_choices = 0;
  std::vector<std::vector<u32>> held_out;
  std::vector<ClozeItem> items;
};

EvalSet make_eval_set(const VocabSpec& spec, u32 num_sequences, u32 seq_len,
                      u32 num_items, u32 num_choices, u64 salt);

void save_eval_set(const EvalSet& es, const std::string& path);
EvalSet load_eval_set(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic world builder: a vocabulary with planted polysemy, relations,
// multi-token words, and morphological-negation entries, plus the TSV
// resources the lexicon module ingests.
// ---------------------------------------------------------------------------
struct WorldConfig {
  u32 vocab_size = 200;
  u32 content_words = 80;
  u32 polysemous = 24;
  u32 senses = 2;
  u32 multi_words = 12;
  u32 multi_len_max = 3;
  u32 synonym_pairs = 20;
  u32 antonym_pairs = 12;
  u32 negation_entries = 6;
  double signal_ratio = 0.7;
  u32 m_max = 3;
  u64 seed = 1;

  void validate() const;
};

struct World {
  VocabSpec spec;
  // Original resource files (pre-expansion).
  std::string relations_tsv;
  std::string base_tsv;
  // Ground truth after morphological expansion; spec.planted_* match these.
  std::vector<std::pair<std::string, std::string>> synonyms;
  std::vector<std::pair<std::string, std::string>> antonyms;
  std::map<std::string, std::string> base_map;
};

World build_world(const WorldConfig& cfg);

}  // namespace dskd
