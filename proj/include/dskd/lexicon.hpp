#pragma once

#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dskd/common.hpp"

namespace dskd {

enum class RelationLabel { synonym, antonym };

inline RelationLabel flip(RelationLabel l) {
  return l == RelationLabel::synonym ? RelationLabel::antonym
                                     : RelationLabel::synonym;
}

inline const char* label_name(RelationLabel l) {
  return l == RelationLabel::synonym ? "synonym" : "antonym";
}

// Word pairs stored order-normalized (lexicographically smaller word first),
// each carrying exactly one label, plus the base-form map for words with a
// negating prefix or suffix.
struct RelationSet {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, RelationLabel> pairs;
  std::map<std::string, std::string> base_map;

  static Key normalize(const std::string& a, const std::string& b) {
    return a <= b ? Key{a, b} : Key{b, a};
  }
};

// relations TSV: word1<TAB>word2<TAB>syn|ant, '#' comments.
// base TSV:      word<TAB>base.
RelationSet ingest(const std::string& relations_path,
                   const std::string& base_path);
RelationSet ingest_streams(std::istream& relations, std::istream& base,
                           const std::string& relations_name = "relations",
                           const std::string& base_name = "base");

// Morphological-negation expansion: one hop, flipped labels, originals
// retained; derived pairs conflicting with existing ones are dropped with a
// logged warning.
RelationSet expand_morphological(const RelationSet& rels,
                                 std::vector<std::string>* log = nullptr);

// All partners of `word` under each label, sorted lexicographically.
std::pair<std::vector<std::string>, std::vector<std::string>> relations_of(
    const RelationSet& rels, const std::string& word);

void save_relations_tsv(const RelationSet& rels, const std::string& path);

}  // namespace dskd
