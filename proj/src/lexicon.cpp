#include "dskd/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dskd {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

RelationSet ingest_streams(std::istream& relations, std::istream& base,
                           const std::string& relations_name,
                           const std::string& base_name) {
  RelationSet rels;
  std::map<RelationSet::Key, int> first_line;  // for conflict reports
  std::string line;
  int lineno = 0;
  while (std::getline(relations, line)) {
    ++lineno;
    std::string t = strip(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_tabs(t);
    std::string where = relations_name + ":" + std::to_string(lineno);
    if (fields.size() != 3)
      throw validation_error(where + ": expected 3 tab-separated fields, got " +
                             std::to_string(fields.size()));
    std::string w1 = strip(fields[0]), w2 = strip(fields[1]),
                tag = strip(fields[2]);
    if (w1.empty() || w2.empty())
      throw validation_error(where + ": empty word");
    if (w1 == w2)
      throw validation_error(where + ": self-pair '" + w1 + "'");
    RelationLabel label;
    if (tag == "syn")
      label = RelationLabel::synonym;
    else if (tag == "ant")
      label = RelationLabel::antonym;
    else
      throw validation_error(where + ": label must be 'syn' or 'ant', got '" +
                             tag + "'");
    auto key = RelationSet::normalize(w1, w2);
    auto it = rels.pairs.find(key);
    if (it == rels.pairs.end()) {
      rels.pairs.emplace(key, label);
      first_line.emplace(key, lineno);
    } else if (it->second != label) {
      throw validation_error(where + ": pair (" + key.first + ", " +
                             key.second + ") labeled " + label_name(label) +
                             " but already labeled " + label_name(it->second) +
                             " at " + relations_name + ":" +
                             std::to_string(first_line[key]));
    }
    // identical duplicate lines collapse silently
  }

  lineno = 0;
  while (std::getline(base, line)) {
    ++lineno;
    std::string t = strip(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_tabs(t);
    std::string where = base_name + ":" + std::to_string(lineno);
    if (fields.size() != 2)
      throw validation_error(where + ": expected 2 tab-separated fields, got " +
                             std::to_string(fields.size()));
    std::string w = strip(fields[0]), b = strip(fields[1]);
    if (w.empty() || b.empty()) throw validation_error(where + ": empty field");
    if (w == b)
      throw validation_error(where + ": base form equals the word '" + w + "'");
    auto it = rels.base_map.find(w);
    if (it != rels.base_map.end() && it->second != b)
      throw validation_error(where + ": conflicting base for '" + w + "': '" +
                             it->second + "' vs '" + b + "'");
    rels.base_map.emplace(w, b);
  }
  return rels;
}

RelationSet ingest(const std::string& relations_path,
                   const std::string& base_path) {
  std::ifstream rel(relations_path);
  if (!rel) throw io_error("cannot open: " + relations_path);
  std::ifstream base(base_path);
  if (!base) throw io_error("cannot open: " + base_path);
  return ingest_streams(rel, base, relations_path, base_path);
}

RelationSet expand_morphological(const RelationSet& rels,
                                 std::vector<std::string>* log) {
  RelationSet out = rels;
  auto note = [&](const std::string& msg) {
    if (log) log->push_back(msg);
  };
  for (const auto& [key, label] : rels.pairs) {
    const RelationLabel flipped = flip(label);
    auto try_side = [&](const std::string& negated, const std::string& other) {
      auto bit = rels.base_map.find(negated);
      if (bit == rels.base_map.end()) return;
      const std::string& b = bit->second;
      if (b == other) {
        note("skip: base(" + negated + ") = partner '" + other +
             "' would form a self-pair");
        return;
      }
      auto nkey = RelationSet::normalize(b, other);
      auto it = out.pairs.find(nkey);
      if (it == out.pairs.end()) {
        out.pairs.emplace(nkey, flipped);
      } else if (it->second != flipped) {
        note("conflict: derived (" + nkey.first + ", " + nkey.second + ", " +
             label_name(flipped) + ") contradicts existing " +
             label_name(it->second) + " pair; derived pair dropped");
      }
    };
    try_side(key.first, key.second);
    try_side(key.second, key.first);
  }
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> relations_of(
    const RelationSet& rels, const std::string& word) {
  std::vector<std::string> syn, ant;
  for (const auto& [key, label] : rels.pairs) {
    const std::string* partner = nullptr;
    if (key.first == word)
      partner = &key.second;
    else if (key.second == word)
      partner = &key.first;
    if (!partner) continue;
    (label == RelationLabel::synonym ? syn : ant).push_back(*partner);
  }
  std::sort(syn.begin(), syn.end());
  std::sort(ant.begin(), ant.end());
  return {std::move(syn), std::move(ant)};
}

void save_relations_tsv(const RelationSet& rels, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  for (const auto& [key, label] : rels.pairs)
    os << key.first << "\t" << key.second << "\t"
       << (label == RelationLabel::synonym ? "syn" : "ant") << "\n";
  if (!os) throw io_error("write failed: " + path);
}

}  // namespace dskd
