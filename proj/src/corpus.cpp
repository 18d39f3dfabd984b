#include "dskd/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dskd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// VocabSpec
// ---------------------------------------------------------------------------

void VocabSpec::add_word(const std::string& word, std::vector<u32> ids) {
  if (word.empty()) throw validation_error("add_word: empty word");
  if (ids.empty()) throw validation_error("add_word: empty token sequence");
  if (ids.size() > m_max)
    throw validation_error("add_word: '" + word + "' has " +
                           std::to_string(ids.size()) +
                           " tokens, exceeds m_max=" + std::to_string(m_max));
  for (u32 id : ids)
    if (id >= vocab_size)
      throw validation_error("add_word: token id " + std::to_string(id) +
                             " out of range for vocab_size " +
                             std::to_string(vocab_size));
  if (word_tokens.count(word))
    throw validation_error("add_word: duplicate word '" + word + "'");
  if (ids.size() == 1) {
    for (const auto& [w, seq] : word_tokens)
      if (seq.size() == 1 && seq[0] == ids[0])
        throw validation_error("add_word: token " + std::to_string(ids[0]) +
                               " already owned by single-token word '" + w +
                               "'");
  }
  word_tokens.emplace(word, std::move(ids));
}

std::vector<std::string> VocabSpec::words() const {
  std::vector<std::string> out;
  out.reserve(word_tokens.size());
  for (const auto& [w, _] : word_tokens) out.push_back(w);
  return out;
}

void VocabSpec::validate() const {
  if (vocab_size == 0) throw validation_error("VocabSpec: empty vocabulary");
  if (m_max < 1) throw validation_error("VocabSpec: m_max must be >= 1");
  if (signal_ratio < 0.0 || signal_ratio > 1.0)
    throw validation_error("VocabSpec: signal_ratio must be in [0,1]");
  for (const auto& [w, seq] : word_tokens) {
    if (seq.empty() || seq.size() > m_max)
      throw validation_error("VocabSpec: word '" + w + "' has bad length");
    for (u32 id : seq)
      if (id >= vocab_size)
        throw validation_error("VocabSpec: word '" + w +
                               "' references token out of range");
  }
  for (const auto& [t, s] : planted_senses) {
    if (t >= vocab_size)
      throw validation_error("VocabSpec: planted sense token out of range");
    if (s < 1) throw validation_error("VocabSpec: planted_senses must be >= 1");
  }
  if (contrast_marker && *contrast_marker >= vocab_size)
    throw validation_error("VocabSpec: contrast marker out of range");
  auto check_pairs = [&](const std::vector<std::pair<std::string, std::string>>&
                             pairs,
                         const char* what) {
    for (const auto& [a, b] : pairs) {
      if (!word_tokens.count(a) || !word_tokens.count(b))
        throw validation_error(std::string("VocabSpec: ") + what + " pair (" +
                               a + ", " + b + ") references unknown word");
      if (a == b)
        throw validation_error(std::string("VocabSpec: ") + what +
                               " self-pair '" + a + "'");
    }
  };
  check_pairs(planted_synonyms, "synonym");
  check_pairs(planted_antonyms, "antonym");
}

std::vector<u32> tokenize(const std::string& word, const VocabSpec& spec) {
  auto it = spec.word_tokens.find(word);
  if (it == spec.word_tokens.end())
    throw validation_error("tokenize: unknown word '" + word + "'");
  return it->second;
}

std::map<u32, std::string> single_token_owners(const VocabSpec& spec) {
  std::map<u32, std::string> out;
  for (const auto& [w, seq] : spec.word_tokens)
    if (seq.size() == 1) out.emplace(seq[0], w);
  return out;
}

// ---------------------------------------------------------------------------
// Generator internals
// ---------------------------------------------------------------------------

namespace {

constexpr u32 kFrameLen = 5;
constexpr u32 kSignalSetSize = 4;
constexpr u32 kMultiWordEvery = 7;   // every 7th frame carries a word emission
constexpr u32 kContrastEvery = 4;    // antonym foci emit a contrast frame 1-in-4

struct Planting {
  std::vector<u32> pool;                       // single-sense tokens
  std::vector<std::vector<std::vector<u32>>> signal;  // [token][sense] -> ids
  std::map<u32, u32> antonym_partner;          // token -> partner token
  std::vector<std::pair<std::string, std::vector<u32>>> multi_words;
  std::optional<u32> marker;
};

// Union-find over word strings, for synonym profile grouping.
struct WordGroups {
  std::map<std::string, std::string> parent;
  const std::string& find(const std::string& w) {
    auto it = parent.find(w);
    if (it == parent.end()) {
      parent.emplace(w, w);
      return parent.find(w)->first;
    }
    if (it->second == w) return it->first;
    std::string root = find(it->second);
    it->second = root;
    return parent.find(w)->second;
  }
  void unite(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return;
    if (rb < ra) std::swap(ra, rb);
    parent[rb] = ra;
  }
};

Planting plan_world(const VocabSpec& spec) {
  Planting plan;
  for (u32 t = 0; t < spec.vocab_size; ++t)
    if (spec.senses_of(t) == 1) plan.pool.push_back(t);
  if (plan.pool.empty())
    for (u32 t = 0; t < spec.vocab_size; ++t) plan.pool.push_back(t);

  // Synonym groups share a context profile (hence identical signal sets).
  WordGroups groups;
  for (const auto& [a, b] : spec.planted_synonyms) groups.unite(a, b);

  // Profile seed per token: the owning word's group representative when the
  // token is word-owned, otherwise the token id itself.
  auto owners = single_token_owners(spec);
  plan.signal.resize(spec.vocab_size);
  for (u32 t = 0; t < spec.vocab_size; ++t) {
    u64 profile_seed;
    auto it = owners.find(t);
    if (it != owners.end()) {
      const std::string& rep = groups.find(it->second);
      profile_seed = fnv1a64(rep.data(), rep.size());
    } else {
      profile_seed = 0x517CC1B727220A95ull + t;
    }
    Rng rng(mix_seed(spec.seed, profile_seed));
    std::vector<u32> shuffled = plan.pool;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    u32 senses = spec.senses_of(t);
    plan.signal[t].resize(senses);
    for (u32 j = 0; j < senses; ++j) {
      for (u32 c = 0; c < kSignalSetSize; ++c) {
        std::size_t idx = (static_cast<std::size_t>(j) * kSignalSetSize + c) %
                          shuffled.size();
        plan.signal[t][j].push_back(shuffled[idx]);
      }
    }
  }

  for (const auto& [a, b] : spec.planted_antonyms) {
    const auto& sa = spec.word_tokens.at(a);
    const auto& sb = spec.word_tokens.at(b);
    if (sa.size() == 1 && sb.size() == 1) {
      plan.antonym_partner.emplace(sa[0], sb[0]);
      plan.antonym_partner.emplace(sb[0], sa[0]);
    }
  }
  for (const auto& [w, seq] : spec.word_tokens)
    if (seq.size() >= 2) plan.multi_words.emplace_back(w, seq);
  plan.marker = spec.contrast_marker;
  return plan;
}

struct Emitter {
  const VocabSpec& spec;
  const Planting& plan;
  Rng rng;
  u64 frame_counter = 0;
  u32 token_rr = 0;  // round-robin focus cursor
  u32 mw_rr = 0;

  std::vector<u32>* seq = nullptr;
  std::vector<u32>* lab = nullptr;
  std::vector<FocusEvent>* trace = nullptr;
  u32 seq_index = 0;

  Emitter(const VocabSpec& s, const Planting& p)
      : spec(s), plan(p), rng(mix_seed(s.seed, 0xD5C0u)) {}

  u32 label_for(u32 token, u32 sense, bool sense_known) const {
    u32 senses = spec.senses_of(token);
    if (senses == 1) return 0;
    return sense_known ? sense : kNoSenseLabel;
  }

  void put(u32 token, u32 label) {
    seq->push_back(token);
    lab->push_back(label);
  }

  u32 draw_context(u32 token, u32 sense) {
    const auto& sig = plan.signal[token][sense];
    if (rng.uniform() < spec.signal_ratio)
      return sig[rng.below(sig.size())];
    return plan.pool[rng.below(plan.pool.size())];
  }

  void put_context(u32 focus, u32 sense) {
    u32 c = draw_context(focus, sense);
    put(c, label_for(c, 0, false));
  }

  void put_focus(u32 token, u32 sense) {
    if (trace)
      trace->push_back({seq_index, static_cast<u32>(seq->size()), token, sense});
    put(token, label_for(token, sense, true));
  }

  // Standard frame: focus centered among sense-conditioned context draws.
  void emit_normal(u32 focus, u32 space) {
    u32 w = std::min(kFrameLen, space);
    u32 center = w / 2;
    u32 sense = rng.below(spec.senses_of(focus));
    for (u32 i = 0; i < w; ++i) {
      if (i == center)
        put_focus(focus, sense);
      else
        put_context(focus, sense);
    }
  }

  // Contrast frame: [ctx_u, u, MARK, v, ctx_v].
  void emit_contrast(u32 u_tok, u32 v_tok) {
    u32 su = rng.below(spec.senses_of(u_tok));
    u32 sv = rng.below(spec.senses_of(v_tok));
    put_context(u_tok, su);
    put_focus(u_tok, su);
    put(*plan.marker, label_for(*plan.marker, 0, false));
    put_focus(v_tok, sv);
    put_context(v_tok, sv);
  }

  // Multi-token word emission padded with context from the first token's
  // profile.
  void emit_multiword(const std::vector<u32>& ids, u32 space) {
    u32 m = static_cast<u32>(ids.size());
    u32 w = std::min(kFrameLen > m ? kFrameLen : m, space);
    u32 lead = (w - m) / 2;
    u32 sense = 0;
    for (u32 i = 0; i < lead; ++i) put_context(ids[0], sense);
    for (u32 id : ids) put(id, label_for(id, 0, false));
    for (u32 i = lead + m; i < w; ++i) put_context(ids[0], sense);
  }

  void emit_frame(u32 space) {
    u64 f = frame_counter++;
    if (!plan.multi_words.empty() && f % kMultiWordEvery == 3) {
      const auto& [w, ids] = plan.multi_words[mw_rr % plan.multi_words.size()];
      (void)w;
      if (space >= ids.size()) {
        ++mw_rr;
        emit_multiword(ids, space);
        return;
      }
    }
    u32 focus = token_rr;
    token_rr = (token_rr + 1) % spec.vocab_size;
    auto part = plan.antonym_partner.find(focus);
    if (part != plan.antonym_partner.end() && plan.marker &&
        space >= kFrameLen && f % kContrastEvery == 1) {
      emit_contrast(focus, part->second);
      return;
    }
    emit_normal(focus, space);
  }
};

}  // namespace

Corpus generate_corpus_traced(const VocabSpec& spec, u32 num_sequences,
                              u32 seq_len, std::vector<FocusEvent>* trace) {
  spec.validate();
  if (seq_len < 2) throw validation_error("generate_corpus: seq_len must be >= 2");
  if (num_sequences < 1)
    throw validation_error("generate_corpus: num_sequences must be >= 1");

  Planting plan = plan_world(spec);
  Corpus corpus;
  corpus.vocab_size = spec.vocab_size;
  corpus.seq_len = seq_len;
  corpus.sequences.resize(num_sequences);
  corpus.sense_labels.resize(num_sequences);

  Emitter em(spec, plan);
  em.trace = trace;
  for (u32 s = 0; s < num_sequences; ++s) {
    auto& seq = corpus.sequences[s];
    auto& lab = corpus.sense_labels[s];
    seq.reserve(seq_len);
    lab.reserve(seq_len);
    em.seq = &seq;
    em.lab = &lab;
    em.seq_index = s;
    while (seq.size() < seq_len)
      em.emit_frame(seq_len - static_cast<u32>(seq.size()));
    if (seq.size() != seq_len) {  // frames never overshoot, but be strict
      seq.resize(seq_len);
      lab.resize(seq_len);
    }
  }
  return corpus;
}

Corpus generate_corpus(const VocabSpec& spec, u32 num_sequences, u32 seq_len) {
  return generate_corpus_traced(spec, num_sequences, seq_len, nullptr);
}

// ---------------------------------------------------------------------------
// Corpus persistence
// ---------------------------------------------------------------------------

namespace {

void save_grid(const std::string& path, const char magic[9], u32 vocab_size,
               const std::vector<std::vector<u32>>& rows, u32 seq_len) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for write: " + path);
  write_magic(os, magic);
  write_u16(os, 1);
  write_u32(os, vocab_size);
  write_u32(os, static_cast<u32>(rows.size()));
  write_u32(os, seq_len);
  for (const auto& row : rows) {
    if (row.size() != seq_len) throw io_error("ragged corpus row");
    for (u32 v : row) write_u32(os, v);
  }
}

std::vector<std::vector<u32>> load_grid(const std::string& path,
                                        const char magic[9], u32* vocab_size,
                                        u32* seq_len) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open: " + path);
  expect_magic(is, magic, path);
  u16 version = read_u16(is);
  if (version != 1) throw io_error(path + ": unsupported version");
  *vocab_size = read_u32(is);
  u32 n = read_u32(is);
  *seq_len = read_u32(is);
  std::vector<std::vector<u32>> rows(n);
  for (auto& row : rows) {
    row.resize(*seq_len);
    for (auto& v : row) v = read_u32(is);
  }
  return rows;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& tokens_path,
                 const std::string& labels_path) {
  save_grid(tokens_path, "DSKDCORP", corpus.vocab_size, corpus.sequences,
            corpus.seq_len);
  if (!labels_path.empty())
    save_grid(labels_path, "DSKDLABL", corpus.vocab_size, corpus.sense_labels,
              corpus.seq_len);
}

Corpus load_corpus(const std::string& tokens_path,
                   const std::string& labels_path) {
  Corpus corpus;
  corpus.sequences =
      load_grid(tokens_path, "DSKDCORP", &corpus.vocab_size, &corpus.seq_len);
  for (const auto& row : corpus.sequences)
    for (u32 v : row)
      if (v >= corpus.vocab_size)
        throw io_error(tokens_path + ": token id out of range");
  if (!labels_path.empty()) {
    u32 vs = 0, sl = 0;
    corpus.sense_labels = load_grid(labels_path, "DSKDLABL", &vs, &sl);
    if (vs != corpus.vocab_size || sl != corpus.seq_len ||
        corpus.sense_labels.size() != corpus.sequences.size())
      throw io_error(labels_path + ": sidecar shape mismatch");
  } else {
    corpus.sense_labels.assign(corpus.sequences.size(),
                               std::vector<u32>(corpus.seq_len, kNoSenseLabel));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// VocabSpec persistence (JSON)
// ---------------------------------------------------------------------------

void save_vocab_spec(const VocabSpec& spec, const std::string& path) {
  json j;
  j["vocab_size"] = spec.vocab_size;
  j["m_max"] = spec.m_max;
  j["signal_ratio"] = spec.signal_ratio;
  j["seed"] = spec.seed;
  j["words"] = json::object();
  for (const auto& [w, ids] : spec.word_tokens) j["words"][w] = ids;
  j["planted_senses"] = json::object();
  for (const auto& [t, s] : spec.planted_senses)
    j["planted_senses"][std::to_string(t)] = s;
  j["synonyms"] = spec.planted_synonyms;
  j["antonyms"] = spec.planted_antonyms;
  if (spec.contrast_marker) j["contrast_marker"] = *spec.contrast_marker;
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  os << j.dump(2) << "\n";
}

VocabSpec load_vocab_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw io_error(path + ": " + e.what());
  }
  VocabSpec spec;
  spec.vocab_size = j.at("vocab_size").get<u32>();
  spec.m_max = j.at("m_max").get<u32>();
  spec.signal_ratio = j.at("signal_ratio").get<double>();
  spec.seed = j.at("seed").get<u64>();
  for (auto it = j.at("words").begin(); it != j.at("words").end(); ++it)
    spec.word_tokens.emplace(it.key(), it.value().get<std::vector<u32>>());
  for (auto it = j.at("planted_senses").begin();
       it != j.at("planted_senses").end(); ++it)
    spec.planted_senses.emplace(static_cast<u32>(std::stoul(it.key())),
                                it.value().get<u32>());
  spec.planted_synonyms =
      j.at("synonyms").get<std::vector<std::pair<std::string, std::string>>>();
  spec.planted_antonyms =
      j.at("antonyms").get<std::vector<std::pair<std::string, std::string>>>();
  if (j.contains("contrast_marker"))
    spec.contrast_marker = j["contrast_marker"].get<u32>();
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Eval sets
// ---------------------------------------------------------------------------

EvalSet make_eval_set(const VocabSpec& spec, u32 num_sequences, u32 seq_len,
                      u32 num_items, u32 num_choices, u64 salt) {
  if (num_choices < 2)
    throw validation_error("make_eval_set: need at least 2 choices");
  VocabSpec held = spec;
  held.seed = mix_seed(spec.seed, 0xE7A1u + salt);
  std::vector<FocusEvent> trace;
  Corpus corpus = generate_corpus_traced(held, num_sequences, seq_len, &trace);

  EvalSet es;
  es.vocab_size = spec.vocab_size;
  es.num_choices = num_choices;
  es.held_out = corpus.sequences;

  auto owners = single_token_owners(spec);

  // Profile representative per word, to keep synonyms out of the distractor
  // set (they would be equally valid answers).
  WordGroups groups;
  for (const auto& [a, b] : spec.planted_synonyms) groups.unite(a, b);
  std::map<std::string, std::vector<std::string>> antonyms_of;
  for (const auto& [a, b] : spec.planted_antonyms) {
    antonyms_of[a].push_back(b);
    antonyms_of[b].push_back(a);
  }

  std::vector<std::string> word_pool;
  for (const auto& [w, ids] : spec.word_tokens)
    if (ids.size() == 1 && ids[0] < spec.vocab_size) word_pool.push_back(w);

  // Usable foci: word-owned tokens with at least 2 tokens of left context.
  std::vector<const FocusEvent*> usable;
  for (const auto& ev : trace)
    if (ev.position >= 2 && owners.count(ev.token)) usable.push_back(&ev);

  Rng rng(mix_seed(held.seed, 0xC102Eull));
  es.items.reserve(num_items);
  if (usable.empty()) return es;
  std::size_t stride = std::max<std::size_t>(1, usable.size() / num_items);
  for (u32 i = 0; i < num_items && i * stride < usable.size(); ++i) {
    const FocusEvent& ev = *usable[i * stride];
    const std::string& answer = owners.at(ev.token);
    const std::string& answer_rep = groups.find(answer);

    std::vector<std::string> opts;
    opts.push_back(answer);
    auto ant = antonyms_of.find(answer);
    if (ant != antonyms_of.end()) opts.push_back(ant->second[0]);
    int guard = 0;
    while (opts.size() < num_choices && guard++ < 1000) {
      const std::string& cand = word_pool[rng.below(word_pool.size())];
      if (groups.find(cand) == answer_rep) continue;
      if (std::find(opts.begin(), opts.end(), cand) != opts.end()) continue;
      opts.push_back(cand);
    }
    if (opts.size() < num_choices) continue;

    // Deterministic shuffle of option order.
    std::vector<u32> order(opts.size());
    for (u32 k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[rng.below(k)]);

    ClozeItem item;
    const auto& seq = corpus.sequences[ev.sequence];
    item.context.assign(seq.begin(), seq.begin() + ev.position);
    for (u32 k = 0; k < order.size(); ++k) {
      item.options.push_back(spec.word_tokens.at(opts[order[k]]));
      if (order[k] == 0) item.correct = k;
    }
    es.items.push_back(std::move(item));
  }
  return es;
}

void save_eval_set(const EvalSet& es, const std::string& path) {
  json j;
  j["vocab_size"] = es.vocab_size;
  j["num_choices"] = es.num_choices;
  j["held_out"] = es.held_out;
  j["items"] = json::array();
  for (const auto& it : es.items) {
    json ji;
    ji["context"] = it.context;
    ji["options"] = it.options;
    ji["correct"] = it.correct;
    j["items"].push_back(std::move(ji));
  }
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  os << j.dump() << "\n";
}

EvalSet load_eval_set(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw io_error(path + ": " + e.what());
  }
  EvalSet es;
  es.vocab_size = j.at("vocab_size").get<u32>();
  es.num_choices = j.at("num_choices").get<u32>();
  es.held_out = j.at("held_out").get<std::vector<std::vector<u32>>>();
  for (const auto& ji : j.at("items")) {
    ClozeItem it;
    it.context = ji.at("context").get<std::vector<u32>>();
    it.options = ji.at("options").get<std::vector<std::vector<u32>>>();
    it.correct = ji.at("correct").get<u32>();
    if (it.correct >= it.options.size())
      throw io_error(path + ": cloze item correct index out of range");
    es.items.push_back(std::move(it));
  }
  return es;
}

// ---------------------------------------------------------------------------
// World builder
// ---------------------------------------------------------------------------

void WorldConfig::validate() const {
  if (content_words < 8)
    throw validation_error("WorldConfig: need at least 8 content words");
  if (senses < 1) throw validation_error("WorldConfig: senses must be >= 1");
  if (multi_len_max < 2 || multi_len_max > m_max)
    throw validation_error("WorldConfig: multi_len_max must be in [2, m_max]");
  if (polysemous > content_words)
    throw validation_error("WorldConfig: polysemous > content_words");
  u32 reserved = content_words + 1 + multi_words * multi_len_max;
  u32 min_pool = senses * 4 + 8;
  if (vocab_size < reserved + min_pool)
    throw validation_error("WorldConfig: vocab_size too small; need >= " +
                           std::to_string(reserved + min_pool));
}

World build_world(const WorldConfig& cfg) {
  cfg.validate();
  World world;
  VocabSpec& spec = world.spec;
  spec.vocab_size = cfg.vocab_size;
  spec.m_max = cfg.m_max;
  spec.signal_ratio = cfg.signal_ratio;
  spec.seed = cfg.seed;

  char buf[32];
  auto wname = [&](u32 i) {
    std::snprintf(buf, sizeof(buf), "w%03u", i);
    return std::string(buf);
  };

  // Content words: single-token, ids [0, content_words).
  for (u32 i = 0; i < cfg.content_words; ++i) spec.add_word(wname(i), {i});
  // Polysemous block at the front.
  for (u32 i = 0; i < cfg.polysemous; ++i) spec.planted_senses[i] = cfg.senses;

  u32 next_id = cfg.content_words;
  spec.contrast_marker = next_id;
  spec.add_word("sep", {next_id});
  ++next_id;

  // Multi-token words over dedicated constituent ids.
  std::vector<std::string> multi_names;
  for (u32 i = 0; i < cfg.multi_words; ++i) {
    u32 len = 2 + (cfg.multi_len_max > 2 ? i % (cfg.multi_len_max - 1) : 0);
    std::vector<u32> ids;
    for (u32 k = 0; k < len; ++k) ids.push_back(next_id++);
    std::snprintf(buf, sizeof(buf), "mw%02u", i);
    spec.add_word(buf, ids);
    multi_names.push_back(buf);
  }
  // Remaining ids form the signal/noise pool (no surface words).

  // Relations. Non-polysemous content words are paired off; a slice of the
  // synonym pairs links a multi-token word instead, so composition has real
  // entries to build.
  Rng rng(mix_seed(cfg.seed, 0x7019Dull));
  std::vector<std::string> free_words;
  for (u32 i = 0; i < cfg.content_words; ++i) free_words.push_back(wname(i));
  for (std::size_t i = free_words.size(); i > 1; --i)
    std::swap(free_words[i - 1], free_words[rng.below(i)]);

  auto take = [&]() {
    if (free_words.empty())
      throw validation_error("build_world: ran out of content words for pairs");
    std::string w = free_words.back();
    free_words.pop_back();
    return w;
  };

  std::vector<std::pair<std::string, std::string>> syn, ant;
  for (u32 i = 0; i < cfg.synonym_pairs; ++i) {
    std::string a = take();
    if (i % 4 == 2 && i / 4 < multi_names.size()) {
      syn.emplace_back(a, multi_names[i / 4]);
    } else {
      syn.emplace_back(a, take());
    }
  }
  for (u32 i = 0; i < cfg.antonym_pairs; ++i) {
    std::string a = take();
    if (i % 5 == 4 && cfg.multi_words > 0 && i / 5 < multi_names.size()) {
      ant.emplace_back(a, multi_names[multi_names.size() - 1 - i / 5]);
    } else {
      ant.emplace_back(a, take());
    }
  }

  // Morphological-negation entries: word u carries base(u) = b, and a
  // relation (u, z). Expansion then derives (b, z) with the flipped label.
  std::vector<std::pair<std::string, std::string>> derived_syn, derived_ant;
  for (u32 i = 0; i < cfg.negation_entries && free_words.size() >= 3; ++i) {
    std::string u = take(), b = take(), z = take();
    world.base_map[u] = b;
    if (i % 2 == 0) {
      syn.emplace_back(u, z);
      derived_ant.emplace_back(b, z);
    } else {
      ant.emplace_back(u, z);
      derived_syn.emplace_back(b, z);
    }
  }

  // TSV resources (original pairs only; the pipeline runs the expansion).
  std::ostringstream rel;
  rel << "# synthetic lexical relations\n";
  for (const auto& [a, b] : syn) rel << a << "\t" << b << "\tsyn\n";
  for (const auto& [a, b] : ant) rel << a << "\t" << b << "\tant\n";
  world.relations_tsv = rel.str();
  std::ostringstream base;
  base << "# synthetic base forms\n";
  for (const auto& [w, b] : world.base_map) base << w << "\t" << b << "\n";
  world.base_tsv = base.str();

  // Ground truth after expansion; the generator plants this full set.
  world.synonyms = syn;
  world.synonyms.insert(world.synonyms.end(), derived_syn.begin(),
                        derived_syn.end());
  world.antonyms = ant;
  world.antonyms.insert(world.antonyms.end(), derived_ant.begin(),
                        derived_ant.end());
  spec.planted_synonyms = world.synonyms;
  spec.planted_antonyms = world.antonyms;
  spec.validate();
  return world;
}

}  // namespace dskd
