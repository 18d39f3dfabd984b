#include "dskd/embed_store.hpp"

namespace dskd {

EmbeddingStore collect(const ToyDecoder<float>& teacher, const Corpus& corpus,
                       u32 cap, u64 seed, int threads) {
  if (corpus.vocab_size != static_cast<u32>(teacher.cfg.vocab_size))
    throw validation_error("collect: corpus vocab does not match teacher");
  if (cap < 1) throw validation_error("collect: cap must be >= 1");

  EmbeddingStore store;
  store.d = teacher.cfg.hidden_dim;
  store.cap = cap;

  // Phase 1: forward passes are independent per sequence; results are
  // indexed so the schedule cannot affect the outcome.
  std::vector<Mat<float>> hiddens(corpus.sequences.size());
  parallel_for(corpus.sequences.size(), threads, [&](std::size_t i) {
    hiddens[i] = forward(teacher, corpus.sequences[i]).hidden;
  });

  // Phase 2: append in (sequence, position) order with per-token reservoirs.
  std::map<u32, Rng> rngs;
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    const auto& seq = corpus.sequences[s];
    const auto& hid = hiddens[s];
    for (std::size_t t = 0; t < seq.size(); ++t) {
      u32 token = seq[t];
      Eigen::VectorXd vec = hid.row(t).transpose().cast<double>();
      u64 seen = ++store.occurrences[token];
      auto& list = store.vectors[token];
      if (list.size() < cap) {
        list.push_back(std::move(vec));
      } else {
        auto [it, _] =
            rngs.try_emplace(token, Rng(mix_seed(seed, 0xE5B0ull + token)));
        u64 j = it->second.below(seen);
        if (j < cap) list[static_cast<std::size_t>(j)] = std::move(vec);
      }
    }
  }
  return store;
}

void save_store(const EmbeddingStore& store, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for write: " + path);
  write_magic(os, "DSKDEMBS");
  write_u16(os, 1);
  write_u32(os, static_cast<u32>(store.d));
  write_u32(os, static_cast<u32>(store.vectors.size()));
  for (const auto& [token, list] : store.vectors) {
    write_u32(os, token);
    write_u32(os, static_cast<u32>(list.size()));
    for (const auto& v : list)
      for (int i = 0; i < store.d; ++i)
        write_f32(os, static_cast<float>(v[i]));
  }
}

EmbeddingStore load_store(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open: " + path);
  expect_magic(is, "DSKDEMBS", path);
  if (read_u16(is) != 1) throw io_error(path + ": unsupported version");
  EmbeddingStore store;
  store.d = static_cast<int>(read_u32(is));
  u32 tokens = read_u32(is);
  for (u32 t = 0; t < tokens; ++t) {
    u32 token = read_u32(is);
    u32 count = read_u32(is);
    auto& list = store.vectors[token];
    list.reserve(count);
    for (u32 c = 0; c < count; ++c) {
      Eigen::VectorXd v(store.d);
      for (int i = 0; i < store.d; ++i)
        v[i] = static_cast<double>(read_f32(is));
      list.push_back(std::move(v));
    }
    store.occurrences[token] = count;
  }
  return store;
}

}  // namespace dskd
