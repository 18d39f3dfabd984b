#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "dskd/common.hpp"
#include "dskd/corpus.hpp"
#include "dskd/toylm.hpp"

namespace dskd {

// Per-token contextual embeddings collected from the teacher's last hidden
// layer, at most `cap` per token. Over-cap occurrences are reservoir-sampled
// under a per-token deterministic stream, so retained vectors are an
// unbiased sample of all occurrences.
struct EmbeddingStore {
  int d = 0;
  u32 cap = 2000;
  std::map<u32, std::vector<Eigen::VectorXd>> vectors;
  std::map<u32, u64> occurrences;

  std::size_t total_stored() const {
    std::size_t n = 0;
    for (const auto& [_, v] : vectors) n += v.size();
    return n;
  }
};

EmbeddingStore collect(const ToyDecoder<float>& teacher, const Corpus& corpus,
                       u32 cap, u64 seed, int threads = 1);

// "DSKDEMBS" file: d, token count, then per token id the retained vectors.
void save_store(const EmbeddingStore& store, const std::string& path);
EmbeddingStore load_store(const std::string& path);

}  // namespace dskd
