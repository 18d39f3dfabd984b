#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dskd/common.hpp"
#include "dskd/corpus.hpp"
#include "dskd/embed_store.hpp"

namespace dskd {

// Sense dictionary: per token a k_t x d matrix of k-means centroids, plus
// word-level composed entries for multi-token relation words.
struct SenseDict {
  int d = 0;
  u32 k = 5;
  std::map<u32, Eigen::MatrixXd> token_senses;
  std::map<std::string, Eigen::MatrixXd> word_senses;

  bool empty() const { return token_senses.empty() && word_senses.empty(); }
};

SenseDict build_sense_dict(const EmbeddingStore& store, u32 k, u64 seed,
                           int threads = 1);

// Token lookup; nullptr for unseen tokens.
const Eigen::MatrixXd* lookup(const SenseDict& dict, u32 token);
const Eigen::MatrixXd* lookup_word(const SenseDict& dict,
                                   const std::string& word);

// Sense rows for a word: single-token words resolve through their token
// entry, multi-token words through the composed word entry.
const Eigen::MatrixXd* senses_for_word(const SenseDict& dict,
                                       const VocabSpec& spec,
                                       const std::string& word);

// "DSKDSNSE" file with token- and word-keyed entries.
void save_sense_dict(const SenseDict& dict, const std::string& path);
SenseDict load_sense_dict(const std::string& path);

// ---------------------------------------------------------------------------
// Lloyd's k-means with k-means++ init, exposed for direct testing. Points
// are clustered as given (callers canonicalize); the WCSS trace is recorded
// after every centroid update.
// ---------------------------------------------------------------------------
struct KmeansResult {
  Eigen::MatrixXd centroids;
  std::vector<int> assignment;
  std::vector<double> wcss_trace;
  int iterations = 0;
};

KmeansResult lloyd_kmeans(const Eigen::MatrixXd& points, int k, u64 seed,
                          int max_iters = 100);

// ---------------------------------------------------------------------------
// Indices of the `count` nearest candidate rows under squared L2 distance,
// ties broken toward the lower row index; output sorted by (distance, index).
// ---------------------------------------------------------------------------
template <class DQ, class DC>
std::vector<int> nearest(const Eigen::MatrixBase<DQ>& query,
                         const Eigen::MatrixBase<DC>& candidates, int count) {
  const int c = static_cast<int>(candidates.rows());
  if (c == 0 || count <= 0) return {};
  if (candidates.cols() != query.size())
    throw validation_error("nearest: dimension mismatch");
  using Scalar = typename DC::Scalar;
  std::vector<std::pair<Scalar, int>> order(c);
  for (int i = 0; i < c; ++i) {
    Scalar dist =
        (candidates.row(i) - query.transpose()).squaredNorm();
    order[i] = {dist, i};
  }
  std::sort(order.begin(), order.end());
  const int take = std::min(count, c);
  std::vector<int> out(take);
  for (int i = 0; i < take; ++i) out[i] = order[i].second;
  return out;
}

}  // namespace dskd
