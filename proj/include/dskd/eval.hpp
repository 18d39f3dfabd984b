#pragma once

#include <string>

#include "dskd/corpus.hpp"
#include "dskd/toylm.hpp"

namespace dskd {

struct EvalMetrics {
  double next_token_accuracy = 0.0;
  double perplexity = 0.0;
  double cloze_accuracy = 0.0;
  u64 positions = 0;
  u64 items = 0;
};

// Next-token accuracy and perplexity over the held-out sequences, plus
// cloze-choice accuracy: each option is scored by the mean negative
// log-likelihood of its tokens after the context, lowest wins.
// Per-item log-likelihoods are dumped to `per_item_csv` when non-empty.
EvalMetrics evaluate_model(const ToyDecoder<float>& model, const EvalSet& es,
                           const std::string& per_item_csv = "");

}  // namespace dskd
