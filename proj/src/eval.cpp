#include "dskd/eval.hpp"

#include <cstdio>
#include <fstream>

namespace dskd {

namespace {

// Mean NLL of the option tokens continuing the context.
double option_nll(const ToyDecoder<float>& model, const std::vector<u32>& ctx,
                  const std::vector<u32>& option) {
  std::vector<u32> seq = ctx;
  seq.insert(seq.end(), option.begin(), option.end());
  auto out = forward(model, seq);
  double total = 0.0;
  for (std::size_t i = 0; i < option.size(); ++i) {
    const Eigen::Index row = static_cast<Eigen::Index>(ctx.size() + i) - 1;
    auto logits = out.logits.row(row);
    float mx = logits.maxCoeff();
    double lse =
        static_cast<double>(mx) +
        std::log((logits.array() - mx).exp().template cast<double>().sum());
    total += lse - static_cast<double>(logits[option[i]]);
  }
  return total / static_cast<double>(option.size());
}

int argmax_row(const Mat<float>& logits, int row) {
  int best = 0;
  float best_v = logits(row, 0);
  for (int i = 1; i < logits.cols(); ++i)
    if (logits(row, i) > best_v) {
      best_v = logits(row, i);
      best = i;
    }
  return best;
}

}  // namespace

EvalMetrics evaluate_model(const ToyDecoder<float>& model, const EvalSet& es,
                           const std::string& per_item_csv) {
  if (es.vocab_size != static_cast<u32>(model.cfg.vocab_size))
    throw validation_error("evaluate_model: vocab mismatch between model (" +
                           std::to_string(model.cfg.vocab_size) +
                           ") and eval set (" + std::to_string(es.vocab_size) +
                           ")");
  if (es.held_out.empty() && es.items.empty())
    throw validation_error("evaluate_model: empty eval set");

  EvalMetrics m;
  double ce_total = 0.0;
  u64 correct = 0;
  for (const auto& seq : es.held_out) {
    auto out = forward(model, seq);
    ce_total += static_cast<double>(cross_entropy(out.logits, seq));
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
      if (argmax_row(out.logits, static_cast<int>(t)) ==
          static_cast<int>(seq[t + 1]))
        ++correct;
      ++m.positions;
    }
  }
  if (!es.held_out.empty()) {
    m.next_token_accuracy =
        static_cast<double>(correct) / static_cast<double>(m.positions);
    m.perplexity =
        std::exp(ce_total / static_cast<double>(es.held_out.size()));
  }

  std::ofstream csv;
  if (!per_item_csv.empty()) {
    csv.open(per_item_csv);
    if (!csv) throw io_error("cannot open for write: " + per_item_csv);
    csv << "item,option,nll,chosen,correct\n";
  }
  u64 cloze_correct = 0;
  char buf[64];
  for (std::size_t i = 0; i < es.items.size(); ++i) {
    const auto& item = es.items[i];
    std::vector<double> nlls(item.options.size());
    int best = 0;
    for (std::size_t o = 0; o < item.options.size(); ++o) {
      nlls[o] = option_nll(model, item.context, item.options[o]);
      if (nlls[o] < nlls[best]) best = static_cast<int>(o);
    }
    if (best == static_cast<int>(item.correct)) ++cloze_correct;
    ++m.items;
    if (csv.is_open()) {
      for (std::size_t o = 0; o < nlls.size(); ++o) {
        std::snprintf(buf, sizeof(buf), "%.17g", nlls[o]);
        csv << i << "," << o << "," << buf << ","
            << (static_cast<int>(o) == best ? 1 : 0) << ","
            << (o == item.correct ? 1 : 0) << "\n";
      }
    }
  }
  if (m.items > 0)
    m.cloze_accuracy =
        static_cast<double>(cloze_correct) / static_cast<double>(m.items);
  return m;
}

}  // namespace dskd
