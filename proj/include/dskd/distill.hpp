#pragma once

// Distillation objectives and training loops: cross-entropy plus
// temperature-scaled KL (the KD loss), sense-dictionary candidate sets with
// teacher-guided top-kappa selection, and the hinge-MSE semantic consistency
// loss combined into the full objective.

#include <optional>
#include <ostream>

#include "dskd/composer.hpp"
#include "dskd/corpus.hpp"
#include "dskd/lexicon.hpp"
#include "dskd/sensedict.hpp"
#include "dskd/toylm.hpp"

namespace dskd {

enum class TrainMode { KD, DSKD };

struct DistillConfig {
  double alpha = 1.0;
  double t_kl = 2.0;
  int kappa = 5;
  double beta_p = 1.0;
  double beta_n = 1.0;
  double gamma = 1.0;
  double supervision_fraction = 1.0;
  u64 seed = 0;

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(alpha) || !finite(beta_p) || !finite(beta_n) ||
        !finite(gamma) || !finite(t_kl))
      throw validation_error("DistillConfig: weights must be finite");
    if (alpha < 0 || beta_p < 0 || beta_n < 0)
      throw validation_error("DistillConfig: weights must be >= 0");
    if (t_kl <= 0) throw validation_error("DistillConfig: t_kl must be > 0");
    if (gamma <= 0) throw validation_error("DistillConfig: gamma must be > 0");
    if (kappa < 1) throw validation_error("DistillConfig: kappa must be >= 1");
    if (supervision_fraction <= 0 || supervision_fraction > 1)
      throw validation_error(
          "DistillConfig: supervision_fraction must be in (0,1]");
  }
};

struct LossReport {
  int step = 0;
  double l_ce = 0, l_kl = 0, l_sem_pos = 0, l_sem_neg = 0, l_kd = 0,
         l_dskd = 0;
  u64 supervised = 0;
};

// ---------------------------------------------------------------------------
// MSE(x, y) = (1/d) ||x - y||^2
// ---------------------------------------------------------------------------
template <class DA, class DB>
double mse(const Eigen::MatrixBase<DA>& x, const Eigen::MatrixBase<DB>& y) {
  if (x.size() != y.size()) throw validation_error("mse: dimension mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double diff = static_cast<double>(x(i)) - static_cast<double>(y(i));
    s += diff * diff;
  }
  return s / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// Temperature-scaled KL(teacher || student), averaged over rows and scaled
// by t_kl^2 so the gradient magnitude is temperature-invariant.
// ---------------------------------------------------------------------------
namespace detail {

template <class D>
Eigen::ArrayXd softmax_row_scaled(const Eigen::MatrixBase<D>& row, double t) {
  Eigen::ArrayXd z(row.size());
  for (Eigen::Index i = 0; i < row.size(); ++i)
    z[i] = static_cast<double>(row(i)) / t;
  double mx = z.maxCoeff();
  Eigen::ArrayXd e = (z - mx).exp();
  return e / e.sum();
}

}  // namespace detail

template <class DA, class DB>
double kl_distill(const Eigen::MatrixBase<DA>& student_logits,
                  const Eigen::MatrixBase<DB>& teacher_logits, double t_kl) {
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols())
    throw validation_error("kl_distill: shape mismatch");
  if (t_kl <= 0) throw validation_error("kl_distill: t_kl must be > 0");
  const Eigen::Index T = student_logits.rows();
  if (T == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index r = 0; r < T; ++r) {
    Eigen::ArrayXd p = detail::softmax_row_scaled(teacher_logits.row(r), t_kl);
    Eigen::ArrayXd q = detail::softmax_row_scaled(student_logits.row(r), t_kl);
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (p[i] > 0.0) total += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return t_kl * t_kl * total / static_cast<double>(T);
}

// Adds `weight` times the gradient w.r.t. the student logits; returns the
// loss value.
template <class DA, class DB, class DG>
double kl_distill_backward(const Eigen::MatrixBase<DA>& student_logits,
                           const Eigen::MatrixBase<DB>& teacher_logits,
                           double t_kl, double weight,
                           const Eigen::MatrixBase<DG>& dlogits_out) {
  using S = typename DG::Scalar;
  auto& dlogits = const_cast<Eigen::MatrixBase<DG>&>(dlogits_out).derived();
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols())
    throw validation_error("kl_distill: shape mismatch");
  const Eigen::Index T = student_logits.rows();
  if (T == 0) return 0.0;
  double total = 0.0;
  const double gscale = weight * t_kl / static_cast<double>(T);
  for (Eigen::Index r = 0; r < T; ++r) {
    Eigen::ArrayXd p = detail::softmax_row_scaled(teacher_logits.row(r), t_kl);
    Eigen::ArrayXd q = detail::softmax_row_scaled(student_logits.row(r), t_kl);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) total += p[i] * (std::log(p[i]) - std::log(q[i]));
      dlogits(r, i) += static_cast<S>(gscale * (q[i] - p[i]));
    }
  }
  return t_kl * t_kl * total / static_cast<double>(T);
}

// ---------------------------------------------------------------------------
// Candidate sets: positives = target-token senses plus synonym word senses,
// negatives = antonym word senses. Rows carry provenance back to the
// dictionary entry they came from.
// ---------------------------------------------------------------------------
struct CandidateRef {
  bool is_word = false;
  u32 token = 0;     // valid when !is_word
  std::string word;  // valid when is_word
  int row = 0;
};

template <class S>
struct CandidateSets {
  Mat<S> positives, antonyms;  // pools P, A
  std::vector<CandidateRef> p_src, a_src;
  Mat<S> selected_p, selected_a;  // P^kappa, A^kappa
  std::vector<int> selected_p_idx, selected_a_idx;
};

template <class S>
std::optional<CandidateSets<S>> build_candidates(u32 next_token,
                                                 const SenseDict& dict,
                                                 const RelationSet& rels,
                                                 const VocabSpec& spec) {
  const Eigen::MatrixXd* own = lookup(dict, next_token);
  if (!own) return std::nullopt;

  CandidateSets<S> cs;
  std::vector<Eigen::RowVectorXd> p_rows, a_rows;
  for (int r = 0; r < own->rows(); ++r) {
    p_rows.push_back(own->row(r));
    cs.p_src.push_back({false, next_token, "", r});
  }

  auto owners = single_token_owners(spec);
  auto oit = owners.find(next_token);
  if (oit != owners.end()) {
    auto [syns, ants] = relations_of(rels, oit->second);
    for (const auto& w : syns) {
      const Eigen::MatrixXd* sw = senses_for_word(dict, spec, w);
      if (!sw) continue;
      for (int r = 0; r < sw->rows(); ++r) {
        p_rows.push_back(sw->row(r));
        cs.p_src.push_back({true, 0, w, r});
      }
    }
    for (const auto& w : ants) {
      const Eigen::MatrixXd* aw = senses_for_word(dict, spec, w);
      if (!aw) continue;
      for (int r = 0; r < aw->rows(); ++r) {
        a_rows.push_back(aw->row(r));
        cs.a_src.push_back({true, 0, w, r});
      }
    }
  }

  const int d = static_cast<int>(own->cols());
  cs.positives.resize(static_cast<int>(p_rows.size()), d);
  for (std::size_t i = 0; i < p_rows.size(); ++i)
    cs.positives.row(static_cast<int>(i)) = p_rows[i].cast<S>();
  cs.antonyms.resize(static_cast<int>(a_rows.size()), d);
  for (std::size_t i = 0; i < a_rows.size(); ++i)
    cs.antonyms.row(static_cast<int>(i)) = a_rows[i].cast<S>();
  return cs;
}

// Fills the selected subsets with the kappa nearest pool rows to the teacher
// hidden state m_t.
template <class S>
void select_topk(CandidateSets<S>& sets, const Vec<S>& m_t, int kappa) {
  if (kappa < 1) throw validation_error("select_topk: kappa must be >= 1");
  sets.selected_p_idx = nearest(m_t, sets.positives, kappa);
  sets.selected_a_idx = nearest(m_t, sets.antonyms, kappa);
  sets.selected_p.resize(static_cast<int>(sets.selected_p_idx.size()),
                         sets.positives.cols());
  for (std::size_t i = 0; i < sets.selected_p_idx.size(); ++i)
    sets.selected_p.row(static_cast<int>(i)) =
        sets.positives.row(sets.selected_p_idx[i]);
  sets.selected_a.resize(static_cast<int>(sets.selected_a_idx.size()),
                         sets.antonyms.cols());
  for (std::size_t i = 0; i < sets.selected_a_idx.size(); ++i)
    sets.selected_a.row(static_cast<int>(i)) =
        sets.antonyms.row(sets.selected_a_idx[i]);
}

// ---------------------------------------------------------------------------
// Semantic consistency loss: MSE pull toward the selected positives and a
// hinge push (margin gamma) away from the selected antonym senses. Each
// non-empty set is averaged internally; an empty set contributes 0.
// ---------------------------------------------------------------------------
struct SemLoss {
  double positive = 0.0;
  double negative = 0.0;
  double total = 0.0;
  // Per-candidate averaging weight actually applied within each set.
  double positive_weight = 0.0;
  double negative_weight = 0.0;
};

template <class S>
SemLoss semantic_loss(const Vec<S>& n_t, const CandidateSets<S>& sets,
                      double beta_p, double beta_n, double gamma) {
  const int np = static_cast<int>(sets.selected_p.rows());
  const int na = static_cast<int>(sets.selected_a.rows());
  if (np == 0 && na == 0)
    throw validation_error("semantic_loss: both candidate sets empty");
  SemLoss out;
  if (np > 0) {
    if (sets.selected_p.cols() != n_t.size())
      throw validation_error("semantic_loss: dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < np; ++i) s += mse(n_t, sets.selected_p.row(i).transpose());
    out.positive = beta_p * s / np;
    out.positive_weight = beta_p / np;
  }
  if (na > 0) {
    if (sets.selected_a.cols() != n_t.size())
      throw validation_error("semantic_loss: dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < na; ++i) {
      double h = gamma - mse(n_t, sets.selected_a.row(i).transpose());
      if (h > 0.0) s += h;
    }
    out.negative = beta_n * s / na;
    out.negative_weight = beta_n / na;
  }
  out.total = out.positive + out.negative;
  return out;
}

// Adds `weight` times d(loss)/d(n_t) into dn; returns the loss parts.
template <class S>
SemLoss semantic_loss_backward(const Vec<S>& n_t, const CandidateSets<S>& sets,
                               double beta_p, double beta_n, double gamma,
                               double weight, Vec<S>& dn) {
  SemLoss out = semantic_loss(n_t, sets, beta_p, beta_n, gamma);
  const int d = static_cast<int>(n_t.size());
  const int np = static_cast<int>(sets.selected_p.rows());
  const int na = static_cast<int>(sets.selected_a.rows());
  if (np > 0 && beta_p != 0.0) {
    const double c = weight * beta_p / np * 2.0 / d;
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < d; ++j)
        dn[j] += static_cast<S>(
            c * (static_cast<double>(n_t[j]) -
                 static_cast<double>(sets.selected_p(i, j))));
  }
  if (na > 0 && beta_n != 0.0) {
    const double c = weight * beta_n / na * 2.0 / d;
    for (int i = 0; i < na; ++i) {
      if (gamma - mse(n_t, sets.selected_a.row(i).transpose()) <= 0.0)
        continue;  // hinge inactive
      for (int j = 0; j < d; ++j)
        dn[j] -= static_cast<S>(
            c * (static_cast<double>(n_t[j]) -
                 static_cast<double>(sets.selected_a(i, j))));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loop. Teacher stays frozen; only the student's trainable tensors
// are updated. KD mode optimizes L_CE + alpha * L_KL; DSKD mode adds L_sem
// on a sampled fraction of positions with available candidates.
// ---------------------------------------------------------------------------
template <class S>
using CandidatePool = std::vector<std::optional<CandidateSets<S>>>;

template <class S>
CandidatePool<S> build_candidate_pool(const SenseDict& dict,
                                      const RelationSet& rels,
                                      const VocabSpec& spec) {
  CandidatePool<S> pool(spec.vocab_size);
  for (u32 t = 0; t < spec.vocab_size; ++t)
    pool[t] = build_candidates<S>(t, dict, rels, spec);
  return pool;
}

template <class S>
std::vector<LossReport> train_distill(const ToyDecoder<S>& teacher,
                                      ToyDecoder<S>& student,
                                      const Corpus& corpus,
                                      const SenseDict& dict,
                                      const RelationSet& rels,
                                      const VocabSpec& spec,
                                      const DistillConfig& dcfg,
                                      const TrainOptions& opt, TrainMode mode,
                                      std::ostream* csv = nullptr) {
  dcfg.validate();
  if (teacher.cfg.vocab_size != student.cfg.vocab_size ||
      teacher.cfg.hidden_dim != student.cfg.hidden_dim)
    throw validation_error("train_distill: teacher/student shape mismatch");
  if (corpus.vocab_size != static_cast<u32>(student.cfg.vocab_size))
    throw validation_error("train_distill: corpus vocab mismatch");
  if (mode == TrainMode::DSKD && dict.empty())
    throw validation_error(
        "train_distill: DSKD mode requires a non-empty sense dictionary");

  const bool sem_grads = mode == TrainMode::DSKD &&
                         (dcfg.beta_p != 0.0 || dcfg.beta_n != 0.0);
  const bool need_teacher = dcfg.alpha > 0.0 || sem_grads;

  CandidatePool<S> pool;
  if (mode == TrainMode::DSKD)
    pool = build_candidate_pool<S>(dict, rels, spec);

  BatchSampler sampler(corpus.sequences.size(), opt.seed);
  Rng sup_rng(mix_seed(dcfg.seed, 0x5E7Aull));
  ToyDecoder<S> grads = zeros_like(student);
  AdamState<S> adam = make_adam(student);

  const int B = opt.batch_size;
  const S inv_b = S(1) / static_cast<S>(B);
  std::vector<LossReport> reports;
  reports.reserve(opt.steps);
  if (csv)
    *csv << "step,l_ce,l_kl,l_sem_pos,l_sem_neg,l_kd,l_dskd,supervised\n";

  struct SupRecord {
    int pos;
    CandidateSets<S> sel;  // with selections filled
  };

  std::vector<GradientTape<S>> tapes(B);
  std::vector<ForwardResult<S>> t_outs(B);
  std::vector<Mat<S>> dlogits(B);
  std::vector<std::vector<SupRecord>> sup(B);
  std::vector<double> seq_sem_pos(B), seq_sem_neg(B);
  std::vector<int> seq_sem_count(B);

  for (int step = 0; step < opt.steps; ++step) {
    auto idx = sampler.next(B);

    // Forward passes are independent; outputs are indexed by batch slot.
    parallel_for(static_cast<std::size_t>(B), opt.threads, [&](std::size_t b) {
      const auto& seq = corpus.sequences[idx[b]];
      forward(student, seq, &tapes[b]);
      if (need_teacher) t_outs[b] = forward(teacher, seq);
    });

    S ce_acc = S(0), kl_acc = S(0);
    u64 supervised_count = 0;
    for (int b = 0; b < B; ++b) {
      const auto& seq = corpus.sequences[idx[b]];
      const int T = static_cast<int>(seq.size());
      dlogits[b] = Mat<S>::Zero(T, student.cfg.vocab_size);
      ce_acc += inv_b * cross_entropy_backward(tapes[b].logits, seq, inv_b,
                                               dlogits[b]);
      if (dcfg.alpha > 0.0) {
        kl_acc += inv_b * static_cast<S>(kl_distill_backward(
                              tapes[b].logits.topRows(T - 1),
                              t_outs[b].logits.topRows(T - 1), dcfg.t_kl,
                              dcfg.alpha * static_cast<double>(inv_b),
                              dlogits[b].topRows(T - 1)));
      }

      sup[b].clear();
      seq_sem_pos[b] = seq_sem_neg[b] = 0.0;
      seq_sem_count[b] = 0;
      if (mode == TrainMode::DSKD) {
        for (int t = 0; t + 1 < T; ++t) {
          const auto& entry = pool[seq[t + 1]];
          if (!entry) continue;  // no dictionary entry: KD terms only
          if (sup_rng.uniform() >= dcfg.supervision_fraction) continue;
          ++supervised_count;
          seq_sem_count[b] += 1;
          if (!sem_grads) continue;
          SupRecord rec{t, *entry};
          Vec<S> m_t = t_outs[b].hidden.row(t).transpose();
          select_topk(rec.sel, m_t, dcfg.kappa);
          Vec<S> n_t = tapes[b].hidden.row(t).transpose();
          SemLoss sl =
              semantic_loss(n_t, rec.sel, dcfg.beta_p, dcfg.beta_n, dcfg.gamma);
          seq_sem_pos[b] += sl.positive;
          seq_sem_neg[b] += sl.negative;
          sup[b].push_back(std::move(rec));
        }
      }
    }

    int seqs_with_sem = 0;
    for (int b = 0; b < B; ++b)
      if (seq_sem_count[b] > 0) ++seqs_with_sem;

    double sem_pos = 0.0, sem_neg = 0.0;
    if (sem_grads && seqs_with_sem > 0) {
      for (int b = 0; b < B; ++b) {
        if (seq_sem_count[b] == 0) continue;
        sem_pos += seq_sem_pos[b] / seq_sem_count[b] / seqs_with_sem;
        sem_neg += seq_sem_neg[b] / seq_sem_count[b] / seqs_with_sem;
      }
    }

    // Backward in batch order.
    zero_tensors(grads);
    for (int b = 0; b < B; ++b) {
      const Mat<S>* dhidden = nullptr;
      Mat<S> dh;
      if (!sup[b].empty()) {
        dh = Mat<S>::Zero(tapes[b].hidden.rows(), tapes[b].hidden.cols());
        const double w = 1.0 / seq_sem_count[b] / seqs_with_sem;
        for (const auto& rec : sup[b]) {
          Vec<S> n_t = tapes[b].hidden.row(rec.pos).transpose();
          Vec<S> dn = Vec<S>::Zero(n_t.size());
          semantic_loss_backward(n_t, rec.sel, dcfg.beta_p, dcfg.beta_n,
                                 dcfg.gamma, w, dn);
          dh.row(rec.pos) += dn.transpose();
        }
        dhidden = &dh;
      }
      backward(student, tapes[b], dlogits[b], dhidden, grads);
    }
    adam_step(student, grads, adam, opt.lr);

    LossReport rep;
    rep.step = step;
    rep.l_ce = static_cast<double>(ce_acc);
    rep.l_kl = static_cast<double>(kl_acc);
    rep.l_sem_pos = sem_pos;
    rep.l_sem_neg = sem_neg;
    rep.l_kd = rep.l_ce + dcfg.alpha * rep.l_kl;
    rep.l_dskd = rep.l_kd + rep.l_sem_pos + rep.l_sem_neg;
    rep.supervised = supervised_count;
    if (csv) {
      char line[256];
      std::snprintf(line, sizeof(line),
                    "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu\n", rep.step,
                    rep.l_ce, rep.l_kl, rep.l_sem_pos, rep.l_sem_neg, rep.l_kd,
                    rep.l_dskd,
                    static_cast<unsigned long long>(rep.supervised));
      *csv << line;
    }
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace dskd
