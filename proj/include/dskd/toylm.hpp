#pragma once

// Decoder-only transformer with hand-derived backward passes. Templated on
// the scalar type: float for training builds, double for gradient-check
// builds. The GradientTape records every forward activation needed to
// produce exact parameter gradients of any scalar loss on the outputs.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dskd/common.hpp"
#include "dskd/corpus.hpp"

namespace dskd {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct ModelConfig {
  int num_layers = 2;
  int hidden_dim = 32;
  int num_heads = 4;
  int ffn_dim = 64;
  int vocab_size = 64;
  int max_seq_len = 64;
  u64 seed = 0;
  bool use_rotary = false;

  void validate() const {
    if (num_layers < 1 || hidden_dim < 1 || num_heads < 1 || ffn_dim < 1 ||
        vocab_size < 1)
      throw validation_error("ModelConfig: all dimensions must be positive");
    if (hidden_dim % num_heads != 0)
      throw validation_error("ModelConfig: hidden_dim not divisible by heads");
    if (max_seq_len < 2)
      throw validation_error("ModelConfig: max_seq_len must be >= 2");
  }
  int head_dim() const { return hidden_dim / num_heads; }
};

template <class S>
struct BlockParams {
  Vec<S> ln1_g, ln1_b;
  Mat<S> wq, wk, wv, wo;  // d x d
  Vec<S> bq, bk, bv, bo;
  Vec<S> ln2_g, ln2_b;
  Mat<S> w1;  // d x ffn
  Vec<S> b1;
  Mat<S> w2;  // ffn x d
  Vec<S> b2;
  bool frozen = false;
};

template <class S>
struct ToyDecoder {
  ModelConfig cfg;
  Mat<S> tok_emb;  // vocab x d
  Mat<S> pos_emb;  // max_seq_len x d (ignored under rotary)
  std::vector<BlockParams<S>> blocks;
  Vec<S> lnf_g, lnf_b;
  Mat<S> head;  // d x vocab
  bool emb_frozen = false;
  bool out_frozen = false;  // final norm + output head
};

// ---------------------------------------------------------------------------
// Tensor enumeration in declaration order; shared by init, checkpointing,
// Adam, and gradient probing.
// ---------------------------------------------------------------------------
template <class S>
struct TensorRef {
  std::string name;
  S* data;
  std::size_t size;
  std::vector<u32> dims;
  bool frozen;
};

template <class S>
std::vector<TensorRef<S>> tensor_refs(ToyDecoder<S>& m) {
  std::vector<TensorRef<S>> refs;
  auto add_mat = [&](const std::string& name, Mat<S>& t, bool frozen) {
    refs.push_back({name, t.data(), static_cast<std::size_t>(t.size()),
                    {static_cast<u32>(t.rows()), static_cast<u32>(t.cols())},
                    frozen});
  };
  auto add_vec = [&](const std::string& name, Vec<S>& t, bool frozen) {
    refs.push_back({name, t.data(), static_cast<std::size_t>(t.size()),
                    {static_cast<u32>(t.size())}, frozen});
  };
  add_mat("tok_emb", m.tok_emb, m.emb_frozen);
  add_mat("pos_emb", m.pos_emb, m.emb_frozen);
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    auto& b = m.blocks[i];
    std::string p = "blocks." + std::to_string(i) + ".";
    add_vec(p + "ln1_g", b.ln1_g, b.frozen);
    add_vec(p + "ln1_b", b.ln1_b, b.frozen);
    add_mat(p + "wq", b.wq, b.frozen);
    add_vec(p + "bq", b.bq, b.frozen);
    add_mat(p + "wk", b.wk, b.frozen);
    add_vec(p + "bk", b.bk, b.frozen);
    add_mat(p + "wv", b.wv, b.frozen);
    add_vec(p + "bv", b.bv, b.frozen);
    add_mat(p + "wo", b.wo, b.frozen);
    add_vec(p + "bo", b.bo, b.frozen);
    add_vec(p + "ln2_g", b.ln2_g, b.frozen);
    add_vec(p + "ln2_b", b.ln2_b, b.frozen);
    add_mat(p + "w1", b.w1, b.frozen);
    add_vec(p + "b1", b.b1, b.frozen);
    add_mat(p + "w2", b.w2, b.frozen);
    add_vec(p + "b2", b.b2, b.frozen);
  }
  add_vec("lnf_g", m.lnf_g, m.out_frozen);
  add_vec("lnf_b", m.lnf_b, m.out_frozen);
  add_mat("head", m.head, m.out_frozen);
  return refs;
}

template <class S>
std::size_t num_parameters(ToyDecoder<S>& m) {
  std::size_t n = 0;
  for (const auto& r : tensor_refs(m)) n += r.size;
  return n;
}

template <class S>
ToyDecoder<S> zeros_like(const ToyDecoder<S>& m) {
  ToyDecoder<S> z = m;
  for (auto& r : tensor_refs(z))
    for (std::size_t i = 0; i < r.size; ++i) r.data[i] = S(0);
  return z;
}

template <class S>
void zero_tensors(ToyDecoder<S>& m) {
  for (auto& r : tensor_refs(m))
    for (std::size_t i = 0; i < r.size; ++i) r.data[i] = S(0);
}

// ---------------------------------------------------------------------------
// Initialization: N(0, 0.02) weights, zero biases, unit norm gains.
// ---------------------------------------------------------------------------
template <class S>
ToyDecoder<S> init_decoder(const ModelConfig& cfg) {
  cfg.validate();
  ToyDecoder<S> m;
  m.cfg = cfg;
  int d = cfg.hidden_dim, f = cfg.ffn_dim;
  m.tok_emb.resize(cfg.vocab_size, d);
  m.pos_emb.resize(cfg.max_seq_len, d);
  m.blocks.resize(cfg.num_layers);
  for (auto& b : m.blocks) {
    b.ln1_g = Vec<S>::Ones(d);
    b.ln1_b = Vec<S>::Zero(d);
    b.wq.resize(d, d);
    b.wk.resize(d, d);
    b.wv.resize(d, d);
    b.wo.resize(d, d);
    b.bq = Vec<S>::Zero(d);
    b.bk = Vec<S>::Zero(d);
    b.bv = Vec<S>::Zero(d);
    b.bo = Vec<S>::Zero(d);
    b.ln2_g = Vec<S>::Ones(d);
    b.ln2_b = Vec<S>::Zero(d);
    b.w1.resize(d, f);
    b.b1 = Vec<S>::Zero(f);
    b.w2.resize(f, d);
    b.b2 = Vec<S>::Zero(d);
  }
  m.lnf_g = Vec<S>::Ones(d);
  m.lnf_b = Vec<S>::Zero(d);
  m.head.resize(d, cfg.vocab_size);

  Rng rng(mix_seed(cfg.seed, 0x10DE1ull));
  auto fill = [&](Mat<S>& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i)
      t.data()[i] = static_cast<S>(0.02 * rng.normal());
  };
  fill(m.tok_emb);
  fill(m.pos_emb);
  for (auto& b : m.blocks) {
    fill(b.wq);
    fill(b.wk);
    fill(b.wv);
    fill(b.wo);
    fill(b.w1);
    fill(b.w2);
  }
  fill(m.head);
  return m;
}

// ---------------------------------------------------------------------------
// Forward pass with activation recording.
// ---------------------------------------------------------------------------
template <class S>
struct LayerTape {
  Mat<S> x_in;  // block input
  Mat<S> ln1_out;
  Vec<S> ln1_mean, ln1_rstd;
  Mat<S> q, k, v;             // post-rotary
  std::vector<Mat<S>> probs;  // per head, T x T, zero above diagonal
  Mat<S> att_concat;          // pre-Wo
  Mat<S> x_mid;               // after attention residual
  Mat<S> ln2_out;
  Vec<S> ln2_mean, ln2_rstd;
  Mat<S> ffn_pre, ffn_act;  // T x ffn
};

template <class S>
struct GradientTape {
  std::vector<u32> ids;
  std::vector<LayerTape<S>> layers;
  Mat<S> x_final;  // input to final norm
  Vec<S> lnf_mean, lnf_rstd;
  Mat<S> hidden;
  Mat<S> logits;
};

namespace detail {

constexpr double kLnEps = 1e-5;

template <class S>
void layer_norm(const Mat<S>& x, const Vec<S>& g, const Vec<S>& b, Mat<S>& y,
                Vec<S>& mean, Vec<S>& rstd) {
  const Eigen::Index T = x.rows(), d = x.cols();
  y.resize(T, d);
  mean.resize(T);
  rstd.resize(T);
  for (Eigen::Index i = 0; i < T; ++i) {
    S mu = x.row(i).mean();
    S var = (x.row(i).array() - mu).square().mean();
    S rs = S(1) / std::sqrt(var + S(kLnEps));
    mean[i] = mu;
    rstd[i] = rs;
    y.row(i) =
        (((x.row(i).array() - mu) * rs) * g.transpose().array()).matrix() +
        b.transpose();
  }
}

// Accumulates dx, dg, db from upstream dy.
template <class S>
void layer_norm_backward(const Mat<S>& x, const Vec<S>& g, const Vec<S>& mean,
                         const Vec<S>& rstd, const Mat<S>& dy, Mat<S>& dx,
                         Vec<S>* dg, Vec<S>* db) {
  const Eigen::Index T = x.rows(), d = x.cols();
  for (Eigen::Index i = 0; i < T; ++i) {
    auto xhat = ((x.row(i).array() - mean[i]) * rstd[i]).eval();
    auto dyr = dy.row(i).array();
    if (dg) *dg += (dyr * xhat).matrix().transpose();
    if (db) *db += dy.row(i).transpose();
    auto dxhat = (dyr * g.transpose().array()).eval();
    S m1 = dxhat.mean();
    S m2 = (dxhat * xhat).mean();
    dx.row(i) += ((dxhat - m1 - xhat * m2) * rstd[i]).matrix();
  }
}

inline double gelu_scalar(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  double u = c * (x + 0.044715 * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

inline double gelu_grad_scalar(double x) {
  constexpr double c = 0.7978845608028654;
  double u = c * (x + 0.044715 * x * x * x);
  double t = std::tanh(u);
  double du = c * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

template <class S>
void rope_rotate(Mat<S>& x, int num_heads, bool inverse) {
  const Eigen::Index T = x.rows();
  const int d = static_cast<int>(x.cols());
  const int hd = d / num_heads;
  for (Eigen::Index pos = 0; pos < T; ++pos) {
    for (int h = 0; h < num_heads; ++h) {
      for (int j = 0; j * 2 + 1 < hd; ++j) {
        double theta =
            static_cast<double>(pos) *
            std::pow(10000.0, -2.0 * static_cast<double>(j) / hd);
        S c = static_cast<S>(std::cos(theta));
        S s = static_cast<S>(std::sin(theta));
        if (inverse) s = -s;
        int i0 = h * hd + 2 * j, i1 = i0 + 1;
        S a = x(pos, i0), b = x(pos, i1);
        x(pos, i0) = a * c - b * s;
        x(pos, i1) = a * s + b * c;
      }
    }
  }
}

}  // namespace detail

template <class S>
struct ForwardResult {
  Mat<S> hidden;  // T x d, final-norm output
  Mat<S> logits;  // T x vocab
};

template <class S>
ForwardResult<S> forward(const ToyDecoder<S>& model,
                         const std::vector<u32>& ids,
                         GradientTape<S>* tape = nullptr) {
  const ModelConfig& cfg = model.cfg;
  const int T = static_cast<int>(ids.size());
  if (T < 1) throw validation_error("forward: empty input");
  if (T > cfg.max_seq_len)
    throw validation_error("forward: input length " + std::to_string(T) +
                           " exceeds max_seq_len " +
                           std::to_string(cfg.max_seq_len));
  for (u32 id : ids)
    if (id >= static_cast<u32>(cfg.vocab_size))
      throw validation_error("forward: token id out of range");

  const int d = cfg.hidden_dim, H = cfg.num_heads, hd = cfg.head_dim();
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

  Mat<S> x(T, d);
  for (int t = 0; t < T; ++t) {
    x.row(t) = model.tok_emb.row(ids[t]);
    if (!cfg.use_rotary) x.row(t) += model.pos_emb.row(t);
  }

  if (tape) {
    tape->ids = ids;
    tape->layers.clear();
    tape->layers.resize(cfg.num_layers);
  }

  Mat<S> ln_out;
  Vec<S> ln_mean, ln_rstd;
  for (int l = 0; l < cfg.num_layers; ++l) {
    const auto& blk = model.blocks[l];
    LayerTape<S>* lt = tape ? &tape->layers[l] : nullptr;
    if (lt) lt->x_in = x;

    detail::layer_norm(x, blk.ln1_g, blk.ln1_b, ln_out, ln_mean, ln_rstd);
    Mat<S> q = (ln_out * blk.wq).rowwise() + blk.bq.transpose();
    Mat<S> k = (ln_out * blk.wk).rowwise() + blk.bk.transpose();
    Mat<S> v = (ln_out * blk.wv).rowwise() + blk.bv.transpose();
    if (cfg.use_rotary) {
      detail::rope_rotate(q, H, false);
      detail::rope_rotate(k, H, false);
    }
    if (lt) {
      lt->ln1_out = ln_out;
      lt->ln1_mean = ln_mean;
      lt->ln1_rstd = ln_rstd;
      lt->q = q;
      lt->k = k;
      lt->v = v;
      lt->probs.resize(H);
    }

    Mat<S> att(T, d);
    for (int h = 0; h < H; ++h) {
      auto Q = q.middleCols(h * hd, hd);
      auto K = k.middleCols(h * hd, hd);
      auto V = v.middleCols(h * hd, hd);
      Mat<S> scores = (Q * K.transpose()) * scale;
      Mat<S> P = Mat<S>::Zero(T, T);
      for (int i = 0; i < T; ++i) {
        auto row = scores.row(i).head(i + 1);
        S mx = row.maxCoeff();
        Eigen::Array<S, 1, Eigen::Dynamic> e = (row.array() - mx).exp();
        P.row(i).head(i + 1) = (e / e.sum()).matrix();
      }
      att.middleCols(h * hd, hd) = P * V;
      if (lt) lt->probs[h] = std::move(P);
    }
    if (lt) lt->att_concat = att;
    x += (att * blk.wo).rowwise() + blk.bo.transpose();
    if (lt) lt->x_mid = x;

    detail::layer_norm(x, blk.ln2_g, blk.ln2_b, ln_out, ln_mean, ln_rstd);
    Mat<S> pre = (ln_out * blk.w1).rowwise() + blk.b1.transpose();
    Mat<S> act(pre.rows(), pre.cols());
    for (Eigen::Index i = 0; i < pre.size(); ++i)
      act.data()[i] = static_cast<S>(
          detail::gelu_scalar(static_cast<double>(pre.data()[i])));
    if (lt) {
      lt->ln2_out = ln_out;
      lt->ln2_mean = ln_mean;
      lt->ln2_rstd = ln_rstd;
      lt->ffn_pre = pre;
      lt->ffn_act = act;
    }
    x += (act * blk.w2).rowwise() + blk.b2.transpose();
  }

  ForwardResult<S> out;
  Vec<S> lnf_mean, lnf_rstd;
  if (tape) tape->x_final = x;
  detail::layer_norm(x, model.lnf_g, model.lnf_b, out.hidden, lnf_mean,
                     lnf_rstd);
  out.logits = out.hidden * model.head;
  if (tape) {
    tape->lnf_mean = lnf_mean;
    tape->lnf_rstd = lnf_rstd;
    tape->hidden = out.hidden;
    tape->logits = out.logits;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backward pass. Accumulates parameter gradients into `grads` given upstream
// gradients on the logits and (optionally) on the final hidden states.
// Gradient work below the lowest trainable block is skipped when the
// embeddings are frozen.
// ---------------------------------------------------------------------------
template <class S>
void backward(const ToyDecoder<S>& model, const GradientTape<S>& tape,
              const Mat<S>& dlogits, const Mat<S>* dhidden_extra,
              ToyDecoder<S>& grads) {
  const ModelConfig& cfg = model.cfg;
  const int T = static_cast<int>(tape.ids.size());
  const int d = cfg.hidden_dim, H = cfg.num_heads, hd = cfg.head_dim();
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));
  if (dlogits.rows() != T || dlogits.cols() != cfg.vocab_size)
    throw validation_error("backward: dlogits shape mismatch");

  int lowest_needed = 0;
  if (model.emb_frozen) {
    lowest_needed = cfg.num_layers;  // nothing below any block
    for (int l = 0; l < cfg.num_layers; ++l)
      if (!model.blocks[l].frozen) {
        lowest_needed = l;
        break;
      }
  }

  Mat<S> dh = dlogits * model.head.transpose();
  if (dhidden_extra) dh += *dhidden_extra;
  if (!model.out_frozen) grads.head += tape.hidden.transpose() * dlogits;

  Mat<S> dx = Mat<S>::Zero(T, d);
  detail::layer_norm_backward(tape.x_final, model.lnf_g, tape.lnf_mean,
                              tape.lnf_rstd, dh, dx,
                              model.out_frozen ? nullptr : &grads.lnf_g,
                              model.out_frozen ? nullptr : &grads.lnf_b);

  for (int l = cfg.num_layers - 1; l >= lowest_needed; --l) {
    const auto& blk = model.blocks[l];
    const auto& lt = tape.layers[l];
    auto& gb = grads.blocks[l];
    const bool want_params = !blk.frozen;

    // FFN branch. dx currently holds the gradient at the block output.
    Mat<S> dact = dx * blk.w2.transpose();
    if (want_params) {
      gb.w2 += lt.ffn_act.transpose() * dx;
      gb.b2 += dx.colwise().sum().transpose();
    }
    Mat<S> dpre(dact.rows(), dact.cols());
    for (Eigen::Index i = 0; i < dact.size(); ++i)
      dpre.data()[i] =
          dact.data()[i] * static_cast<S>(detail::gelu_grad_scalar(
                               static_cast<double>(lt.ffn_pre.data()[i])));
    Mat<S> dln2 = dpre * blk.w1.transpose();
    if (want_params) {
      gb.w1 += lt.ln2_out.transpose() * dpre;
      gb.b1 += dpre.colwise().sum().transpose();
    }
    detail::layer_norm_backward(lt.x_mid, blk.ln2_g, lt.ln2_mean, lt.ln2_rstd,
                                dln2, dx, want_params ? &gb.ln2_g : nullptr,
                                want_params ? &gb.ln2_b : nullptr);

    // Attention branch.
    Mat<S> datt = dx * blk.wo.transpose();
    if (want_params) {
      gb.wo += lt.att_concat.transpose() * dx;
      gb.bo += dx.colwise().sum().transpose();
    }
    Mat<S> dq(T, d), dk(T, d), dv(T, d);
    for (int h = 0; h < H; ++h) {
      auto Q = lt.q.middleCols(h * hd, hd);
      auto K = lt.k.middleCols(h * hd, hd);
      auto V = lt.v.middleCols(h * hd, hd);
      const Mat<S>& P = lt.probs[h];
      auto dOut = datt.middleCols(h * hd, hd);
      dv.middleCols(h * hd, hd) = P.transpose() * dOut;
      Mat<S> dP = dOut * V.transpose();
      Mat<S> dS = Mat<S>::Zero(T, T);
      for (int i = 0; i < T; ++i) {
        auto p = P.row(i).head(i + 1).array();
        auto dp = dP.row(i).head(i + 1).array();
        S dot = (p * dp).sum();
        dS.row(i).head(i + 1) = (p * (dp - dot)).matrix();
      }
      dq.middleCols(h * hd, hd) = (dS * K) * scale;
      dk.middleCols(h * hd, hd) = (dS.transpose() * Q) * scale;
    }
    if (cfg.use_rotary) {
      detail::rope_rotate(dq, H, true);
      detail::rope_rotate(dk, H, true);
    }
    Mat<S> dln1 = dq * blk.wq.transpose() + dk * blk.wk.transpose() +
                  dv * blk.wv.transpose();
    if (want_params) {
      gb.wq += lt.ln1_out.transpose() * dq;
      gb.bq += dq.colwise().sum().transpose();
      gb.wk += lt.ln1_out.transpose() * dk;
      gb.bk += dk.colwise().sum().transpose();
      gb.wv += lt.ln1_out.transpose() * dv;
      gb.bv += dv.colwise().sum().transpose();
    }
    detail::layer_norm_backward(lt.x_in, blk.ln1_g, lt.ln1_mean, lt.ln1_rstd,
                                dln1, dx, want_params ? &gb.ln1_g : nullptr,
                                want_params ? &gb.ln1_b : nullptr);
  }

  if (!model.emb_frozen) {
    for (int t = 0; t < T; ++t) {
      grads.tok_emb.row(tape.ids[t]) += dx.row(t);
      if (!cfg.use_rotary) grads.pos_emb.row(t) += dx.row(t);
    }
  }
}

// ---------------------------------------------------------------------------
// Cross-entropy over next-token predictions: targets are the inputs shifted
// by one, averaged over the T-1 predicting positions.
// ---------------------------------------------------------------------------
template <class S>
S cross_entropy(const Mat<S>& logits, const std::vector<u32>& tokens) {
  const int T = static_cast<int>(tokens.size());
  if (logits.rows() != T)
    throw validation_error("cross_entropy: length mismatch");
  if (T < 2) throw validation_error("cross_entropy: need at least 2 tokens");
  S total = S(0);
  for (int t = 0; t + 1 < T; ++t) {
    auto row = logits.row(t);
    S mx = row.maxCoeff();
    S lse = mx + std::log((row.array() - mx).exp().sum());
    total += lse - row[tokens[t + 1]];
  }
  return total / static_cast<S>(T - 1);
}

// Adds `weight` times the cross-entropy gradient to dlogits; returns the loss.
template <class S>
S cross_entropy_backward(const Mat<S>& logits, const std::vector<u32>& tokens,
                         S weight, Mat<S>& dlogits) {
  const int T = static_cast<int>(tokens.size());
  if (logits.rows() != T || dlogits.rows() != T)
    throw validation_error("cross_entropy_backward: length mismatch");
  if (T < 2) throw validation_error("cross_entropy: need at least 2 tokens");
  const S norm = weight / static_cast<S>(T - 1);
  S total = S(0);
  for (int t = 0; t + 1 < T; ++t) {
    auto row = logits.row(t);
    S mx = row.maxCoeff();
    Eigen::Array<S, 1, Eigen::Dynamic> e = (row.array() - mx).exp();
    S sum = e.sum();
    total += mx + std::log(sum) - row[tokens[t + 1]];
    dlogits.row(t) += (e / sum * norm).matrix();
    dlogits(t, tokens[t + 1]) -= norm;
  }
  return total / static_cast<S>(T - 1);
}

// ---------------------------------------------------------------------------
// Student construction: copy and freeze the embedding, the leading blocks,
// and the output stack; the trailing `trainable_layers` blocks continue from
// the teacher's consecutive blocks and stay trainable.
// ---------------------------------------------------------------------------
template <class S>
ToyDecoder<S> make_student(const ToyDecoder<S>& teacher, int total_layers,
                           int trainable_layers) {
  if (total_layers < 1 || trainable_layers < 0 ||
      trainable_layers > total_layers)
    throw validation_error("make_student: bad layer counts");
  if (total_layers > teacher.cfg.num_layers)
    throw validation_error("make_student: total_layers " +
                           std::to_string(total_layers) +
                           " exceeds teacher depth " +
                           std::to_string(teacher.cfg.num_layers));
  ToyDecoder<S> st;
  st.cfg = teacher.cfg;
  st.cfg.num_layers = total_layers;
  st.tok_emb = teacher.tok_emb;
  st.pos_emb = teacher.pos_emb;
  st.emb_frozen = true;
  st.blocks.assign(teacher.blocks.begin(), teacher.blocks.begin() + total_layers);
  const int frozen = total_layers - trainable_layers;
  for (int l = 0; l < total_layers; ++l) st.blocks[l].frozen = l < frozen;
  st.lnf_g = teacher.lnf_g;
  st.lnf_b = teacher.lnf_b;
  st.head = teacher.head;
  st.out_frozen = true;
  return st;
}

// ---------------------------------------------------------------------------
// Checkpoint file: "DSKDMODL", version, config fields, then tensors in
// declaration order as f32 with per-tensor name/rank/dims headers.
// ---------------------------------------------------------------------------
template <class S>
void save_checkpoint(const ToyDecoder<S>& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for write: " + path);
  write_magic(os, "DSKDMODL");
  write_u16(os, 1);
  const ModelConfig& c = model.cfg;
  write_u32(os, static_cast<u32>(c.num_layers));
  write_u32(os, static_cast<u32>(c.hidden_dim));
  write_u32(os, static_cast<u32>(c.num_heads));
  write_u32(os, static_cast<u32>(c.ffn_dim));
  write_u32(os, static_cast<u32>(c.vocab_size));
  write_u32(os, static_cast<u32>(c.max_seq_len));
  write_u64(os, c.seed);
  u8 rot = c.use_rotary ? 1 : 0;
  write_bytes(os, &rot, 1);
  auto refs = tensor_refs(const_cast<ToyDecoder<S>&>(model));
  write_u32(os, static_cast<u32>(refs.size()));
  for (const auto& r : refs) {
    write_u32(os, static_cast<u32>(r.name.size()));
    write_bytes(os, r.name.data(), r.name.size());
    write_u32(os, static_cast<u32>(r.dims.size()));
    for (u32 dim : r.dims) write_u32(os, dim);
    for (std::size_t i = 0; i < r.size; ++i)
      write_f32(os, static_cast<float>(r.data[i]));
  }
}

template <class S>
ToyDecoder<S> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open: " + path);
  expect_magic(is, "DSKDMODL", path);
  if (read_u16(is) != 1) throw io_error(path + ": unsupported version");
  ModelConfig c;
  c.num_layers = static_cast<int>(read_u32(is));
  c.hidden_dim = static_cast<int>(read_u32(is));
  c.num_heads = static_cast<int>(read_u32(is));
  c.ffn_dim = static_cast<int>(read_u32(is));
  c.vocab_size = static_cast<int>(read_u32(is));
  c.max_seq_len = static_cast<int>(read_u32(is));
  c.seed = read_u64(is);
  u8 rot = 0;
  read_bytes(is, &rot, 1);
  c.use_rotary = rot != 0;
  ToyDecoder<S> model = init_decoder<S>(c);
  auto refs = tensor_refs(model);
  u32 count = read_u32(is);
  if (count != refs.size()) throw io_error(path + ": tensor count mismatch");
  for (auto& r : refs) {
    u32 name_len = read_u32(is);
    std::string name(name_len, '\0');
    read_bytes(is, name.data(), name_len);
    if (name != r.name)
      throw io_error(path + ": tensor order mismatch, expected " + r.name +
                     " got " + name);
    u32 rank = read_u32(is);
    if (rank != r.dims.size()) throw io_error(path + ": rank mismatch");
    for (u32 k = 0; k < rank; ++k)
      if (read_u32(is) != r.dims[k])
        throw io_error(path + ": dim mismatch in " + r.name);
    for (std::size_t i = 0; i < r.size; ++i)
      r.data[i] = static_cast<S>(read_f32(is));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Adam. Frozen tensors are skipped entirely, so their bytes never change.
// ---------------------------------------------------------------------------
template <class S>
struct AdamState {
  ToyDecoder<S> m, v;
  long step = 0;
};

template <class S>
AdamState<S> make_adam(const ToyDecoder<S>& model) {
  return AdamState<S>{zeros_like(model), zeros_like(model), 0};
}

template <class S>
void adam_step(ToyDecoder<S>& model, ToyDecoder<S>& grads, AdamState<S>& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8) {
  state.step += 1;
  const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
  const S bc1 =
      static_cast<S>(1.0 - std::pow(beta1, static_cast<double>(state.step)));
  const S bc2 =
      static_cast<S>(1.0 - std::pow(beta2, static_cast<double>(state.step)));
  const S slr = static_cast<S>(lr), seps = static_cast<S>(eps);
  auto pr = tensor_refs(model);
  auto gr = tensor_refs(grads);
  auto mr = tensor_refs(state.m);
  auto vr = tensor_refs(state.v);
  for (std::size_t t = 0; t < pr.size(); ++t) {
    if (pr[t].frozen) continue;
    S* p = pr[t].data;
    S* g = gr[t].data;
    S* m = mr[t].data;
    S* v = vr[t].data;
    for (std::size_t i = 0; i < pr[t].size; ++i) {
      m[i] = b1 * m[i] + (S(1) - b1) * g[i];
      v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
      p[i] -= slr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + seps);
    }
  }
}

// ---------------------------------------------------------------------------
// Plain language-model training. The batch sampling scheme is shared with
// the distillation trainer so that reduced configurations produce
// bit-identical traces.
// ---------------------------------------------------------------------------
struct TrainOptions {
  int steps = 100;
  int batch_size = 8;
  double lr = 1e-3;
  u64 seed = 0;
  int threads = 1;
};

class BatchSampler {
 public:
  BatchSampler(std::size_t num_sequences, u64 seed)
      : n_(num_sequences), rng_(mix_seed(seed, 0xBA7C4ull)) {
    if (n_ == 0) throw validation_error("BatchSampler: empty corpus");
  }
  std::vector<std::size_t> next(int batch) {
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) i = rng_.below(n_);
    return idx;
  }

 private:
  std::size_t n_;
  Rng rng_;
};

template <class S>
std::vector<double> train_lm(ToyDecoder<S>& model, const Corpus& corpus,
                             const TrainOptions& opt) {
  if (corpus.seq_len > static_cast<u32>(model.cfg.max_seq_len))
    throw validation_error("train_lm: corpus sequences exceed max_seq_len");
  BatchSampler sampler(corpus.sequences.size(), opt.seed);
  ToyDecoder<S> grads = zeros_like(model);
  AdamState<S> adam = make_adam(model);
  std::vector<double> trace;
  trace.reserve(opt.steps);
  const S inv_b = S(1) / static_cast<S>(opt.batch_size);
  for (int step = 0; step < opt.steps; ++step) {
    auto idx = sampler.next(opt.batch_size);
    zero_tensors(grads);
    S loss = S(0);
    for (std::size_t i : idx) {
      const auto& seq = corpus.sequences[i];
      GradientTape<S> tape;
      auto out = forward(model, seq, &tape);
      Mat<S> dlogits = Mat<S>::Zero(out.logits.rows(), out.logits.cols());
      loss += inv_b * cross_entropy_backward(out.logits, seq, inv_b, dlogits);
      backward(model, tape, dlogits, nullptr, grads);
    }
    adam_step(model, grads, adam, opt.lr);
    trace.push_back(static_cast<double>(loss));
  }
  return trace;
}

// Mean next-token cross-entropy over a set of sequences (no gradient).
template <class S>
double heldout_ce(const ToyDecoder<S>& model,
                  const std::vector<std::vector<u32>>& sequences) {
  if (sequences.empty()) throw validation_error("heldout_ce: empty set");
  double total = 0.0;
  for (const auto& seq : sequences) {
    auto out = forward(model, seq);
    total += static_cast<double>(cross_entropy(out.logits, seq));
  }
  return total / static_cast<double>(sequences.size());
}

}  // namespace dskd
