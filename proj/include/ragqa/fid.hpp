/*
 * Copyright (c) 2026 The ragqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RAGQA_FID_HPP
#define RAGQA_FID_HPP

// Fusion-in-decoder encoder-decoder transformer. Each retrieved passage is
// encoded independently together with the question and visual context; the
// per-passage hidden states are concatenated row-wise and the decoder
// cross-attends over the whole fused matrix. Pre-norm blocks, sinusoidal
// positions, hand-written backward pass.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ragqa/corpus.hpp"
#include "ragqa/tokenizer.hpp"

namespace ragqa {
namespace fid {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct ModelConfig {
  int vocab_size = 0;
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int ffn_hidden = 0;  // 0 selects 4 * hidden
  int max_input_len = 300;
  int max_decode_len = 20;
  bool tie_embeddings = false;
  uint64_t seed = 0;

  int ffn() const { return ffn_hidden > 0 ? ffn_hidden : 4 * hidden; }
  int head_dim() const { return hidden / heads; }

  void validate() const {
    if (vocab_size <= 0) throw std::invalid_argument("ModelConfig: vocab_size must be positive");
    if (hidden <= 0 || heads <= 0 || hidden % heads != 0)
      throw std::invalid_argument("ModelConfig: hidden must be a positive multiple of heads");
    if (layers <= 0) throw std::invalid_argument("ModelConfig: layers must be positive");
    if (max_input_len < 1) throw std::invalid_argument("ModelConfig: max_input_len must be >= 1");
    if (max_decode_len < 1) throw std::invalid_argument("ModelConfig: max_decode_len must be >= 1");
  }
};

// Uniform and gaussian draws with a fully specified mapping from raw
// mt19937_64 output, so initialization is identical everywhere.
class ParamRng {
 public:
  explicit ParamRng(uint64_t seed) : gen_(seed) {}

  double uniform01() {  // (0, 1]
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double gaussian() {  // Box-Muller
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

template <class S>
struct LayerNormParams {
  Mat<S> gamma, beta;  // (1, h)
};

// y = x * W^T + b with W stored (out, in) and b stored (1, out).
template <class S>
struct AttentionParams {
  Mat<S> wq, wk, wv, wo;
  Mat<S> bq, bk, bv, bo;
};

template <class S>
struct FfnParams {
  Mat<S> w1, b1;  // (f, h), (1, f)
  Mat<S> w2, b2;  // (h, f), (1, h)
};

template <class S>
struct EncoderLayerParams {
  LayerNormParams<S> ln1;
  AttentionParams<S> attn;
  LayerNormParams<S> ln2;
  FfnParams<S> ffn;
};

template <class S>
struct DecoderLayerParams {
  LayerNormParams<S> ln1;
  AttentionParams<S> self_attn;
  LayerNormParams<S> ln2;
  AttentionParams<S> cross_attn;
  LayerNormParams<S> ln3;
  FfnParams<S> ffn;
};

template <class S>
struct FidModel {
  ModelConfig config;
  Mat<S> token_embedding;  // (V, h)
  std::vector<EncoderLayerParams<S>> encoder;
  LayerNormParams<S> encoder_norm;
  std::vector<DecoderLayerParams<S>> decoder;
  LayerNormParams<S> decoder_norm;
  Mat<S> lm_head;  // (V, h); empty when config.tie_embeddings

  const Mat<S> &output_weights() const {
    return config.tie_embeddings ? token_embedding : lm_head;
  }
};

// Visits every parameter in a fixed order shared by initialization,
// serialization, the optimizer and finite-difference sweeps.
// fn(name, matrix, decayable) — decayable is false for biases and norms.
template <class S, class Fn>
void visit_params(FidModel<S> &m, Fn &&fn) {
  auto ln = [&](const std::string &prefix, LayerNormParams<S> &p) {
    fn(prefix + ".gamma", p.gamma, false);
    fn(prefix + ".beta", p.beta, false);
  };
  auto attn = [&](const std::string &prefix, AttentionParams<S> &p) {
    fn(prefix + ".wq", p.wq, true);
    fn(prefix + ".bq", p.bq, false);
    fn(prefix + ".wk", p.wk, true);
    fn(prefix + ".bk", p.bk, false);
    fn(prefix + ".wv", p.wv, true);
    fn(prefix + ".bv", p.bv, false);
    fn(prefix + ".wo", p.wo, true);
    fn(prefix + ".bo", p.bo, false);
  };
  auto ffn = [&](const std::string &prefix, FfnParams<S> &p) {
    fn(prefix + ".w1", p.w1, true);
    fn(prefix + ".b1", p.b1, false);
    fn(prefix + ".w2", p.w2, true);
    fn(prefix + ".b2", p.b2, false);
  };

  fn("token_embedding", m.token_embedding, true);
  for (size_t i = 0; i < m.encoder.size(); ++i) {
    std::string p = "encoder." + std::to_string(i);
    ln(p + ".ln1", m.encoder[i].ln1);
    attn(p + ".attn", m.encoder[i].attn);
    ln(p + ".ln2", m.encoder[i].ln2);
    ffn(p + ".ffn", m.encoder[i].ffn);
  }
  ln("encoder_norm", m.encoder_norm);
  for (size_t i = 0; i < m.decoder.size(); ++i) {
    std::string p = "decoder." + std::to_string(i);
    ln(p + ".ln1", m.decoder[i].ln1);
    attn(p + ".self_attn", m.decoder[i].self_attn);
    ln(p + ".ln2", m.decoder[i].ln2);
    attn(p + ".cross_attn", m.decoder[i].cross_attn);
    ln(p + ".ln3", m.decoder[i].ln3);
    ffn(p + ".ffn", m.decoder[i].ffn);
  }
  ln("decoder_norm", m.decoder_norm);
  if (!m.config.tie_embeddings) fn("lm_head", m.lm_head, true);
}

template <class S, class Fn>
void visit_params(const FidModel<S> &m, Fn &&fn) {
  visit_params(const_cast<FidModel<S> &>(m),
               [&](const std::string &name, Mat<S> &mat, bool decayable) {
                 fn(name, const_cast<const Mat<S> &>(mat), decayable);
               });
}

namespace detail {

template <class S>
void shape_params(FidModel<S> &m) {
  const ModelConfig &c = m.config;
  int h = c.hidden, f = c.ffn(), v = c.vocab_size;
  auto ln = [&](LayerNormParams<S> &p) {
    p.gamma.setOnes(1, h);
    p.beta.setZero(1, h);
  };
  auto attn = [&](AttentionParams<S> &p) {
    p.wq.setZero(h, h);
    p.wk.setZero(h, h);
    p.wv.setZero(h, h);
    p.wo.setZero(h, h);
    p.bq.setZero(1, h);
    p.bk.setZero(1, h);
    p.bv.setZero(1, h);
    p.bo.setZero(1, h);
  };
  auto ffn = [&](FfnParams<S> &p) {
    p.w1.setZero(f, h);
    p.b1.setZero(1, f);
    p.w2.setZero(h, f);
    p.b2.setZero(1, h);
  };
  m.token_embedding.setZero(v, h);
  m.encoder.resize(c.layers);
  m.decoder.resize(c.layers);
  for (auto &l : m.encoder) {
    ln(l.ln1);
    attn(l.attn);
    ln(l.ln2);
    ffn(l.ffn);
  }
  ln(m.encoder_norm);
  for (auto &l : m.decoder) {
    ln(l.ln1);
    attn(l.self_attn);
    ln(l.ln2);
    attn(l.cross_attn);
    ln(l.ln3);
    ffn(l.ffn);
  }
  ln(m.decoder_norm);
  if (!c.tie_embeddings) m.lm_head.setZero(v, h);
}

}  // namespace detail

// All parameters zero except layer-norm gains; gradients and optimizer
// moments reuse the model struct as a shape-matched container.
template <class S>
FidModel<S> zeros_like(const ModelConfig &config) {
  FidModel<S> m;
  m.config = config;
  m.config.validate();
  detail::shape_params(m);
  for (auto &l : m.encoder) {
    l.ln1.gamma.setZero();
    l.ln2.gamma.setZero();
  }
  m.encoder_norm.gamma.setZero();
  for (auto &l : m.decoder) {
    l.ln1.gamma.setZero();
    l.ln2.gamma.setZero();
    l.ln3.gamma.setZero();
  }
  m.decoder_norm.gamma.setZero();
  return m;
}

// Gaussian init with per-matrix scale 1/sqrt(fan_in); embeddings at
// 1/sqrt(h) so that the sqrt(h)-scaled input rows are unit-normed.
template <class S>
FidModel<S> init_model(const ModelConfig &config) {
  FidModel<S> m;
  m.config = config;
  m.config.validate();
  detail::shape_params(m);
  ParamRng rng(config.seed);
  visit_params(m, [&](const std::string &name, Mat<S> &mat, bool decayable) {
    (void)name;
    if (!decayable) return;  // biases stay zero, norms stay (1, 0)
    double scale = 1.0 / std::sqrt(static_cast<double>(mat.cols()));
    for (Eigen::Index c = 0; c < mat.cols(); ++c)
      for (Eigen::Index r = 0; r < mat.rows(); ++r)
        mat(r, c) = static_cast<S>(rng.gaussian() * scale);
  });
  return m;
}

// ---------------------------------------------------------------------------
// Forward primitives

constexpr double kLayerNormEps = 1e-5;

template <class S>
struct LayerNormCache {
  Mat<S> xhat;
  Vec<S> inv_std;
};

template <class S>
Mat<S> layer_norm(const Mat<S> &x, const LayerNormParams<S> &p, LayerNormCache<S> *cache) {
  const Eigen::Index h = x.cols();
  Mat<S> xhat(x.rows(), h);
  Vec<S> inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    S mean = x.row(i).mean();
    S var = (x.row(i).array() - mean).square().mean();
    S inv = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
    xhat.row(i) = (x.row(i).array() - mean) * inv;
    inv_std(i) = inv;
  }
  Mat<S> y = (xhat.array().rowwise() * p.gamma.row(0).array()).rowwise() + p.beta.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <class S>
Mat<S> layer_norm_backward(const Mat<S> &dy, const LayerNormParams<S> &p,
                           const LayerNormCache<S> &cache, LayerNormParams<S> &grad) {
  grad.gamma.row(0).array() += (dy.array() * cache.xhat.array()).colwise().sum();
  grad.beta.row(0).array() += dy.array().colwise().sum();
  Mat<S> dxhat = dy.array().rowwise() * p.gamma.row(0).array();
  Mat<S> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    S m1 = dxhat.row(i).mean();
    S m2 = (dxhat.row(i).array() * cache.xhat.row(i).array()).mean();
    dx.row(i) = (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2) * cache.inv_std(i);
  }
  return dx;
}

// Rows with all keys masked never occur: encoder inputs keep at least the
// question tokens and decoder prefixes keep BOS.
template <class S>
void softmax_rows_inplace(Mat<S> &x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    S m = x.row(i).maxCoeff();
    x.row(i) = (x.row(i).array() - m).exp();
    x.row(i) /= x.row(i).sum();
  }
}

template <class S>
struct AttentionCache {
  Mat<S> q_in, kv_in;         // layer-normed inputs
  Mat<S> q, k, v;             // projections, (Lq,h) / (Lk,h)
  std::vector<Mat<S>> probs;  // per head, (Lq, Lk)
  Mat<S> context;             // concatenated head outputs, (Lq, h)
};

// Scaled dot-product multi-head attention. key_mask (when given) disables
// attending TO masked key positions by forcing their scores to -inf, which
// makes outputs bitwise independent of masked-position content. causal
// additionally restricts row i to keys 0..i.
template <class S>
Mat<S> attention(const AttentionParams<S> &p, const Mat<S> &q_in, const Mat<S> &kv_in,
                 const std::vector<uint8_t> *key_mask, bool causal, int heads,
                 AttentionCache<S> *cache) {
  const Eigen::Index lq = q_in.rows(), lk = kv_in.rows(), h = q_in.cols();
  const Eigen::Index d = h / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(d));
  const S neg_inf = -std::numeric_limits<S>::infinity();

  Mat<S> q = (q_in * p.wq.transpose()).rowwise() + p.bq.row(0);
  Mat<S> k = (kv_in * p.wk.transpose()).rowwise() + p.bk.row(0);
  Mat<S> v = (kv_in * p.wv.transpose()).rowwise() + p.bv.row(0);

  Mat<S> context(lq, h);
  std::vector<Mat<S>> probs(static_cast<size_t>(heads));
  for (int head = 0; head < heads; ++head) {
    auto qh = q.middleCols(head * d, d);
    auto kh = k.middleCols(head * d, d);
    auto vh = v.middleCols(head * d, d);
    Mat<S> scores = qh * kh.transpose() * scale;
    if (key_mask) {
      for (Eigen::Index j = 0; j < lk; ++j)
        if (!(*key_mask)[static_cast<size_t>(j)]) scores.col(j).setConstant(neg_inf);
    }
    if (causal) {
      for (Eigen::Index i = 0; i < lq; ++i)
        for (Eigen::Index j = i + 1; j < lk; ++j) scores(i, j) = neg_inf;
    }
    softmax_rows_inplace(scores);
    context.middleCols(head * d, d) = scores * vh;
    probs[static_cast<size_t>(head)] = std::move(scores);
  }

  Mat<S> out = (context * p.wo.transpose()).rowwise() + p.bo.row(0);
  if (cache) {
    cache->q_in = q_in;
    cache->kv_in = kv_in;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->context = std::move(context);
  }
  return out;
}

// Returns gradient w.r.t. q_in and accumulates into d_kv_in (which may
// alias a fused-state gradient for cross-attention).
template <class S>
Mat<S> attention_backward(const AttentionParams<S> &p, const AttentionCache<S> &cache,
                          const Mat<S> &d_out, int heads, AttentionParams<S> &grad,
                          Mat<S> &d_kv_in) {
  const Eigen::Index lq = cache.q_in.rows(), h = cache.q_in.cols();
  const Eigen::Index d = h / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(d));

  grad.bo.row(0) += d_out.colwise().sum();
  grad.wo += d_out.transpose() * cache.context;
  Mat<S> d_context = d_out * p.wo;

  Mat<S> dq(lq, h), dk(cache.kv_in.rows(), h), dv(cache.kv_in.rows(), h);
  for (int head = 0; head < heads; ++head) {
    const Mat<S> &probs = cache.probs[static_cast<size_t>(head)];
    auto vh = cache.v.middleCols(head * d, d);
    auto qh = cache.q.middleCols(head * d, d);
    auto kh = cache.k.middleCols(head * d, d);
    auto dch = d_context.middleCols(head * d, d);

    Mat<S> d_probs = dch * vh.transpose();
    dv.middleCols(head * d, d) = probs.transpose() * dch;

    // softmax backward per row; masked entries have probs == 0 so their
    // score gradient vanishes even though the forward score was -inf.
    Mat<S> d_scores(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      S dot = d_probs.row(i).dot(probs.row(i));
      d_scores.row(i) = (d_probs.row(i).array() - dot) * probs.row(i).array();
    }
    d_scores *= scale;
    dq.middleCols(head * d, d) = d_scores * kh;
    dk.middleCols(head * d, d) = d_scores.transpose() * qh;
  }

  grad.bq.row(0) += dq.colwise().sum();
  grad.bk.row(0) += dk.colwise().sum();
  grad.bv.row(0) += dv.colwise().sum();
  grad.wq += dq.transpose() * cache.q_in;
  grad.wk += dk.transpose() * cache.kv_in;
  grad.wv += dv.transpose() * cache.kv_in;

  d_kv_in += dk * p.wk + dv * p.wv;
  return dq * p.wq;
}

template <class S>
struct FfnCache {
  Mat<S> x, pre;  // input and pre-activation
};

template <class S>
Mat<S> ffn_forward(const FfnParams<S> &p, const Mat<S> &x, FfnCache<S> *cache) {
  Mat<S> pre = (x * p.w1.transpose()).rowwise() + p.b1.row(0);
  Mat<S> act = pre.array().max(S(0));
  Mat<S> out = (act * p.w2.transpose()).rowwise() + p.b2.row(0);
  if (cache) {
    cache->x = x;
    cache->pre = std::move(pre);
  }
  return out;
}

template <class S>
Mat<S> ffn_backward(const FfnParams<S> &p, const FfnCache<S> &cache, const Mat<S> &d_out,
                    FfnParams<S> &grad) {
  Mat<S> act = cache.pre.array().max(S(0));
  grad.b2.row(0) += d_out.colwise().sum();
  grad.w2 += d_out.transpose() * act;
  Mat<S> d_act = d_out * p.w2;
  Mat<S> d_pre = (cache.pre.array() > S(0)).template cast<S>() * d_act.array();
  grad.b1.row(0) += d_pre.colwise().sum();
  grad.w1 += d_pre.transpose() * cache.x;
  return d_pre * p.w1;
}

// Sinusoidal position encoding, rows 0..len-1.
template <class S>
Mat<S> position_encoding(Eigen::Index len, Eigen::Index h) {
  Mat<S> pe(len, h);
  for (Eigen::Index pos = 0; pos < len; ++pos) {
    for (Eigen::Index i = 0; i < h; i += 2) {
      double angle = static_cast<double>(pos) /
                     std::pow(10000.0, static_cast<double>(i) / static_cast<double>(h));
      pe(pos, i) = static_cast<S>(std::sin(angle));
      if (i + 1 < h) pe(pos, i + 1) = static_cast<S>(std::cos(angle));
    }
  }
  return pe;
}

template <class S>
Mat<S> embed_tokens(const FidModel<S> &m, const std::vector<int> &tokens) {
  const Eigen::Index h = m.config.hidden;
  const S emb_scale = std::sqrt(static_cast<S>(h));
  Mat<S> x(static_cast<Eigen::Index>(tokens.size()), h);
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || tokens[i] >= m.config.vocab_size)
      throw std::out_of_range("token id " + std::to_string(tokens[i]) +
                              " outside vocabulary of size " + std::to_string(m.config.vocab_size));
    x.row(static_cast<Eigen::Index>(i)) = m.token_embedding.row(tokens[i]) * emb_scale;
  }
  x += position_encoding<S>(x.rows(), h);
  return x;
}

// ---------------------------------------------------------------------------
// Encoder

template <class S>
struct EncodedPassage {
  Mat<S> hidden;                  // (L, h)
  std::vector<uint8_t> key_mask;  // 1 = real token, 0 = padding
};

template <class S>
struct EncoderLayerCache {
  Mat<S> x_in;
  LayerNormCache<S> ln1;
  AttentionCache<S> attn;
  Mat<S> x_mid;
  LayerNormCache<S> ln2;
  FfnCache<S> ffn;
};

template <class S>
struct EncoderCache {
  std::vector<int> tokens;
  std::vector<EncoderLayerCache<S>> layers;
  LayerNormCache<S> final_ln;
  Mat<S> final_ln_in;
};

// key_mask may be supplied explicitly (1 = real token); by default padding
// positions are the ones holding the pad id. Masked positions never feed
// any attention key or value, so outputs are independent of their content.
template <class S>
EncodedPassage<S> encode(const FidModel<S> &m, const std::vector<int> &tokens,
                         EncoderCache<S> *cache = nullptr,
                         const std::vector<uint8_t> *key_mask = nullptr) {
  if (tokens.empty()) throw std::invalid_argument("encode: empty token sequence");
  if (key_mask && key_mask->size() != tokens.size())
    throw std::invalid_argument("encode: key_mask length mismatch");
  std::vector<uint8_t> mask(tokens.size());
  if (key_mask)
    mask = *key_mask;
  else
    for (size_t i = 0; i < tokens.size(); ++i) mask[i] = tokens[i] != Tokenizer::kPad;

  Mat<S> x = embed_tokens(m, tokens);
  if (cache) {
    cache->tokens = tokens;
    cache->layers.resize(m.encoder.size());
  }
  for (size_t li = 0; li < m.encoder.size(); ++li) {
    const EncoderLayerParams<S> &layer = m.encoder[li];
    EncoderLayerCache<S> *lc = cache ? &cache->layers[li] : nullptr;
    if (lc) lc->x_in = x;
    Mat<S> normed = layer_norm(x, layer.ln1, lc ? &lc->ln1 : nullptr);
    x += attention(layer.attn, normed, normed, &mask, /*causal=*/false, m.config.heads,
                   lc ? &lc->attn : nullptr);
    if (lc) lc->x_mid = x;
    Mat<S> normed2 = layer_norm(x, layer.ln2, lc ? &lc->ln2 : nullptr);
    x += ffn_forward(layer.ffn, normed2, lc ? &lc->ffn : nullptr);
  }
  if (cache) cache->final_ln_in = x;
  Mat<S> out = layer_norm(x, m.encoder_norm, cache ? &cache->final_ln : nullptr);
  return {std::move(out), std::move(mask)};
}

// Accumulates parameter gradients given the gradient of the encoder
// output, and returns nothing: token embeddings absorb the input gradient.
template <class S>
void encode_backward(const FidModel<S> &m, const EncoderCache<S> &cache, const Mat<S> &d_out,
                     FidModel<S> &grad) {
  std::vector<uint8_t> mask(cache.tokens.size());
  for (size_t i = 0; i < cache.tokens.size(); ++i) mask[i] = cache.tokens[i] != Tokenizer::kPad;

  Mat<S> dx = layer_norm_backward(d_out, m.encoder_norm, cache.final_ln, grad.encoder_norm);
  for (size_t li = m.encoder.size(); li-- > 0;) {
    const EncoderLayerParams<S> &layer = m.encoder[li];
    const EncoderLayerCache<S> &lc = cache.layers[li];
    Mat<S> d_ffn_in = ffn_backward(layer.ffn, lc.ffn, dx, grad.encoder[li].ffn);
    dx += layer_norm_backward(d_ffn_in, layer.ln2, lc.ln2, grad.encoder[li].ln2);
    Mat<S> d_kv = Mat<S>::Zero(dx.rows(), dx.cols());
    Mat<S> d_q = attention_backward(layer.attn, lc.attn, dx, m.config.heads,
                                    grad.encoder[li].attn, d_kv);
    dx += layer_norm_backward(Mat<S>(d_q + d_kv), layer.ln1, lc.ln1, grad.encoder[li].ln1);
  }
  const S emb_scale = std::sqrt(static_cast<S>(m.config.hidden));
  for (size_t i = 0; i < cache.tokens.size(); ++i)
    grad.token_embedding.row(cache.tokens[i]) += dx.row(static_cast<Eigen::Index>(i)) * emb_scale;
}

// ---------------------------------------------------------------------------
// Fusion

template <class S>
struct FusedState {
  Mat<S> hidden;                          // (k*L, h)
  std::vector<uint8_t> key_mask;          // k*L entries
  std::vector<Eigen::Index> passage_boundaries;  // k row offsets
};

template <class S>
FusedState<S> fuse(const std::vector<EncodedPassage<S>> &encodings) {
  if (encodings.empty()) throw std::invalid_argument("fuse: need at least one encoding");
  const Eigen::Index l = encodings.front().hidden.rows();
  const Eigen::Index h = encodings.front().hidden.cols();
  for (const auto &e : encodings)
    if (e.hidden.rows() != l || e.hidden.cols() != h)
      throw std::invalid_argument("fuse: encodings disagree in shape");

  FusedState<S> fused;
  fused.hidden.resize(l * static_cast<Eigen::Index>(encodings.size()), h);
  fused.key_mask.reserve(static_cast<size_t>(l) * encodings.size());
  for (size_t i = 0; i < encodings.size(); ++i) {
    fused.passage_boundaries.push_back(static_cast<Eigen::Index>(i) * l);
    fused.hidden.middleRows(static_cast<Eigen::Index>(i) * l, l) = encodings[i].hidden;
    fused.key_mask.insert(fused.key_mask.end(), encodings[i].key_mask.begin(),
                          encodings[i].key_mask.end());
  }
  return fused;
}

// ---------------------------------------------------------------------------
// Decoder

template <class S>
struct DecoderLayerCache {
  Mat<S> x_in;
  LayerNormCache<S> ln1;
  AttentionCache<S> self_attn;
  Mat<S> x_mid1;
  LayerNormCache<S> ln2;
  AttentionCache<S> cross_attn;
  Mat<S> x_mid2;
  LayerNormCache<S> ln3;
  FfnCache<S> ffn;
};

template <class S>
struct DecoderCache {
  std::vector<int> input_tokens;
  std::vector<DecoderLayerCache<S>> layers;
  LayerNormCache<S> final_ln;
  Mat<S> final_out;  // (T, h) after final norm
};

// Teacher-forced decoder pass over input_tokens; returns logits (T, V).
template <class S>
Mat<S> decoder_forward(const FidModel<S> &m, const FusedState<S> &fused,
                       const std::vector<int> &input_tokens, DecoderCache<S> *cache = nullptr) {
  if (input_tokens.empty()) throw std::invalid_argument("decoder_forward: empty input");
  Mat<S> x = embed_tokens(m, input_tokens);
  if (cache) {
    cache->input_tokens = input_tokens;
    cache->layers.resize(m.decoder.size());
  }
  for (size_t li = 0; li < m.decoder.size(); ++li) {
    const DecoderLayerParams<S> &layer = m.decoder[li];
    DecoderLayerCache<S> *lc = cache ? &cache->layers[li] : nullptr;
    if (lc) lc->x_in = x;
    Mat<S> n1 = layer_norm(x, layer.ln1, lc ? &lc->ln1 : nullptr);
    x += attention(layer.self_attn, n1, n1, nullptr, /*causal=*/true, m.config.heads,
                   lc ? &lc->self_attn : nullptr);
    if (lc) lc->x_mid1 = x;
    Mat<S> n2 = layer_norm(x, layer.ln2, lc ? &lc->ln2 : nullptr);
    x += attention(layer.cross_attn, n2, fused.hidden, &fused.key_mask, /*causal=*/false,
                   m.config.heads, lc ? &lc->cross_attn : nullptr);
    if (lc) lc->x_mid2 = x;
    Mat<S> n3 = layer_norm(x, layer.ln3, lc ? &lc->ln3 : nullptr);
    x += ffn_forward(layer.ffn, n3, lc ? &lc->ffn : nullptr);
  }
  Mat<S> out = layer_norm(x, m.decoder_norm, cache ? &cache->final_ln : nullptr);
  if (cache) cache->final_out = out;
  return out * m.output_weights().transpose();
}

// Backward through the decoder given d_logits; accumulates parameter
// gradients and the fused-state gradient.
template <class S>
void decoder_backward(const FidModel<S> &m, const FusedState<S> &fused,
                      const DecoderCache<S> &cache, const Mat<S> &d_logits, FidModel<S> &grad,
                      Mat<S> &d_fused) {
  Mat<S> &d_output_w = m.config.tie_embeddings ? grad.token_embedding : grad.lm_head;
  d_output_w += d_logits.transpose() * cache.final_out;
  Mat<S> dx = d_logits * m.output_weights();

  dx = layer_norm_backward(dx, m.decoder_norm, cache.final_ln, grad.decoder_norm);
  for (size_t li = m.decoder.size(); li-- > 0;) {
    const DecoderLayerParams<S> &layer = m.decoder[li];
    const DecoderLayerCache<S> &lc = cache.layers[li];
    Mat<S> d_ffn_in = ffn_backward(layer.ffn, lc.ffn, dx, grad.decoder[li].ffn);
    dx += layer_norm_backward(d_ffn_in, layer.ln3, lc.ln3, grad.decoder[li].ln3);
    Mat<S> d_q = attention_backward(layer.cross_attn, lc.cross_attn, dx, m.config.heads,
                                    grad.decoder[li].cross_attn, d_fused);
    dx += layer_norm_backward(d_q, layer.ln2, lc.ln2, grad.decoder[li].ln2);
    Mat<S> d_kv = Mat<S>::Zero(dx.rows(), dx.cols());
    Mat<S> d_q2 = attention_backward(layer.self_attn, lc.self_attn, dx, m.config.heads,
                                     grad.decoder[li].self_attn, d_kv);
    dx += layer_norm_backward(Mat<S>(d_q2 + d_kv), layer.ln1, lc.ln1, grad.decoder[li].ln1);
  }
  const S emb_scale = std::sqrt(static_cast<S>(m.config.hidden));
  for (size_t i = 0; i < cache.input_tokens.size(); ++i)
    grad.token_embedding.row(cache.input_tokens[i]) +=
        dx.row(static_cast<Eigen::Index>(i)) * emb_scale;
}

// Distribution over the vocabulary for the token following prefix_tokens
// (generated tokens so far; BOS is implicit).
template <class S>
Vec<S> decode_step(const FidModel<S> &m, const FusedState<S> &fused,
                   const std::vector<int> &prefix_tokens) {
  if (static_cast<int>(prefix_tokens.size()) >= m.config.max_decode_len)
    throw std::invalid_argument("decode_step: prefix length " +
                                std::to_string(prefix_tokens.size()) +
                                " must stay below max_decode_len " +
                                std::to_string(m.config.max_decode_len));
  std::vector<int> input;
  input.reserve(prefix_tokens.size() + 1);
  input.push_back(Tokenizer::kBos);
  input.insert(input.end(), prefix_tokens.begin(), prefix_tokens.end());
  Mat<S> logits = decoder_forward(m, fused, input);
  Vec<S> row = logits.row(logits.rows() - 1).transpose();
  S mx = row.maxCoeff();
  Vec<S> probs = (row.array() - mx).exp();
  probs /= probs.sum();
  return probs;
}

// Mean over target positions of -ln P(target_j | target_<j, fused), with
// padding positions excluded.
template <class S>
S cross_entropy_from_logits(const Mat<S> &logits, const std::vector<int> &target,
                            Mat<S> *d_logits = nullptr) {
  if (target.empty()) throw std::invalid_argument("cross_entropy: empty target");
  if (logits.rows() != static_cast<Eigen::Index>(target.size()))
    throw std::invalid_argument("cross_entropy: logits/target length mismatch");

  Eigen::Index active = 0;
  for (int t : target)
    if (t != Tokenizer::kPad) ++active;
  if (active == 0) throw std::invalid_argument("cross_entropy: target is all padding");

  if (d_logits) d_logits->setZero(logits.rows(), logits.cols());
  S total = S(0);
  const S inv_n = S(1) / static_cast<S>(active);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int t = target[static_cast<size_t>(i)];
    if (t == Tokenizer::kPad) continue;
    S mx = logits.row(i).maxCoeff();
    Vec<S> p = (logits.row(i).array() - mx).exp();
    S z = p.sum();
    total += -(logits(i, t) - mx - std::log(z));
    if (d_logits) {
      d_logits->row(i) = (p / z).transpose() * inv_n;
      (*d_logits)(i, t) -= inv_n;
    }
  }
  return total * inv_n;
}

// Decoder input for teacher forcing: BOS followed by all but the last
// target token.
inline std::vector<int> shift_right(const std::vector<int> &target) {
  std::vector<int> input;
  input.reserve(target.size());
  input.push_back(Tokenizer::kBos);
  input.insert(input.end(), target.begin(), target.end() - 1);
  return input;
}

template <class S>
S training_loss(const FidModel<S> &m, const FusedState<S> &fused, const std::vector<int> &target) {
  if (target.empty()) throw std::invalid_argument("training_loss: empty target");
  if (static_cast<int>(target.size()) > m.config.max_decode_len)
    throw std::invalid_argument("training_loss: target longer than max_decode_len");
  Mat<S> logits = decoder_forward(m, fused, shift_right(target));
  return cross_entropy_from_logits(logits, target);
}

// ---------------------------------------------------------------------------
// Full forward/backward over one example (k token sequences + target)

template <class S>
struct ForwardTrace {
  std::vector<EncoderCache<S>> encoder_caches;
  FusedState<S> fused;
  DecoderCache<S> decoder_cache;
  Mat<S> logits;
  std::vector<int> target;
  S loss = S(0);
};

template <class S>
ForwardTrace<S> forward(const FidModel<S> &m, const std::vector<std::vector<int>> &passage_tokens,
                        const std::vector<int> &target) {
  if (passage_tokens.empty()) throw std::invalid_argument("forward: need at least one passage");
  if (target.empty()) throw std::invalid_argument("forward: empty target");
  ForwardTrace<S> trace;
  trace.target = target;
  trace.encoder_caches.resize(passage_tokens.size());
  std::vector<EncodedPassage<S>> encodings;
  encodings.reserve(passage_tokens.size());
  for (size_t i = 0; i < passage_tokens.size(); ++i)
    encodings.push_back(encode(m, passage_tokens[i], &trace.encoder_caches[i]));
  trace.fused = fuse(encodings);
  trace.logits = decoder_forward(m, trace.fused, shift_right(target), &trace.decoder_cache);
  trace.loss = cross_entropy_from_logits(trace.logits, target);
  return trace;
}

// Accumulates the gradient of the traced example's loss into grad.
template <class S>
void backward(const FidModel<S> &m, const ForwardTrace<S> &trace, FidModel<S> &grad) {
  Mat<S> d_logits;
  cross_entropy_from_logits(trace.logits, trace.target, &d_logits);
  Mat<S> d_fused = Mat<S>::Zero(trace.fused.hidden.rows(), trace.fused.hidden.cols());
  decoder_backward(m, trace.fused, trace.decoder_cache, d_logits, grad, d_fused);
  const Eigen::Index k = static_cast<Eigen::Index>(trace.encoder_caches.size());
  const Eigen::Index l = trace.fused.hidden.rows() / k;
  for (Eigen::Index i = 0; i < k; ++i)
    encode_backward(m, trace.encoder_caches[static_cast<size_t>(i)],
                    Mat<S>(d_fused.middleRows(i * l, l)), grad);
}

// ---------------------------------------------------------------------------
// Cross-attention attribution

template <class S>
struct AttributionTrace {
  // cross_probs[layer][head]: (T, k*L) attention rows for the generated
  // positions.
  std::vector<std::vector<Mat<S>>> cross_probs;
  std::vector<S> scores;  // per passage, sums to 1
};

// Averages decoder cross-attention over layers, heads and generated
// positions, sums the result within each passage block, and normalizes.
template <class S>
AttributionTrace<S> attribution(const FidModel<S> &m, const FusedState<S> &fused,
                                const std::vector<int> &generated_tokens) {
  if (generated_tokens.empty())
    throw std::invalid_argument("attribution: no generated tokens");
  DecoderCache<S> cache;
  decoder_forward(m, fused, shift_right(generated_tokens), &cache);

  AttributionTrace<S> trace;
  trace.cross_probs.resize(m.decoder.size());
  for (size_t li = 0; li < m.decoder.size(); ++li)
    trace.cross_probs[li] = cache.layers[li].cross_attn.probs;

  const size_t k = fused.passage_boundaries.size();
  const Eigen::Index block = fused.hidden.rows() / static_cast<Eigen::Index>(k);
  Vec<S> mean_over_keys = Vec<S>::Zero(fused.hidden.rows());
  S denom = S(0);
  for (const auto &layer_probs : trace.cross_probs)
    for (const Mat<S> &head_probs : layer_probs) {
      mean_over_keys += head_probs.colwise().sum().transpose();
      denom += static_cast<S>(head_probs.rows());
    }
  mean_over_keys /= denom;

  trace.scores.resize(k);
  S total = S(0);
  for (size_t i = 0; i < k; ++i) {
    S s = mean_over_keys.segment(static_cast<Eigen::Index>(i) * block, block).sum();
    trace.scores[i] = s;
    total += s;
  }
  for (S &s : trace.scores) s /= total;
  return trace;
}

// ---------------------------------------------------------------------------
// Input construction

// Token ids of "question: {Q} {caption} {labels...} {ocr...} title: {title}
// context: {body}", truncated then padded to max_len.
std::vector<int> build_input(const Tokenizer &tokenizer, const std::string &question,
                             const VisualContext &visual, const Passage &passage, int max_len);

std::string build_input_text(const std::string &question, const VisualContext &visual,
                             const Passage &passage);

}  // namespace fid
}  // namespace ragqa

#endif  // RAGQA_FID_HPP
