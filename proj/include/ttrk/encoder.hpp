#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttrk/autodiff.hpp"
#include "ttrk/model.hpp"
#include "ttrk/textenc.hpp"

namespace ttrk {

// Transformer encoder over one encoded pair: summed embeddings, then
// n_layers of (masked multi-head self-attention, post-norm residual;
// position-wise feed-forward, post-norm residual).
template <class T>
typename Graph<T>::Var encoder_forward(Graph<T>& g, BoundParams<T>& p,
                                       const EncodedPair& pair,
                                       bool train_mode = false,
                                       Rng* rng = nullptr) {
  const EncoderConfig& cfg = p.model->cfg;
  const int L = pair.length();
  if (L > cfg.max_positions)
    throw std::invalid_argument("encoder_forward: sequence length exceeds max_positions");
  for (int id : pair.token_ids)
    if (id < 0 || id >= cfg.vocab_size)
      throw std::invalid_argument("encoder_forward: token id out of range");
  const T drop = train_mode ? static_cast<T>(cfg.dropout) : T(0);

  std::vector<std::uint8_t> key_mask(pair.attention_mask.begin(),
                                     pair.attention_mask.end());

  auto x = g.embedding_sum(p["emb.tok"], p["emb.pos"], p["emb.seg"],
                           pair.token_ids, pair.segment_ids);
  if (drop > T(0)) x = g.dropout(x, drop, *rng);

  const int d = cfg.d_model;
  const int dh = d / cfg.n_heads;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string pref = "layer" + std::to_string(l) + ".";
    auto q = g.add_rowvec(g.matmul(x, p[pref + "attn.wq"]), p[pref + "attn.bq"]);
    auto k = g.add_rowvec(g.matmul(x, p[pref + "attn.wk"]), p[pref + "attn.bk"]);
    auto v = g.add_rowvec(g.matmul(x, p[pref + "attn.wv"]), p[pref + "attn.bv"]);
    std::vector<typename Graph<T>::Var> heads;
    for (int h = 0; h < cfg.n_heads; ++h) {
      auto qh = g.slice_cols(q, h * dh, dh);
      auto kh = g.slice_cols(k, h * dh, dh);
      auto vh = g.slice_cols(v, h * dh, dh);
      auto scores = g.scale(g.matmul_t(qh, kh), T(1) / std::sqrt(T(dh)));
      auto probs = g.row_softmax(scores, key_mask);
      heads.push_back(g.matmul(probs, vh));
    }
    auto attn = g.add_rowvec(g.matmul(g.concat_cols(heads), p[pref + "attn.wo"]),
                             p[pref + "attn.bo"]);
    if (drop > T(0)) attn = g.dropout(attn, drop, *rng);
    x = g.layer_norm(g.add(x, attn), p[pref + "ln1.g"], p[pref + "ln1.b"]);

    auto ff = g.add_rowvec(
        g.matmul(g.gelu_op(g.add_rowvec(g.matmul(x, p[pref + "ff.w1"]),
                                        p[pref + "ff.b1"])),
                 p[pref + "ff.w2"]),
        p[pref + "ff.b2"]);
    if (drop > T(0)) ff = g.dropout(ff, drop, *rng);
    x = g.layer_norm(g.add(x, ff), p[pref + "ln2.g"], p[pref + "ln2.b"]);
  }
  return x;
}

// Mean cross entropy of the MLM head over labeled positions; 0 when no
// position is labeled.
template <class T>
typename Graph<T>::Var mlm_loss(Graph<T>& g, BoundParams<T>& p,
                                typename Graph<T>::Var hidden,
                                const std::vector<int>& mlm_labels) {
  std::vector<int> positions, targets;
  for (std::size_t i = 0; i < mlm_labels.size(); ++i) {
    if (mlm_labels[i] >= 0) {
      positions.push_back(static_cast<int>(i));
      targets.push_back(mlm_labels[i]);
    }
  }
  if (positions.empty()) return g.constant_scalar(T(0));
  auto picked = g.gather_rows(hidden, positions);
  auto logits = g.add_rowvec(g.matmul(picked, p["mlm.w"]), p["mlm.b"]);
  return g.softmax_ce_rows(logits, targets);
}

// Two-class same-topic logits from the [CLS] state.
template <class T>
typename Graph<T>::Var stp_logits(Graph<T>& g, BoundParams<T>& p,
                                  typename Graph<T>::Var hidden) {
  auto cls = g.row(hidden, 0);
  return g.add(g.tmatvec(p["stp.w"], cls), p["stp.b"]);
}

}  // namespace ttrk
