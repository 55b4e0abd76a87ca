#pragma once

#include <vector>

#include "ttrk/autodiff.hpp"
#include "ttrk/corpus.hpp"
#include "ttrk/encoder.hpp"
#include "ttrk/model.hpp"

namespace ttrk {

// Token positions the topic attention may attend to: real tokens excluding
// [CLS], [SEP] and [PAD].
inline std::vector<int> attendable_positions(const EncodedPair& pair) {
  std::vector<int> out;
  for (int i = 0; i < pair.length(); ++i) {
    if (pair.attention_mask[i] == 0) continue;
    const int id = pair.token_ids[i];
    if (id == kClsId || id == kSepId || id == kPadId) continue;
    out.push_back(i);
  }
  return out;
}

// Additive attention with the [CLS] state as query over the attendable token
// states; returns the topic vector [T_cls ; T_topic] of length 2*d_model.
// With no attendable position, T_topic falls back to T_cls.
template <class T>
typename Graph<T>::Var topic_attention(Graph<T>& g, BoundParams<T>& p,
                                       typename Graph<T>::Var hidden,
                                       const std::vector<int>& attendable) {
  auto cls = g.row(hidden, 0);
  if (attendable.empty()) {
    return g.concat_vecs({cls, cls});
  }
  auto tokens = g.gather_rows(hidden, attendable);           // K x d
  auto query = g.matvec(p["topic.w_a"], cls);                // W_a T_cls
  auto keys = g.matmul_t(tokens, p["topic.u_a"]);            // rows U_a T_j
  auto energy = g.matvec(g.tanh_op(g.add_rowvec(keys, query)), p["topic.v_a"]);
  auto weights = g.softmax_vec(energy);
  auto t_topic = g.tmatvec(tokens, weights);                 // sum a_j T_j
  return g.concat_vecs({cls, t_topic});
}

// Rows of the context topic matrix T: each context utterance paired with the
// candidate, encoded, passed through topic attention.
template <class T>
typename Graph<T>::Var encode_context(Graph<T>& g, BoundParams<T>& p,
                                      const Conversation& context,
                                      const Utterance& candidate,
                                      bool train_mode = false,
                                      Rng* rng = nullptr) {
  if (context.utterances.empty())
    throw std::invalid_argument("encode_context: empty context");
  std::vector<typename Graph<T>::Var> rows;
  for (const auto& u : context.utterances) {
    EncodedPair pair = encode_pair(u, candidate, p.model->vocab);
    auto hidden = encoder_forward(g, p, pair, train_mode, rng);
    rows.push_back(topic_attention(g, p, hidden, attendable_positions(pair)));
  }
  return g.stack_rows(rows);
}

}  // namespace ttrk
