#pragma once

#include <vector>

#include "ttrk/corpus.hpp"
#include "ttrk/heads.hpp"
#include "ttrk/model.hpp"
#include "ttrk/topic.hpp"

namespace ttrk {

// Same-topic label for a (context utterance, candidate) pair: gold topic ids
// when the corpus carries them, otherwise relevance of the candidate.
inline int topic_pair_label(const SelectionInstance& inst, int utterance_idx,
                            int candidate_idx) {
  if (inst.context.topic_ids && inst.candidate_topic_ids) {
    return (*inst.context.topic_ids)[utterance_idx] ==
                   (*inst.candidate_topic_ids)[candidate_idx]
               ? 1
               : 0;
  }
  return candidate_idx == inst.label ? 1 : 0;
}

template <class T>
struct SelectionForward {
  std::vector<typename Graph<T>::Var> candidate_losses;  // 2-class CE per candidate
  std::vector<typename Graph<T>::Var> topic_losses;      // BCE per (u_k, r_j) pair
  std::vector<double> positive_probs;  // detached, reporting only
};

// Shared forward for response selection and topic prediction over one
// instance: per candidate, hard-filter the context, build the topic matrix,
// then both heads reuse it.
template <class T>
SelectionForward<T> selection_forward(Graph<T>& g, BoundParams<T>& p,
                                      const SelectionInstance& inst,
                                      int max_kept = 10, bool train_mode = false,
                                      Rng* rng = nullptr,
                                      bool want_topic = true) {
  SelectionForward<T> out;
  for (std::size_t j = 0; j < inst.candidates.size(); ++j) {
    const Utterance& cand = inst.candidates[j];
    Conversation filtered = hard_context_filter(inst.context, cand, max_kept);
    auto topic_matrix = g.stack_rows([&] {
      std::vector<typename Graph<T>::Var> rows;
      for (const auto& u : filtered.utterances) {
        EncodedPair pair = encode_pair(u, cand, p.model->vocab);
        auto hidden = encoder_forward(g, p, pair, train_mode, rng);
        rows.push_back(topic_attention(g, p, hidden, attendable_positions(pair)));
        if (want_topic) {
          out.topic_losses.push_back(topic_predict_loss(
              g, p, rows.back(),
              topic_pair_label(inst, u.index, static_cast<int>(j))));
        }
      }
      return rows;
    }());
    auto attended = self_attend(g, p, topic_matrix);
    const int relevant = static_cast<int>(j) == inst.label ? 1 : 0;
    auto logits = response_logits(g, p, attended);
    out.candidate_losses.push_back(
        g.softmax_ce(logits, relevant ? 0 : 1));
    const double z0 = static_cast<double>(g.val(logits)(0));
    const double z1 = static_cast<double>(g.val(logits)(1));
    out.positive_probs.push_back(1.0 / (1.0 + std::exp(z1 - z0)));
  }
  return out;
}

// Topic matrix over a full disentanglement window with the target utterance
// as the candidate; the last row is the (target, target) self pair.
template <class T>
typename Graph<T>::Var window_forward(Graph<T>& g, BoundParams<T>& p,
                                      const DisentangleWindow& window,
                                      bool train_mode = false,
                                      Rng* rng = nullptr) {
  Conversation ctx;
  ctx.id = window.source_conversation_id;
  ctx.utterances = window.utterances;
  auto topic_matrix =
      encode_context(g, p, ctx, window.utterances.back(), train_mode, rng);
  return esim_features(g, self_attend(g, p, topic_matrix));
}

// ---- inference helpers (no gradients kept) ----

template <class T>
std::vector<double> score_candidates(ModelParams<T>& model,
                                     const SelectionInstance& inst,
                                     int max_kept = 10) {
  Graph<T> g;
  auto p = bind(g, model);
  std::vector<double> probs;
  for (const auto& cand : inst.candidates) {
    Conversation filtered = hard_context_filter(inst.context, cand, max_kept);
    auto topic_matrix = encode_context(g, p, filtered, cand);
    auto attended = self_attend(g, p, topic_matrix);
    auto dist = g.softmax_vec(response_logits(g, p, attended));
    probs.push_back(static_cast<double>(g.val(dist)(0)));
  }
  return probs;
}

template <class T>
std::vector<double> parent_distribution(ModelParams<T>& model,
                                        const DisentangleWindow& window) {
  Graph<T> g;
  auto p = bind(g, model);
  auto esim = window_forward(g, p, window);
  auto dist = g.softmax_vec(disentangle_logits(g, p, esim));
  std::vector<double> out;
  for (T x : g.val(dist).data) out.push_back(static_cast<double>(x));
  return out;
}

template <class T>
int predict_parent(ModelParams<T>& model, const DisentangleWindow& window) {
  return argmax_index(parent_distribution(model, window));
}

template <class T>
double topic_pair_probability(ModelParams<T>& model, const Utterance& u,
                              const Utterance& r) {
  Graph<T> g;
  auto p = bind(g, model);
  EncodedPair pair = encode_pair(u, r, model.vocab);
  auto hidden = encoder_forward(g, p, pair);
  auto t = topic_attention(g, p, hidden, attendable_positions(pair));
  auto prob = topic_predict(g, p, t);
  return static_cast<double>(g.val(prob)(0));
}

}  // namespace ttrk
