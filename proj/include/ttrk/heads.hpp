#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ttrk/autodiff.hpp"
#include "ttrk/model.hpp"

namespace ttrk {

struct MultiTaskWeights {
  double alpha = 1.0;  // response selection
  double beta = 0.5;   // topic prediction
  double gamma = 0.5;  // disentanglement

  void validate() const {
    if (alpha <= 0.0 && beta <= 0.0 && gamma <= 0.0)
      throw std::invalid_argument("multi-task weights: at least one weight must be > 0");
  }
};

// sigmoid(w_p . t) -- probability that the pair shares a topic.
template <class T>
typename Graph<T>::Var topic_predict(Graph<T>& g, BoundParams<T>& p,
                                     typename Graph<T>::Var topic_vector) {
  return g.sigmoid_op(g.dot(p["head.w_p"], topic_vector));
}

template <class T>
typename Graph<T>::Var topic_predict_loss(Graph<T>& g, BoundParams<T>& p,
                                          typename Graph<T>::Var topic_vector,
                                          int label) {
  return g.bce_logit(g.dot(p["head.w_p"], topic_vector), label);
}

// Scaled dot-product self-attention over the context topic matrix; the scale
// uses the actual vector width 2*d_model.
template <class T>
typename Graph<T>::Var self_attend(Graph<T>& g, BoundParams<T>& p,
                                   typename Graph<T>::Var topic_matrix) {
  const int width = g.val(topic_matrix).cols();
  auto q = g.matmul(topic_matrix, p["head.wq"]);
  auto k = g.matmul(topic_matrix, p["head.wk"]);
  auto v = g.matmul(topic_matrix, p["head.wv"]);
  auto probs = g.row_softmax(g.scale(g.matmul_t(q, k), T(1) / std::sqrt(T(width))));
  return g.matmul(probs, v);
}

// Column-wise max pool then a 2-class softmax; index 0 is the positive
// (relevant) class.
template <class T>
typename Graph<T>::Var response_logits(Graph<T>& g, BoundParams<T>& p,
                                       typename Graph<T>::Var attended) {
  return g.matvec(p["head.w_r"], g.col_max(attended));
}

// Cross entropy against the relevance label (1 = relevant -> class 0).
template <class T>
typename Graph<T>::Var response_loss(Graph<T>& g, BoundParams<T>& p,
                                     typename Graph<T>::Var attended,
                                     int relevant) {
  return g.softmax_ce(response_logits(g, p, attended), relevant ? 0 : 1);
}

// ESIM-style interaction rows [t'_n ; t'_c ; t'_n (.) t'_c ; t'_n - t'_c] for
// every row c including the last (the self row).
template <class T>
typename Graph<T>::Var esim_features(Graph<T>& g,
                                     typename Graph<T>::Var attended) {
  const int n = g.val(attended).rows();
  auto target = g.row(attended, n - 1);
  std::vector<typename Graph<T>::Var> rows;
  for (int c = 0; c < n; ++c) {
    auto tc = g.row(attended, c);
    rows.push_back(g.concat_vecs(
        {target, tc, g.mul(target, tc), g.sub(target, tc)}));
  }
  return g.stack_rows(rows);
}

// softmax(T'' w_d) over the window positions.
template <class T>
typename Graph<T>::Var disentangle_logits(Graph<T>& g, BoundParams<T>& p,
                                          typename Graph<T>::Var esim) {
  return g.matvec(esim, p["head.w_d"]);
}

template <class T>
typename Graph<T>::Var disentangle_loss(Graph<T>& g, BoundParams<T>& p,
                                        typename Graph<T>::Var esim,
                                        int gold_parent) {
  return g.softmax_ce(disentangle_logits(g, p, esim), gold_parent);
}

// alpha * L_rs + beta * L_topic + gamma * L_dis; absent tasks contribute 0.
template <class T>
typename Graph<T>::Var multitask_loss(Graph<T>& g,
                                      typename Graph<T>::Var loss_rs,
                                      typename Graph<T>::Var loss_topic,
                                      typename Graph<T>::Var loss_dis,
                                      const MultiTaskWeights& w) {
  w.validate();
  return g.add(g.add(g.scale(loss_rs, static_cast<T>(w.alpha)),
                     g.scale(loss_topic, static_cast<T>(w.beta))),
               g.scale(loss_dis, static_cast<T>(w.gamma)));
}

inline double multitask_loss(double rs, double topic, double dis,
                             const MultiTaskWeights& w) {
  w.validate();
  return w.alpha * rs + w.beta * topic + w.gamma * dis;
}

// Argmax with ties broken toward the smallest index.
inline int argmax_index(const std::vector<double>& values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace ttrk
