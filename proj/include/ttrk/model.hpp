#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttrk/autodiff.hpp"
#include "ttrk/rng.hpp"
#include "ttrk/tensor.hpp"
#include "ttrk/textenc.hpp"

namespace ttrk {

struct EncoderConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  double dropout = 0.1;
  int vocab_size = 0;
  int max_positions = kMaxSeqLen;

  void validate() const {
    if (d_model % n_heads != 0)
      throw std::invalid_argument("encoder config: d_model must be divisible by n_heads");
    if (dropout < 0.0 || dropout >= 1.0)
      throw std::invalid_argument("encoder config: dropout must be in [0,1)");
    if (vocab_size < kNumSpecials)
      throw std::invalid_argument("encoder config: vocab_size too small");
  }
};

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.dropout = j.value("dropout", c.dropout);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.max_positions = j.value("max_positions", c.max_positions);
}

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"d_model", c.d_model},   {"n_layers", c.n_layers},
                     {"n_heads", c.n_heads},   {"d_ff", c.d_ff},
                     {"dropout", c.dropout},   {"vocab_size", c.vocab_size},
                     {"max_positions", c.max_positions}};
}

// Named parameter tensors plus matching gradient accumulators. The tensor
// name order (creation order, kept in `names`) is the serialization manifest
// order, so it must stay deterministic.
template <class T>
struct ModelParams {
  EncoderConfig cfg;
  Vocab vocab;
  std::vector<std::string> names;
  std::map<std::string, Tensor<T>> tensors;
  std::map<std::string, Tensor<T>> grads;

  Tensor<T>& at(const std::string& name) { return tensors.at(name); }
  const Tensor<T>& at(const std::string& name) const { return tensors.at(name); }

  void add(const std::string& name, Tensor<T> t) {
    names.push_back(name);
    grads[name] = Tensor<T>::zeros(t.shape);
    tensors[name] = std::move(t);
  }

  void zero_grads() {
    for (auto& [name, g] : grads) {
      std::fill(g.data.begin(), g.data.end(), T(0));
    }
  }

  template <class U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.cfg = cfg;
    out.vocab = vocab;
    for (const auto& name : names) {
      out.add(name, tensors.at(name).template cast<U>());
    }
    return out;
  }

  static ModelParams init(const EncoderConfig& cfg, const Vocab& vocab,
                          std::uint64_t seed) {
    EncoderConfig c = cfg;
    c.vocab_size = vocab.size();
    c.validate();
    ModelParams m;
    m.cfg = c;
    m.vocab = vocab;
    Rng rng(seed);
    const int d = c.d_model;
    const int d2 = 2 * d;
    auto randn = [&rng](std::vector<int> shape) {
      Tensor<T> t = Tensor<T>::zeros(std::move(shape));
      for (auto& x : t.data) x = static_cast<T>(rng.normal(0.0, 0.02));
      return t;
    };
    auto zeros = [](std::vector<int> shape) {
      return Tensor<T>::zeros(std::move(shape));
    };
    auto ones = [](std::vector<int> shape) {
      Tensor<T> t = Tensor<T>::zeros(std::move(shape));
      std::fill(t.data.begin(), t.data.end(), T(1));
      return t;
    };

    m.add("emb.tok", randn({c.vocab_size, d}));
    m.add("emb.pos", randn({c.max_positions, d}));
    m.add("emb.seg", randn({2, d}));
    for (int l = 0; l < c.n_layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
        m.add(p + w, randn({d, d}));
      for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
        m.add(p + b, zeros({d}));
      m.add(p + "ln1.g", ones({d}));
      m.add(p + "ln1.b", zeros({d}));
      m.add(p + "ff.w1", randn({d, c.d_ff}));
      m.add(p + "ff.b1", zeros({c.d_ff}));
      m.add(p + "ff.w2", randn({c.d_ff, d}));
      m.add(p + "ff.b2", zeros({d}));
      m.add(p + "ln2.g", ones({d}));
      m.add(p + "ln2.b", zeros({d}));
    }
    m.add("mlm.w", randn({d, c.vocab_size}));
    m.add("mlm.b", zeros({c.vocab_size}));
    m.add("stp.w", randn({d, 2}));
    m.add("stp.b", zeros({2}));
    m.add("topic.v_a", randn({d}));
    m.add("topic.w_a", randn({d, d}));
    m.add("topic.u_a", randn({d, d}));
    m.add("head.w_p", randn({d2}));
    m.add("head.wq", randn({d2, d2}));
    m.add("head.wk", randn({d2, d2}));
    m.add("head.wv", randn({d2, d2}));
    m.add("head.w_r", randn({2, d2}));
    m.add("head.w_d", randn({4 * d2}));
    return m;
  }

  bool operator==(const ModelParams& other) const {
    if (names != other.names) return false;
    for (const auto& name : names) {
      const auto& a = tensors.at(name);
      const auto& b = other.tensors.at(name);
      if (a.shape != b.shape || a.data != b.data) return false;
    }
    return vocab == other.vocab;
  }
};

// Parameter leaves of one graph, created once per forward pass.
template <class T>
struct BoundParams {
  Graph<T>* graph = nullptr;
  ModelParams<T>* model = nullptr;
  std::map<std::string, typename Graph<T>::Var> vars;

  typename Graph<T>::Var operator[](const std::string& name) {
    auto it = vars.find(name);
    if (it != vars.end()) return it->second;
    auto var = graph->param(model->tensors.at(name), &model->grads.at(name));
    vars.emplace(name, var);
    return var;
  }
};

template <class T>
BoundParams<T> bind(Graph<T>& g, ModelParams<T>& m) {
  return BoundParams<T>{&g, &m, {}};
}

}  // namespace ttrk
