#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttrk/eval.hpp"
#include "ttrk/pipeline.hpp"
#include "ttrk/textenc.hpp"

namespace ttrk {

struct TrainConfig {
  double learning_rate = 1e-3;  // desk-scale default for fresh tiny models
  double warmup_fraction = 0.1;
  int total_steps = 500;
  int batch_size = 32;
  int epochs = 1;  // pretraining epochs; total_steps wins when > 0
  std::uint64_t seed = 0;
  MultiTaskWeights weights;
  double no_answer_threshold = 0.90;
  bool grid_search = false;
  int grid_values_per_weight = 11;  // 0, 0.1, ..., 1
  int max_kept = 10;
  int window = 10;
  int negatives_per_positive = 4;
  double mask_prob = 0.15;
  bool train_dropout = true;
  bool freeze_encoder = false;

  void validate() const {
    if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
      throw std::invalid_argument("train config: warmup_fraction must be in [0,1)");
    if (total_steps < 0)
      throw std::invalid_argument("train config: total_steps must be >= 0");
  }
};

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  c.total_steps = j.value("total_steps", c.total_steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.weights.alpha = j.value("alpha", c.weights.alpha);
  c.weights.beta = j.value("beta", c.weights.beta);
  c.weights.gamma = j.value("gamma", c.weights.gamma);
  c.no_answer_threshold = j.value("no_answer_threshold", c.no_answer_threshold);
  c.grid_search = j.value("grid_search", c.grid_search);
  c.grid_values_per_weight = j.value("grid_values_per_weight", c.grid_values_per_weight);
  c.max_kept = j.value("max_kept", c.max_kept);
  c.window = j.value("window", c.window);
  c.negatives_per_positive = j.value("negatives_per_positive", c.negatives_per_positive);
  c.mask_prob = j.value("mask_prob", c.mask_prob);
  c.train_dropout = j.value("train_dropout", c.train_dropout);
  c.freeze_encoder = j.value("freeze_encoder", c.freeze_encoder);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"warmup_fraction", c.warmup_fraction},
                     {"total_steps", c.total_steps},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"seed", c.seed},
                     {"alpha", c.weights.alpha},
                     {"beta", c.weights.beta},
                     {"gamma", c.weights.gamma},
                     {"no_answer_threshold", c.no_answer_threshold},
                     {"grid_search", c.grid_search},
                     {"grid_values_per_weight", c.grid_values_per_weight},
                     {"max_kept", c.max_kept},
                     {"window", c.window},
                     {"negatives_per_positive", c.negatives_per_positive},
                     {"mask_prob", c.mask_prob},
                     {"train_dropout", c.train_dropout},
                     {"freeze_encoder", c.freeze_encoder}};
}

// Linear warmup to base_lr, then linear decay to 0 at total_steps.
inline double lr_schedule(long long step, long long total_steps, double base_lr,
                          double warmup_fraction) {
  const double warmup_steps = warmup_fraction * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  if (s < warmup_steps) return base_lr * s / warmup_steps;
  const double denom = static_cast<double>(total_steps) - warmup_steps;
  if (denom <= 0.0) return 0.0;
  return base_lr * (static_cast<double>(total_steps) - s) / denom;
}

template <class T>
struct AdamState {
  std::map<std::string, Tensor<T>> m;
  std::map<std::string, Tensor<T>> v;
  long long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(const ModelParams<T>& params) {
    AdamState s;
    for (const auto& name : params.names) {
      s.m[name] = Tensor<T>::zeros(params.tensors.at(name).shape);
      s.v[name] = Tensor<T>::zeros(params.tensors.at(name).shape);
    }
    return s;
  }
};

inline bool is_encoder_param(const std::string& name) {
  return name.rfind("emb.", 0) == 0 || name.rfind("layer", 0) == 0 ||
         name.rfind("mlm.", 0) == 0 || name.rfind("stp.", 0) == 0;
}

// One bias-corrected Adam update from the gradients accumulated in
// params.grads; parameters with all-zero gradients still decay their moments.
template <class T>
void adam_step(ModelParams<T>& params, AdamState<T>& state, double lr,
               bool freeze_encoder = false) {
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (const auto& name : params.names) {
    if (freeze_encoder && is_encoder_param(name)) continue;
    auto& theta = params.tensors.at(name);
    auto& grad = params.grads.at(name);
    auto& m = state.m.at(name);
    auto& v = state.v.at(name);
    if (!theta.same_shape(grad))
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + name);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = static_cast<double>(grad.data[i]);
      const double mi = b1 * static_cast<double>(m.data[i]) + (1.0 - b1) * g;
      const double vi = b2 * static_cast<double>(v.data[i]) + (1.0 - b2) * g * g;
      m.data[i] = static_cast<T>(mi);
      v.data[i] = static_cast<T>(vi);
      const double mhat = mi / corr1;
      const double vhat = vi / corr2;
      theta.data[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

using StepLog = std::vector<nlohmann::json>;

template <class T>
double require_finite(Graph<T>& g, typename Graph<T>::Var loss,
                      const char* what) {
  const double value = static_cast<double>(g.val(loss)(0));
  if (!std::isfinite(value))
    throw std::runtime_error(std::string("non-finite ") + what +
                             " loss aborts the step (value=" +
                             std::to_string(value) + ")");
  return value;
}

// STP cross entropy on every pair plus MLM on positive pairs, minibatched and
// shuffled per epoch.
template <class T>
StepLog pretrain(std::vector<StpPair> pairs, ModelParams<T>& params,
                 const TrainConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw std::invalid_argument("pretrain: empty pair set");
  bool any_positive = false;
  for (const auto& p : pairs)
    if (p.label == StpLabel::positive) any_positive = true;

  Rng rng(cfg.seed);
  AdamState<T> adam = AdamState<T>::init(params);
  StepLog log;
  if (!any_positive) {
    log.push_back({{"warning", "no positive pairs; training is STP-only"}});
  }

  const long long steps_per_epoch =
      (static_cast<long long>(pairs.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long long total_steps =
      cfg.total_steps > 0 ? cfg.total_steps : steps_per_epoch * cfg.epochs;

  std::vector<int> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::size_t cursor = order.size();  // force an initial shuffle

  for (long long step = 0; step < total_steps; ++step) {
    Graph<T> g;
    auto bound = bind(g, params);
    std::vector<typename Graph<T>::Var> stp_losses, mlm_losses;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const StpPair& pair = pairs[order[cursor++]];
      EncodedPair enc = encode_pair(pair.first, pair.second, params.vocab);
      const bool positive = pair.label == StpLabel::positive;
      std::vector<int> labels;
      if (positive && cfg.mask_prob > 0.0) {
        MaskedBatch masked = mask_for_mlm(enc, params.vocab, rng, cfg.mask_prob);
        enc = masked.inputs;
        labels = masked.mlm_labels;
      }
      auto hidden =
          encoder_forward(g, bound, enc, cfg.train_dropout, &rng);
      stp_losses.push_back(
          g.softmax_ce(stp_logits(g, bound, hidden), positive ? 1 : 0));
      if (positive && !labels.empty()) {
        mlm_losses.push_back(mlm_loss(g, bound, hidden, labels));
      }
    }
    auto loss_stp = g.mean_scalars(stp_losses);
    auto loss_mlm = mlm_losses.empty() ? g.constant_scalar(T(0))
                                       : g.mean_scalars(mlm_losses);
    auto loss = g.add(loss_stp, loss_mlm);
    const double loss_value = require_finite(g, loss, "pretraining");

    params.zero_grads();
    g.backward(loss);
    const double lr =
        lr_schedule(step, total_steps, cfg.learning_rate, cfg.warmup_fraction);
    adam_step(params, adam, lr);

    log.push_back({{"step", step},
                   {"lr", lr},
                   {"loss_stp", static_cast<double>(g.val(loss_stp)(0))},
                   {"loss_mlm", static_cast<double>(g.val(loss_mlm)(0))},
                   {"loss", loss_value}});
  }
  return log;
}

enum class Task { response, topic, disentangle };

// Round-robin multi-task fine-tuning: rs -> tp -> dis over the tasks that
// have data and a positive weight, one weighted mini-batch per step.
template <class T>
StepLog train_multitask(const std::vector<SelectionInstance>& selection,
                        const std::vector<DisentangleWindow>& windows,
                        ModelParams<T>& params, const TrainConfig& cfg) {
  cfg.validate();
  cfg.weights.validate();
  if (cfg.total_steps < 1)
    throw std::invalid_argument("train_multitask: total_steps must be >= 1");
  std::vector<Task> tasks;
  if (!selection.empty() && cfg.weights.alpha > 0.0) tasks.push_back(Task::response);
  if (!selection.empty() && cfg.weights.beta > 0.0) tasks.push_back(Task::topic);
  if (!windows.empty() && cfg.weights.gamma > 0.0) tasks.push_back(Task::disentangle);
  if (tasks.empty())
    throw std::invalid_argument("train_multitask: no task has both data and a positive weight");

  Rng rng(cfg.seed);
  AdamState<T> adam = AdamState<T>::init(params);
  StepLog log;

  std::vector<int> sel_order(selection.size()), win_order(windows.size());
  for (std::size_t i = 0; i < sel_order.size(); ++i) sel_order[i] = static_cast<int>(i);
  for (std::size_t i = 0; i < win_order.size(); ++i) win_order[i] = static_cast<int>(i);
  std::size_t sel_cursor = sel_order.size(), win_cursor = win_order.size();

  auto next_selection = [&]() -> const SelectionInstance& {
    if (sel_cursor >= sel_order.size()) {
      rng.shuffle(sel_order);
      sel_cursor = 0;
    }
    return selection[sel_order[sel_cursor++]];
  };
  auto next_window = [&]() -> const DisentangleWindow& {
    if (win_cursor >= win_order.size()) {
      rng.shuffle(win_order);
      win_cursor = 0;
    }
    return windows[win_order[win_cursor++]];
  };

  // instances per task batch; selection instances already hold a candidate
  // pool each, so task batches stay small
  const int per_batch = std::max(1, cfg.batch_size / 8);

  for (long long step = 0; step < cfg.total_steps; ++step) {
    const Task task = tasks[step % tasks.size()];
    Graph<T> g;
    auto bound = bind(g, params);
    std::vector<typename Graph<T>::Var> losses;
    const char* loss_key = nullptr;
    double weight = 0.0;
    switch (task) {
      case Task::response: {
        loss_key = "loss_rs";
        weight = cfg.weights.alpha;
        for (int b = 0; b < per_batch; ++b) {
          auto fwd = selection_forward(g, bound, next_selection(), cfg.max_kept,
                                       cfg.train_dropout, &rng,
                                       /*want_topic=*/false);
          losses.push_back(g.mean_scalars(fwd.candidate_losses));
        }
        break;
      }
      case Task::topic: {
        loss_key = "loss_tp";
        weight = cfg.weights.beta;
        for (int b = 0; b < per_batch; ++b) {
          auto fwd = selection_forward(g, bound, next_selection(), cfg.max_kept,
                                       cfg.train_dropout, &rng,
                                       /*want_topic=*/true);
          losses.push_back(g.mean_scalars(fwd.topic_losses));
        }
        break;
      }
      case Task::disentangle: {
        loss_key = "loss_dis";
        weight = cfg.weights.gamma;
        for (int b = 0; b < per_batch; ++b) {
          const DisentangleWindow& w = next_window();
          auto esim = window_forward(g, bound, w, cfg.train_dropout, &rng);
          losses.push_back(disentangle_loss(g, bound, esim, w.gold_parent));
        }
        break;
      }
    }
    auto task_loss = g.mean_scalars(losses);
    auto loss = g.scale(task_loss, static_cast<T>(weight));
    const double loss_value = require_finite(g, loss, "multi-task");

    params.zero_grads();
    g.backward(loss);
    const double lr = lr_schedule(step, cfg.total_steps, cfg.learning_rate,
                                  cfg.warmup_fraction);
    adam_step(params, adam, lr, cfg.freeze_encoder);

    nlohmann::json line = {{"step", step}, {"lr", lr}, {"loss", loss_value}};
    line[loss_key] = static_cast<double>(g.val(task_loss)(0));
    log.push_back(std::move(line));
  }
  return log;
}

// All (alpha, beta, gamma) triples over an even grid on [0,1], excluding the
// all-zero triple.
inline std::vector<MultiTaskWeights> grid_triples(int values_per_weight = 11) {
  std::vector<MultiTaskWeights> out;
  const int n = values_per_weight;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const double denom = static_cast<double>(n - 1);
        out.push_back({a / denom, b / denom, c / denom});
      }
  return out;
}

struct GridResult {
  MultiTaskWeights weights;
  double recall_at_1 = 0.0;
};

// Trains one model per weight triple from the same initialization and scores
// dev Recall@1; returns every row plus the argmax (first on ties).
template <class T>
std::vector<GridResult> grid_search(
    const std::vector<SelectionInstance>& train,
    const std::vector<DisentangleWindow>& windows,
    const std::vector<SelectionInstance>& dev, const ModelParams<T>& init,
    const TrainConfig& cfg, std::size_t* best_index = nullptr) {
  std::vector<GridResult> results;
  for (const auto& w : grid_triples(cfg.grid_values_per_weight)) {
    const bool trainable = (!train.empty() && (w.alpha > 0.0 || w.beta > 0.0)) ||
                           (!windows.empty() && w.gamma > 0.0);
    ModelParams<T> model = init;
    if (trainable) {
      TrainConfig run = cfg;
      run.weights = w;
      run.grid_search = false;
      train_multitask(train, windows, model, run);
    }
    std::vector<RankingResult> ranked;
    for (const auto& inst : dev) {
      ranked.push_back(make_ranking(score_candidates(model, inst, cfg.max_kept),
                                    inst.label, cfg.no_answer_threshold));
    }
    results.push_back({w, recall_at_n(ranked, 1)});
  }
  if (best_index) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
      if (results[i].recall_at_1 > results[best].recall_at_1) best = i;
    *best_index = best;
  }
  return results;
}

}  // namespace ttrk
