#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttrk/corpus.hpp"
#include "ttrk/eval.hpp"
#include "ttrk/optim.hpp"
#include "ttrk/pipeline.hpp"

namespace ttrk {

struct TopicEvalCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

// Response-selection metrics plus topic-prediction P/R/F1 over every
// (context utterance, candidate) pair of the filtered context.
template <class T>
void evaluate_selection(ModelParams<T>& model,
                        const std::vector<SelectionInstance>& selection,
                        double threshold, int max_kept,
                        std::vector<RankingResult>* rankings,
                        TopicEvalCounts* topic_counts) {
  for (const auto& inst : selection) {
    Graph<T> g;
    auto p = bind(g, model);
    std::vector<double> probs;
    for (std::size_t j = 0; j < inst.candidates.size(); ++j) {
      const Utterance& cand = inst.candidates[j];
      Conversation filtered = hard_context_filter(inst.context, cand, max_kept);
      std::vector<typename Graph<T>::Var> rows;
      for (const auto& u : filtered.utterances) {
        EncodedPair pair = encode_pair(u, cand, model.vocab);
        auto hidden = encoder_forward(g, p, pair);
        rows.push_back(topic_attention(g, p, hidden, attendable_positions(pair)));
        if (topic_counts) {
          auto prob = topic_predict(g, p, rows.back());
          const bool pred = static_cast<double>(g.val(prob)(0)) >= 0.5;
          const bool gold =
              topic_pair_label(inst, u.index, static_cast<int>(j)) == 1;
          if (pred && gold) ++topic_counts->tp;
          else if (pred && !gold) ++topic_counts->fp;
          else if (!pred && gold) ++topic_counts->fn;
          else ++topic_counts->tn;
        }
      }
      auto attended = self_attend(g, p, g.stack_rows(rows));
      auto logits = response_logits(g, p, attended);
      const double z0 = static_cast<double>(g.val(logits)(0));
      const double z1 = static_cast<double>(g.val(logits)(1));
      probs.push_back(1.0 / (1.0 + std::exp(z1 - z0)));
    }
    if (rankings)
      rankings->push_back(make_ranking(std::move(probs), inst.label, threshold));
  }
}

struct LinkEvalResult {
  long long correct = 0, total = 0;
  long long self_tp = 0, self_fp = 0, self_fn = 0;
  Prf1 exact_match;
  double accuracy() const {
    return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  }
};

// Link accuracy and self-link P/R/F1 over sliding windows, plus exact-match
// conversation F1 from the predicted links.
template <class T>
LinkEvalResult evaluate_links(ModelParams<T>& model,
                              const std::vector<Conversation>& entangled,
                              int window_size) {
  LinkEvalResult out;
  long long em_matches = 0, em_pred = 0, em_gold = 0;
  for (const auto& conv : entangled) {
    WindowSet ws = sliding_windows(conv, window_size);
    std::map<int, int> predicted_links, gold_links;
    for (const auto& [child, parent] : *conv.links) gold_links[child] = parent;
    for (int i = 0; i < static_cast<int>(conv.utterances.size()); ++i)
      predicted_links[i] = i;  // default to a self-link
    for (const auto& w : ws.windows) {
      const int n = static_cast<int>(w.utterances.size());
      const int target = w.utterances.back().index;
      const int start = target - (n - 1);
      const int predicted = predict_parent(model, w);
      predicted_links[target] = start + predicted;
      ++out.total;
      if (predicted == w.gold_parent) ++out.correct;
      const bool pred_self = predicted == n - 1;
      const bool gold_self = w.gold_parent == n - 1;
      if (pred_self && gold_self) ++out.self_tp;
      else if (pred_self && !gold_self) ++out.self_fp;
      else if (!pred_self && gold_self) ++out.self_fn;
    }
    const int n_utts = static_cast<int>(conv.utterances.size());
    auto pred_part = cluster_by_links(n_utts, predicted_links);
    auto gold_part = cluster_by_links(n_utts, gold_links);
    std::set<std::set<int>> gold_sets;
    for (const auto& g : gold_part)
      if (g.size() >= 2) {
        ++em_gold;
        gold_sets.insert(std::set<int>(g.begin(), g.end()));
      }
    for (const auto& p : pred_part)
      if (p.size() >= 2) {
        ++em_pred;
        if (gold_sets.count(std::set<int>(p.begin(), p.end()))) ++em_matches;
      }
  }
  out.exact_match.precision =
      em_pred > 0 ? static_cast<double>(em_matches) / static_cast<double>(em_pred) : 0.0;
  out.exact_match.recall =
      em_gold > 0 ? static_cast<double>(em_matches) / static_cast<double>(em_gold) : 0.0;
  out.exact_match.f1 =
      (out.exact_match.precision + out.exact_match.recall) > 0.0
          ? 2.0 * out.exact_match.precision * out.exact_match.recall /
                (out.exact_match.precision + out.exact_match.recall)
          : 0.0;
  return out;
}

template <class T>
nlohmann::json metrics_report(ModelParams<T>& model,
                              const std::vector<SelectionInstance>& selection,
                              const std::vector<Conversation>& entangled,
                              double threshold, int max_kept, int window_size) {
  nlohmann::json report = nlohmann::json::object();
  if (!selection.empty()) {
    std::vector<RankingResult> rankings;
    TopicEvalCounts topic;
    evaluate_selection(model, selection, threshold, max_kept, &rankings, &topic);
    report["recall@1"] = recall_at_n(rankings, 1);
    report["recall@5"] = recall_at_n(rankings, 5);
    report["recall@10"] = recall_at_n(rankings, 10);
    report["mrr"] = mrr(rankings);
    report["composite"] = (recall_at_n(rankings, 10) + mrr(rankings)) / 2.0;
    const Prf1 tp_prf = prf1(topic.tp, topic.fp, topic.fn);
    report["tp_precision"] = tp_prf.precision;
    report["tp_recall"] = tp_prf.recall;
    report["tp_f1"] = tp_prf.f1;
  }
  if (!entangled.empty()) {
    const LinkEvalResult links = evaluate_links(model, entangled, window_size);
    report["link_accuracy"] = links.accuracy();
    const Prf1 self_prf = prf1(links.self_tp, links.self_fp, links.self_fn);
    report["link_precision"] = self_prf.precision;
    report["link_recall"] = self_prf.recall;
    report["link_f1"] = self_prf.f1;
    report["exact_match_precision"] = links.exact_match.precision;
    report["exact_match_recall"] = links.exact_match.recall;
    report["exact_match_f1"] = links.exact_match.f1;
  }
  return report;
}

}  // namespace ttrk
