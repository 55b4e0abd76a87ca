#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttrk {

struct RankingResult {
  std::vector<double> scores;  // per-candidate positive-class probabilities
  int label = -1;              // gold index, -1 = pool has no correct answer
  bool predicted_none = false;
};

// predicted_none iff the best score is strictly below the threshold.
inline bool apply_no_answer(const std::vector<double>& scores,
                            double threshold = 0.90) {
  double best = -std::numeric_limits<double>::infinity();
  for (double s : scores) best = std::max(best, s);
  return best < threshold;
}

inline RankingResult make_ranking(std::vector<double> scores, int label,
                                  double threshold = 0.90) {
  RankingResult r;
  r.predicted_none = apply_no_answer(scores, threshold);
  r.scores = std::move(scores);
  r.label = label;
  return r;
}

// 1 + strictly-higher count + equal-score-with-smaller-index count: a stable,
// pessimistic tie rule.
inline int gold_rank(const RankingResult& r) {
  const double gold = r.scores[r.label];
  int rank = 1;
  for (std::size_t i = 0; i < r.scores.size(); ++i) {
    if (static_cast<int>(i) == r.label) continue;
    if (r.scores[i] > gold) ++rank;
    else if (r.scores[i] == gold && static_cast<int>(i) < r.label) ++rank;
  }
  return rank;
}

inline double recall_at_n(const std::vector<RankingResult>& results, int n) {
  if (n < 1) throw std::invalid_argument("recall_at_n: N must be >= 1");
  if (results.empty()) return 0.0;
  double hits = 0.0;
  for (const auto& r : results) {
    if (r.label < 0) {
      hits += r.predicted_none ? 1.0 : 0.0;
    } else if (!r.predicted_none && gold_rank(r) <= n) {
      hits += 1.0;
    }
  }
  return hits / static_cast<double>(results.size());
}

inline double mrr(const std::vector<RankingResult>& results) {
  if (results.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : results) {
    if (r.label < 0) {
      total += r.predicted_none ? 1.0 : 0.0;
    } else if (!r.predicted_none) {
      total += 1.0 / static_cast<double>(gold_rank(r));
    }
  }
  return total / static_cast<double>(results.size());
}

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 0/0 defined as 0 throughout.
inline Prf1 prf1(long long tp, long long fp, long long fn) {
  if (tp < 0 || fp < 0 || fn < 0)
    throw std::invalid_argument("prf1: counts must be non-negative");
  Prf1 out;
  out.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

// Union-find partition of utterances into conversations, ignoring self-links.
inline std::vector<std::vector<int>> cluster_by_links(
    int n_utterances, const std::map<int, int>& links) {
  std::vector<int> parent(n_utterances);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [child, par] : links) {
    if (par > child)
      throw std::invalid_argument("cluster_by_links: parent index exceeds child index");
    if (par == child) continue;  // self-link = conversation start
    parent[find(child)] = find(par);
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n_utterances; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

// Exact-match conversation F1: a predicted conversation counts iff it equals
// a gold conversation as a set; singletons are excluded from both sides.
inline Prf1 exact_match_f1(const std::vector<std::vector<int>>& predicted,
                           const std::vector<std::vector<int>>& gold) {
  std::set<std::set<int>> gold_sets;
  long long gold_eligible = 0;
  for (const auto& conv : gold) {
    if (conv.size() < 2) continue;
    ++gold_eligible;
    gold_sets.insert(std::set<int>(conv.begin(), conv.end()));
  }
  long long pred_eligible = 0, matches = 0;
  for (const auto& conv : predicted) {
    if (conv.size() < 2) continue;
    ++pred_eligible;
    if (gold_sets.count(std::set<int>(conv.begin(), conv.end()))) ++matches;
  }
  Prf1 out;
  out.precision = pred_eligible > 0
                      ? static_cast<double>(matches) / static_cast<double>(pred_eligible)
                      : 0.0;
  out.recall = gold_eligible > 0
                   ? static_cast<double>(matches) / static_cast<double>(gold_eligible)
                   : 0.0;
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

struct BleuResult {
  double bleu4 = 0.0;
  double precisions[4] = {0, 0, 0, 0};
};

// Sentence BLEU4: clipped modified n-gram precisions, brevity penalty,
// geometric mean; zero precisions smoothed with epsilon so the geometric mean
// stays defined.
inline BleuResult bleu4(const std::vector<std::string>& candidate,
                        const std::vector<std::string>& reference,
                        double epsilon = 1e-9) {
  BleuResult out;
  if (candidate.empty()) return out;
  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, long long> ref_counts;
    for (int i = 0; i + n <= static_cast<int>(reference.size()); ++i)
      ++ref_counts[std::vector<std::string>(reference.begin() + i,
                                            reference.begin() + i + n)];
    std::map<std::vector<std::string>, long long> cand_counts;
    long long total = 0;
    for (int i = 0; i + n <= static_cast<int>(candidate.size()); ++i) {
      ++cand_counts[std::vector<std::string>(candidate.begin() + i,
                                             candidate.begin() + i + n)];
      ++total;
    }
    long long clipped = 0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    const double p = total > 0 ? static_cast<double>(clipped) / static_cast<double>(total)
                               : 0.0;
    out.precisions[n - 1] = p;
    log_sum += 0.25 * std::log(p > 0.0 ? p : epsilon);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  out.bleu4 = bp * std::exp(log_sum);
  return out;
}

}  // namespace ttrk
