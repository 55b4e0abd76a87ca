#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ttrk/rng.hpp"
#include "ttrk/textenc.hpp"
#include "ttrk/types.hpp"

namespace ttrk {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Utterance parse_utterance(const nlohmann::json& j, int index,
                                 const std::string& where) {
  if (!j.contains("speaker") || !j["speaker"].is_string())
    throw CorpusError(where + ": missing or non-string field \"speaker\"");
  if (!j.contains("text") || !j["text"].is_string())
    throw CorpusError(where + ": missing or non-string field \"text\"");
  Utterance u;
  u.speaker = j["speaker"].get<std::string>();
  u.text = j["text"].get<std::string>();
  if (u.speaker.empty())
    throw CorpusError(where + ": empty field \"speaker\"");
  u.tokens = tokenize(u.text);
  u.index = index;
  return u;
}

inline Conversation parse_conversation(const nlohmann::json& j,
                                       const std::string& where) {
  Conversation c;
  c.id = j.value("id", "");
  if (!j.contains("context") || !j["context"].is_array())
    throw CorpusError(where + ": missing field \"context\"");
  int idx = 0;
  for (const auto& ju : j["context"]) {
    c.utterances.push_back(parse_utterance(ju, idx++, where));
  }
  if (j.contains("topic_ids")) {
    auto ids = j["topic_ids"].get<std::vector<int>>();
    if (ids.size() != c.utterances.size())
      throw CorpusError(where + ": field \"topic_ids\" length mismatch");
    c.topic_ids = std::move(ids);
  }
  if (j.contains("links")) {
    std::vector<Link> links;
    std::unordered_set<int> children;
    for (const auto& jl : j["links"]) {
      if (!jl.is_array() || jl.size() != 2)
        throw CorpusError(where + ": field \"links\" entries must be pairs");
      const int child = jl[0].get<int>();
      const int parent = jl[1].get<int>();
      if (parent > child || child < 0 ||
          child >= static_cast<int>(c.utterances.size()))
        throw CorpusError(where + ": field \"links\" parent must be <= child and in range");
      if (!children.insert(child).second)
        throw CorpusError(where + ": field \"links\" repeats a child index");
      links.emplace_back(child, parent);
    }
    c.links = std::move(links);
  }
  return c;
}

inline SelectionInstance parse_selection(const nlohmann::json& j,
                                         const std::string& where) {
  SelectionInstance inst;
  inst.context = parse_conversation(j, where);
  if (!j.contains("candidates") || !j["candidates"].is_array() ||
      j["candidates"].empty())
    throw CorpusError(where + ": missing or empty field \"candidates\"");
  int idx = 0;
  for (const auto& ju : j["candidates"]) {
    inst.candidates.push_back(parse_utterance(ju, idx++, where));
  }
  if (!j.contains("label"))
    throw CorpusError(where + ": missing field \"label\"");
  inst.label = j["label"].get<int>();
  if (inst.label < -1 || inst.label >= static_cast<int>(inst.candidates.size()))
    throw CorpusError(where + ": field \"label\" out of range");
  if (j.contains("candidate_topic_ids")) {
    auto ids = j["candidate_topic_ids"].get<std::vector<int>>();
    if (ids.size() != inst.candidates.size())
      throw CorpusError(where + ": field \"candidate_topic_ids\" length mismatch");
    inst.candidate_topic_ids = std::move(ids);
  }
  return inst;
}

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::vector<nlohmann::json> lines;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw CorpusError(path + ":" + std::to_string(lineno) + ": JSON parse error");
    lines.push_back(std::move(j));
  }
  return lines;
}

}  // namespace detail

inline std::vector<SelectionInstance> load_selection(const std::string& path) {
  std::vector<SelectionInstance> out;
  int lineno = 0;
  for (const auto& j : detail::read_jsonl(path)) {
    ++lineno;
    out.push_back(detail::parse_selection(
        j, path + ":" + std::to_string(lineno)));
  }
  return out;
}

inline std::vector<Conversation> load_conversations(const std::string& path,
                                                    bool require_links = false) {
  std::vector<Conversation> out;
  int lineno = 0;
  for (const auto& j : detail::read_jsonl(path)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    Conversation c = detail::parse_conversation(j, where);
    if (require_links && !c.links)
      throw CorpusError(where + ": missing field \"links\"");
    out.push_back(std::move(c));
  }
  return out;
}

// All ordered same-conversation pairs (u_m, u_n), m < n, as positives; for
// each positive, negatives_per_positive utterances sampled uniformly from
// other conversations as negatives.
inline std::vector<StpPair> build_stp_pairs(
    const std::vector<Conversation>& conversations,
    int negatives_per_positive, Rng& rng) {
  if (conversations.size() < 2)
    throw CorpusError("build_stp_pairs needs at least 2 conversations");
  // flat index of foreign utterances per conversation
  std::vector<std::pair<int, int>> all;  // (conversation, utterance)
  for (std::size_t c = 0; c < conversations.size(); ++c) {
    for (std::size_t u = 0; u < conversations[c].utterances.size(); ++u) {
      all.emplace_back(static_cast<int>(c), static_cast<int>(u));
    }
  }
  std::vector<StpPair> pairs;
  int nonempty = 0;
  for (const auto& c : conversations)
    if (!c.utterances.empty()) ++nonempty;
  if (negatives_per_positive > 0 && nonempty < 2)
    throw CorpusError("build_stp_pairs needs at least 2 non-empty conversations");
  for (std::size_t c = 0; c < conversations.size(); ++c) {
    const auto& utts = conversations[c].utterances;
    for (std::size_t m = 0; m < utts.size(); ++m) {
      for (std::size_t n = m + 1; n < utts.size(); ++n) {
        pairs.push_back({utts[m], utts[n], StpLabel::positive});
        for (int k = 0; k < negatives_per_positive; ++k) {
          // rejection-sample an utterance from a different conversation
          std::pair<int, int> pick;
          do {
            pick = all[rng.uniform_int(static_cast<int>(all.size()))];
          } while (pick.first == static_cast<int>(c));
          pairs.push_back({utts[m],
                           conversations[pick.first].utterances[pick.second],
                           StpLabel::negative});
        }
      }
    }
  }
  return pairs;
}

// Keeps context utterances speaker-related to the candidate: same speaker,
// candidate mentions the speaker, or the utterance mentions the candidate's
// speaker. Caps to the last max_kept survivors; if nothing survives, falls
// back to the unfiltered tail.
inline Conversation hard_context_filter(const Conversation& context,
                                        const Utterance& candidate,
                                        int max_kept = 10) {
  const std::vector<std::string> cand_tokens =
      candidate.tokens.empty() ? tokenize(candidate.text) : candidate.tokens;
  auto mentions = [](const std::vector<std::string>& tokens,
                     const std::string& speaker) {
    const std::string lower = tokenize(speaker).empty()
                                  ? speaker
                                  : tokenize(speaker).front();
    for (const auto& t : tokens)
      if (t == lower) return true;
    return false;
  };
  std::vector<Utterance> kept;
  for (const auto& u : context.utterances) {
    const auto& toks = u.tokens.empty() ? tokenize(u.text) : u.tokens;
    if (u.speaker == candidate.speaker || mentions(cand_tokens, u.speaker) ||
        mentions(toks, candidate.speaker)) {
      kept.push_back(u);
    }
  }
  if (kept.empty()) kept = context.utterances;
  if (static_cast<int>(kept.size()) > max_kept) {
    kept.erase(kept.begin(), kept.end() - max_kept);
  }
  Conversation out;
  out.id = context.id;
  out.utterances = std::move(kept);
  return out;
}

struct WindowSet {
  std::vector<DisentangleWindow> windows;
  int dropped_out_of_window = 0;
};

// One window per utterance u_n holding min(n+1, window) utterances ending at
// u_n, gold parent remapped into window coordinates. Windows whose gold
// parent falls before the window start are dropped and counted.
inline WindowSet sliding_windows(const Conversation& conversation,
                                 int window = 10) {
  if (!conversation.links)
    throw CorpusError("sliding_windows: conversation has no links");
  std::vector<int> parent(conversation.utterances.size(), -1);
  for (const auto& [child, par] : *conversation.links) parent[child] = par;
  WindowSet out;
  for (int n = 0; n < static_cast<int>(conversation.utterances.size()); ++n) {
    if (parent[n] < 0) continue;  // unannotated utterance
    const int start = std::max(0, n - window + 1);
    if (parent[n] < start) {
      ++out.dropped_out_of_window;
      continue;
    }
    DisentangleWindow w;
    w.source_conversation_id = conversation.id;
    for (int i = start; i <= n; ++i) w.utterances.push_back(conversation.utterances[i]);
    w.gold_parent = parent[n] - start;
    out.windows.push_back(std::move(w));
  }
  return out;
}

}  // namespace ttrk
