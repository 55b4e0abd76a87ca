#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttrk/corpus.hpp"
#include "ttrk/rng.hpp"
#include "ttrk/types.hpp"

namespace ttrk {

struct SyntheticSpec {
  int topics = 4;            // K, disjoint content vocabularies
  int words_per_topic = 12;  // M
  int shared_words = 6;      // function-word pool shared by all topics
  int streams = 2;           // S conversations interleaved per entangled stream
  int conversations = 8;     // total conversations generated
  int min_len = 4;
  int max_len = 8;
  int min_speakers = 2;
  int max_speakers = 4;
  int pool_size = 5;         // P candidates per selection instance
  int min_utt_words = 3;
  int max_utt_words = 6;
  double content_word_prob = 0.75;
  double interleave_prob = 0.5;  // chance of switching streams between turns

  void validate() const {
    if (topics < 2) throw std::invalid_argument("synthetic spec: topics must be >= 2");
    if (words_per_topic < 4)
      throw std::invalid_argument("synthetic spec: words_per_topic must be >= 4");
    if (pool_size < 2) throw std::invalid_argument("synthetic spec: pool_size must be >= 2");
    if (streams < 1) throw std::invalid_argument("synthetic spec: streams must be >= 1");
    if (conversations < streams)
      throw std::invalid_argument("synthetic spec: conversations must be >= streams");
    if (min_len < 1 || max_len < min_len)
      throw std::invalid_argument("synthetic spec: bad length range");
  }
};

inline void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  s.topics = j.value("topics", s.topics);
  s.words_per_topic = j.value("words_per_topic", s.words_per_topic);
  s.shared_words = j.value("shared_words", s.shared_words);
  s.streams = j.value("streams", s.streams);
  s.conversations = j.value("conversations", s.conversations);
  s.min_len = j.value("min_len", s.min_len);
  s.max_len = j.value("max_len", s.max_len);
  s.min_speakers = j.value("min_speakers", s.min_speakers);
  s.max_speakers = j.value("max_speakers", s.max_speakers);
  s.pool_size = j.value("pool_size", s.pool_size);
  s.min_utt_words = j.value("min_utt_words", s.min_utt_words);
  s.max_utt_words = j.value("max_utt_words", s.max_utt_words);
  s.content_word_prob = j.value("content_word_prob", s.content_word_prob);
  s.interleave_prob = j.value("interleave_prob", s.interleave_prob);
}

inline void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = nlohmann::json{{"topics", s.topics},
                     {"words_per_topic", s.words_per_topic},
                     {"shared_words", s.shared_words},
                     {"streams", s.streams},
                     {"conversations", s.conversations},
                     {"min_len", s.min_len},
                     {"max_len", s.max_len},
                     {"min_speakers", s.min_speakers},
                     {"max_speakers", s.max_speakers},
                     {"pool_size", s.pool_size},
                     {"min_utt_words", s.min_utt_words},
                     {"max_utt_words", s.max_utt_words},
                     {"content_word_prob", s.content_word_prob},
                     {"interleave_prob", s.interleave_prob}};
}

struct SyntheticCorpus {
  // Detached single-topic conversations (STP pretraining source).
  std::vector<Conversation> conversations;
  // Entangled streams with gold links and topic ids (disentanglement source).
  std::vector<Conversation> entangled;
  std::vector<SelectionInstance> selection;
};

inline std::string synth_topic_word(int topic, int word) {
  return "t" + std::to_string(topic) + "w" + std::to_string(word);
}

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  SyntheticCorpus out;

  auto make_utterance = [&](int conv, int topic, int speaker, int index) {
    Utterance u;
    u.speaker = "c" + std::to_string(conv) + "s" + std::to_string(speaker);
    const int n_words =
        spec.min_utt_words + rng.uniform_int(spec.max_utt_words - spec.min_utt_words + 1);
    for (int w = 0; w < n_words; ++w) {
      if (!u.text.empty()) u.text += ' ';
      if (spec.shared_words == 0 || rng.uniform() < spec.content_word_prob) {
        u.text += synth_topic_word(topic, rng.uniform_int(spec.words_per_topic));
      } else {
        u.text += "fw" + std::to_string(rng.uniform_int(spec.shared_words));
      }
    }
    u.tokens = tokenize(u.text);
    u.index = index;
    return u;
  };

  std::vector<int> conv_topic(spec.conversations);
  for (int c = 0; c < spec.conversations; ++c) {
    conv_topic[c] = c % spec.topics;
    Conversation conv;
    conv.id = "synth-" + std::to_string(c);
    const int n_speakers =
        spec.min_speakers + rng.uniform_int(spec.max_speakers - spec.min_speakers + 1);
    const int n_utts = spec.min_len + rng.uniform_int(spec.max_len - spec.min_len + 1);
    std::vector<Link> links;
    std::vector<int> topics;
    for (int i = 0; i < n_utts; ++i) {
      conv.utterances.push_back(
          make_utterance(c, conv_topic[c], rng.uniform_int(n_speakers), i));
      links.emplace_back(i, std::max(0, i - 1));
      if (i == 0) links.back().second = 0;  // first utterance self-links
      topics.push_back(conv_topic[c]);
    }
    conv.links = std::move(links);
    conv.topic_ids = std::move(topics);
    out.conversations.push_back(std::move(conv));
  }

  // Entangle groups of `streams` consecutive conversations (round-robin topic
  // assignment makes their topics distinct whenever streams <= topics).
  for (int g = 0; g * spec.streams < spec.conversations; ++g) {
    const int first = g * spec.streams;
    const int last = std::min(first + spec.streams, spec.conversations);
    std::vector<int> members;
    for (int c = first; c < last; ++c) members.push_back(c);

    Conversation ent;
    ent.id = "entangled-" + std::to_string(g);
    ent.topic_ids.emplace();
    ent.links.emplace();
    std::vector<std::size_t> cursor(members.size(), 0);
    // entangled index of the previous utterance of each member conversation
    std::vector<int> last_emitted(members.size(), -1);
    int active = 0;
    while (true) {
      // drop exhausted streams from consideration
      std::vector<int> open;
      for (std::size_t s = 0; s < members.size(); ++s) {
        if (cursor[s] < out.conversations[members[s]].utterances.size())
          open.push_back(static_cast<int>(s));
      }
      if (open.empty()) break;
      bool keep = false;
      for (int s : open)
        if (s == active) keep = true;
      if (!keep || open.size() > 1) {
        if (!keep || rng.uniform() < spec.interleave_prob) {
          active = open[rng.uniform_int(static_cast<int>(open.size()))];
        }
      }
      const int conv = members[active];
      const Utterance& src = out.conversations[conv].utterances[cursor[active]];
      const int ent_index = static_cast<int>(ent.utterances.size());
      Utterance u = src;
      u.index = ent_index;
      ent.utterances.push_back(std::move(u));
      ent.topic_ids->push_back(conv_topic[conv]);
      const int parent =
          last_emitted[active] < 0 ? ent_index : last_emitted[active];
      ent.links->emplace_back(ent_index, parent);
      last_emitted[active] = ent_index;
      ++cursor[active];
    }

    // Selection instances: entangled prefix as context, true next utterance
    // of one stream as the gold candidate, negatives from other topics.
    for (int pos = 1; pos < static_cast<int>(ent.utterances.size()); ++pos) {
      const int gold_topic = (*ent.topic_ids)[pos];
      SelectionInstance inst;
      inst.context.id = ent.id + "#" + std::to_string(pos);
      const int start = std::max(0, pos - 10);
      inst.context.topic_ids.emplace();
      for (int i = start; i < pos; ++i) {
        Utterance u = ent.utterances[i];
        u.index = i - start;
        inst.context.utterances.push_back(std::move(u));
        inst.context.topic_ids->push_back((*ent.topic_ids)[i]);
      }
      std::vector<std::pair<Utterance, int>> pool;
      pool.emplace_back(ent.utterances[pos], gold_topic);
      for (int k = 1; k < spec.pool_size; ++k) {
        // negative: an utterance from a conversation of a different topic
        int c;
        do {
          c = rng.uniform_int(spec.conversations);
        } while (conv_topic[c] == gold_topic);
        const auto& utts = out.conversations[c].utterances;
        pool.emplace_back(utts[rng.uniform_int(static_cast<int>(utts.size()))],
                          conv_topic[c]);
      }
      rng.shuffle(pool);
      inst.candidate_topic_ids.emplace();
      for (std::size_t k = 0; k < pool.size(); ++k) {
        Utterance u = pool[k].first;
        u.index = static_cast<int>(k);
        if (pool[k].second == gold_topic &&
            u.text == ent.utterances[pos].text &&
            u.speaker == ent.utterances[pos].speaker) {
          inst.label = static_cast<int>(k);
        }
        inst.candidates.push_back(std::move(u));
        inst.candidate_topic_ids->push_back(pool[k].second);
      }
      out.selection.push_back(std::move(inst));
    }
    out.entangled.push_back(std::move(ent));
  }
  return out;
}

inline nlohmann::json conversation_to_json(const Conversation& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["context"] = nlohmann::json::array();
  for (const auto& u : c.utterances) {
    j["context"].push_back({{"speaker", u.speaker}, {"text", u.text}});
  }
  if (c.topic_ids) j["topic_ids"] = *c.topic_ids;
  if (c.links) {
    j["links"] = nlohmann::json::array();
    for (const auto& [child, parent] : *c.links)
      j["links"].push_back({child, parent});
  }
  return j;
}

inline nlohmann::json selection_to_json(const SelectionInstance& inst) {
  nlohmann::json j = conversation_to_json(inst.context);
  j["candidates"] = nlohmann::json::array();
  for (const auto& u : inst.candidates) {
    j["candidates"].push_back({{"speaker", u.speaker}, {"text", u.text}});
  }
  j["label"] = inst.label;
  if (inst.candidate_topic_ids) j["candidate_topic_ids"] = *inst.candidate_topic_ids;
  return j;
}

}  // namespace ttrk
