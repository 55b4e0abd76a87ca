#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ttrk/rng.hpp"
#include "ttrk/types.hpp"

namespace ttrk {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumSpecials = 5;

inline constexpr int kMaxSeqLen = 192;
inline constexpr int kMaxResponseTokens = 95;

// Lowercase, split on whitespace, punctuation characters become their own
// tokens. Digits and letters stick together within a run.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

class Vocab {
 public:
  Vocab() {
    for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"}) {
      add_(s);
    }
  }

  // Tokens with frequency >= min_count get ids 5.. ; ties broken by
  // (frequency desc, lexicographic asc).
  static Vocab build(const std::vector<std::vector<std::string>>& docs,
                     int min_count = 1) {
    std::map<std::string, long long> freq;
    for (const auto& doc : docs) {
      for (const auto& tok : doc) ++freq[tok];
    }
    std::vector<std::pair<std::string, long long>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocab v;
    for (const auto& [tok, count] : items) {
      if (count >= min_count) v.add_(tok);
    }
    return v;
  }

  int id(const std::string& tok) const {
    auto it = token_to_id_.find(tok);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }
  const std::string& token(int id) const { return id_to_token_.at(id); }
  int size() const { return static_cast<int>(id_to_token_.size()); }

  static bool is_special(int id) { return id < kNumSpecials; }

  bool operator==(const Vocab& other) const {
    return id_to_token_ == other.id_to_token_;
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  static Vocab from_tokens(const std::vector<std::string>& toks) {
    Vocab v;
    if (toks.size() < kNumSpecials)
      throw std::runtime_error("vocab token list missing specials");
    for (std::size_t i = kNumSpecials; i < toks.size(); ++i) v.add_(toks[i]);
    return v;
  }

 private:
  void add_(const std::string& tok) {
    token_to_id_.emplace(tok, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(tok);
  }

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

struct EncodedPair {
  std::vector<int> token_ids;
  std::vector<int> segment_ids;   // 0 for [CLS]+u1+[SEP], 1 for u2+[SEP]
  std::vector<int> attention_mask;  // 1 real, 0 pad

  int length() const { return static_cast<int>(token_ids.size()); }
};

// [CLS] u1 [SEP] u2 [SEP]; u2 truncated from the right to <= 95 tokens, u1
// truncated from the left to fit the 192 budget.
inline EncodedPair encode_pair(const std::vector<std::string>& u1_tokens,
                               const std::vector<std::string>& u2_tokens,
                               const Vocab& vocab, int pad_to = 0) {
  std::vector<int> u2;
  for (const auto& t : u2_tokens) {
    if (static_cast<int>(u2.size()) >= kMaxResponseTokens) break;
    u2.push_back(vocab.id(t));
  }
  const int budget_u1 = kMaxSeqLen - static_cast<int>(u2.size()) - 3;
  std::vector<int> u1;
  const int skip = std::max(0, static_cast<int>(u1_tokens.size()) - budget_u1);
  for (std::size_t i = skip; i < u1_tokens.size(); ++i) {
    u1.push_back(vocab.id(u1_tokens[i]));
  }

  EncodedPair p;
  p.token_ids.push_back(kClsId);
  p.segment_ids.push_back(0);
  for (int id : u1) {
    p.token_ids.push_back(id);
    p.segment_ids.push_back(0);
  }
  p.token_ids.push_back(kSepId);
  p.segment_ids.push_back(0);
  for (int id : u2) {
    p.token_ids.push_back(id);
    p.segment_ids.push_back(1);
  }
  p.token_ids.push_back(kSepId);
  p.segment_ids.push_back(1);
  p.attention_mask.assign(p.token_ids.size(), 1);

  while (static_cast<int>(p.token_ids.size()) < pad_to) {
    p.token_ids.push_back(kPadId);
    p.segment_ids.push_back(0);
    p.attention_mask.push_back(0);
  }
  return p;
}

inline EncodedPair encode_pair(const Utterance& u1, const Utterance& u2,
                               const Vocab& vocab, int pad_to = 0) {
  return encode_pair(u1.tokens.empty() ? tokenize(u1.text) : u1.tokens,
                     u2.tokens.empty() ? tokenize(u2.text) : u2.tokens, vocab,
                     pad_to);
}

struct MaskedBatch {
  EncodedPair inputs;
  std::vector<int> mlm_labels;  // original id where masked, -1 elsewhere
};

// BERT-style masking: each non-special real token is selected independently
// with probability mask_prob; of the selected, 80% -> [MASK], 10% -> random
// non-special id, 10% -> kept.
inline MaskedBatch mask_for_mlm(const EncodedPair& pair, const Vocab& vocab,
                                Rng& rng, double mask_prob = 0.15) {
  MaskedBatch batch;
  batch.inputs = pair;
  batch.mlm_labels.assign(pair.token_ids.size(), -1);
  const int n_regular = vocab.size() - kNumSpecials;
  for (std::size_t i = 0; i < pair.token_ids.size(); ++i) {
    const int id = pair.token_ids[i];
    if (pair.attention_mask[i] == 0 || Vocab::is_special(id)) continue;
    if (rng.uniform() >= mask_prob) continue;
    batch.mlm_labels[i] = id;
    const double action = rng.uniform();
    if (action < 0.8) {
      batch.inputs.token_ids[i] = kMaskId;
    } else if (action < 0.9) {
      if (n_regular > 0) {
        batch.inputs.token_ids[i] = kNumSpecials + rng.uniform_int(n_regular);
      }
    }  // else keep the original token
  }
  return batch;
}

}  // namespace ttrk
