#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ttrk {

struct Utterance {
  std::string speaker;
  std::string text;
  std::vector<std::string> tokens;  // filled by the tokenizer
  int index = 0;                    // 0-based position in its conversation
};

// A (child, parent) reply-to link; parent <= child, parent == child marks a
// conversation start (self-link).
using Link = std::pair<int, int>;

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
  std::optional<std::vector<int>> topic_ids;  // gold topics, synthetic corpora
  std::optional<std::vector<Link>> links;
};

struct SelectionInstance {
  Conversation context;
  std::vector<Utterance> candidates;
  int label = -1;  // index of the correct candidate, -1 = no correct answer
  std::optional<std::vector<int>> candidate_topic_ids;  // synthetic corpora
};

enum class StpLabel { positive, negative };

struct StpPair {
  Utterance first;
  Utterance second;
  StpLabel label = StpLabel::negative;
};

struct DisentangleWindow {
  std::vector<Utterance> utterances;  // ends at the target utterance
  int gold_parent = 0;                // window coordinates; may be the target itself
  std::string source_conversation_id;
};

}  // namespace ttrk
