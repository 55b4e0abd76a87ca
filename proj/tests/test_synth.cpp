#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ttrk/synth.hpp"

using namespace ttrk;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.topics = 4;
  spec.conversations = 8;
  spec.streams = 2;
  spec.pool_size = 5;
  return spec;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  Rng r1(7), r2(7);
  auto a = generate_synthetic(small_spec(), r1);
  auto b = generate_synthetic(small_spec(), r2);
  REQUIRE(a.conversations.size() == b.conversations.size());
  for (std::size_t i = 0; i < a.conversations.size(); ++i) {
    CHECK(conversation_to_json(a.conversations[i]) ==
          conversation_to_json(b.conversations[i]));
  }
  REQUIRE(a.selection.size() == b.selection.size());
  for (std::size_t i = 0; i < a.selection.size(); ++i) {
    CHECK(selection_to_json(a.selection[i]) == selection_to_json(b.selection[i]));
  }
}

TEST_CASE("spec validation rejects degenerate corpora") {
  SyntheticSpec spec = small_spec();
  spec.topics = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.words_per_topic = 3;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.pool_size = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("first utterances self-link") {
  Rng rng(3);
  auto corpus = generate_synthetic(small_spec(), rng);
  for (const auto& c : corpus.conversations) {
    REQUIRE(c.links);
    CHECK(c.links->front() == Link{0, 0});
  }
  for (const auto& e : corpus.entangled) {
    REQUIRE(e.links);
    CHECK(e.links->front() == Link{0, 0});
  }
}

TEST_CASE("topic vocabularies are disjoint") {
  Rng rng(11);
  auto corpus = generate_synthetic(small_spec(), rng);
  std::vector<std::set<std::string>> content(4);
  for (const auto& c : corpus.conversations) {
    REQUIRE(c.topic_ids);
    const int topic = c.topic_ids->front();
    for (const auto& u : c.utterances) {
      for (const auto& tok : u.tokens) {
        if (tok.rfind("fw", 0) == 0) continue;  // shared function words
        content[topic].insert(tok);
      }
    }
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      std::set<std::string> inter;
      std::set_intersection(content[a].begin(), content[a].end(),
                            content[b].begin(), content[b].end(),
                            std::inserter(inter, inter.begin()));
      CHECK(inter.empty());
    }
  }
}

TEST_CASE("entangled links partition streams back into conversations") {
  Rng rng(23);
  SyntheticSpec spec = small_spec();
  auto corpus = generate_synthetic(spec, rng);
  for (const auto& e : corpus.entangled) {
    // follow links transitively
    std::vector<int> root(e.utterances.size());
    for (const auto& [child, parent] : *e.links) {
      root[child] = parent == child ? child : root[parent];
    }
    std::set<int> roots(root.begin(), root.end());
    CHECK(roots.size() == static_cast<std::size_t>(spec.streams));
    // every member of a component shares one topic
    for (std::size_t i = 0; i < root.size(); ++i) {
      CHECK((*e.topic_ids)[i] == (*e.topic_ids)[root[i]]);
    }
  }
}

TEST_CASE("selection instances hold the true next utterance") {
  Rng rng(5);
  auto corpus = generate_synthetic(small_spec(), rng);
  REQUIRE_FALSE(corpus.selection.empty());
  for (const auto& inst : corpus.selection) {
    REQUIRE(inst.label >= 0);
    REQUIRE(inst.candidates.size() == 5);
    REQUIRE(inst.candidate_topic_ids);
    const int gold_topic = (*inst.candidate_topic_ids)[inst.label];
    int gold_count = 0;
    for (int t : *inst.candidate_topic_ids) {
      if (t == gold_topic) ++gold_count;
    }
    CHECK(gold_count == 1);  // negatives come from other topics
  }
}
