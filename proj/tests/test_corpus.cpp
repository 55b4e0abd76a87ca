#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "ttrk/corpus.hpp"

using namespace ttrk;

namespace {

std::string write_temp(const std::string& contents) {
  static int counter = 0;
  std::string path = "test_corpus_tmp_" + std::to_string(counter++) + ".jsonl";
  std::ofstream out(path);
  out << contents;
  return path;
}

Conversation make_conversation(const std::string& id,
                               const std::vector<std::string>& speakers) {
  Conversation c;
  c.id = id;
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    Utterance u;
    u.speaker = speakers[i];
    u.text = "msg " + std::to_string(i);
    u.tokens = tokenize(u.text);
    u.index = static_cast<int>(i);
    c.utterances.push_back(std::move(u));
  }
  return c;
}

}  // namespace

TEST_CASE("minimal selection line parses") {
  auto path = write_temp(
      R"({"id":"c1","context":[{"speaker":"A","text":"hi"}],"candidates":[{"speaker":"B","text":"hello"}],"label":0})"
      "\n");
  auto instances = load_selection(path);
  REQUIRE(instances.size() == 1);
  CHECK(instances[0].label == 0);
  CHECK(instances[0].context.utterances.size() == 1);
  CHECK(instances[0].candidates[0].speaker == "B");
  std::remove(path.c_str());
}

TEST_CASE("label out of range names the field") {
  auto path = write_temp(
      R"({"id":"c1","context":[{"speaker":"A","text":"hi"}],"candidates":[{"speaker":"B","text":"hello"}],"label":5})"
      "\n");
  CHECK_THROWS_WITH(load_selection(path),
                    Catch::Matchers::ContainsSubstring("\"label\""));
  std::remove(path.c_str());
}

TEST_CASE("parse error reports the line number") {
  auto path = write_temp("{\"id\":\"ok\",\"context\":[]}\nnot json\n");
  CHECK_THROWS_WITH(load_conversations(path),
                    Catch::Matchers::ContainsSubstring(":2"));
  std::remove(path.c_str());
}

TEST_CASE("links parse with self-link and back-links") {
  auto path = write_temp(
      R"({"id":"c1","context":[{"speaker":"A","text":"a"},{"speaker":"B","text":"b"},{"speaker":"C","text":"c"}],"links":[[0,0],[1,0],[2,1]]})"
      "\n");
  auto convs = load_conversations(path, true);
  REQUIRE(convs.size() == 1);
  REQUIRE(convs[0].links);
  CHECK(convs[0].links->size() == 3);
  CHECK((*convs[0].links)[0] == Link{0, 0});
  std::remove(path.c_str());
}

TEST_CASE("forward links are rejected") {
  auto path = write_temp(
      R"({"id":"c1","context":[{"speaker":"A","text":"a"},{"speaker":"B","text":"b"}],"links":[[0,1]]})"
      "\n");
  CHECK_THROWS_AS(load_conversations(path), CorpusError);
  std::remove(path.c_str());
}

TEST_CASE("unknown keys are ignored") {
  auto path = write_temp(
      R"({"id":"c1","context":[{"speaker":"A","text":"hi"}],"extra":42})"
      "\n");
  CHECK(load_conversations(path).size() == 1);
  std::remove(path.c_str());
}

TEST_CASE("stp pair counts follow the combinatorics") {
  std::vector<Conversation> convs{make_conversation("a", {"A", "B", "A"}),
                                  make_conversation("b", {"C", "D", "C"})};
  Rng rng(5);
  auto pairs = build_stp_pairs(convs, 4, rng);
  int positives = 0, negatives = 0;
  for (const auto& p : pairs) {
    (p.label == StpLabel::positive ? positives : negatives)++;
  }
  CHECK(positives == 6);
  CHECK(negatives == 24);
}

TEST_CASE("single-utterance conversations contribute no positives") {
  std::vector<Conversation> convs{make_conversation("a", {"A"}),
                                  make_conversation("b", {"B", "C"})};
  Rng rng(5);
  auto pairs = build_stp_pairs(convs, 4, rng);
  int positives = 0;
  for (const auto& p : pairs)
    if (p.label == StpLabel::positive) ++positives;
  CHECK(positives == 1);
}

TEST_CASE("zero negatives gives positives only") {
  std::vector<Conversation> convs{make_conversation("a", {"A", "B"}),
                                  make_conversation("b", {"C", "D"})};
  Rng rng(5);
  auto pairs = build_stp_pairs(convs, 0, rng);
  CHECK(pairs.size() == 2);
  for (const auto& p : pairs) CHECK(p.label == StpLabel::positive);
}

TEST_CASE("stp pair generation needs two conversations") {
  std::vector<Conversation> convs{make_conversation("a", {"A", "B"})};
  Rng rng(5);
  CHECK_THROWS_AS(build_stp_pairs(convs, 4, rng), CorpusError);
}

TEST_CASE("stp pair output is deterministic per seed") {
  std::vector<Conversation> convs{make_conversation("a", {"A", "B", "A"}),
                                  make_conversation("b", {"C", "D"})};
  Rng r1(42), r2(42);
  auto p1 = build_stp_pairs(convs, 4, r1);
  auto p2 = build_stp_pairs(convs, 4, r2);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].second.text == p2[i].second.text);
    CHECK(p1[i].label == p2[i].label);
  }
}

TEST_CASE("stp positives preserve utterance order") {
  std::vector<Conversation> convs{make_conversation("a", {"A", "B", "C"}),
                                  make_conversation("b", {"D", "E"})};
  Rng rng(1);
  for (const auto& p : build_stp_pairs(convs, 2, rng)) {
    if (p.label == StpLabel::positive) CHECK(p.first.index < p.second.index);
  }
}

TEST_CASE("hard filter keeps speaker-related utterances") {
  Conversation ctx = make_conversation("c", {"A", "B", "C", "A"});
  Utterance cand;
  cand.speaker = "A";
  cand.text = "ping C about it";
  cand.tokens = tokenize(cand.text);
  Conversation out = hard_context_filter(ctx, cand);
  REQUIRE(out.utterances.size() == 3);
  CHECK(out.utterances[0].speaker == "A");
  CHECK(out.utterances[1].speaker == "C");
  CHECK(out.utterances[2].speaker == "A");
}

TEST_CASE("hard filter keeps everything when all speakers match") {
  Conversation ctx = make_conversation("c", {"A", "A", "A"});
  Utterance cand;
  cand.speaker = "A";
  cand.text = "ok";
  Conversation out = hard_context_filter(ctx, cand);
  CHECK(out.utterances.size() == 3);
}

TEST_CASE("hard filter caps to the last max_kept survivors") {
  Conversation ctx = make_conversation("c", std::vector<std::string>(15, "A"));
  Utterance cand;
  cand.speaker = "A";
  cand.text = "ok";
  Conversation out = hard_context_filter(ctx, cand, 10);
  REQUIRE(out.utterances.size() == 10);
  CHECK(out.utterances.front().index == 5);
  CHECK(out.utterances.back().index == 14);
}

TEST_CASE("hard filter falls back to the unfiltered tail") {
  Conversation ctx = make_conversation("c", {"X", "Y", "Z"});
  Utterance cand;
  cand.speaker = "Q";
  cand.text = "unrelated";
  cand.tokens = tokenize(cand.text);
  Conversation out = hard_context_filter(ctx, cand, 2);
  REQUIRE(out.utterances.size() == 2);
  CHECK(out.utterances[0].speaker == "Y");
}

TEST_CASE("hard filter is idempotent") {
  Conversation ctx = make_conversation("c", {"A", "B", "C", "A", "B"});
  Utterance cand;
  cand.speaker = "B";
  cand.text = "see A";
  cand.tokens = tokenize(cand.text);
  Conversation once = hard_context_filter(ctx, cand);
  Conversation twice = hard_context_filter(once, cand);
  REQUIRE(once.utterances.size() == twice.utterances.size());
  for (std::size_t i = 0; i < once.utterances.size(); ++i) {
    CHECK(once.utterances[i].index == twice.utterances[i].index);
  }
}

TEST_CASE("sliding windows remap gold parents") {
  Conversation c = make_conversation("c", {"A", "B", "C"});
  c.links = std::vector<Link>{{0, 0}, {1, 0}, {2, 1}};
  WindowSet ws = sliding_windows(c, 10);
  REQUIRE(ws.windows.size() == 3);
  CHECK(ws.dropped_out_of_window == 0);
  CHECK(ws.windows[0].gold_parent == 0);
  CHECK(ws.windows[0].utterances.size() == 1);
  CHECK(ws.windows[1].gold_parent == 0);
  CHECK(ws.windows[2].gold_parent == 1);
  CHECK(ws.windows[2].utterances.size() == 3);
}

TEST_CASE("first utterance gives a self window of size 1") {
  Conversation c = make_conversation("c", {"A"});
  c.links = std::vector<Link>{{0, 0}};
  WindowSet ws = sliding_windows(c, 10);
  REQUIRE(ws.windows.size() == 1);
  CHECK(ws.windows[0].utterances.size() == 1);
  CHECK(ws.windows[0].gold_parent == 0);
}

TEST_CASE("out-of-window links are dropped and counted") {
  Conversation c = make_conversation("c", std::vector<std::string>(13, "A"));
  std::vector<Link> links;
  for (int i = 0; i < 13; ++i) links.emplace_back(i, i == 12 ? 0 : i);
  c.links = links;  // link distance 12 for the last utterance
  WindowSet ws = sliding_windows(c, 10);
  CHECK(ws.dropped_out_of_window == 1);
  CHECK(ws.windows.size() == 12);
}

TEST_CASE("window count equals utterances minus drops") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + rng.uniform_int(25);
    Conversation c = make_conversation("c", std::vector<std::string>(n, "A"));
    std::vector<Link> links;
    for (int i = 0; i < n; ++i) links.emplace_back(i, rng.uniform_int(i + 1));
    c.links = links;
    WindowSet ws = sliding_windows(c, 5);
    CHECK(static_cast<int>(ws.windows.size()) + ws.dropped_out_of_window == n);
    for (const auto& w : ws.windows) {
      // remapping is invertible given the window start offset
      const int start = w.utterances.back().index -
                        static_cast<int>(w.utterances.size()) + 1;
      CHECK(start + w.gold_parent ==
            links[w.utterances.back().index].second);
    }
  }
}

TEST_CASE("sliding windows require links") {
  Conversation c = make_conversation("c", {"A", "B"});
  CHECK_THROWS_AS(sliding_windows(c), CorpusError);
}
