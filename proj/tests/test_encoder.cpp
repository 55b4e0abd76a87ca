#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ttrk/encoder.hpp"
#include "ttrk/gradcheck.hpp"

using namespace ttrk;

namespace {

Vocab tiny_vocab() {
  std::vector<std::vector<std::string>> docs{
      {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"}};
  return Vocab::build(docs, 1);
}

template <class T>
ModelParams<T> tiny_model(std::uint64_t seed = 3) {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.dropout = 0.0;
  cfg.max_positions = 32;
  return ModelParams<T>::init(cfg, tiny_vocab(), seed);
}

}  // namespace

TEST_CASE("encoder output shape is length by d_model") {
  auto m = tiny_model<double>();
  Graph<double> g;
  auto p = bind(g, m);
  EncodedPair pair = encode_pair(std::vector<std::string>{"alpha", "beta"}, {"gamma"}, m.vocab);
  auto h = encoder_forward(g, p, pair);
  CHECK(g.val(h).rows() == pair.length());
  CHECK(g.val(h).cols() == 8);
}

TEST_CASE("padding never changes the states of real positions") {
  auto m = tiny_model<double>();
  EncodedPair plain = encode_pair(std::vector<std::string>{"alpha", "beta"}, {"gamma"}, m.vocab);
  EncodedPair padded = encode_pair(std::vector<std::string>{"alpha", "beta"}, {"gamma"}, m.vocab, 12);
  Graph<double> g1, g2;
  auto p1 = bind(g1, m);
  auto p2 = bind(g2, m);
  auto h1 = g1.val(encoder_forward(g1, p1, plain));
  auto h2 = g2.val(encoder_forward(g2, p2, padded));
  for (int i = 0; i < plain.length(); ++i) {
    for (int j = 0; j < 8; ++j) {
      CHECK(h1(i, j) == Catch::Approx(h2(i, j)).margin(1e-12));
    }
  }
}

TEST_CASE("forward pass is deterministic in eval mode") {
  auto m = tiny_model<float>();
  EncodedPair pair = encode_pair(std::vector<std::string>{"delta"}, {"epsilon", "zeta"}, m.vocab);
  Graph<float> g1, g2;
  auto p1 = bind(g1, m);
  auto p2 = bind(g2, m);
  auto h1 = g1.val(encoder_forward(g1, p1, pair));
  auto h2 = g2.val(encoder_forward(g2, p2, pair));
  CHECK(h1.data == h2.data);
}

TEST_CASE("minimal pair of empty utterances still encodes") {
  auto m = tiny_model<double>();
  Graph<double> g;
  auto p = bind(g, m);
  EncodedPair pair = encode_pair(std::vector<std::string>{},
                                 std::vector<std::string>{}, m.vocab);
  REQUIRE(pair.length() == 3);  // [CLS] [SEP] [SEP]
  CHECK(g.val(encoder_forward(g, p, pair)).rows() == 3);
}

TEST_CASE("out-of-range token ids are rejected") {
  auto m = tiny_model<double>();
  Graph<double> g;
  auto p = bind(g, m);
  EncodedPair pair = encode_pair(std::vector<std::string>{"alpha"}, {"beta"}, m.vocab);
  pair.token_ids[1] = m.cfg.vocab_size + 7;
  CHECK_THROWS_AS(encoder_forward(g, p, pair), std::invalid_argument);
}

TEST_CASE("sequences beyond max_positions are rejected") {
  auto m = tiny_model<double>();
  Graph<double> g;
  auto p = bind(g, m);
  std::vector<std::string> long_u1(40, "alpha");
  EncodedPair pair = encode_pair(long_u1, {"beta"}, m.vocab);
  CHECK_THROWS_AS(encoder_forward(g, p, pair), std::invalid_argument);
}

TEST_CASE("mlm loss is zero without labeled positions") {
  auto m = tiny_model<double>();
  Graph<double> g;
  auto p = bind(g, m);
  EncodedPair pair = encode_pair(std::vector<std::string>{"alpha"}, {"beta"}, m.vocab);
  auto h = encoder_forward(g, p, pair);
  std::vector<int> labels(pair.length(), -1);
  CHECK(g.val(mlm_loss(g, p, h, labels))(0) == 0.0);
}

TEST_CASE("zeroed mlm head gives log vocab-size cross entropy") {
  auto m = tiny_model<double>();
  std::fill(m.at("mlm.w").data.begin(), m.at("mlm.w").data.end(), 0.0);
  std::fill(m.at("mlm.b").data.begin(), m.at("mlm.b").data.end(), 0.0);
  Graph<double> g;
  auto p = bind(g, m);
  EncodedPair pair = encode_pair(std::vector<std::string>{"alpha", "beta"}, {"gamma"}, m.vocab);
  auto h = encoder_forward(g, p, pair);
  std::vector<int> labels(pair.length(), -1);
  labels[1] = m.vocab.id("alpha");
  labels[2] = m.vocab.id("beta");
  const double loss = g.val(mlm_loss(g, p, h, labels))(0);
  CHECK(loss == Catch::Approx(std::log(double(m.cfg.vocab_size))).epsilon(1e-12));
}

TEST_CASE("zeroed stp head reproduces its bias") {
  auto m = tiny_model<double>();
  std::fill(m.at("stp.w").data.begin(), m.at("stp.w").data.end(), 0.0);
  m.at("stp.b")(0) = 0.4;
  m.at("stp.b")(1) = -0.9;
  Graph<double> g;
  auto p = bind(g, m);
  EncodedPair pair = encode_pair(std::vector<std::string>{"alpha"}, {"beta"}, m.vocab);
  auto z = stp_logits(g, p, encoder_forward(g, p, pair));
  CHECK(g.val(z)(0) == Catch::Approx(0.4));
  CHECK(g.val(z)(1) == Catch::Approx(-0.9));
}

TEST_CASE("encoder with both heads passes the finite-difference check") {
  auto m = tiny_model<double>(11);
  EncodedPair pair = encode_pair(std::vector<std::string>{"alpha", "beta", "gamma"}, {"delta"}, m.vocab);
  std::vector<int> labels(pair.length(), -1);
  labels[2] = m.vocab.id("zeta");
  auto loss_fn = [&](ModelParams<double>& model, bool with_grad) {
    Graph<double> g;
    auto p = bind(g, model);
    auto h = encoder_forward(g, p, pair);
    auto loss = g.mean_scalars(
        {mlm_loss(g, p, h, labels), g.softmax_ce(stp_logits(g, p, h), 1)});
    if (with_grad) g.backward(loss);
    return g.val(loss)(0);
  };
  auto report = gradient_check(m, loss_fn, 24);
  INFO("worst " << report.worst_param << "[" << report.worst_index << "] analytic "
                << report.analytic << " numeric " << report.numeric);
  CHECK(report.max_rel_err <= 1e-4);
}
