#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "ttrk/autodiff.hpp"
#include "ttrk/rng.hpp"

using namespace ttrk;
using G = Graph<double>;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t = Tensor<double>::zeros(std::move(shape));
  for (auto& x : t.data) x = rng.normal(0.0, scale);
  return t;
}

// Central finite differences over every element of every input tensor.
void check_grads(
    std::vector<Tensor<double>> inputs,
    const std::function<G::Var(G&, const std::vector<G::Var>&)>& build,
    double tol = 1e-6) {
  auto eval = [&](const std::vector<Tensor<double>>& values) {
    G g;
    std::vector<G::Var> vars;
    for (const auto& v : values) vars.push_back(g.leaf(v));
    return g.val(build(g, vars))(0);
  };

  G g;
  std::vector<G::Var> vars;
  std::vector<Tensor<double>> sinks;
  sinks.reserve(inputs.size());
  for (const auto& v : inputs) sinks.push_back(Tensor<double>::zeros(v.shape));
  for (std::size_t i = 0; i < inputs.size(); ++i)
    vars.push_back(g.param(inputs[i], &sinks[i]));
  g.backward(build(g, vars));

  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t i = 0; i < inputs[t].size(); ++i) {
      const double orig = inputs[t].data[i];
      const double h = 1e-6 * (1.0 + std::abs(orig));
      inputs[t].data[i] = orig + h;
      const double plus = eval(inputs);
      inputs[t].data[i] = orig - h;
      const double minus = eval(inputs);
      inputs[t].data[i] = orig;
      const double numeric = (plus - minus) / (2.0 * h);
      const double analytic = sinks[t].data[i];
      const double err = std::abs(numeric - analytic) /
                         std::max(1.0, std::abs(numeric) + std::abs(analytic));
      INFO("tensor " << t << " element " << i << " analytic " << analytic
                     << " numeric " << numeric);
      CHECK(err < tol);
    }
  }
}

// reduce any output to a scalar via a fixed weighted sum
G::Var spread(G& g, G::Var v) {
  Tensor<double> w = Tensor<double>::zeros(g.val(v).shape);
  for (std::size_t i = 0; i < w.size(); ++i)
    w.data[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
  return g.dot(v, g.leaf(w));
}

}  // namespace

TEST_CASE("quadratic loss gradient is the parameter itself") {
  Tensor<double> theta = Tensor<double>::vector({1.5, -2.0, 0.25});
  Tensor<double> sink = Tensor<double>::zeros({3});
  G g;
  auto v = g.param(theta, &sink);
  g.backward(g.scale(g.dot(v, v), 0.5));
  for (int i = 0; i < 3; ++i) CHECK(sink(i) == Catch::Approx(theta(i)));
}

TEST_CASE("constant loss gives zero gradients") {
  Tensor<double> theta = Tensor<double>::vector({1.0, 2.0});
  Tensor<double> sink = Tensor<double>::zeros({2});
  G g;
  g.param(theta, &sink);
  g.backward(g.constant_scalar(3.0));
  CHECK(sink(0) == 0.0);
  CHECK(sink(1) == 0.0);
}

TEST_CASE("elementwise and matmul gradients match finite differences") {
  Rng rng(1);
  check_grads({random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.matmul(v[0], v[1]));
              });
  check_grads({random_tensor({2, 5}, rng), random_tensor({3, 5}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.matmul_t(v[0], v[1]));
              });
  check_grads({random_tensor({3, 4}, rng), random_tensor({4}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.add_rowvec(v[0], v[1]));
              });
  check_grads({random_tensor({6}, rng), random_tensor({6}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.mul(g.tanh_op(v[0]), g.sub(v[0], v[1])));
              });
  check_grads({random_tensor({4, 3}, rng), random_tensor({3}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.matvec(v[0], v[1]));
              });
  check_grads({random_tensor({4, 3}, rng), random_tensor({4}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.tmatvec(v[0], v[1]));
              });
}

TEST_CASE("activation gradients match finite differences") {
  Rng rng(2);
  for (auto op : {0, 1, 2}) {
    check_grads({random_tensor({7}, rng)},
                [op](G& g, const std::vector<G::Var>& v) {
                  G::Var y = op == 0   ? g.tanh_op(v[0])
                             : op == 1 ? g.sigmoid_op(v[0])
                                       : g.gelu_op(v[0]);
                  return spread(g, y);
                });
  }
}

TEST_CASE("softmax rows sum to one and respect the mask") {
  Rng rng(3);
  G g;
  auto a = g.leaf(random_tensor({4, 6}, rng, 2.0));
  std::vector<std::uint8_t> mask{1, 0, 1, 1, 0, 1};
  auto s = g.row_softmax(a, mask);
  for (int i = 0; i < 4; ++i) {
    double total = 0;
    for (int j = 0; j < 6; ++j) {
      if (!mask[j]) CHECK(g.val(s)(i, j) == 0.0);
      total += g.val(s)(i, j);
    }
    CHECK(total == Catch::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("masked softmax gradients match finite differences") {
  Rng rng(4);
  std::vector<std::uint8_t> mask{1, 1, 0, 1};
  check_grads({random_tensor({3, 4}, rng)},
              [mask](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.row_softmax(v[0], mask));
              });
  check_grads({random_tensor({5}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.softmax_vec(v[0]));
              });
}

TEST_CASE("layer norm output has zero mean and unit variance pre-affine") {
  Rng rng(5);
  G g;
  auto x = g.leaf(random_tensor({4, 8}, rng, 3.0));
  Tensor<double> gamma = Tensor<double>::zeros({8});
  std::fill(gamma.data.begin(), gamma.data.end(), 1.0);
  auto y = g.layer_norm(x, g.leaf(gamma), g.leaf(Tensor<double>::zeros({8})));
  for (int i = 0; i < 4; ++i) {
    double mean = 0, var = 0;
    for (int j = 0; j < 8; ++j) mean += g.val(y)(i, j);
    mean /= 8;
    for (int j = 0; j < 8; ++j) {
      const double d = g.val(y)(i, j) - mean;
      var += d * d;
    }
    var /= 8;
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("layer norm gradients match finite differences") {
  Rng rng(6);
  check_grads({random_tensor({3, 5}, rng), random_tensor({5}, rng),
               random_tensor({5}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.layer_norm(v[0], v[1], v[2]));
              },
              1e-5);
}

TEST_CASE("structural op gradients match finite differences") {
  Rng rng(7);
  check_grads({random_tensor({3, 6}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                auto left = g.slice_cols(v[0], 0, 3);
                auto right = g.slice_cols(v[0], 3, 3);
                return spread(g, g.concat_cols({right, left}));
              });
  check_grads({random_tensor({4}, rng), random_tensor({4}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                auto m = g.stack_rows({v[0], v[1], v[0]});
                return spread(g, g.row(m, 2));
              });
  check_grads({random_tensor({5, 3}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.gather_rows(v[0], {4, 0, 4}));
              });
  check_grads({random_tensor({3}, rng), random_tensor({2}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.concat_vecs({v[1], v[0]}));
              });
  check_grads({random_tensor({4, 3}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return spread(g, g.col_max(v[0]));
              });
}

TEST_CASE("embedding gradients scatter into all three tables") {
  Rng rng(8);
  check_grads({random_tensor({6, 4}, rng), random_tensor({5, 4}, rng),
               random_tensor({2, 4}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                auto e = g.embedding_sum(v[0], v[1], v[2], {2, 2, 0, 5},
                                         {0, 0, 1, 1});
                return spread(g, e);
              });
}

TEST_CASE("loss op gradients match finite differences") {
  Rng rng(9);
  check_grads({random_tensor({5}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return g.softmax_ce(v[0], 2);
              });
  check_grads({random_tensor({4, 3}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return g.softmax_ce_rows(v[0], {0, 2, 1, 1});
              });
  check_grads({random_tensor({1}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return g.bce_logit(v[0], 1);
              });
  check_grads({random_tensor({1}, rng), random_tensor({1}, rng)},
              [](G& g, const std::vector<G::Var>& v) {
                return g.mean_scalars({g.bce_logit(v[0], 0),
                                       g.softmax_ce(g.concat_vecs({v[0], v[1]}), 1)});
              });
}

TEST_CASE("softmax cross entropy over rows matches the arithmetic oracle") {
  G g;
  auto logits = g.leaf(
      Tensor<double>::matrix(2, 3, {0.5, -0.2, 0.1, -1.0, 0.3, 0.8}));
  auto loss = g.softmax_ce_rows(logits, {0, 2});
  CHECK(g.val(loss)(0) == Catch::Approx(0.672656349635115663).epsilon(1e-12));
}

TEST_CASE("dropout is identity at probability zero") {
  Rng rng(10);
  G g;
  Tensor<double> x = random_tensor({5}, rng);
  auto v = g.leaf(x);
  auto y = g.dropout(v, 0.0, rng);
  CHECK(y == v);
}

TEST_CASE("dropout preserves expectation roughly") {
  Rng rng(11);
  G g;
  Tensor<double> x = Tensor<double>::zeros({10000});
  std::fill(x.data.begin(), x.data.end(), 1.0);
  auto y = g.dropout(g.leaf(x), 0.3, rng);
  double mean = 0;
  for (double v : g.val(y).data) mean += v;
  mean /= 10000;
  CHECK(std::abs(mean - 1.0) < 0.05);
}
